use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use pathagent_core::bench::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

fn listing(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/listings").join(name)
}

fn spec_with(fields: IndexMap<String, ToleranceSpec>, id_column: Option<&str>) -> QuestionSpec {
    QuestionSpec {
        id: "q".into(),
        data_type: DataType::SingleWsi,
        dataset_relative_path: Some("d".into()),
        slide_relative_path: None,
        path_to_metadata: None,
        question: "Q".into(),
        additional_instructions: String::new(),
        output_instructions: String::new(),
        id_column: id_column.map(String::from),
        columns_to_compare_and_tolerance: fields,
        rationale: String::new(),
        is_pathologist_verified: false,
        is_biomedical_scientist_verified: false,
        category: None,
    }
}

fn records(v: Value) -> Vec<Record> {
    v.as_array().unwrap().iter().map(|r| r.as_object().unwrap().clone()).collect()
}

#[test]
fn loads_single_slide_listing() {
    let s = load_question(&listing("dataqa_hematoxylin.json")).unwrap();
    assert_eq!(s.id, "21");
    assert_eq!(s.data_type, DataType::SingleWsi);
    assert_eq!(s.id_column.as_deref(), Some("slide_id"));
    assert_eq!(s.columns_to_compare_and_tolerance["hematoxylin_percent"], ToleranceSpec::Relative(0.1));
    assert_eq!(s.category, None);
}

#[test]
fn loads_null_id_column_listing() {
    let s = load_question(&listing("slideqa_tp53.json")).unwrap();
    assert_eq!(s.id_column, None);
    let t = &s.columns_to_compare_and_tolerance;
    assert_eq!(t.len(), 5);
    assert_eq!(t["avg_survival_days_in_high_likelihood"], ToleranceSpec::Relative(1.0));
    assert_eq!(t["p-value"], ToleranceSpec::Relative(0.15));
    assert_eq!(t.keys().next().unwrap(), "number_high_likelihood");
}

fn edited(name: &str, edit: impl FnOnce(&mut serde_json::Map<String, Value>)) -> Result<QuestionSpec, SchemaError> {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(listing(name)).unwrap()).unwrap();
    edit(v.as_object_mut().unwrap());
    QuestionSpec::from_json(&v.to_string(), name)
}

#[test]
fn schema_errors_name_the_field() {
    let e = edited("dataqa_hematoxylin.json", |m| {
        m.remove("output_instructions");
    })
    .unwrap_err();
    assert_eq!(e.field, "output_instructions");
    assert!(e.to_string().starts_with("SchemaError"));

    let e = edited("dataqa_hematoxylin.json", |m| {
        m.insert("difficulty".into(), json!("hard"));
    })
    .unwrap_err();
    assert_eq!(e.field, "difficulty");

    let e = edited("dataqa_hematoxylin.json", |m| {
        m.insert("is_pathologist_verified".into(), json!("yes"));
    })
    .unwrap_err();
    assert_eq!(e.field, "is_pathologist_verified");

    let e = edited("dataqa_hematoxylin.json", |m| {
        m["columns_to_compare_and_tolerance"]["hematoxylin_percent"] = json!(0);
    })
    .unwrap_err();
    assert_eq!(e.field, "columns_to_compare_and_tolerance.hematoxylin_percent");

    let e = edited("dataqa_hematoxylin.json", |m| {
        m.insert("question".into(), json!("Look at {path_to_slides}"));
    })
    .unwrap_err();
    assert_eq!(e.field, "question");
    assert!(e.message.contains("path_to_slides"));

    let e = edited("dataqa_hematoxylin.json", |m| {
        m.insert("data_type".into(), json!("single_roi"));
    })
    .unwrap_err();
    assert_eq!(e.field, "data_type");

    let e = edited("dataqa_hematoxylin.json", |m| {
        m.insert("columns_to_compare_and_tolerance".into(), json!({}));
    })
    .unwrap_err();
    assert_eq!(e.field, "columns_to_compare_and_tolerance");
}

#[test]
fn acceptable_sets_load() {
    let s = edited("dataqa_hematoxylin.json", |m| {
        m["columns_to_compare_and_tolerance"] = json!({"subtype": ["Metaplastic", "metaplastic carcinoma"]});
    })
    .unwrap();
    assert_eq!(
        s.columns_to_compare_and_tolerance["subtype"],
        ToleranceSpec::AcceptableSet(vec!["Metaplastic".into(), "metaplastic carcinoma".into()])
    );
}

#[test]
fn prompt_substitutes_absolute_paths() {
    let s = load_question(&listing("dataqa_hematoxylin.json")).unwrap();
    let roots = PromptRoots { dataset_root: "/data/bench".into(), working_dir: "/runs/t1/21".into(), metadata_root: None };
    let p = materialize_prompt(&s, &roots).unwrap();
    assert!(p.contains(
        "/data/bench/tcga_brca_to_use/WSI_flat/TCGA-EW-A1P8-01Z-00-DX1.E9852193-8CDD-49EF-B49B-DA6931198F0D.svs"
    ));
    assert!(p.contains("/runs/t1/21"));
    assert!(placeholders_in(&p).is_empty(), "{p}");
    assert!(p.contains(r#"[{"slide_id": "slide_id1", "hematoxylin_percent": 44.23}]"#));
    assert!(p.starts_with("Using the slide at /data/bench/"));
}

#[test]
fn prompt_without_placeholders_is_verbatim() {
    let mut s = spec_with(IndexMap::from([("x".to_string(), ToleranceSpec::Relative(0.1))]), None);
    s.question = "How many?".into();
    s.additional_instructions = "Count carefully.".into();
    s.output_instructions = "Write answer.json.".into();
    let roots = PromptRoots { dataset_root: "/d".into(), working_dir: "/w".into(), metadata_root: None };
    assert_eq!(materialize_prompt(&s, &roots).unwrap(), "How many?\n\nCount carefully.\n\nWrite answer.json.");
}

#[test]
fn metadata_placeholder_needs_a_root() {
    let s = load_question(&listing("patchqa_cox.json")).unwrap();
    let mut roots = PromptRoots { dataset_root: "/d".into(), working_dir: "/w".into(), metadata_root: None };
    let e = materialize_prompt(&s, &roots).unwrap_err();
    assert!(matches!(&e, PromptError::MissingPlaceholderTarget { placeholder, .. } if placeholder == "path_to_metadata"));
    assert!(e.to_string().starts_with("MissingPlaceholderTarget"));
    roots.metadata_root = Some("/d".into());
    let p = materialize_prompt(&s, &roots).unwrap();
    assert!(p.contains("/d/panoptils_idc_mini/metadata/OS_days/splits.csv"));
    assert!(p.contains("/d/panoptils_idc_mini/rgbs/"));
}

#[test]
fn slide_placeholder_needs_slide_path() {
    let mut s = spec_with(IndexMap::from([("x".to_string(), ToleranceSpec::Relative(0.1))]), None);
    s.question = "Open {path_to_slide}".into();
    let roots = PromptRoots { dataset_root: "/d".into(), working_dir: "/w".into(), metadata_root: None };
    assert!(matches!(materialize_prompt(&s, &roots), Err(PromptError::MissingPlaceholderTarget { .. })));
}

// ---------------------------------------------------------------- hungarian

#[derive(Deserialize)]
struct HungarianCase {
    cost: Vec<Vec<f64>>,
    optimal: f64,
}

fn check_valid(cost: &[Vec<f64>], a: &[(usize, usize)]) {
    let (n, m) = (cost.len(), cost[0].len());
    assert_eq!(a.len(), n.min(m));
    let rows: BTreeSet<_> = a.iter().map(|p| p.0).collect();
    let cols: BTreeSet<_> = a.iter().map(|p| p.1).collect();
    assert_eq!(rows.len(), a.len());
    assert_eq!(cols.len(), a.len());
    assert!(a.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn hungarian_matches_scipy_costs() {
    let cases: Vec<HungarianCase> = serde_json::from_str(include_str!("oracles/hungarian_cases.json")).unwrap();
    assert_eq!(cases.len(), 300);
    for c in &cases {
        let a = hungarian_assign(&c.cost);
        check_valid(&c.cost, &a);
        let got = assignment_cost(&c.cost, &a);
        assert!((got - c.optimal).abs() <= 1e-9 * c.optimal.max(1.0), "{:?}: {got} vs {}", c.cost, c.optimal);
    }
}

/// Every injective map of the smaller side into the larger, as sorted pair lists.
fn all_assignments(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(i: usize, n: usize, m: usize, k: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        if i == n || n - i < k - cur.len() {
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push((i, j));
                rec(i + 1, n, m, k, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
        rec(i + 1, n, m, k, used, cur, out);
    }
    let mut out = Vec::new();
    rec(0, n, m, n.min(m), &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

#[test]
fn hungarian_is_optimal_and_lexicographic_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..500 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let hi = if round % 2 == 0 { 3 } else { 50 };
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0..hi) as f64).collect()).collect();
        let got = hungarian_assign(&cost);
        check_valid(&cost, &got);
        let all = all_assignments(n, m);
        let best = all.iter().map(|a| assignment_cost(&cost, a)).fold(f64::INFINITY, f64::min);
        let lex_min = all.iter().filter(|a| assignment_cost(&cost, a) == best).min().unwrap();
        assert_eq!(assignment_cost(&cost, &got), best, "{cost:?}");
        assert_eq!(&got, lex_min, "{cost:?}");
    }
}

#[test]
fn hungarian_handles_seven_by_seven() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let cost: Vec<Vec<f64>> = (0..7).map(|_| (0..7).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let got = assignment_cost(&cost, &hungarian_assign(&cost));
        let best = all_assignments(7, 7).iter().map(|a| assignment_cost(&cost, a)).fold(f64::INFINITY, f64::min);
        assert!((got - best).abs() < 1e-9);
    }
}

// ---------------------------------------------------------------- evaluation

#[derive(Deserialize)]
struct EvalCase {
    fields: IndexMap<String, Value>,
    id_column: Option<String>,
    truth: Vec<Record>,
    answer: Value,
    expected: Option<f64>,
}

fn case_spec(c: &EvalCase) -> QuestionSpec {
    let fields = c.fields.iter().map(|(k, v)| (k.clone(), ToleranceSpec::from_json(v).unwrap())).collect();
    spec_with(fields, c.id_column.as_deref())
}

#[test]
fn evaluator_matches_independent_scorer() {
    let cases: Vec<EvalCase> = serde_json::from_str(include_str!("oracles/evaluator_cases.json")).unwrap();
    assert_eq!(cases.len(), 400);
    for (i, c) in cases.iter().enumerate() {
        let s = evaluate_value(&c.answer, &c.truth, &case_spec(c));
        match c.expected {
            None => assert!(!s.produced_valid_file && s.score == 0.0 && s.failed, "case {i}"),
            Some(e) => {
                assert!(s.produced_valid_file, "case {i}");
                assert!((s.score - e).abs() < 1e-12, "case {i}: {} vs {e}", s.score);
                assert_eq!(s.failed, e == 0.0);
                assert_eq!(s.field_scores.len(), c.truth.len() * c.fields.len());
            }
        }
    }
}

fn hema_truth() -> Vec<Record> {
    records(json!([{"slide_id": "TCGA-EW-A1P8", "hematoxylin_percent": 44.23}]))
}

#[test]
fn exact_answer_file_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_question(&listing("dataqa_hematoxylin.json")).unwrap();
    let path = dir.path().join("answer.json");
    std::fs::write(&path, serde_json::to_string_pretty(&hema_truth()).unwrap()).unwrap();
    let q = evaluate_answer(&path, &hema_truth(), &s);
    assert_eq!(q.score, 1.0);
    assert!(q.produced_valid_file && !q.failed);
    assert_eq!(q.question_id, "21");
}

#[test]
fn missing_or_broken_answer_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_question(&listing("dataqa_hematoxylin.json")).unwrap();
    let path = dir.path().join("answer.json");
    let q = evaluate_answer(&path, &hema_truth(), &s);
    assert_eq!((q.score, q.produced_valid_file, q.failed), (0.0, false, true));
    std::fs::write(&path, "[{\"slide_id\": ").unwrap();
    assert!(!evaluate_answer(&path, &hema_truth(), &s).produced_valid_file);
    std::fs::write(&path, "{\"slide_id\": \"TCGA-EW-A1P8\", \"hematoxylin_percent\": 44.23}").unwrap();
    assert!(!evaluate_answer(&path, &hema_truth(), &s).produced_valid_file);
    std::fs::write(&path, "[]").unwrap();
    let q = evaluate_answer(&path, &hema_truth(), &s);
    assert!(q.produced_valid_file && q.failed && q.score == 0.0);
}

#[test]
fn swapped_records_align_without_id_column() {
    let fields = IndexMap::from([("a".to_string(), ToleranceSpec::Relative(0.15)), ("b".to_string(), ToleranceSpec::Relative(0.15))]);
    let s = spec_with(fields, None);
    let truth = records(json!([{"a": 1, "b": 10}, {"a": 2, "b": 20}]));
    let swapped = json!([{"a": 2, "b": 20}, {"a": 1, "b": 10}]);
    assert_eq!(evaluate_value(&swapped, &truth, &s).score, 1.0);
    // Both fixed orders, scored directly, for comparison.
    let direct = |ans: &Value| -> f64 {
        let mut n = 0;
        for (t, p) in truth.iter().zip(ans.as_array().unwrap()) {
            for f in ["a", "b"] {
                n += compare_value(&p[f], &t[f], &ToleranceSpec::Relative(0.15)) as usize;
            }
        }
        n as f64 / 4.0
    };
    assert_eq!(direct(&swapped), 0.0);
    assert_eq!(direct(&json!([{"a": 1, "b": 10}, {"a": 2, "b": 20}])), 1.0);
}

#[test]
fn omitted_field_costs_its_cell() {
    let fields: IndexMap<String, ToleranceSpec> =
        ["x", "y", "z"].iter().map(|f| (f.to_string(), ToleranceSpec::Relative(0.15))).collect();
    let s = spec_with(fields, Some("id"));
    let truth = records(json!([{"id": "s1", "x": 1.0, "y": 2.0, "z": 3.0}]));
    let q = evaluate_value(&json!([{"id": "s1", "x": 1.0, "z": 3.0}]), &truth, &s);
    assert!((q.score - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(q.field_scores.iter().find(|f| f.field == "y").unwrap().score, 0);
}

#[test]
fn id_join_is_exact_and_unmatched_truth_scores_zero() {
    let s = spec_with(IndexMap::from([("v".to_string(), ToleranceSpec::Relative(0.1))]), Some("id"));
    let truth = records(json!([{"id": "S1", "v": 5}, {"id": "S2", "v": 6}, {"id": 3, "v": 7}]));
    let ans = json!([{"id": "s1", "v": 5}, {"id": "S2", "v": 6}, {"id": 3.0, "v": 7}, {"id": "S9", "v": 1}]);
    let q = evaluate_value(&ans, &truth, &s);
    assert!((q.score - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn nested_values_score_zero() {
    let s = spec_with(IndexMap::from([("v".to_string(), ToleranceSpec::Relative(0.1))]), None);
    let truth = records(json!([{"v": 5}]));
    assert_eq!(evaluate_value(&json!([{"v": [5]}]), &truth, &s).score, 0.0);
    assert_eq!(evaluate_value(&json!([{"v": {"value": 5}}]), &truth, &s).score, 0.0);
    assert_eq!(evaluate_value(&json!([[5], {"v": 5}]), &truth, &s).score, 1.0);
}

// ---------------------------------------------------------------- evaluator properties

#[derive(Debug, Clone)]
struct Scenario {
    spec: QuestionSpec,
    truth: Vec<Record>,
    answer: Vec<Record>,
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let tol = prop_oneof![
        (1u32..40).prop_map(|p| ToleranceSpec::Relative(p as f64 / 100.0)),
        Just(ToleranceSpec::AcceptableSet(vec!["tumor".into(), "Stroma".into()])),
    ];
    (prop::collection::vec(tol, 1..4), any::<bool>(), 1usize..5, any::<u64>()).prop_map(|(tols, use_id, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: IndexMap<String, ToleranceSpec> = tols.into_iter().enumerate().map(|(i, t)| (format!("f{i}"), t)).collect();
        let mut truth = Vec::new();
        for r in 0..n {
            let mut rec = Record::new();
            rec.insert("id".into(), json!(format!("s{r}")));
            for (f, t) in &fields {
                let v = match t {
                    ToleranceSpec::Relative(_) => json!([0.0, (rng.random_range(-1000..1000) as f64) / 10.0][rng.random_range(0..2)]),
                    ToleranceSpec::AcceptableSet(_) => json!(["tumor", "necrosis"][rng.random_range(0..2)]),
                };
                rec.insert(f.clone(), v);
            }
            truth.push(rec);
        }
        let mut answer = Vec::new();
        for t in &truth {
            if rng.random_bool(0.2) {
                continue;
            }
            let mut rec = Record::new();
            rec.insert("id".into(), t["id"].clone());
            for (f, tv) in t.iter().filter(|(k, _)| *k != "id") {
                match rng.random_range(0..4) {
                    0 => {}
                    1 => {
                        rec.insert(f.clone(), tv.clone());
                    }
                    2 => {
                        let v = tv.as_f64().map_or(json!("stroma "), |x| json!(x * rng.random_range(0.5..1.5) + rng.random_range(-0.2..0.2)));
                        rec.insert(f.clone(), v);
                    }
                    _ => {
                        rec.insert(f.clone(), json!("other"));
                    }
                }
            }
            answer.push(rec);
        }
        if rng.random_bool(0.3) {
            let mut extra = Record::new();
            extra.insert("id".into(), json!("zz"));
            extra.insert("f0".into(), json!(1.0));
            answer.push(extra);
        }
        Scenario { spec: spec_with(fields, use_id.then_some("id")), truth, answer }
    })
}

fn score_of(answer: &[Record], truth: &[Record], spec: &QuestionSpec) -> f64 {
    evaluate_value(&Value::Array(answer.iter().cloned().map(Value::Object).collect()), truth, spec).score
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn permutation_invariance(s in scenario(), seed in any::<u64>()) {
        let base = score_of(&s.answer, &s.truth, &s.spec);
        let mut shuffled = s.answer.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert!((score_of(&shuffled, &s.truth, &s.spec) - base).abs() < 1e-12);
    }

    #[test]
    fn adding_a_correct_field_never_lowers(s in scenario(), pick in any::<prop::sample::Index>()) {
        let base = score_of(&s.answer, &s.truth, &s.spec);
        prop_assume!(!s.answer.is_empty());
        let mut better = s.answer.clone();
        let i = pick.index(better.len());
        let Some(t) = s.truth.iter().find(|t| t["id"] == better[i]["id"]) else { return Ok(()); };
        let missing: Vec<String> = t.keys().filter(|k| !better[i].contains_key(*k)).cloned().collect();
        if let Some(f) = missing.first() {
            better[i].insert(f.clone(), t[f].clone());
        }
        prop_assert!(score_of(&better, &s.truth, &s.spec) >= base - 1e-12);
    }

    #[test]
    fn widening_tolerance_never_lowers(s in scenario(), factor in 1.0f64..3.0) {
        let base = evaluate_value(&Value::Array(s.answer.iter().cloned().map(Value::Object).collect()), &s.truth, &s.spec);
        let mut wide = s.spec.clone();
        for t in wide.columns_to_compare_and_tolerance.values_mut() {
            match t {
                ToleranceSpec::Relative(x) => *x *= factor,
                ToleranceSpec::AcceptableSet(v) => v.push("other".into()),
            }
        }
        let widened = evaluate_value(&Value::Array(s.answer.iter().cloned().map(Value::Object).collect()), &s.truth, &wide);
        prop_assert!(widened.score >= base.score - 1e-12);
        if s.spec.id_column.is_some() {
            for (a, b) in base.field_scores.iter().zip(&widened.field_scores) {
                prop_assert!(b.score >= a.score);
            }
        }
    }

    #[test]
    fn scores_stay_in_range(s in scenario()) {
        let q = evaluate_value(&Value::Array(s.answer.iter().cloned().map(Value::Object).collect()), &s.truth, &s.spec);
        prop_assert!((0.0..=1.0).contains(&q.score));
        prop_assert_eq!(q.failed, q.score == 0.0);
    }
}

#[test]
fn compare_value_widening_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10_000 {
        let t: f64 = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(-100.0..100.0) };
        let p: f64 = t * rng.random_range(0.0..2.0) + rng.random_range(-0.5..0.5);
        let a: f64 = rng.random_range(0.001..0.5);
        let b = a * rng.random_range(1.0..4.0);
        assert!(compare_value(&json!(p), &json!(t), &ToleranceSpec::Relative(b)) >= compare_value(&json!(p), &json!(t), &ToleranceSpec::Relative(a)));
    }
}

// ---------------------------------------------------------------- aggregation

const COUNTS: [(QuestionCategory, usize); 4] = [
    (QuestionCategory::DataQA, 25),
    (QuestionCategory::CellularQA, 25),
    (QuestionCategory::PatchQA, 25),
    (QuestionCategory::SlideQA, 15),
];

/// Per-question scores whose category means equal `means`; a question fails
/// when its score is 0, so failure rates follow `fails` by construction.
fn scored(trial: usize, means: [f64; 4], fails: [f64; 4]) -> Vec<ScoredQuestion> {
    let mut out = Vec::new();
    for (ci, (cat, n)) in COUNTS.iter().enumerate() {
        let n_fail = (fails[ci] * *n as f64).round() as usize;
        let passing = n - n_fail;
        for q in 0..*n {
            let score = if q < n_fail || passing == 0 { 0.0 } else { means[ci] * *n as f64 / passing as f64 };
            out.push(ScoredQuestion {
                trial,
                category: *cat,
                score: QuestionScore {
                    question_id: format!("{cat}-{q}"),
                    field_scores: vec![],
                    score,
                    produced_valid_file: score > 0.0,
                    failed: score == 0.0,
                    invalid_reason: None,
                },
            });
        }
    }
    out
}

fn assert_rounds_to(x: f64, shown: f64) {
    assert!((x - shown).abs() <= 0.0005 + 1e-12, "{x} does not round to {shown}");
}

#[test]
fn weighted_overall_reproduces_reference_rows() {
    // (category scores, overall score, category failure rates, overall failure rate)
    let rows: [([f64; 4], f64, [f64; 4], f64); 4] = [
        ([0.0, 0.0, 0.0, 0.0], 0.0, [1.0, 1.0, 1.0, 1.0], 1.0),
        ([0.377, 0.058, 0.039, 0.133], 0.154, [0.580, 0.773, 0.947, 0.867], 0.783),
        ([0.443, 0.152, 0.217, 0.259], 0.269, [0.507, 0.627, 0.613, 0.667], 0.596),
        ([0.777, 0.323, 0.335, 0.472], 0.477, [0.200, 0.320, 0.413, 0.422], 0.330),
    ];
    for (means, overall, fails, overall_fail) in rows {
        let r = aggregate(scored(0, means, [0.0; 4])).unwrap();
        for (c, m) in r.categories.iter().zip(means) {
            assert!((c.summary.mean - m).abs() < 1e-12);
        }
        assert_rounds_to(r.overall.mean, overall);
        let counts: Vec<f64> = COUNTS.iter().map(|c| c.1 as f64).collect();
        let wf = fails.iter().zip(&counts).map(|(f, n)| f * n).sum::<f64>() / 90.0;
        assert_rounds_to(wf, overall_fail);
    }
}

#[test]
fn all_zero_scores_give_zero_and_full_failure() {
    let r = aggregate(scored(0, [0.0; 4], [1.0; 4])).unwrap();
    assert_eq!(r.overall.mean, 0.0);
    assert_eq!(r.overall.failure_rate, 1.0);
    assert_eq!(r.overall.std_error, 0.0);
    assert_eq!(r.question_count, 90);
}

#[test]
fn failure_rate_is_fraction_of_failed_questions() {
    let r = aggregate(scored(0, [0.5; 4], [0.2, 0.32, 0.4, 0.4])).unwrap();
    let got: Vec<f64> = r.categories.iter().map(|c| c.summary.failure_rate).collect();
    assert_eq!(got, [0.2, 0.32, 0.4, 0.4]);
    assert!((r.overall.failure_rate - (0.2 * 25.0 + 0.32 * 25.0 + 0.4 * 25.0 + 0.4 * 15.0) / 90.0).abs() < 1e-12);
}

#[test]
fn standard_error_over_trials() {
    let mut all = scored(0, [0.6, 0.3, 0.3, 0.4], [0.0; 4]);
    all.extend(scored(1, [0.8, 0.3, 0.3, 0.4], [0.0; 4]));
    all.extend(scored(2, [0.7, 0.3, 0.3, 0.4], [0.0; 4]));
    let r = aggregate(all).unwrap();
    assert_eq!(r.trials, 3);
    assert_eq!(r.question_count, 270);
    let d = &r.categories[0].summary;
    assert!((d.mean - 0.7).abs() < 1e-12);
    // sample sd of (0.6, 0.8, 0.7) is 0.1
    assert!((d.std_error - 0.1 / 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.categories[1].summary.std_error, 0.0);
    let single = aggregate(scored(0, [0.6, 0.3, 0.3, 0.4], [0.0; 4])).unwrap();
    assert!(single.categories.iter().all(|c| c.summary.std_error == 0.0 && c.summary.failure_std_error == 0.0));
}

#[test]
fn mismatched_trials_are_rejected() {
    let mut all = scored(0, [0.5; 4], [0.0; 4]);
    let mut t1 = scored(1, [0.5; 4], [0.0; 4]);
    t1.pop();
    all.extend(t1);
    assert!(matches!(aggregate(all), Err(AggregateError::InconsistentTrials(_))));
    let mut dup = scored(0, [0.5; 4], [0.0; 4]);
    dup.push(dup[0].clone());
    assert!(matches!(aggregate(dup), Err(AggregateError::InconsistentTrials(_))));
    assert!(matches!(aggregate(vec![]), Err(AggregateError::Empty)));
}

#[test]
fn categories_follow_canonical_order() {
    let mut all = scored(0, [0.5; 4], [0.0; 4]);
    all.reverse();
    let r = aggregate(all).unwrap();
    let order: Vec<_> = r.categories.iter().map(|c| c.category).collect();
    assert_eq!(order, QuestionCategory::ALL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overall_equals_mean_of_all_question_scores(
        sizes in prop::collection::vec(1usize..6, 4),
        trials in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut all = Vec::new();
        for t in 0..trials {
            for (ci, cat) in QuestionCategory::ALL.into_iter().enumerate() {
                for q in 0..sizes[ci] {
                    let score = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..=1.0) };
                    all.push(ScoredQuestion {
                        trial: t,
                        category: cat,
                        score: QuestionScore {
                            question_id: format!("{cat}-{q}"),
                            field_scores: vec![],
                            score,
                            produced_valid_file: true,
                            failed: score == 0.0,
                            invalid_reason: None,
                        },
                    });
                }
            }
        }
        let flat_mean = all.iter().map(|s| s.score.score).sum::<f64>() / all.len() as f64;
        let flat_fail = all.iter().filter(|s| s.score.failed).count() as f64 / all.len() as f64;
        let r = aggregate(all).unwrap();
        prop_assert!((r.overall.mean - flat_mean).abs() < 1e-12);
        prop_assert!((r.overall.failure_rate - flat_fail).abs() < 1e-12);
        prop_assert!((r.overall.mean - weighted(&r.categories, |s| s.mean)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.overall.failure_rate));
        let trial_avg = r.overall.trial_means.iter().sum::<f64>() / trials as f64;
        prop_assert!((trial_avg - r.overall.mean).abs() < 1e-12);
    }
}
