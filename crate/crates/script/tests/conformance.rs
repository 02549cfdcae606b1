//! Transcripts of the cases in `conformance/cases`, compared against the
//! CPython transcripts frozen in `conformance/expected` by `conformance/oracle.py`.

use std::fs;
use std::path::Path;

use pathagent_script::{run_source, Bindings, HostCallable, HostError, InterpreterLimits, Kwargs, MapKey, ScriptValue};

fn kwarg<'a>(args: &'a [ScriptValue], kwargs: &'a Kwargs, name: &str, pos: usize) -> Result<&'a ScriptValue, HostError> {
    kwargs
        .iter()
        .find(|(k, _)| k == name)
        .map(|(_, v)| v)
        .or_else(|| args.get(pos))
        .ok_or_else(|| HostError::type_error(format!("missing argument '{name}'")))
}

fn items(v: &ScriptValue) -> Vec<ScriptValue> {
    match v {
        ScriptValue::List(l) => l.borrow().clone(),
        ScriptValue::Tuple(t) => t.to_vec(),
        _ => Vec::new(),
    }
}

fn points(v: &ScriptValue) -> Vec<(ScriptValue, ScriptValue)> {
    items(v)
        .iter()
        .map(|p| {
            let xy = items(p);
            (xy[0].clone(), xy[1].clone())
        })
        .collect()
}

fn single(key: &str, v: ScriptValue) -> ScriptValue {
    ScriptValue::map([(MapKey::from(key), v)].into_iter().collect())
}

fn stub_tools() -> Bindings {
    let mut b = Bindings::new();
    b.insert(
        "score_image_with_text".into(),
        HostCallable::new("score_image_with_text", |args, kwargs| {
            let path = kwarg(args, kwargs, "image_path", 0)?.to_str();
            let classes = items(kwarg(args, kwargs, "classes", 1)?);
            let probs: [&str; 3] = match path.as_bytes()[path.len() - 5] {
                b'0' => ["0.004", "0.951", "0.045"],
                b'1' => ["0.002", "0.612", "0.386"],
                _ => ["0.001", "0.418", "0.581"],
            };
            let scores = classes
                .iter()
                .zip(probs)
                .map(|(c, p)| ScriptValue::str(format!("{}: {p}", c.to_str())))
                .collect();
            Ok(single("similarity_scores", ScriptValue::list(scores)))
        }),
    );
    b.insert(
        "get_contour_area".into(),
        HostCallable::new("get_contour_area", |args, kwargs| {
            let pts = points(kwarg(args, kwargs, "contour", 0)?);
            let n = pts.len();
            let mut s = 0.0;
            for i in 0..n {
                let (x1, y1) = (pts[i].0.as_f64().unwrap(), pts[i].1.as_f64().unwrap());
                let (x2, y2) = (pts[(i + 1) % n].0.as_f64().unwrap(), pts[(i + 1) % n].1.as_f64().unwrap());
                s += x1 * y2 - x2 * y1;
            }
            Ok(single("contour_area", ScriptValue::Float(s.abs() / 2.0)))
        }),
    );
    b.insert(
        "get_contour_convex_hull".into(),
        HostCallable::new("get_contour_convex_hull", |args, kwargs| {
            let mut pts = points(kwarg(args, kwargs, "contour", 0)?);
            let f = |v: &ScriptValue| v.as_f64().unwrap();
            pts.sort_by(|a, b| (f(&a.0), f(&a.1)).partial_cmp(&(f(&b.0), f(&b.1))).unwrap());
            pts.dedup_by(|a, b| f(&a.0) == f(&b.0) && f(&a.1) == f(&b.1));
            let cross = |o: &(ScriptValue, ScriptValue), a: &(ScriptValue, ScriptValue), b: &(ScriptValue, ScriptValue)| {
                (f(&a.0) - f(&o.0)) * (f(&b.1) - f(&o.1)) - (f(&a.1) - f(&o.1)) * (f(&b.0) - f(&o.0))
            };
            let mut hull: Vec<(ScriptValue, ScriptValue)> = Vec::new();
            if pts.len() <= 2 {
                hull = pts;
            } else {
                for pass in [pts.clone(), pts.iter().rev().cloned().collect()] {
                    let mut chain: Vec<(ScriptValue, ScriptValue)> = Vec::new();
                    for p in pass {
                        while chain.len() >= 2 && cross(&chain[chain.len() - 2], &chain[chain.len() - 1], &p) <= 0.0 {
                            chain.pop();
                        }
                        chain.push(p);
                    }
                    chain.pop();
                    hull.extend(chain);
                }
            }
            let out = hull.into_iter().map(|(x, y)| ScriptValue::list(vec![x, y])).collect();
            Ok(single("contour_convex_hull", ScriptValue::list(out)))
        }),
    );
    b
}

fn transcript(source: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let limits = InterpreterLimits::new(dir.path());
    let result = run_source(source, &limits, &stub_tools());
    let tail = match (&result.final_answer, &result.error) {
        (Some(v), _) => format!("FINAL: {}\n", v.repr()),
        (None, Some(e)) => format!("ERROR: {}\n", e.kind.as_str()),
        (None, None) => "OK\n".to_string(),
    };
    result.stdout + &tail
}

#[test]
fn cases_match_cpython() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/conformance");
    let mut names: Vec<_> = fs::read_dir(root.join("cases"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        let source = fs::read_to_string(root.join("cases").join(&name)).unwrap();
        let expected = fs::read_to_string(root.join("expected").join(name.replace(".py", ".out"))).unwrap();
        assert_eq!(transcript(&source), expected, "case {name}");
    }
}

#[test]
fn fault_messages_name_class_and_line() {
    let source = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/conformance/cases/08_runtime_fault.py"),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let result = run_source(&source, &InterpreterLimits::new(dir.path()), &Bindings::new());
    let err = result.error.unwrap();
    assert_eq!(err.line, Some(3));
    assert_eq!(err.to_string(), "RuntimeFault (line 3): ZeroDivisionError: integer division or modulo by zero");
    assert!(!err.to_string().contains('\n'));
}
