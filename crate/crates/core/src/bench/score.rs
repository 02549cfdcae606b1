use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::hungarian::hungarian_assign;
use super::spec::{QuestionSpec, ToleranceSpec};

pub type Record = Map<String, Value>;

/// 1 if `predicted` is within tolerance of `truth`, else 0.
pub fn compare_value(predicted: &Value, truth: &Value, tol: &ToleranceSpec) -> u8 {
    let pass = match tol {
        ToleranceSpec::Relative(t) => match (number(predicted), number(truth)) {
            (Some(p), Some(q)) => {
                let bound = if q == 0.0 { *t } else { t * q.abs() };
                // A few ulps of slack so decimal values on the boundary
                // (0.33 vs 0.3 at 10%) are not rejected by rounding.
                let slack = 4.0 * f64::EPSILON * p.abs().max(q.abs()).max(bound);
                (p - q).abs() <= bound + slack
            }
            _ => false,
        },
        ToleranceSpec::AcceptableSet(values) => match predicted {
            Value::String(s) => {
                let s = normalize(s);
                values.iter().any(|v| normalize(v) == s)
            }
            _ => false,
        },
    };
    u8::from(pass)
}

fn number(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScore {
    /// Index of the truth record.
    pub record: usize,
    pub field: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub field_scores: Vec<FieldScore>,
    pub score: f64,
    pub produced_valid_file: bool,
    pub failed: bool,
    /// Why the answer file was rejected, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_reason: Option<String>,
}

impl QuestionScore {
    pub fn invalid(question_id: &str, reason: impl Into<String>) -> Self {
        Self {
            question_id: question_id.to_string(),
            field_scores: Vec::new(),
            score: 0.0,
            produced_valid_file: false,
            failed: true,
            invalid_reason: Some(reason.into()),
        }
    }
}

/// Reads `answer_path` and scores it against the truth records.
pub fn evaluate_answer(answer_path: &Path, truth: &[Record], spec: &QuestionSpec) -> QuestionScore {
    let text = match std::fs::read_to_string(answer_path) {
        Ok(t) => t,
        Err(e) => return QuestionScore::invalid(&spec.id, format!("cannot read {}: {e}", answer_path.display())),
    };
    match serde_json::from_str::<Value>(&text) {
        Ok(v) => evaluate_value(&v, truth, spec),
        Err(e) => QuestionScore::invalid(&spec.id, format!("answer is not valid JSON: {e}")),
    }
}

/// Scores an already parsed answer document.
pub fn evaluate_value(answer: &Value, truth: &[Record], spec: &QuestionSpec) -> QuestionScore {
    let Value::Array(items) = answer else {
        return QuestionScore::invalid(&spec.id, "answer must be a JSON array of records");
    };
    let empty = Record::new();
    let predicted: Vec<&Record> = items.iter().map(|v| v.as_object().unwrap_or(&empty)).collect();
    let fields = &spec.columns_to_compare_and_tolerance;

    let aligned: Vec<Option<&Record>> = match &spec.id_column {
        Some(id) => truth
            .iter()
            .map(|t| {
                let key = t.get(id)?;
                predicted
                    .iter()
                    .filter(|p| p.get(id).is_some_and(|v| same_id(v, key)))
                    .max_by_key(|p| std::cmp::Reverse(failures(p, t, fields)))
                    .copied()
            })
            .collect(),
        None => {
            let mut out = vec![None; truth.len()];
            if !truth.is_empty() && !predicted.is_empty() {
                let cost: Vec<Vec<f64>> =
                    truth.iter().map(|t| predicted.iter().map(|p| failures(p, t, fields) as f64).collect()).collect();
                for (r, c) in hungarian_assign(&cost) {
                    out[r] = Some(predicted[c]);
                }
            }
            out
        }
    };

    let mut field_scores = Vec::with_capacity(truth.len() * fields.len());
    for (i, (t, p)) in truth.iter().zip(&aligned).enumerate() {
        for (name, tol) in fields {
            let score = match (p.and_then(|p| p.get(name)), t.get(name)) {
                (Some(pv), Some(tv)) => compare_value(pv, tv, tol),
                _ => 0,
            };
            field_scores.push(FieldScore { record: i, field: name.clone(), score });
        }
    }
    let score = if field_scores.is_empty() {
        0.0
    } else {
        field_scores.iter().map(|f| f64::from(f.score)).sum::<f64>() / field_scores.len() as f64
    };
    QuestionScore {
        question_id: spec.id.clone(),
        field_scores,
        score,
        produced_valid_file: true,
        failed: score == 0.0,
        invalid_reason: None,
    }
}

/// Number of compared fields of `truth` that `pred` gets wrong.
fn failures(pred: &Record, truth: &Record, fields: &IndexMap<String, ToleranceSpec>) -> usize {
    fields
        .iter()
        .filter(|(name, tol)| match (pred.get(*name), truth.get(*name)) {
            (Some(p), Some(t)) => compare_value(p, t, tol) == 0,
            _ => true,
        })
        .count()
}

fn same_id(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}
