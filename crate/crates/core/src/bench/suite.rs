use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use super::score::Record;
use super::spec::{load_question, QuestionCategory, QuestionSpec, SchemaError};

/// A question with its category and ground-truth records.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteQuestion {
    pub spec: QuestionSpec,
    pub category: QuestionCategory,
    pub truth: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub root: PathBuf,
    pub questions: Vec<SuiteQuestion>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("SuiteLoadError: {0}")]
    Schema(#[from] SchemaError),
    #[error("SuiteLoadError: {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn invalid(path: &Path, message: impl Into<String>) -> SuiteError {
    SuiteError::Invalid { path: path.to_path_buf(), message: message.into() }
}

/// Loads `<root>/questions/*.json` (in file-name order) and the matching
/// `<root>/truth/<id>.json` ground-truth arrays.
pub fn load_suite(root: &Path) -> Result<Suite, SuiteError> {
    let qdir = root.join("questions");
    let mut files: Vec<PathBuf> = fs::read_dir(&qdir)
        .map_err(|e| invalid(&qdir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid(&qdir, "suite has no questions"));
    }

    let mut ids = BTreeSet::new();
    let mut questions = Vec::with_capacity(files.len());
    for file in files {
        let spec = load_question(&file)?;
        if !ids.insert(spec.id.clone()) {
            return Err(invalid(&file, format!("duplicate question id {}", spec.id)));
        }
        let category = spec.category.ok_or_else(|| SchemaError {
            path: file.display().to_string(),
            field: "category".into(),
            message: "suite questions must name their category".into(),
        })?;
        let tpath = root.join("truth").join(format!("{}.json", spec.id));
        let text = fs::read_to_string(&tpath).map_err(|e| invalid(&tpath, e.to_string()))?;
        let truth: Value = serde_json::from_str(&text).map_err(|e| invalid(&tpath, e.to_string()))?;
        let truth = truth_records(&tpath, truth, &spec)?;
        questions.push(SuiteQuestion { spec, category, truth });
    }
    Ok(Suite { root: root.to_path_buf(), questions })
}

fn truth_records(path: &Path, v: Value, spec: &QuestionSpec) -> Result<Vec<Record>, SuiteError> {
    let Value::Array(items) = v else {
        return Err(invalid(path, "ground truth must be a JSON array of records"));
    };
    if items.is_empty() {
        return Err(invalid(path, "ground truth has no records"));
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(rec) = item else {
            return Err(invalid(path, format!("record {i} is not an object")));
        };
        let needed = spec.columns_to_compare_and_tolerance.keys().chain(spec.id_column.iter());
        for field in needed {
            if !rec.contains_key(field) {
                return Err(invalid(path, format!("record {i} lacks field {field}")));
            }
        }
        out.push(rec);
    }
    Ok(out)
}
