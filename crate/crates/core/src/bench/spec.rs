use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    SingleWsi,
    MultipleWsi,
    SummaryOfMultipleWsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionCategory {
    DataQA,
    CellularQA,
    PatchQA,
    SlideQA,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 4] =
        [QuestionCategory::DataQA, QuestionCategory::CellularQA, QuestionCategory::PatchQA, QuestionCategory::SlideQA];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionCategory::DataQA => "DataQA",
            QuestionCategory::CellularQA => "CellularQA",
            QuestionCategory::PatchQA => "PatchQA",
            QuestionCategory::SlideQA => "SlideQA",
        }
    }
}

impl fmt::Display for QuestionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a compared field is judged.
#[derive(Debug, Clone, PartialEq)]
pub enum ToleranceSpec {
    /// Pass iff `|predicted - truth| <= t * |truth|` (or `|predicted| <= t` when truth is 0).
    Relative(f64),
    /// Pass iff the trimmed, case-folded prediction is one of these.
    AcceptableSet(Vec<String>),
}

impl Serialize for ToleranceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ToleranceSpec::Relative(t) => s.serialize_f64(*t),
            ToleranceSpec::AcceptableSet(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ToleranceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ToleranceSpec::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl ToleranceSpec {
    pub fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::Number(n) => {
                let t = n.as_f64().unwrap_or(f64::NAN);
                if t > 0.0 && t.is_finite() {
                    Ok(ToleranceSpec::Relative(t))
                } else {
                    Err(format!("relative tolerance must be a finite number > 0, got {n}"))
                }
            }
            Value::Array(items) if !items.is_empty() => items
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| format!("acceptable values must be strings, got {x}")))
                .collect::<Result<_, _>>()
                .map(ToleranceSpec::AcceptableSet),
            Value::Array(_) => Err("acceptable set must not be empty".into()),
            other => Err(format!("expected a number or a list of strings, got {other}")),
        }
    }
}

/// One benchmark question. Field names follow the question files exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionSpec {
    pub id: String,
    pub data_type: DataType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_relative_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slide_relative_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_to_metadata: Option<String>,
    pub question: String,
    pub additional_instructions: String,
    pub output_instructions: String,
    pub id_column: Option<String>,
    pub columns_to_compare_and_tolerance: IndexMap<String, ToleranceSpec>,
    pub rationale: String,
    pub is_pathologist_verified: bool,
    pub is_biomedical_scientist_verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<QuestionCategory>,
}

pub const PLACEHOLDERS: [&str; 4] = ["path_to_slide", "path_to_dataset", "path_to_metadata", "working_dir"];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("SchemaError in {path}: field `{field}`: {message}")]
pub struct SchemaError {
    pub path: String,
    pub field: String,
    pub message: String,
}

impl QuestionSpec {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, SchemaError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| SchemaError {
            path: origin.to_string(),
            field: "(document)".into(),
            message: e.to_string(),
        })?;
        if let Some(Value::Object(tols)) = doc.get("columns_to_compare_and_tolerance") {
            for (name, v) in tols {
                ToleranceSpec::from_json(v).map_err(|message| SchemaError {
                    path: origin.to_string(),
                    field: format!("columns_to_compare_and_tolerance.{name}"),
                    message,
                })?;
            }
        }
        let spec: QuestionSpec = serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            let field = match field_in(&msg) {
                Some(f) if path == "." => f,
                _ if path != "." => path,
                _ => "(document)".into(),
            };
            SchemaError { path: origin.to_string(), field, message: msg }
        })?;
        spec.validate(origin)?;
        Ok(spec)
    }

    fn validate(&self, origin: &str) -> Result<(), SchemaError> {
        let err = |field: &str, message: String| SchemaError { path: origin.into(), field: field.into(), message };
        if self.id.trim().is_empty() {
            return Err(err("id", "must not be empty".into()));
        }
        if self.dataset_relative_path.is_none() && self.slide_relative_path.is_none() {
            return Err(err("dataset_relative_path", "one of dataset_relative_path or slide_relative_path is required".into()));
        }
        if self.columns_to_compare_and_tolerance.is_empty() {
            return Err(err("columns_to_compare_and_tolerance", "at least one compared field is required".into()));
        }
        for (field, text) in self.texts() {
            for name in placeholders_in(text) {
                if !PLACEHOLDERS.contains(&name) {
                    return Err(err(field, format!("unknown placeholder {{{name}}}")));
                }
            }
        }
        Ok(())
    }

    fn texts(&self) -> [(&'static str, &str); 3] {
        [
            ("question", &self.question),
            ("additional_instructions", &self.additional_instructions),
            ("output_instructions", &self.output_instructions),
        ]
    }

    /// Placeholders referenced anywhere in the prompt text, deduplicated in first-use order.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (_, text) in self.texts() {
            for p in placeholders_in(text) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

fn field_in(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// `{identifier}` occurrences in `text`.
pub fn placeholders_in(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find('{') {
        let after = &rest[i + 1..];
        let end = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(after.len());
        let ident = &after[..end];
        let starts_ok = ident.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        if starts_ok && after[end..].starts_with('}') {
            out.push(ident);
        }
        rest = after;
    }
    out
}

pub fn load_question(path: &Path) -> Result<QuestionSpec, SchemaError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| SchemaError { path: origin.clone(), field: "(file)".into(), message: e.to_string() })?;
    QuestionSpec::from_json(&text, &origin)
}

/// Absolute locations used to fill prompt placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptRoots {
    pub dataset_root: PathBuf,
    pub working_dir: PathBuf,
    /// Base for `path_to_metadata`; without it that placeholder cannot be filled.
    pub metadata_root: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("MissingPlaceholderTarget: question {question} uses {{{placeholder}}} but {reason}")]
    MissingPlaceholderTarget { question: String, placeholder: String, reason: String },
}

/// Question, additional instructions and output instructions joined by blank
/// lines, with every placeholder replaced by an absolute path.
pub fn materialize_prompt(spec: &QuestionSpec, roots: &PromptRoots) -> Result<String, PromptError> {
    let missing = |p: &str, reason: &str| PromptError::MissingPlaceholderTarget {
        question: spec.id.clone(),
        placeholder: p.to_string(),
        reason: reason.to_string(),
    };
    let mut values: Vec<(&str, String)> = Vec::new();
    for p in spec.placeholders() {
        let path = match p {
            "working_dir" => roots.working_dir.clone(),
            "path_to_slide" => roots
                .dataset_root
                .join(spec.slide_relative_path.as_deref().ok_or_else(|| missing(p, "the question has no slide_relative_path"))?),
            "path_to_dataset" => roots.dataset_root.join(
                spec.dataset_relative_path.as_deref().ok_or_else(|| missing(p, "the question has no dataset_relative_path"))?,
            ),
            "path_to_metadata" => {
                let root = roots.metadata_root.as_ref().ok_or_else(|| missing(p, "no metadata root is configured"))?;
                root.join(spec.path_to_metadata.as_deref().ok_or_else(|| missing(p, "the question has no path_to_metadata"))?)
            }
            other => unreachable!("validated placeholder {other}"),
        };
        values.push((p, path.to_string_lossy().into_owned()));
    }
    let fill = |text: &str| {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        'scan: while let Some(i) = rest.find('{') {
            out.push_str(&rest[..i]);
            for (name, value) in &values {
                if let Some(after) = rest[i + 1..].strip_prefix(name).and_then(|a| a.strip_prefix('}')) {
                    out.push_str(value);
                    rest = after;
                    continue 'scan;
                }
            }
            out.push('{');
            rest = &rest[i + 1..];
        }
        out.push_str(rest);
        out
    };
    let parts: Vec<String> = [&spec.question, &spec.additional_instructions, &spec.output_instructions]
        .into_iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| fill(t))
        .collect();
    Ok(parts.join("\n\n"))
}
