use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    HistologyRoi,
    DatasetCheck,
    DatasetPipeline,
    NucleiContour,
    WsiAnalysis,
    WsiClassification,
    DocsRetriever,
    /// Interactive-only slot; not part of the benchmark catalog.
    WebSearch,
}

impl Category {
    pub const CATALOG: [Category; 7] = [
        Category::HistologyRoi,
        Category::DatasetCheck,
        Category::DatasetPipeline,
        Category::NucleiContour,
        Category::WsiAnalysis,
        Category::WsiClassification,
        Category::DocsRetriever,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::HistologyRoi => "histology_roi",
            Category::DatasetCheck => "dataset_check",
            Category::DatasetPipeline => "dataset_pipeline",
            Category::NucleiContour => "nuclei_contour",
            Category::WsiAnalysis => "wsi_analysis",
            Category::WsiClassification => "wsi_classification",
            Category::DocsRetriever => "docs_retriever",
            Category::WebSearch => "web_search",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Category::CATALOG.into_iter().chain([Category::WebSearch]).find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semantic type of a tool parameter, rendered Python-style in signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Str,
    Path,
    Int,
    Float,
    Bool,
    StrList,
    Contour,
    Dict,
    Any,
}

impl ParamType {
    pub fn python(self) -> &'static str {
        match self {
            ParamType::Str | ParamType::Path => "str",
            ParamType::Int => "int",
            ParamType::Float => "float",
            ParamType::Bool => "bool",
            ParamType::StrList => "list[str]",
            ParamType::Contour => "list[list[float]]",
            ParamType::Dict => "dict",
            ParamType::Any => "Any",
        }
    }

    /// Whether a JSON value is acceptable for this type. `None` is accepted
    /// only through an explicit `null` default.
    pub fn accepts(self, v: &Value) -> bool {
        match self {
            ParamType::Str | ParamType::Path => v.is_string(),
            ParamType::Int => v.is_i64() || v.is_u64(),
            ParamType::Float => v.is_number(),
            ParamType::Bool => v.is_boolean(),
            ParamType::StrList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
            ParamType::Contour => v.is_array(),
            ParamType::Dict => v.is_object(),
            ParamType::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    #[serde(default)]
    pub required: bool,
    /// Default for optional parameters; absent means `None`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    pub doc: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub category: Category,
    /// Free-form paragraphs; the first line is the one-line summary.
    pub description: String,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub prerequisites: Vec<String>,
    pub params: Vec<ParamSpec>,
    /// Keys of the returned dict, one per line.
    #[serde(default)]
    pub returns: Vec<String>,
    #[serde(default)]
    pub returns_doc: String,
}

impl ToolDescriptor {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// `name(a: str, b: int = 3) -> dict`
    pub fn signature(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| match (&p.default, p.required) {
                (_, true) => format!("{}: {}", p.name, p.ty.python()),
                (Some(d), false) => format!("{}: {} = {}", p.name, p.ty.python(), py_literal(d)),
                (None, false) => format!("{}: {} | None = None", p.name, p.ty.python()),
            })
            .collect();
        format!("{}({}) -> dict", self.name, params.join(", "))
    }

    /// Python-docstring rendering used in the system prompt.
    pub fn render(&self) -> String {
        let mut out = format!("def {}:\n    \"\"\"\n", self.signature());
        let mut line = |s: &str, indent: usize| {
            if s.is_empty() {
                out.push('\n');
            } else {
                out.push_str(&" ".repeat(indent));
                out.push_str(s);
                out.push('\n');
            }
        };
        for l in self.description.trim_end().lines() {
            line(l, 4);
        }
        if !self.notes.is_empty() {
            line("", 0);
            line("Notes:", 4);
            for n in &self.notes {
                line(&format!("- {n}"), 6);
            }
        }
        if !self.prerequisites.is_empty() {
            line("", 0);
            line("Prerequisites:", 4);
            for p in &self.prerequisites {
                line(&format!("- {p}"), 6);
            }
        }
        if !self.returns.is_empty() || !self.returns_doc.is_empty() {
            line("", 0);
            line("Returns (dict):", 4);
            for r in &self.returns {
                line(&format!("- '{r}'"), 6);
            }
            for l in self.returns_doc.lines() {
                line(l, 6);
            }
        }
        if !self.params.is_empty() {
            line("", 0);
            line("Args:", 4);
            for p in &self.params {
                let doc = match (&p.default, p.required) {
                    (_, true) => p.doc.clone(),
                    (Some(d), false) => format!("{} (default={})", p.doc, py_literal(d)),
                    (None, false) => format!("{} (default=None)", p.doc),
                };
                line(&format!("{}: {}", p.name, doc), 6);
            }
        }
        out.push_str("    \"\"\"\n");
        out
    }
}

/// Python literal spelling of a JSON value.
pub fn py_literal(v: &Value) -> String {
    match v {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
                if f.fract() == 0.0 && f.abs() < 1e16 {
                    return format!("{f:.1}");
                }
            }
            n.to_string()
        }
        Value::String(s) => format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
        Value::Array(a) => format!("[{}]", a.iter().map(py_literal).collect::<Vec<_>>().join(", ")),
        Value::Object(o) => format!(
            "{{{}}}",
            o.iter().map(|(k, v)| format!("'{k}': {}", py_literal(v))).collect::<Vec<_>>().join(", ")
        ),
    }
}
