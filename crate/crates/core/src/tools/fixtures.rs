//! Recorded outputs standing in for tools that need pretrained models.
//!
//! Layout: `<dir>/<tool_name>/records.json`, each a JSON array of
//! `{"args": {...}, "result": ...}`. A record matches a call when every
//! argument it lists equals the call's canonicalized argument. Paths under the
//! dataset root are canonicalized to dataset-relative form and paths under
//! the working directory to `{working_dir}/...`; the same placeholders in a
//! result are expanded back to absolute paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::registry::{ToolArgs, ToolContext, ToolError};

pub const WORKING_DIR: &str = "{working_dir}";
pub const DATASET_ROOT: &str = "{dataset_root}";

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureRecord {
    pub args: serde_json::Map<String, Value>,
    pub result: Value,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed fixture {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    dataset_root: PathBuf,
    records: BTreeMap<String, Vec<FixtureRecord>>,
    dir: PathBuf,
}

impl FixtureStore {
    /// Loads every `<tool>/records.json` under `dir`.
    pub fn open(dir: impl Into<PathBuf>, dataset_root: impl Into<PathBuf>) -> Result<Self, FixtureError> {
        let dir = dir.into();
        let mut records = BTreeMap::new();
        let entries = fs::read_dir(&dir).map_err(|source| FixtureError::Io { path: dir.clone(), source })?;
        for entry in entries {
            let entry = entry.map_err(|source| FixtureError::Io { path: dir.clone(), source })?;
            let path = entry.path().join("records.json");
            if !path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|source| FixtureError::Io { path: path.clone(), source })?;
            let recs: Vec<FixtureRecord> =
                serde_json::from_str(&text).map_err(|source| FixtureError::Parse { path: path.clone(), source })?;
            records.insert(entry.file_name().to_string_lossy().into_owned(), recs);
        }
        Ok(Self { dataset_root: dataset_root.into(), records, dir })
    }

    pub fn dataset_root(&self) -> &Path {
        &self.dataset_root
    }

    pub fn source_for(&self, tool: &str) -> Option<PathBuf> {
        self.records.contains_key(tool).then(|| self.dir.join(tool).join("records.json"))
    }

    pub fn tools(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Canonical form of call arguments: keys sorted, paths relativized.
    pub fn canonical_args(&self, args: &ToolArgs, ctx: &ToolContext) -> BTreeMap<String, Value> {
        args.iter().map(|(k, v)| (k.clone(), self.canonical_value(v, ctx))).collect()
    }

    fn canonical_value(&self, v: &Value, ctx: &ToolContext) -> Value {
        match v {
            Value::String(s) => Value::String(self.canonical_path(s, ctx)),
            Value::Array(a) => Value::Array(a.iter().map(|x| self.canonical_value(x, ctx)).collect()),
            Value::Object(o) => {
                let sorted: BTreeMap<_, _> = o.iter().map(|(k, x)| (k.clone(), self.canonical_value(x, ctx))).collect();
                Value::Object(sorted.into_iter().collect())
            }
            other => other.clone(),
        }
    }

    fn canonical_path(&self, s: &str, ctx: &ToolContext) -> String {
        let p = Path::new(s);
        if !p.is_absolute() {
            return s.to_string();
        }
        let p = lexical(p);
        if let Some(wd) = &ctx.working_dir {
            if let Ok(rel) = p.strip_prefix(lexical(wd)) {
                return join_placeholder(WORKING_DIR, rel);
            }
        }
        if let Ok(rel) = p.strip_prefix(lexical(&self.dataset_root)) {
            return slash(rel);
        }
        s.to_string()
    }

    /// First record whose listed arguments all match.
    pub fn lookup(&self, tool: &str, args: &ToolArgs, ctx: &ToolContext) -> Result<Value, ToolError> {
        let canon = self.canonical_args(args, ctx);
        let hit = self.records.get(tool).and_then(|recs| {
            recs.iter().find(|r| r.args.iter().all(|(k, v)| canon.get(k).is_some_and(|c| c == v)))
        });
        match hit {
            Some(r) => Ok(self.expand(&r.result, ctx)),
            None => Err(ToolError::FixtureMiss {
                tool: tool.to_string(),
                key: serde_json::to_string(&canon).unwrap_or_default(),
            }),
        }
    }

    fn expand(&self, v: &Value, ctx: &ToolContext) -> Value {
        match v {
            Value::String(s) => {
                let mut out = s.clone();
                if let Some(rest) = out.strip_prefix(DATASET_ROOT) {
                    out = format!("{}{rest}", self.dataset_root.display());
                }
                if let (Some(wd), Some(rest)) = (&ctx.working_dir, out.strip_prefix(WORKING_DIR)) {
                    out = format!("{}{rest}", wd.display());
                }
                Value::String(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(|x| self.expand(x, ctx)).collect()),
            Value::Object(o) => Value::Object(o.iter().map(|(k, x)| (k.clone(), self.expand(x, ctx))).collect()),
            other => other.clone(),
        }
    }
}

fn lexical(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

fn slash(rel: &Path) -> String {
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn join_placeholder(prefix: &str, rel: &Path) -> String {
    let rel = slash(rel);
    if rel.is_empty() {
        prefix.to_string()
    } else {
        format!("{prefix}/{rel}")
    }
}
