use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use indexmap::IndexMap;
use pathagent_script::{Bindings, HostCallable, HostError, ScriptValue};
use serde_json::Value;
use thiserror::Error;

use super::descriptor::{Category, ToolDescriptor};

/// Named arguments after binding, in parameter order.
pub type ToolArgs = IndexMap<String, Value>;
pub type ToolFn = dyn Fn(&ToolArgs, &ToolContext) -> Result<Value, ToolError> + Send + Sync;

/// Per-execution facts a tool may need, such as where the calling script may write.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolContext {
    pub working_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolError {
    #[error("DuplicateTool: '{0}' is already registered")]
    Duplicate(String),
    #[error("UnknownTool: no tool named '{0}'")]
    Unknown(String),
    #[error("ArgumentError: {tool}: {message}")]
    Argument { tool: String, message: String },
    #[error("DegenerateContour: {0}")]
    DegenerateContour(String),
    #[error("FixtureMiss: {tool} has no fixture record for {key}")]
    FixtureMiss { tool: String, key: String },
    #[error("ToolFailure: {tool}: {message}")]
    Failed { tool: String, message: String },
}

impl ToolError {
    fn host_class(&self) -> &'static str {
        match self {
            ToolError::Argument { .. } => "TypeError",
            ToolError::Unknown(_) => "NameError",
            ToolError::DegenerateContour(_) => "ValueError",
            ToolError::FixtureMiss { .. } => "FileNotFoundError",
            ToolError::Duplicate(_) | ToolError::Failed { .. } => "RuntimeError",
        }
    }
}

impl From<ToolError> for HostError {
    fn from(e: ToolError) -> Self {
        HostError::new(e.host_class(), e.to_string())
    }
}

#[derive(Clone)]
pub struct ToolBinding {
    pub descriptor: ToolDescriptor,
    pub callable: Arc<ToolFn>,
    pub deterministic: bool,
    pub fixture_source: Option<PathBuf>,
}

impl ToolBinding {
    pub fn new<F>(descriptor: ToolDescriptor, f: F) -> Self
    where
        F: Fn(&ToolArgs, &ToolContext) -> Result<Value, ToolError> + Send + Sync + 'static,
    {
        Self { descriptor, callable: Arc::new(f), deterministic: true, fixture_source: None }
    }
}

impl std::fmt::Debug for ToolBinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolBinding")
            .field("name", &self.descriptor.name)
            .field("deterministic", &self.deterministic)
            .field("fixture_source", &self.fixture_source)
            .finish()
    }
}

/// Tools in registration order. Immutable once shared.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    tools: IndexMap<String, ToolBinding>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, binding: ToolBinding) -> Result<(), ToolError> {
        let name = binding.descriptor.name.clone();
        if self.tools.contains_key(&name) {
            return Err(ToolError::Duplicate(name));
        }
        self.tools.insert(name, binding);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ToolBinding> {
        self.tools.get(name)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &ToolDescriptor> {
        self.tools.values().map(|b| &b.descriptor)
    }

    pub fn categories(&self) -> BTreeSet<Category> {
        self.descriptors().map(|d| d.category).collect()
    }

    fn selected<'a>(&'a self, categories: Option<&'a BTreeSet<Category>>) -> impl Iterator<Item = &'a ToolBinding> {
        self.tools.values().filter(move |b| categories.is_none_or(|c| c.contains(&b.descriptor.category)))
    }

    /// One docstring block per selected tool, in registration order.
    pub fn render_tool_docs(&self, categories: Option<&BTreeSet<Category>>) -> String {
        self.selected(categories).map(|b| b.descriptor.render()).collect::<Vec<_>>().join("\n")
    }

    /// Checks named arguments against the descriptor, fills defaults and calls the tool.
    pub fn invoke_json(&self, name: &str, args: &ToolArgs, ctx: &ToolContext) -> Result<Value, ToolError> {
        let binding = self.tools.get(name).ok_or_else(|| ToolError::Unknown(name.to_string()))?;
        let d = &binding.descriptor;
        let fail = |message: String| ToolError::Argument {
            tool: name.to_string(),
            message: format!("{message}; expected signature: {}", d.signature()),
        };
        if let Some(extra) = args.keys().find(|k| d.param(k).is_none()) {
            return Err(fail(format!("unexpected argument '{extra}'")));
        }
        let mut bound = ToolArgs::with_capacity(d.params.len());
        for p in &d.params {
            match args.get(&p.name) {
                Some(Value::Null) if !p.required => {
                    bound.insert(p.name.clone(), Value::Null);
                }
                Some(v) if p.ty.accepts(v) => {
                    bound.insert(p.name.clone(), v.clone());
                }
                Some(v) => {
                    return Err(fail(format!(
                        "argument '{}' expects {}, got {}",
                        p.name,
                        p.ty.python(),
                        json_type(v)
                    )))
                }
                None if p.required => return Err(fail(format!("missing required argument '{}'", p.name))),
                None => {
                    bound.insert(p.name.clone(), p.default.clone().unwrap_or(Value::Null));
                }
            }
        }
        (binding.callable)(&bound, ctx)
    }

    /// Script-facing entry point.
    pub fn invoke(
        &self,
        name: &str,
        args: &IndexMap<String, ScriptValue>,
        ctx: &ToolContext,
    ) -> Result<ScriptValue, ToolError> {
        let mut json = ToolArgs::with_capacity(args.len());
        for (k, v) in args {
            let j = v.to_json().map_err(|message| ToolError::Argument {
                tool: name.to_string(),
                message: format!("argument '{k}': {message}"),
            })?;
            json.insert(k.clone(), j);
        }
        self.invoke_json(name, &json, ctx).map(|v| ScriptValue::from_json(&v))
    }

    /// Host callables for the selected tools, accepting positional and keyword arguments.
    pub fn bindings(self: &Arc<Self>, categories: Option<&BTreeSet<Category>>, ctx: &ToolContext) -> Bindings {
        let mut out = Bindings::new();
        for b in self.selected(categories) {
            let name = b.descriptor.name.clone();
            let registry = Arc::clone(self);
            let ctx = ctx.clone();
            let callable = HostCallable::new(&name, {
                let name = name.clone();
                move |args, kwargs| {
                    let d = &registry.tools[&name].descriptor;
                    if args.len() > d.params.len() {
                        return Err(ToolError::Argument {
                            tool: name.clone(),
                            message: format!(
                                "takes {} positional arguments but {} were given; expected signature: {}",
                                d.params.len(),
                                args.len(),
                                d.signature()
                            ),
                        }
                        .into());
                    }
                    let mut named = IndexMap::new();
                    for (p, v) in d.params.iter().zip(args) {
                        named.insert(p.name.clone(), v.clone());
                    }
                    for (k, v) in kwargs {
                        if named.insert(k.clone(), v.clone()).is_some() {
                            return Err(ToolError::Argument {
                                tool: name.clone(),
                                message: format!("got multiple values for argument '{k}'"),
                            }
                            .into());
                        }
                    }
                    registry.invoke(&name, &named, &ctx).map_err(HostError::from)
                }
            });
            out.insert(name, callable);
        }
        out
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "None",
        Value::Bool(_) => "bool",
        Value::Number(n) if n.is_f64() => "float",
        Value::Number(_) => "int",
        Value::String(_) => "str",
        Value::Array(_) => "list",
        Value::Object(_) => "dict",
    }
}
