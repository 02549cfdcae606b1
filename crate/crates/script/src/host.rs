use std::fmt;
use std::sync::Arc;

use crate::value::ScriptValue;

/// Keyword arguments in call order.
pub type Kwargs = [(String, ScriptValue)];

type HostFn = dyn Fn(&[ScriptValue], &Kwargs) -> Result<ScriptValue, HostError> + Send + Sync;

/// Error raised by a host function. Surfaces to the script as a runtime fault
/// that `try`/`except` can catch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostError {
    /// Python-style exception class, e.g. `ValueError`.
    pub class: String,
    pub message: String,
}

impl HostError {
    pub fn new(class: impl Into<String>, message: impl Into<String>) -> Self {
        Self { class: class.into(), message: message.into() }
    }

    pub fn value(message: impl Into<String>) -> Self {
        Self::new("ValueError", message)
    }

    pub fn type_error(message: impl Into<String>) -> Self {
        Self::new("TypeError", message)
    }
}

impl fmt::Display for HostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.message)
    }
}

impl std::error::Error for HostError {}

/// A named function implemented by the embedding application.
#[derive(Clone)]
pub struct HostCallable {
    name: Arc<str>,
    f: Arc<HostFn>,
}

impl HostCallable {
    pub fn new<F>(name: impl AsRef<str>, f: F) -> Self
    where
        F: Fn(&[ScriptValue], &Kwargs) -> Result<ScriptValue, HostError> + Send + Sync + 'static,
    {
        Self { name: Arc::from(name.as_ref()), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn call(&self, args: &[ScriptValue], kwargs: &Kwargs) -> Result<ScriptValue, HostError> {
        (self.f)(args, kwargs)
    }
}

impl fmt::Debug for HostCallable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HostCallable({})", self.name)
    }
}
