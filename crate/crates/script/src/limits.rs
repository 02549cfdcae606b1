use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Duration;

use crate::error::ExecError;
use crate::value::ScriptValue;

pub const DEFAULT_MAX_OPERATIONS: u64 = 10_000_000;
pub const DEFAULT_RNG_SEED: u64 = 42;
/// Modules backed by a host shim.
pub const SHIM_MODULES: [&str; 5] = ["math", "json", "random", "statistics", "pathlib"];

#[derive(Debug, Clone, PartialEq)]
pub struct InterpreterLimits {
    pub max_operations: u64,
    pub allowed_imports: BTreeSet<String>,
    pub forbidden_imports: BTreeSet<String>,
    /// Root for relative paths and the only place scripts may write.
    pub working_dir: PathBuf,
    pub wall_clock_cap: Option<Duration>,
    /// Extra directories scripts may read from (never write).
    pub read_roots: Vec<PathBuf>,
    pub rng_seed: u64,
    /// Captured stdout beyond this many bytes is dropped.
    pub max_stdout_bytes: usize,
}

impl InterpreterLimits {
    pub fn new(working_dir: impl Into<PathBuf>) -> Self {
        Self {
            max_operations: DEFAULT_MAX_OPERATIONS,
            allowed_imports: SHIM_MODULES.iter().map(|s| s.to_string()).collect(),
            forbidden_imports: BTreeSet::from(["os".to_string()]),
            working_dir: working_dir.into(),
            wall_clock_cap: None,
            read_roots: Vec::new(),
            rng_seed: DEFAULT_RNG_SEED,
            max_stdout_bytes: 4 << 20,
        }
    }

    pub fn with_max_operations(mut self, n: u64) -> Self {
        self.max_operations = n;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_operations == 0 {
            return Err("max_operations must be positive".into());
        }
        if let Some(name) = self.allowed_imports.intersection(&self.forbidden_imports).next() {
            return Err(format!("module '{name}' is both allowed and forbidden"));
        }
        if !self.working_dir.is_dir() {
            return Err(format!("working_dir {} does not exist", self.working_dir.display()));
        }
        Ok(())
    }
}

/// Outcome of one script execution.
#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub stdout: String,
    pub final_answer: Option<ScriptValue>,
    pub error: Option<ExecError>,
    pub operations_used: u64,
    /// Paths relative to the working directory, in first-write order.
    pub files_written: Vec<String>,
}

impl ExecutionResult {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}
