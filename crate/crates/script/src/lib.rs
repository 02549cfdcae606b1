//! A restricted, Python-compatible scripting language for agent-generated
//! code: parse, gate imports, execute under an operation budget with
//! filesystem confinement.

pub mod ast;
mod builtins;
pub mod error;
pub mod format;
pub mod host;
pub mod imports;
mod interp;
pub mod lexer;
pub mod limits;
mod methods;
mod modules;
pub mod parser;
pub mod sandbox;
pub mod value;

pub use ast::Program;
pub use builtins::BUILTINS;
pub use error::{ErrorKind, ExecError, ParseError};
pub use host::{HostCallable, HostError, Kwargs};
pub use imports::check_imports;
pub use interp::{execute, Bindings, MAX_CALL_DEPTH};
pub use limits::{ExecutionResult, InterpreterLimits, DEFAULT_MAX_OPERATIONS, SHIM_MODULES};
pub use modules::module_functions;
pub use parser::parse;
pub use value::{MapKey, ScriptValue};

/// Parses, checks imports and executes in one step. Parse and import errors
/// are reported through [`ExecutionResult::error`] with zero operations used.
pub fn run_source(source: &str, limits: &InterpreterLimits, bindings: &Bindings) -> ExecutionResult {
    match parse(source) {
        Ok(program) => execute(&program, limits, bindings),
        Err(e) => ExecutionResult {
            stdout: String::new(),
            final_answer: None,
            error: Some(e.into()),
            operations_used: 0,
            files_written: Vec::new(),
        },
    }
}
