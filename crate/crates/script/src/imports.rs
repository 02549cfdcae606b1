use crate::ast::Program;
use crate::error::{ErrorKind, ExecError};
use crate::limits::InterpreterLimits;

/// Top-level package of a dotted module path.
pub fn root_module(name: &str) -> &str {
    name.split('.').next().unwrap_or(name)
}

/// Classifies one module name against the import policy.
pub fn gate(name: &str, limits: &InterpreterLimits, line: Option<u32>) -> Result<(), ExecError> {
    let root = root_module(name);
    if limits.forbidden_imports.contains(root) || limits.forbidden_imports.contains(name) {
        return Err(ExecError::new(
            ErrorKind::ForbiddenImport,
            format!("import of '{name}' is not permitted"),
            line,
        ));
    }
    if !limits.allowed_imports.contains(root) {
        return Err(ExecError::new(
            ErrorKind::UnknownImport,
            format!("module '{name}' is not available; allowed modules: {}", allowed_list(limits)),
            line,
        ));
    }
    Ok(())
}

fn allowed_list(limits: &InterpreterLimits) -> String {
    limits.allowed_imports.iter().cloned().collect::<Vec<_>>().join(", ")
}

/// Scans every import in the program, before anything runs.
pub fn check_imports(program: &Program, limits: &InterpreterLimits) -> Result<(), ExecError> {
    for (name, line) in program.imports() {
        gate(name, limits, Some(line))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn limits(allowed: &[&str]) -> InterpreterLimits {
        let mut l = InterpreterLimits::new(".");
        l.allowed_imports = allowed.iter().map(|s| s.to_string()).collect();
        l
    }

    #[test]
    fn allowed_import_passes() {
        let p = parse("import math, json").unwrap();
        assert!(check_imports(&p, &limits(&["math", "json"])).is_ok());
    }

    #[test]
    fn forbidden_wins() {
        let p = parse("import math\nif False:\n    import os.path\n").unwrap();
        let e = check_imports(&p, &limits(&["math"])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::ForbiddenImport);
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("os"));
    }

    #[test]
    fn unknown_module() {
        let p = parse("from numpy import array").unwrap();
        let e = check_imports(&p, &limits(&["math"])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::UnknownImport);
        assert!(e.message.contains("numpy"));
    }
}
