use std::fs;

use pathagent_script::{
    check_imports, execute, parse, run_source, Bindings, ErrorKind, HostCallable, HostError, InterpreterLimits,
    MapKey, ScriptValue, DEFAULT_MAX_OPERATIONS,
};

fn run(src: &str) -> (tempfile::TempDir, pathagent_script::ExecutionResult) {
    let dir = tempfile::tempdir().unwrap();
    let result = run_source(src, &InterpreterLimits::new(dir.path()), &Bindings::new());
    (dir, result)
}

fn kind(result: &pathagent_script::ExecutionResult) -> Option<ErrorKind> {
    result.error.as_ref().map(|e| e.kind)
}

#[test]
fn default_budget_is_ten_million() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(InterpreterLimits::new(dir.path()).max_operations, 10_000_000);
    assert_eq!(DEFAULT_MAX_OPERATIONS, 10_000_000);
}

#[test]
fn print_sum() {
    let (_d, r) = run("print(1+1)");
    assert_eq!(r.stdout, "2\n");
    assert!(r.error.is_none());
}

#[test]
fn infinite_loop_stops_at_exact_budget() {
    let dir = tempfile::tempdir().unwrap();
    let limits = InterpreterLimits::new(dir.path()).with_max_operations(1000);
    let r = run_source("while True:\n x = 1", &limits, &Bindings::new());
    assert_eq!(kind(&r), Some(ErrorKind::OperationLimitExceeded));
    assert_eq!(r.operations_used, 1000);
}

#[test]
fn budget_keeps_prior_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let limits = InterpreterLimits::new(dir.path()).with_max_operations(500);
    let r = run_source("print('start')\nwhile True:\n pass", &limits, &Bindings::new());
    assert_eq!(kind(&r), Some(ErrorKind::OperationLimitExceeded));
    assert_eq!(r.stdout, "start\n");
}

#[test]
fn per_node_accounting() {
    // `x = 1 + 2`: Assign + BinOp + 2 literals (target is free).
    let (_d, r) = run("x = 1 + 2");
    assert_eq!(r.operations_used, 4);
    // Each iteration: For body Expr stmt + Call + Name + Name arg = 4, plus the
    // loop header (For stmt, Call range, Name range, Int 3) = 4.
    let (_d, r) = run("for i in range(3):\n    print(i)");
    assert_eq!(r.operations_used, 4 + 3 * 4);
}

#[test]
fn escape_with_parent_dir_rejected() {
    let (dir, r) = run("f = open('../escape.txt', 'w')");
    assert_eq!(kind(&r), Some(ErrorKind::SandboxViolation));
    assert!(!dir.path().parent().unwrap().join("escape.txt").exists());
}

#[test]
fn absolute_paths_outside_rejected() {
    let outside = tempfile::tempdir().unwrap();
    let target = outside.path().join("x.txt");
    let src = format!("open({:?}, 'w').write('x')", target.to_str().unwrap());
    let (_d, r) = run(&src);
    assert_eq!(kind(&r), Some(ErrorKind::SandboxViolation));
    assert!(!target.exists());
    let src = format!("from pathlib import Path\nPath({:?}).write_text('x')", target.to_str().unwrap());
    let (_d, r) = run(&src);
    assert_eq!(kind(&r), Some(ErrorKind::SandboxViolation));
    assert!(!target.exists());
}

#[test]
fn absolute_paths_inside_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let inside = dir.path().join("sub").join("..").join("ok.txt");
    let src = format!("f = open({:?}, 'w')\nf.write('hi')\nf.close()", inside.to_str().unwrap());
    let r = run_source(&src, &InterpreterLimits::new(dir.path()), &Bindings::new());
    assert!(r.error.is_none(), "{:?}", r.error);
    assert_eq!(r.files_written, vec!["ok.txt".to_string()]);
    assert_eq!(fs::read_to_string(dir.path().join("ok.txt")).unwrap(), "hi");
}

#[test]
fn unsupported_open_mode() {
    let (_d, r) = run("open('a.bin', 'wb')");
    assert_eq!(kind(&r), Some(ErrorKind::RuntimeFault));
}

#[test]
fn final_answer_map() {
    let (_d, r) = run("final_answer({'slide_id': 's1'})\nprint('after')");
    assert!(r.error.is_none());
    assert_eq!(r.stdout, "");
    let expected = ScriptValue::map([(MapKey::from("slide_id"), ScriptValue::str("s1"))].into_iter().collect());
    assert_eq!(r.final_answer, Some(expected));
}

#[test]
fn final_answer_rejects_callables() {
    let (_d, r) = run("final_answer({'f': len})");
    assert_eq!(kind(&r), Some(ErrorKind::RuntimeFault));
    assert!(r.final_answer.is_none());
}

#[test]
fn class_definition_is_parse_error() {
    let err = parse("class A: pass").unwrap_err();
    assert_eq!(err.line, 1);
    for src in ["@dec\ndef f():\n    pass", "async def f():\n    pass", "with open('a') as f:\n    pass", "def g():\n    yield 1", "return 1"] {
        assert!(parse(src).is_err(), "{src}");
    }
}

#[test]
fn parse_error_reports_position() {
    let err = parse("x = 1\ny = (2 +\n").unwrap_err();
    assert!(err.line >= 2, "{err}");
    let err = parse("a = 1\nb = = 2").unwrap_err();
    assert_eq!((err.line, err.col), (2, 5));
}

#[test]
fn import_gate() {
    let dir = tempfile::tempdir().unwrap();
    let mut limits = InterpreterLimits::new(dir.path());
    limits.allowed_imports = ["math".to_string(), "json".to_string()].into();
    assert!(check_imports(&parse("import math").unwrap(), &limits).is_ok());
    let e = check_imports(&parse("import os").unwrap(), &limits).unwrap_err();
    assert_eq!(e.kind, ErrorKind::ForbiddenImport);
    assert!(e.message.contains("os"));
    limits.allowed_imports = ["math".to_string()].into();
    let e = check_imports(&parse("import numpy").unwrap(), &limits).unwrap_err();
    assert_eq!(e.kind, ErrorKind::UnknownImport);
    assert!(e.message.contains("numpy"));
}

#[test]
fn forbidden_import_anywhere_blocks_everything() {
    let (dir, r) = run("print('x')\nopen('a.txt', 'w').write('x')\nif False:\n    import os");
    assert_eq!(kind(&r), Some(ErrorKind::ForbiddenImport));
    assert_eq!(r.stdout, "");
    assert_eq!(r.operations_used, 0);
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn runtime_faults_name_the_line() {
    for (src, needle, line) in [
        ("x = 1\ny = x / 0", "ZeroDivisionError", 2),
        ("print(undefined_name)", "NameError", 1),
        ("a = [1]\n\nb = a[3]", "IndexError", 3),
        ("'a' + 1", "TypeError", 1),
        ("x = 2 ** 70", "OverflowError", 1),
    ] {
        let (_d, r) = run(src);
        let e = r.error.unwrap();
        assert_eq!(e.kind, ErrorKind::RuntimeFault, "{src}");
        assert_eq!(e.line, Some(line), "{src}");
        let text = e.to_string();
        assert!(text.starts_with(&format!("RuntimeFault (line {line}):")), "{text}");
        assert!(text.contains(needle), "{text}");
    }
}

#[test]
fn host_callables_are_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = Bindings::new();
    b.insert(
        "double".into(),
        HostCallable::new("double", |args, _| match args.first() {
            Some(ScriptValue::Int(i)) => Ok(ScriptValue::Int(i * 2)),
            _ => Err(HostError::type_error("double expects an int")),
        }),
    );
    let r = run_source("print(double(21))\ntry:\n    double('x')\nexcept TypeError as e:\n    print(e)", &InterpreterLimits::new(dir.path()), &b);
    assert!(r.error.is_none(), "{:?}", r.error);
    assert_eq!(r.stdout, "42\ndouble expects an int\n");
}

#[test]
fn files_written_are_relative() {
    let (dir, r) = run("from pathlib import Path\nPath('out').mkdir()\nPath('out/a.json').write_text('[]')\nopen('b.txt', 'w').write('x')");
    assert!(r.error.is_none(), "{:?}", r.error);
    assert_eq!(r.files_written, vec!["out/a.json".to_string(), "b.txt".to_string()]);
    assert!(dir.path().join("out/a.json").is_file());
}

#[test]
fn wall_clock_cap() {
    let dir = tempfile::tempdir().unwrap();
    let mut limits = InterpreterLimits::new(dir.path());
    limits.wall_clock_cap = Some(std::time::Duration::from_millis(50));
    let r = run_source("while True:\n    pass", &limits, &Bindings::new());
    assert_eq!(kind(&r), Some(ErrorKind::OperationLimitExceeded));
    assert!(r.operations_used < limits.max_operations);
}

#[test]
fn deep_recursion_is_a_fault_not_a_crash() {
    let (_d, r) = run("def f(n):\n    return f(n + 1)\nf(0)");
    let e = r.error.unwrap();
    assert_eq!(e.kind, ErrorKind::RuntimeFault);
    assert!(e.message.contains("RecursionError"));
}

#[test]
fn execute_checks_imports_itself() {
    let dir = tempfile::tempdir().unwrap();
    let program = parse("import os\nprint(1)").unwrap();
    let r = execute(&program, &InterpreterLimits::new(dir.path()), &Bindings::new());
    assert_eq!(kind(&r), Some(ErrorKind::ForbiddenImport));
    assert_eq!(r.stdout, "");
}
