//! Tree-walking evaluator.
//!
//! Every statement executed and every expression evaluated costs one
//! operation. Assignment targets are stores, not evaluations, and are free;
//! sub-expressions inside them (`a[i] = ...` evaluates `a` and `i`) are not.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::time::Instant;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ast::*;
use crate::error::{ErrorKind, ExecError};
use crate::format::{format_with_spec, percent_format};
use crate::host::HostCallable;
use crate::imports::{check_imports, gate};
use crate::limits::{ExecutionResult, InterpreterLimits};
use crate::sandbox::Sandbox;
use crate::value::*;

/// Deepest user-function call chain before `RecursionError`.
pub const MAX_CALL_DEPTH: usize = 200;
/// Largest sequence a single operation may materialize.
pub const MAX_SEQUENCE_LEN: usize = 10_000_000;
pub const MAX_STRING_BYTES: usize = 64 << 20;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROW: usize = 2 * 1024 * 1024;

/// Host functions made visible to a script, by global name.
pub type Bindings = IndexMap<String, HostCallable>;

pub struct Scope {
    vars: RefCell<HashMap<String, ScriptValue>>,
    parent: Option<ScopeRef>,
}

pub type ScopeRef = Rc<Scope>;

impl Scope {
    pub fn root() -> ScopeRef {
        Rc::new(Scope { vars: RefCell::new(HashMap::new()), parent: None })
    }

    pub fn child(parent: &ScopeRef) -> ScopeRef {
        Rc::new(Scope { vars: RefCell::new(HashMap::new()), parent: Some(parent.clone()) })
    }

    pub fn get(&self, name: &str) -> Option<ScriptValue> {
        if let Some(v) = self.vars.borrow().get(name) {
            return Some(v.clone());
        }
        self.parent.as_ref().and_then(|p| p.get(name))
    }

    pub fn set(&self, name: &str, v: ScriptValue) {
        let mut vars = self.vars.borrow_mut();
        match vars.get_mut(name) {
            Some(slot) => *slot = v,
            None => {
                vars.insert(name.to_string(), v);
            }
        }
    }
}

pub(crate) struct Fault {
    pub kind: ErrorKind,
    /// Exception class for runtime faults; empty otherwise.
    pub class: String,
    pub message: String,
    pub line: Option<u32>,
}

impl Fault {
    fn into_exec_error(self) -> ExecError {
        let msg = if self.class.is_empty() { self.message } else { format!("{}: {}", self.class, self.message) };
        ExecError::new(self.kind, msg, self.line)
    }
}

pub(crate) enum Unwind {
    Fault(Box<Fault>),
    Final(ScriptValue),
}

impl From<ExecError> for Unwind {
    fn from(e: ExecError) -> Self {
        Unwind::Fault(Box::new(Fault { kind: e.kind, class: String::new(), message: e.message, line: e.line }))
    }
}

pub(crate) type R<T> = Result<T, Unwind>;

pub(crate) fn fault(class: &str, msg: impl Into<String>) -> Unwind {
    Unwind::Fault(Box::new(Fault {
        kind: ErrorKind::RuntimeFault,
        class: class.to_string(),
        message: msg.into(),
        line: None,
    }))
}

pub(crate) fn type_error(msg: impl Into<String>) -> Unwind {
    fault("TypeError", msg)
}

pub(crate) fn value_error(msg: impl Into<String>) -> Unwind {
    fault("ValueError", msg)
}

fn with_line(mut u: Unwind, line: u32) -> Unwind {
    if let Unwind::Fault(f) = &mut u {
        if f.line.is_none() {
            f.line = Some(line);
        }
    }
    u
}

/// Whether an `except NAME` clause catches a fault of class `class`.
fn handler_matches(handler: &str, class: &str) -> bool {
    if handler == class || handler == "Exception" || handler == "BaseException" {
        return true;
    }
    let parent = |c: &str| -> Option<&'static str> {
        Some(match c {
            "ZeroDivisionError" | "OverflowError" => "ArithmeticError",
            "KeyError" | "IndexError" => "LookupError",
            "FileNotFoundError" | "PermissionError" | "FileExistsError" | "IsADirectoryError"
            | "NotADirectoryError" => "OSError",
            "JSONDecodeError" | "UnicodeError" => "ValueError",
            "UnboundLocalError" => "NameError",
            "RecursionError" | "NotImplementedError" => "RuntimeError",
            "ModuleNotFoundError" => "ImportError",
            _ => return None,
        })
    };
    let handler = if handler == "IOError" || handler == "EnvironmentError" { "OSError" } else { handler };
    let mut c = class;
    while let Some(p) = parent(c) {
        if p == handler {
            return true;
        }
        c = p;
    }
    false
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(ScriptValue),
}

/// Lazily produced iteration values.
pub(crate) enum ValueIter {
    Range { cur: i64, stop: i64, step: i64 },
    Items(std::vec::IntoIter<ScriptValue>),
}

impl Iterator for ValueIter {
    type Item = ScriptValue;

    fn next(&mut self) -> Option<ScriptValue> {
        match self {
            ValueIter::Range { cur, stop, step } => {
                let more = if *step > 0 { *cur < *stop } else { *cur > *stop };
                if !more {
                    return None;
                }
                let v = *cur;
                *cur = cur.saturating_add(*step);
                if *cur == v {
                    *cur = *stop;
                }
                Some(ScriptValue::Int(v))
            }
            ValueIter::Items(it) => it.next(),
        }
    }
}

pub(crate) struct Interp<'a> {
    pub(crate) limits: &'a InterpreterLimits,
    bindings: &'a Bindings,
    pub(crate) ops: u64,
    pub(crate) stdout: String,
    stdout_full: bool,
    pub(crate) sandbox: Sandbox,
    pub(crate) rng: ChaCha8Rng,
    started: Instant,
    depth: usize,
}

/// Runs a parsed program. Imports are re-checked before anything executes.
pub fn execute(program: &Program, limits: &InterpreterLimits, bindings: &Bindings) -> ExecutionResult {
    let failed = |error: ExecError| ExecutionResult {
        stdout: String::new(),
        final_answer: None,
        error: Some(error),
        operations_used: 0,
        files_written: Vec::new(),
    };
    if let Err(msg) = limits.validate() {
        return failed(ExecError::new(ErrorKind::RuntimeFault, format!("invalid interpreter limits: {msg}"), None));
    }
    if let Err(e) = check_imports(program, limits) {
        return failed(e);
    }
    let mut it = Interp {
        limits,
        bindings,
        ops: 0,
        stdout: String::new(),
        stdout_full: false,
        sandbox: Sandbox::new(&limits.working_dir, &limits.read_roots),
        rng: ChaCha8Rng::seed_from_u64(limits.rng_seed),
        started: Instant::now(),
        depth: 0,
    };
    let globals = Scope::root();
    let outcome = it.exec_block(&program.body, &globals);
    // Functions close over the global scope; clearing it breaks the cycle.
    let leftovers: Vec<ScriptValue> = globals.vars.borrow_mut().drain().map(|(_, v)| v).collect();
    drop(leftovers);
    let (final_answer, error) = match outcome {
        Ok(_) => (None, None),
        Err(Unwind::Final(v)) => (Some(v), None),
        Err(Unwind::Fault(f)) => (None, Some(f.into_exec_error())),
    };
    ExecutionResult {
        stdout: it.stdout,
        final_answer,
        error,
        operations_used: it.ops,
        files_written: it.sandbox.files_written().to_vec(),
    }
}

impl<'a> Interp<'a> {
    pub(crate) fn tick(&mut self) -> R<()> {
        if self.ops >= self.limits.max_operations {
            return Err(ExecError::new(
                ErrorKind::OperationLimitExceeded,
                format!("operation budget of {} exhausted", self.limits.max_operations),
                None,
            )
            .into());
        }
        self.ops += 1;
        if self.ops & 0x3ff == 0 {
            if let Some(cap) = self.limits.wall_clock_cap {
                if self.started.elapsed() > cap {
                    return Err(ExecError::new(
                        ErrorKind::OperationLimitExceeded,
                        format!("wall-clock cap of {:.3}s exceeded", cap.as_secs_f64()),
                        None,
                    )
                    .into());
                }
            }
        }
        Ok(())
    }

    pub(crate) fn write_stdout(&mut self, s: &str) {
        if self.stdout_full {
            return;
        }
        let cap = self.limits.max_stdout_bytes;
        if self.stdout.len() + s.len() <= cap {
            self.stdout.push_str(s);
            return;
        }
        let mut room = cap.saturating_sub(self.stdout.len());
        while room > 0 && !s.is_char_boundary(room) {
            room -= 1;
        }
        self.stdout.push_str(&s[..room]);
        self.stdout.push_str("\n[output truncated]\n");
        self.stdout_full = true;
    }

    // ---- statements ----

    fn exec_block(&mut self, body: &[Stmt], scope: &ScopeRef) -> R<Flow> {
        for stmt in body {
            match self.exec_stmt(stmt, scope)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, scope: &ScopeRef) -> R<Flow> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROW, || {
            self.exec_stmt_inner(stmt, scope).map_err(|u| with_line(u, stmt.span.line))
        })
    }

    fn exec_stmt_inner(&mut self, stmt: &Stmt, scope: &ScopeRef) -> R<Flow> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::Expr(e) => {
                self.eval(e, scope)?;
            }
            StmtKind::Assign { targets, value } => {
                let v = self.eval(value, scope)?;
                for t in targets {
                    self.assign(t, v.clone(), scope)?;
                }
            }
            StmtKind::AugAssign { target, op, value } => self.aug_assign(target, *op, value, scope)?,
            StmtKind::If { branches, orelse } => {
                for (test, body) in branches {
                    if self.eval(test, scope)?.truthy() {
                        return self.exec_block(body, scope);
                    }
                }
                if let Some(body) = orelse {
                    return self.exec_block(body, scope);
                }
            }
            StmtKind::For { target, iter, body } => {
                let it = self.eval(iter, scope)?;
                for item in self.iterate(&it)? {
                    self.assign(target, item, scope)?;
                    match self.exec_block(body, scope)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::While { test, body } => {
                while self.eval(test, scope)?.truthy() {
                    match self.exec_block(body, scope)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::FunctionDef { name, params, body } => {
                let defaults = self.eval_defaults(params, scope)?;
                let f = UserFunction {
                    name: name.clone(),
                    params: params.clone(),
                    defaults,
                    body: FunctionBody::Block(body.clone()),
                    closure: scope.clone(),
                };
                scope.set(name, ScriptValue::Callable(Rc::new(Callable::User(f))));
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => self.eval(e, scope)?,
                    None => ScriptValue::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Pass => {}
            StmtKind::Import(names) => {
                for n in names {
                    gate(&n.name, self.limits, Some(stmt.span.line))?;
                    let module = self.load_module(&n.name)?;
                    let bound = n.alias.clone().unwrap_or_else(|| n.name.clone());
                    scope.set(&bound, module);
                }
            }
            StmtKind::ImportFrom { module, names } => {
                gate(module, self.limits, Some(stmt.span.line))?;
                let m = self.load_module(module)?;
                for n in names {
                    let v = self.module_attr(&m, &n.name).map_err(|_| {
                        fault("ImportError", format!("cannot import name '{}' from '{}'", n.name, module))
                    })?;
                    scope.set(n.alias.as_deref().unwrap_or(&n.name), v);
                }
            }
            StmtKind::Try { body, handlers } => match self.exec_block(body, scope) {
                Err(Unwind::Fault(f)) if f.kind == ErrorKind::RuntimeFault => {
                    let handler = handlers
                        .iter()
                        .find(|h| h.types.is_empty() || h.types.iter().any(|t| handler_matches(t, &f.class)));
                    match handler {
                        Some(h) => {
                            if let Some(b) = &h.binding {
                                scope.set(b, ScriptValue::str(&f.message));
                            }
                            return self.exec_block(&h.body, scope);
                        }
                        None => return Err(Unwind::Fault(f)),
                    }
                }
                other => return other,
            },
        }
        Ok(Flow::Normal)
    }

    fn eval_defaults(&mut self, params: &[Param], scope: &ScopeRef) -> R<Vec<Option<ScriptValue>>> {
        params
            .iter()
            .map(|p| p.default.as_ref().map(|d| self.eval(d, scope)).transpose())
            .collect()
    }

    fn load_module(&mut self, name: &str) -> R<ScriptValue> {
        match ModuleKind::from_name(name) {
            Some(kind) => Ok(ScriptValue::object(Object::Module(kind))),
            None => Err(ExecError::new(
                ErrorKind::UnknownImport,
                format!("module '{name}' is allowed but not available in this interpreter"),
                None,
            )
            .into()),
        }
    }

    // ---- assignment ----

    fn assign(&mut self, target: &Expr, value: ScriptValue, scope: &ScopeRef) -> R<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                scope.set(n, value);
                Ok(())
            }
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                let values: Vec<ScriptValue> = self.iterate(&value)?.collect();
                if let Some(star) = items.iter().position(|i| matches!(i.kind, ExprKind::Starred(_))) {
                    let after = items.len() - star - 1;
                    if values.len() < items.len() - 1 {
                        return Err(value_error(format!(
                            "not enough values to unpack (expected at least {}, got {})",
                            items.len() - 1,
                            values.len()
                        )));
                    }
                    let mut values = values;
                    let tail = values.split_off(values.len() - after);
                    let middle = values.split_off(star);
                    for (t, v) in items[..star].iter().zip(values) {
                        self.assign(t, v, scope)?;
                    }
                    if let ExprKind::Starred(inner) = &items[star].kind {
                        self.assign(inner, ScriptValue::list(middle), scope)?;
                    }
                    for (t, v) in items[star + 1..].iter().zip(tail) {
                        self.assign(t, v, scope)?;
                    }
                    return Ok(());
                }
                if values.len() < items.len() {
                    return Err(value_error(format!(
                        "not enough values to unpack (expected {}, got {})",
                        items.len(),
                        values.len()
                    )));
                }
                if values.len() > items.len() {
                    return Err(value_error(format!("too many values to unpack (expected {})", items.len())));
                }
                for (t, v) in items.iter().zip(values) {
                    self.assign(t, v, scope)?;
                }
                Ok(())
            }
            ExprKind::Subscript { value: obj, index } => {
                let container = self.eval(obj, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.eval_slice_parts(lower, upper, step, scope)?;
                    return self.set_slice(&container, lo, hi, st, value);
                }
                let key = self.eval(index, scope)?;
                self.set_item(&container, key, value)
            }
            ExprKind::Attribute { attr, .. } => Err(fault("AttributeError", format!("cannot set attribute '{attr}'"))),
            _ => Err(fault("SyntaxError", "cannot assign to expression")),
        }
    }

    fn display_items(&mut self, items: &[Expr], scope: &ScopeRef) -> R<Vec<ScriptValue>> {
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match &item.kind {
                ExprKind::Starred(inner) => {
                    let v = self.eval(inner, scope)?;
                    out.extend(self.iterate(&v)?);
                    check_len(out.len())?;
                }
                _ => out.push(self.eval(item, scope)?),
            }
        }
        Ok(out)
    }

    fn aug_assign(&mut self, target: &Expr, op: BinOp, value: &Expr, scope: &ScopeRef) -> R<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                let cur = self.lookup(n, scope)?;
                let rhs = self.eval(value, scope)?;
                let out = self.inplace(op, cur, rhs)?;
                scope.set(n, out);
                Ok(())
            }
            ExprKind::Subscript { value: obj, index } => {
                let container = self.eval(obj, scope)?;
                let key = self.eval(index, scope)?;
                let cur = self.get_item(&container, &key)?;
                let rhs = self.eval(value, scope)?;
                let out = self.inplace(op, cur, rhs)?;
                self.set_item(&container, key, out)
            }
            _ => Err(fault("AttributeError", "augmented assignment to attribute is not supported")),
        }
    }

    fn inplace(&mut self, op: BinOp, cur: ScriptValue, rhs: ScriptValue) -> R<ScriptValue> {
        if let (BinOp::Add, ScriptValue::List(l)) = (op, &cur) {
            let extra: Vec<ScriptValue> = self.iterate(&rhs)?.collect();
            let mut l2 = l.borrow_mut();
            if l2.len() + extra.len() > MAX_SEQUENCE_LEN {
                return Err(fault("MemoryError", "list too large"));
            }
            l2.extend(extra);
            drop(l2);
            return Ok(cur);
        }
        self.binop(op, &cur, &rhs)
    }

    pub(crate) fn set_item(&mut self, container: &ScriptValue, key: ScriptValue, value: ScriptValue) -> R<()> {
        match container {
            ScriptValue::List(l) => {
                let len = l.borrow().len();
                let i = normalize_index(&key, len, "list assignment")?;
                l.borrow_mut()[i] = value;
                Ok(())
            }
            ScriptValue::Map(m) => {
                let k = key
                    .to_key()
                    .ok_or_else(|| type_error(format!("unhashable or unsupported key type: '{}'", key.type_name())))?;
                m.borrow_mut().insert(k, value);
                Ok(())
            }
            other => Err(type_error(format!("'{}' object does not support item assignment", other.type_name()))),
        }
    }

    fn set_slice(
        &mut self,
        container: &ScriptValue,
        lo: Option<i64>,
        hi: Option<i64>,
        step: Option<i64>,
        value: ScriptValue,
    ) -> R<()> {
        let ScriptValue::List(l) = container else {
            return Err(type_error(format!("'{}' object does not support slice assignment", container.type_name())));
        };
        if step.unwrap_or(1) != 1 {
            return Err(value_error("extended slice assignment is not supported"));
        }
        let items: Vec<ScriptValue> = self.iterate(&value)?.collect();
        let len = l.borrow().len() as i64;
        let (start, stop) = clamp_slice(lo, hi, len);
        let stop = stop.max(start);
        l.borrow_mut().splice(start as usize..stop as usize, items);
        Ok(())
    }

    // ---- expressions ----

    pub(crate) fn eval(&mut self, e: &Expr, scope: &ScopeRef) -> R<ScriptValue> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROW, || self.eval_inner(e, scope))
    }

    fn lookup(&self, name: &str, scope: &ScopeRef) -> R<ScriptValue> {
        if let Some(v) = scope.get(name) {
            return Ok(v);
        }
        if let Some(h) = self.bindings.get(name) {
            return Ok(ScriptValue::Callable(Rc::new(Callable::Host(h.clone()))));
        }
        if let Some(b) = crate::builtins::lookup_builtin(name) {
            return Ok(ScriptValue::Callable(Rc::new(Callable::Builtin(b))));
        }
        Err(fault("NameError", format!("name '{name}' is not defined")))
    }

    fn eval_inner(&mut self, e: &Expr, scope: &ScopeRef) -> R<ScriptValue> {
        self.tick()?;
        Ok(match &e.kind {
            ExprKind::None => ScriptValue::None,
            ExprKind::Bool(b) => ScriptValue::Bool(*b),
            ExprKind::Int(i) => ScriptValue::Int(*i),
            ExprKind::Float(f) => ScriptValue::Float(*f),
            ExprKind::Str(s) => ScriptValue::str(s),
            ExprKind::FString(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        FPart::Literal(s) => out.push_str(s),
                        FPart::Field { expr, conversion, spec } => {
                            let v = self.eval(expr, scope)?;
                            let v = match conversion {
                                Some('r') | Some('a') => ScriptValue::str(v.repr()),
                                Some('s') => ScriptValue::str(v.to_str()),
                                _ => v,
                            };
                            out.push_str(&format_with_spec(&v, spec).map_err(value_error)?);
                        }
                    }
                }
                ScriptValue::str(out)
            }
            ExprKind::Name(n) => self.lookup(n, scope)?,
            ExprKind::List(items) => ScriptValue::list(self.display_items(items, scope)?),
            ExprKind::Tuple(items) => ScriptValue::tuple(self.display_items(items, scope)?),
            ExprKind::Starred(_) => return Err(fault("SyntaxError", "can't use starred expression here")),
            ExprKind::Dict(pairs) => {
                let mut m = IndexMap::new();
                for (k, v) in pairs {
                    let key = self.eval(k, scope)?;
                    let val = self.eval(v, scope)?;
                    let key = key
                        .to_key()
                        .ok_or_else(|| type_error(format!("unsupported dict key type: '{}'", key.type_name())))?;
                    m.insert(key, val);
                }
                ScriptValue::map(m)
            }
            ExprKind::ListComp { elt, generators } | ExprKind::GenExp { elt, generators } => {
                let inner = Scope::child(scope);
                let mut out = Vec::new();
                self.comprehension(generators, 0, &inner, &mut |it, s| {
                    let v = it.eval(elt, s)?;
                    if out.len() >= MAX_SEQUENCE_LEN {
                        return Err(fault("MemoryError", "comprehension too large"));
                    }
                    out.push(v);
                    Ok(())
                })?;
                ScriptValue::list(out)
            }
            ExprKind::DictComp { key, value, generators } => {
                let inner = Scope::child(scope);
                let mut out = IndexMap::new();
                self.comprehension(generators, 0, &inner, &mut |it, s| {
                    let k = it.eval(key, s)?;
                    let v = it.eval(value, s)?;
                    let k = k
                        .to_key()
                        .ok_or_else(|| type_error(format!("unsupported dict key type: '{}'", k.type_name())))?;
                    out.insert(k, v);
                    Ok(())
                })?;
                ScriptValue::map(out)
            }
            ExprKind::BinOp { left, op, right } => {
                let l = self.eval(left, scope)?;
                let r = self.eval(right, scope)?;
                self.binop(*op, &l, &r)?
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, scope)?;
                match op {
                    UnaryOp::Not => ScriptValue::Bool(!v.truthy()),
                    UnaryOp::Pos => match v {
                        ScriptValue::Bool(b) => ScriptValue::Int(b as i64),
                        v if v.is_number() => v,
                        v => return Err(type_error(format!("bad operand type for unary +: '{}'", v.type_name()))),
                    },
                    UnaryOp::Neg => match v {
                        ScriptValue::Bool(b) => ScriptValue::Int(-(b as i64)),
                        ScriptValue::Int(i) => ScriptValue::Int(
                            i.checked_neg().ok_or_else(|| fault("OverflowError", "integer overflow"))?,
                        ),
                        ScriptValue::Float(f) => ScriptValue::Float(-f),
                        v => return Err(type_error(format!("bad operand type for unary -: '{}'", v.type_name()))),
                    },
                }
            }
            ExprKind::BoolOp { op, values } => {
                let mut last = ScriptValue::None;
                for (i, v) in values.iter().enumerate() {
                    last = self.eval(v, scope)?;
                    let decided = match op {
                        BoolOp::And => !last.truthy(),
                        BoolOp::Or => last.truthy(),
                    };
                    if decided || i + 1 == values.len() {
                        break;
                    }
                }
                last
            }
            ExprKind::Compare { left, ops, comparators } => {
                let mut lhs = self.eval(left, scope)?;
                for (op, rhs_e) in ops.iter().zip(comparators) {
                    let rhs = self.eval(rhs_e, scope)?;
                    if !self.compare(*op, &lhs, &rhs)? {
                        return Ok(ScriptValue::Bool(false));
                    }
                    lhs = rhs;
                }
                ScriptValue::Bool(true)
            }
            ExprKind::IfExp { test, body, orelse } => {
                if self.eval(test, scope)?.truthy() {
                    self.eval(body, scope)?
                } else {
                    self.eval(orelse, scope)?
                }
            }
            ExprKind::Call { func, args } => {
                let f = self.eval(func, scope)?;
                let (pos, kw) = self.eval_args(args, scope)?;
                self.call_value(&f, pos, kw).map_err(|u| with_line(u, e.span.line))?
            }
            ExprKind::Attribute { value, attr } => {
                let v = self.eval(value, scope)?;
                self.get_attr(&v, attr)?
            }
            ExprKind::Subscript { value, index } => {
                let container = self.eval(value, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.eval_slice_parts(lower, upper, step, scope)?;
                    return get_slice(&container, lo, hi, st);
                }
                let key = self.eval(index, scope)?;
                self.get_item(&container, &key)?
            }
            ExprKind::Slice { .. } => return Err(fault("SyntaxError", "slice outside of subscript")),
            ExprKind::Lambda { params, body } => {
                let defaults = self.eval_defaults(params, scope)?;
                ScriptValue::Callable(Rc::new(Callable::User(UserFunction {
                    name: "<lambda>".into(),
                    params: params.clone(),
                    defaults,
                    body: FunctionBody::Lambda(body.clone()),
                    closure: scope.clone(),
                })))
            }
        })
    }

    fn comprehension(
        &mut self,
        gens: &[Comprehension],
        i: usize,
        scope: &ScopeRef,
        emit: &mut dyn FnMut(&mut Self, &ScopeRef) -> R<()>,
    ) -> R<()> {
        let Some(g) = gens.get(i) else {
            return emit(self, scope);
        };
        let src = self.eval(&g.iter, scope)?;
        'items: for item in self.iterate(&src)? {
            self.assign(&g.target, item, scope)?;
            for cond in &g.ifs {
                if !self.eval(cond, scope)?.truthy() {
                    continue 'items;
                }
            }
            self.comprehension(gens, i + 1, scope, emit)?;
        }
        Ok(())
    }

    fn eval_args(&mut self, args: &[Arg], scope: &ScopeRef) -> R<(Vec<ScriptValue>, Vec<(String, ScriptValue)>)> {
        let mut pos = Vec::new();
        let mut kw: Vec<(String, ScriptValue)> = Vec::new();
        let push_kw = |kw: &mut Vec<(String, ScriptValue)>, k: String, v| {
            if kw.iter().any(|(n, _)| *n == k) {
                return Err(type_error(format!("got multiple values for keyword argument '{k}'")));
            }
            kw.push((k, v));
            Ok(())
        };
        for a in args {
            match a {
                Arg::Positional(e) => pos.push(self.eval(e, scope)?),
                Arg::Keyword(k, e) => {
                    let v = self.eval(e, scope)?;
                    push_kw(&mut kw, k.clone(), v)?;
                }
                Arg::Star(e) => {
                    let v = self.eval(e, scope)?;
                    pos.extend(self.iterate(&v)?);
                }
                Arg::DoubleStar(e) => {
                    let v = self.eval(e, scope)?;
                    let ScriptValue::Map(m) = &v else {
                        return Err(type_error(format!("argument after ** must be a mapping, not {}", v.type_name())));
                    };
                    let entries: Vec<_> = m.borrow().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                    for (k, v) in entries {
                        let MapKey::Str(k) = k else {
                            return Err(type_error("keywords must be strings"));
                        };
                        push_kw(&mut kw, k.to_string(), v)?;
                    }
                }
            }
        }
        Ok((pos, kw))
    }

    fn eval_slice_parts(
        &mut self,
        lower: &Option<Box<Expr>>,
        upper: &Option<Box<Expr>>,
        step: &Option<Box<Expr>>,
        scope: &ScopeRef,
    ) -> R<(Option<i64>, Option<i64>, Option<i64>)> {
        let mut part = |e: &Option<Box<Expr>>| -> R<Option<i64>> {
            match e {
                None => Ok(None),
                Some(e) => match self.eval(e, scope)? {
                    ScriptValue::None => Ok(None),
                    v => v
                        .as_int()
                        .map(Some)
                        .ok_or_else(|| type_error("slice indices must be integers or None")),
                },
            }
        };
        Ok((part(lower)?, part(upper)?, part(step)?))
    }

    // ---- calls ----

    pub(crate) fn call_value(
        &mut self,
        f: &ScriptValue,
        args: Vec<ScriptValue>,
        kwargs: Vec<(String, ScriptValue)>,
    ) -> R<ScriptValue> {
        let ScriptValue::Callable(c) = f else {
            return Err(type_error(format!("'{}' object is not callable", f.type_name())));
        };
        match &**c {
            Callable::Builtin(name) => self.call_builtin(name, args, kwargs),
            Callable::Host(h) => {
                if let Some(bad) = args.iter().chain(kwargs.iter().map(|(_, v)| v)).find(|v| v.contains_callable()) {
                    return Err(type_error(format!(
                        "{}() cannot receive a value of type '{}'",
                        h.name(),
                        bad.type_name()
                    )));
                }
                h.call(&args, &kwargs).map_err(|e| fault(&e.class, e.message))
            }
            Callable::User(u) => self.call_user(u, args, kwargs),
            Callable::Method { receiver, name } => self.call_method(receiver, name, args, kwargs),
            Callable::ModuleFn { module, name } => self.call_module_fn(*module, name, args, kwargs),
        }
    }

    fn call_user(&mut self, f: &UserFunction, args: Vec<ScriptValue>, kwargs: Vec<(String, ScriptValue)>) -> R<ScriptValue> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(fault("RecursionError", "maximum recursion depth exceeded"));
        }
        if args.len() > f.params.len() {
            return Err(type_error(format!(
                "{}() takes {} positional arguments but {} were given",
                f.name,
                f.params.len(),
                args.len()
            )));
        }
        let local = Scope::child(&f.closure);
        let mut bound: Vec<Option<ScriptValue>> = args.into_iter().map(Some).collect();
        bound.resize(f.params.len(), None);
        for (k, v) in kwargs {
            let Some(i) = f.params.iter().position(|p| p.name == k) else {
                return Err(type_error(format!("{}() got an unexpected keyword argument '{}'", f.name, k)));
            };
            if bound[i].is_some() {
                return Err(type_error(format!("{}() got multiple values for argument '{}'", f.name, k)));
            }
            bound[i] = Some(v);
        }
        for (i, p) in f.params.iter().enumerate() {
            let v = match bound[i].take().or_else(|| f.defaults[i].clone()) {
                Some(v) => v,
                None => {
                    return Err(type_error(format!(
                        "{}() missing required positional argument: '{}'",
                        f.name, p.name
                    )))
                }
            };
            local.set(&p.name, v);
        }
        self.depth += 1;
        let out = match &f.body {
            FunctionBody::Block(body) => match self.exec_block(body, &local) {
                Ok(Flow::Return(v)) => Ok(v),
                Ok(_) => Ok(ScriptValue::None),
                Err(e) => Err(e),
            },
            FunctionBody::Lambda(body) => self.eval(body, &local),
        };
        self.depth -= 1;
        out
    }

    // ---- operators ----

    pub(crate) fn binop(&mut self, op: BinOp, l: &ScriptValue, r: &ScriptValue) -> R<ScriptValue> {
        use ScriptValue as V;
        let unsupported = || {
            type_error(format!(
                "unsupported operand type(s) for {}: '{}' and '{}'",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ))
        };
        if l.is_number() && r.is_number() {
            return numeric_binop(op, l, r);
        }
        match (op, l, r) {
            (BinOp::Add, V::Str(a), V::Str(b)) => {
                if a.len() + b.len() > MAX_STRING_BYTES {
                    return Err(fault("MemoryError", "string too large"));
                }
                let mut s = String::with_capacity(a.len() + b.len());
                s.push_str(a);
                s.push_str(b);
                Ok(V::str(s))
            }
            (BinOp::Add, V::List(a), V::List(b)) => {
                let mut v = a.borrow().clone();
                v.extend(b.borrow().iter().cloned());
                check_len(v.len())?;
                Ok(V::list(v))
            }
            (BinOp::Add, V::Tuple(a), V::Tuple(b)) => {
                let mut v = a.to_vec();
                v.extend(b.iter().cloned());
                check_len(v.len())?;
                Ok(V::tuple(v))
            }
            (BinOp::Mul, seq, n) | (BinOp::Mul, n, seq)
                if matches!(n, V::Int(_) | V::Bool(_)) && matches!(seq, V::Str(_) | V::List(_) | V::Tuple(_)) =>
            {
                let n = n.as_int().unwrap().max(0) as usize;
                match seq {
                    V::Str(s) => {
                        if s.len().saturating_mul(n) > MAX_STRING_BYTES {
                            return Err(fault("MemoryError", "string too large"));
                        }
                        Ok(V::str(s.repeat(n)))
                    }
                    V::List(l) => {
                        let items = l.borrow();
                        check_len(items.len().saturating_mul(n))?;
                        Ok(V::list(items.iter().cloned().cycle().take(items.len() * n).collect()))
                    }
                    V::Tuple(t) => {
                        check_len(t.len().saturating_mul(n))?;
                        Ok(V::tuple(t.iter().cloned().cycle().take(t.len() * n).collect()))
                    }
                    _ => unreachable!(),
                }
            }
            (BinOp::Mod, V::Str(s), args) => Ok(V::str(percent_format(s, args).map_err(type_error)?)),
            (BinOp::Div, V::Object(o), rhs) if matches!(**o, Object::Path(_)) => {
                let Object::Path(p) = &**o else { unreachable!() };
                match rhs {
                    V::Str(s) => Ok(V::object(Object::Path(p.join(&**s)))),
                    V::Object(q) => match &**q {
                        Object::Path(q) => Ok(V::object(Object::Path(p.join(q)))),
                        _ => Err(unsupported()),
                    },
                    _ => Err(unsupported()),
                }
            }
            _ => Err(unsupported()),
        }
    }

    fn compare(&mut self, op: CmpOp, l: &ScriptValue, r: &ScriptValue) -> R<bool> {
        use std::cmp::Ordering::*;
        Ok(match op {
            CmpOp::Eq => l == r,
            CmpOp::NotEq => l != r,
            CmpOp::In => self.contains(r, l)?,
            CmpOp::NotIn => !self.contains(r, l)?,
            CmpOp::Is => is_same(l, r),
            CmpOp::IsNot => !is_same(l, r),
            CmpOp::Lt | CmpOp::LtE | CmpOp::Gt | CmpOp::GtE => {
                let Some(ord) = compare_values(l, r) else {
                    let both_num = l.is_number() && r.is_number();
                    if both_num {
                        return Ok(false);
                    }
                    let sym = match op {
                        CmpOp::Lt => "<",
                        CmpOp::LtE => "<=",
                        CmpOp::Gt => ">",
                        _ => ">=",
                    };
                    return Err(type_error(format!(
                        "'{sym}' not supported between instances of '{}' and '{}'",
                        l.type_name(),
                        r.type_name()
                    )));
                };
                match op {
                    CmpOp::Lt => ord == Less,
                    CmpOp::LtE => ord != Greater,
                    CmpOp::Gt => ord == Greater,
                    _ => ord != Less,
                }
            }
        })
    }

    pub(crate) fn contains(&mut self, container: &ScriptValue, item: &ScriptValue) -> R<bool> {
        use ScriptValue as V;
        Ok(match container {
            V::Str(s) => match item {
                V::Str(sub) => s.contains(&**sub),
                _ => {
                    return Err(type_error(format!(
                        "'in <string>' requires string as left operand, not {}",
                        item.type_name()
                    )))
                }
            },
            V::List(l) => l.borrow().iter().any(|v| v == item),
            V::Tuple(t) => t.iter().any(|v| v == item),
            V::Map(m) => item.to_key().is_some_and(|k| m.borrow().contains_key(&k)),
            V::Object(o) => match **o {
                Object::Range { start, stop, step } => match item.as_int() {
                    Some(i) if !matches!(item, V::Float(_)) => {
                        let in_bounds = if step > 0 { i >= start && i < stop } else { i <= start && i > stop };
                        in_bounds && (i - start) % step == 0
                    }
                    _ => false,
                },
                _ => return Err(type_error(format!("argument of type '{}' is not iterable", container.type_name()))),
            },
            other => return Err(type_error(format!("argument of type '{}' is not iterable", other.type_name()))),
        })
    }

    // ---- items ----

    pub(crate) fn get_item(&mut self, container: &ScriptValue, key: &ScriptValue) -> R<ScriptValue> {
        use ScriptValue as V;
        match container {
            V::List(l) => {
                let l = l.borrow();
                let i = normalize_index(key, l.len(), "list")?;
                Ok(l[i].clone())
            }
            V::Tuple(t) => {
                let i = normalize_index(key, t.len(), "tuple")?;
                Ok(t[i].clone())
            }
            V::Str(s) => {
                let n = s.chars().count();
                let i = normalize_index(key, n, "string")?;
                Ok(V::str(s.chars().nth(i).unwrap().to_string()))
            }
            V::Map(m) => {
                let k = key
                    .to_key()
                    .ok_or_else(|| type_error(format!("unhashable or unsupported key type: '{}'", key.type_name())))?;
                m.borrow().get(&k).cloned().ok_or_else(|| fault("KeyError", key.repr()))
            }
            V::Object(o) => match **o {
                Object::Range { start, stop, step } => {
                    let n = range_len(start, stop, step) as usize;
                    let i = normalize_index(key, n, "range object")?;
                    Ok(V::Int(start + step * i as i64))
                }
                _ => Err(type_error(format!("'{}' object is not subscriptable", container.type_name()))),
            },
            other => Err(type_error(format!("'{}' object is not subscriptable", other.type_name()))),
        }
    }

    /// Produces the items of an iterable. Ranges stay lazy.
    pub(crate) fn iterate(&mut self, v: &ScriptValue) -> R<ValueIter> {
        use ScriptValue as V;
        let items = match v {
            V::List(l) => l.borrow().clone(),
            V::Tuple(t) => t.to_vec(),
            V::Str(s) => s.chars().map(|c| V::str(c.to_string())).collect(),
            V::Map(m) => m.borrow().keys().map(|k| k.to_value()).collect(),
            V::Object(o) => match &**o {
                Object::Range { start, stop, step } => {
                    return Ok(ValueIter::Range { cur: *start, stop: *stop, step: *step })
                }
                Object::File(f) => {
                    let text = f.borrow_mut().read().map_err(|m| fault("OSError", m))?;
                    text.split_inclusive('\n').map(V::str).collect()
                }
                _ => return Err(type_error(format!("'{}' object is not iterable", v.type_name()))),
            },
            other => return Err(type_error(format!("'{}' object is not iterable", other.type_name()))),
        };
        Ok(ValueIter::Items(items.into_iter()))
    }

    /// Collects an iterable, refusing sizes beyond the sequence cap.
    pub(crate) fn collect(&mut self, v: &ScriptValue) -> R<Vec<ScriptValue>> {
        if let ScriptValue::Object(o) = v {
            if let Object::Range { start, stop, step } = **o {
                check_len(range_len(start, stop, step) as usize)?;
            }
        }
        Ok(self.iterate(v)?.collect())
    }
}

pub(crate) fn check_len(n: usize) -> R<()> {
    if n > MAX_SEQUENCE_LEN {
        return Err(fault("MemoryError", format!("sequence of {n} items exceeds the limit of {MAX_SEQUENCE_LEN}")));
    }
    Ok(())
}

fn is_same(a: &ScriptValue, b: &ScriptValue) -> bool {
    use ScriptValue as V;
    match (a, b) {
        (V::None, V::None) => true,
        (V::Bool(x), V::Bool(y)) => x == y,
        (V::Int(x), V::Int(y)) => x == y,
        (V::Str(x), V::Str(y)) => x == y,
        (V::List(x), V::List(y)) => Rc::ptr_eq(x, y),
        (V::Map(x), V::Map(y)) => Rc::ptr_eq(x, y),
        (V::Tuple(x), V::Tuple(y)) => Rc::ptr_eq(x, y),
        (V::Callable(x), V::Callable(y)) => Rc::ptr_eq(x, y),
        (V::Object(x), V::Object(y)) => Rc::ptr_eq(x, y) || a == b && matches!(**x, Object::Module(_)),
        _ => false,
    }
}

pub(crate) fn normalize_index(key: &ScriptValue, len: usize, what: &str) -> R<usize> {
    let i = match key {
        ScriptValue::Int(i) => *i,
        ScriptValue::Bool(b) => *b as i64,
        other => {
            return Err(type_error(format!("{what} indices must be integers, not {}", other.type_name())))
        }
    };
    let j = if i < 0 { i + len as i64 } else { i };
    if j < 0 || j >= len as i64 {
        return Err(fault("IndexError", format!("{what} index out of range")));
    }
    Ok(j as usize)
}

fn clamp_slice(lo: Option<i64>, hi: Option<i64>, len: i64) -> (i64, i64) {
    let fix = |v: i64| if v < 0 { (v + len).max(0) } else { v.min(len) };
    (lo.map(fix).unwrap_or(0), hi.map(fix).unwrap_or(len))
}

/// Python slice index computation for any step.
fn slice_indices(lo: Option<i64>, hi: Option<i64>, step: i64, len: i64) -> Vec<usize> {
    let mut out = Vec::new();
    if step > 0 {
        let (start, stop) = clamp_slice(lo, hi, len);
        let mut i = start;
        while i < stop {
            out.push(i as usize);
            i += step;
        }
    } else {
        let fix = |v: i64, dflt: i64| -> i64 {
            if v < 0 {
                (v + len).max(-1)
            } else {
                v.min(len - 1)
            }
            .max(dflt.min(-1))
        };
        let start = lo.map(|v| fix(v, -1)).unwrap_or(len - 1);
        let stop = hi.map(|v| fix(v, -1)).unwrap_or(-1);
        let mut i = start;
        while i > stop {
            out.push(i as usize);
            i += step;
        }
    }
    out
}

fn get_slice(container: &ScriptValue, lo: Option<i64>, hi: Option<i64>, step: Option<i64>) -> R<ScriptValue> {
    use ScriptValue as V;
    let step = step.unwrap_or(1);
    if step == 0 {
        return Err(value_error("slice step cannot be zero"));
    }
    match container {
        V::List(l) => {
            let l = l.borrow();
            let idx = slice_indices(lo, hi, step, l.len() as i64);
            Ok(V::list(idx.into_iter().map(|i| l[i].clone()).collect()))
        }
        V::Tuple(t) => {
            let idx = slice_indices(lo, hi, step, t.len() as i64);
            Ok(V::tuple(idx.into_iter().map(|i| t[i].clone()).collect()))
        }
        V::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let idx = slice_indices(lo, hi, step, chars.len() as i64);
            Ok(V::str(idx.into_iter().map(|i| chars[i]).collect::<String>()))
        }
        V::Object(o) => match **o {
            Object::Range { start, stop, step: rs } => {
                let n = range_len(start, stop, rs);
                let idx = slice_indices(lo, hi, step, n);
                check_len(idx.len())?;
                Ok(V::list(idx.into_iter().map(|i| V::Int(start + rs * i as i64)).collect()))
            }
            _ => Err(type_error(format!("'{}' object is not subscriptable", container.type_name()))),
        },
        other => Err(type_error(format!("'{}' object is not subscriptable", other.type_name()))),
    }
}

fn overflow() -> Unwind {
    fault("OverflowError", "integer result exceeds 64-bit range")
}

pub(crate) fn numeric_binop(op: BinOp, l: &ScriptValue, r: &ScriptValue) -> R<ScriptValue> {
    use ScriptValue as V;
    let both_int = !matches!(l, V::Float(_)) && !matches!(r, V::Float(_));
    if both_int {
        let (a, b) = (l.as_int().unwrap(), r.as_int().unwrap());
        return Ok(match op {
            BinOp::Add => V::Int(a.checked_add(b).ok_or_else(overflow)?),
            BinOp::Sub => V::Int(a.checked_sub(b).ok_or_else(overflow)?),
            BinOp::Mul => V::Int(a.checked_mul(b).ok_or_else(overflow)?),
            BinOp::Div => {
                if b == 0 {
                    return Err(fault("ZeroDivisionError", "division by zero"));
                }
                V::Float(a as f64 / b as f64)
            }
            BinOp::FloorDiv => {
                if b == 0 {
                    return Err(fault("ZeroDivisionError", "integer division or modulo by zero"));
                }
                let q = a.checked_div(b).ok_or_else(overflow)?;
                V::Int(if (a % b != 0) && ((a < 0) != (b < 0)) { q - 1 } else { q })
            }
            BinOp::Mod => {
                if b == 0 {
                    return Err(fault("ZeroDivisionError", "integer division or modulo by zero"));
                }
                let m = a.checked_rem(b).unwrap_or(0);
                V::Int(if m != 0 && ((m < 0) != (b < 0)) { m + b } else { m })
            }
            BinOp::Pow => {
                if b < 0 {
                    if a == 0 {
                        return Err(fault("ZeroDivisionError", "0.0 cannot be raised to a negative power"));
                    }
                    V::Float((a as f64).powf(b as f64))
                } else {
                    let e = u32::try_from(b).map_err(|_| overflow())?;
                    V::Int(a.checked_pow(e).ok_or_else(overflow)?)
                }
            }
        });
    }
    let (a, b) = (l.as_f64().unwrap(), r.as_f64().unwrap());
    Ok(V::Float(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(fault("ZeroDivisionError", "float division by zero"));
            }
            a / b
        }
        BinOp::FloorDiv => {
            if b == 0.0 {
                return Err(fault("ZeroDivisionError", "float floor division by zero"));
            }
            (a / b).floor()
        }
        BinOp::Mod => {
            if b == 0.0 {
                return Err(fault("ZeroDivisionError", "float modulo"));
            }
            let m = a % b;
            if m != 0.0 && ((m < 0.0) != (b < 0.0)) {
                m + b
            } else {
                m
            }
        }
        BinOp::Pow => {
            if a == 0.0 && b < 0.0 {
                return Err(fault("ZeroDivisionError", "0.0 cannot be raised to a negative power"));
            }
            if a < 0.0 && b.fract() != 0.0 {
                return Err(value_error("negative number cannot be raised to a fractional power"));
            }
            let out = a.powf(b);
            if out.is_infinite() && a.is_finite() && b.is_finite() {
                return Err(fault("OverflowError", "numerical result out of range"));
            }
            out
        }
    }))
}
