//! Dynamic value model.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::ast::{Param, Stmt};
use crate::format::{py_float_repr, py_str_repr};
use crate::host::HostCallable;
use crate::interp::ScopeRef;

pub type List = Rc<RefCell<Vec<ScriptValue>>>;
pub type Map = Rc<RefCell<IndexMap<MapKey, ScriptValue>>>;

/// A map key: Python dict keys restricted to strings and integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MapKey {
    Int(i64),
    Str(Rc<str>),
}

impl MapKey {
    pub fn to_value(&self) -> ScriptValue {
        match self {
            MapKey::Int(i) => ScriptValue::Int(*i),
            MapKey::Str(s) => ScriptValue::Str(s.clone()),
        }
    }
}

impl From<&str> for MapKey {
    fn from(s: &str) -> Self {
        MapKey::Str(Rc::from(s))
    }
}

#[derive(Clone)]
pub enum ScriptValue {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Rc<str>),
    List(List),
    Map(Map),
    Tuple(Rc<[ScriptValue]>),
    Callable(Rc<Callable>),
    Object(Rc<Object>),
}

/// Something that can be called from script code.
pub enum Callable {
    Builtin(&'static str),
    Host(HostCallable),
    User(UserFunction),
    /// A method looked up on a receiver, e.g. `items.append`.
    Method { receiver: ScriptValue, name: Rc<str> },
    /// A function exported by a module shim, e.g. `math.sqrt`.
    ModuleFn { module: ModuleKind, name: &'static str },
}

pub enum FunctionBody {
    Block(Rc<[Stmt]>),
    Lambda(Rc<crate::ast::Expr>),
}

pub struct UserFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub defaults: Vec<Option<ScriptValue>>,
    pub body: FunctionBody,
    pub closure: ScopeRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleKind {
    Math,
    Json,
    Random,
    Statistics,
    Pathlib,
}

impl ModuleKind {
    pub fn name(self) -> &'static str {
        match self {
            ModuleKind::Math => "math",
            ModuleKind::Json => "json",
            ModuleKind::Random => "random",
            ModuleKind::Statistics => "statistics",
            ModuleKind::Pathlib => "pathlib",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "math" => ModuleKind::Math,
            "json" => ModuleKind::Json,
            "random" => ModuleKind::Random,
            "statistics" => ModuleKind::Statistics,
            "pathlib" => ModuleKind::Pathlib,
            _ => return None,
        })
    }
}

/// Host-side objects with identity.
pub enum Object {
    Module(ModuleKind),
    Path(PathBuf),
    Range { start: i64, stop: i64, step: i64 },
    File(RefCell<crate::sandbox::FileHandle>),
}

impl ScriptValue {
    pub fn str(s: impl AsRef<str>) -> Self {
        ScriptValue::Str(Rc::from(s.as_ref()))
    }

    pub fn list(items: Vec<ScriptValue>) -> Self {
        ScriptValue::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<ScriptValue>) -> Self {
        ScriptValue::Tuple(Rc::from(items))
    }

    pub fn map(entries: IndexMap<MapKey, ScriptValue>) -> Self {
        ScriptValue::Map(Rc::new(RefCell::new(entries)))
    }

    pub fn object(o: Object) -> Self {
        ScriptValue::Object(Rc::new(o))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ScriptValue::None => "NoneType",
            ScriptValue::Bool(_) => "bool",
            ScriptValue::Int(_) => "int",
            ScriptValue::Float(_) => "float",
            ScriptValue::Str(_) => "str",
            ScriptValue::List(_) => "list",
            ScriptValue::Map(_) => "dict",
            ScriptValue::Tuple(_) => "tuple",
            ScriptValue::Callable(c) => match **c {
                Callable::Builtin(_) => "builtin_function_or_method",
                Callable::Method { .. } => "method",
                _ => "function",
            },
            ScriptValue::Object(o) => match **o {
                Object::Module(_) => "module",
                Object::Path(_) => "Path",
                Object::Range { .. } => "range",
                Object::File(_) => "TextIOWrapper",
            },
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            ScriptValue::None => false,
            ScriptValue::Bool(b) => *b,
            ScriptValue::Int(i) => *i != 0,
            ScriptValue::Float(f) => *f != 0.0,
            ScriptValue::Str(s) => !s.is_empty(),
            ScriptValue::List(l) => !l.borrow().is_empty(),
            ScriptValue::Map(m) => !m.borrow().is_empty(),
            ScriptValue::Tuple(t) => !t.is_empty(),
            ScriptValue::Object(o) => match **o {
                Object::Range { start, stop, step } => range_len(start, stop, step) > 0,
                _ => true,
            },
            ScriptValue::Callable(_) => true,
        }
    }

    /// Numeric view for arithmetic; bools count as integers.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ScriptValue::Bool(b) => Some(*b as i64 as f64),
            ScriptValue::Int(i) => Some(*i as f64),
            ScriptValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ScriptValue::Bool(b) => Some(*b as i64),
            ScriptValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, ScriptValue::Bool(_) | ScriptValue::Int(_) | ScriptValue::Float(_))
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, ScriptValue::Callable(_))
    }

    /// `str(value)`.
    pub fn to_str(&self) -> String {
        match self {
            ScriptValue::Str(s) => s.to_string(),
            ScriptValue::Object(o) => match &**o {
                Object::Path(p) => p.to_string_lossy().into_owned(),
                _ => self.repr(),
            },
            _ => self.repr(),
        }
    }

    /// `repr(value)`.
    pub fn repr(&self) -> String {
        let mut out = String::new();
        write_repr(self, &mut out, 0);
        out
    }

    /// Whether this value (recursively) holds a host callable or other
    /// non-data object.
    pub fn contains_callable(&self) -> bool {
        match self {
            ScriptValue::Callable(_) => true,
            ScriptValue::Object(o) => !matches!(**o, Object::Path(_)),
            ScriptValue::List(l) => l.borrow().iter().any(|v| v.contains_callable()),
            ScriptValue::Tuple(t) => t.iter().any(|v| v.contains_callable()),
            ScriptValue::Map(m) => m.borrow().values().any(|v| v.contains_callable()),
            _ => false,
        }
    }

    /// Converts to a JSON document. Callables and other host objects are
    /// rejected; non-finite floats are rejected.
    pub fn to_json(&self) -> Result<serde_json::Value, String> {
        use serde_json::Value as J;
        Ok(match self {
            ScriptValue::None => J::Null,
            ScriptValue::Bool(b) => J::Bool(*b),
            ScriptValue::Int(i) => J::from(*i),
            ScriptValue::Float(f) => serde_json::Number::from_f64(*f)
                .map(J::Number)
                .ok_or_else(|| format!("non-finite float {} is not JSON serializable", py_float_repr(*f)))?,
            ScriptValue::Str(s) => J::String(s.to_string()),
            ScriptValue::List(l) => J::Array(l.borrow().iter().map(|v| v.to_json()).collect::<Result<_, _>>()?),
            ScriptValue::Tuple(t) => J::Array(t.iter().map(|v| v.to_json()).collect::<Result<_, _>>()?),
            ScriptValue::Map(m) => {
                let mut obj = serde_json::Map::new();
                for (k, v) in m.borrow().iter() {
                    let key = match k {
                        MapKey::Int(i) => i.to_string(),
                        MapKey::Str(s) => s.to_string(),
                    };
                    obj.insert(key, v.to_json()?);
                }
                J::Object(obj)
            }
            ScriptValue::Object(o) => match &**o {
                Object::Path(p) => J::String(p.to_string_lossy().into_owned()),
                _ => return Err(format!("Object of type {} is not JSON serializable", self.type_name())),
            },
            ScriptValue::Callable(_) => {
                return Err(format!("Object of type {} is not JSON serializable", self.type_name()))
            }
        })
    }

    /// Converts a JSON document. Integers outside the 64-bit range become floats.
    pub fn from_json(v: &serde_json::Value) -> ScriptValue {
        use serde_json::Value as J;
        match v {
            J::Null => ScriptValue::None,
            J::Bool(b) => ScriptValue::Bool(*b),
            J::Number(n) => match n.as_i64() {
                Some(i) => ScriptValue::Int(i),
                None => ScriptValue::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            J::String(s) => ScriptValue::str(s),
            J::Array(a) => ScriptValue::list(a.iter().map(ScriptValue::from_json).collect()),
            J::Object(o) => ScriptValue::map(
                o.iter()
                    .map(|(k, v)| (MapKey::from(k.as_str()), ScriptValue::from_json(v)))
                    .collect(),
            ),
        }
    }

    /// Converts to a map key, if hashable under our key rules.
    pub fn to_key(&self) -> Option<MapKey> {
        match self {
            ScriptValue::Str(s) => Some(MapKey::Str(s.clone())),
            ScriptValue::Int(i) => Some(MapKey::Int(*i)),
            ScriptValue::Bool(b) => Some(MapKey::Int(*b as i64)),
            ScriptValue::Float(f) if f.fract() == 0.0 && f.abs() < 9.2e18 => Some(MapKey::Int(*f as i64)),
            _ => None,
        }
    }
}

pub fn range_len(start: i64, stop: i64, step: i64) -> i64 {
    if step > 0 && start < stop {
        ((stop as i128 - start as i128 - 1) / step as i128 + 1) as i64
    } else if step < 0 && start > stop {
        ((start as i128 - stop as i128 - 1) / (-(step as i128)) + 1) as i64
    } else {
        0
    }
}

const MAX_REPR_DEPTH: usize = 64;

fn write_repr(v: &ScriptValue, out: &mut String, depth: usize) {
    if depth > MAX_REPR_DEPTH {
        out.push_str("...");
        return;
    }
    match v {
        ScriptValue::None => out.push_str("None"),
        ScriptValue::Bool(true) => out.push_str("True"),
        ScriptValue::Bool(false) => out.push_str("False"),
        ScriptValue::Int(i) => out.push_str(&i.to_string()),
        ScriptValue::Float(f) => out.push_str(&py_float_repr(*f)),
        ScriptValue::Str(s) => out.push_str(&py_str_repr(s)),
        ScriptValue::List(l) => {
            let Ok(items) = l.try_borrow() else {
                out.push_str("[...]");
                return;
            };
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(item, out, depth + 1);
            }
            out.push(']');
        }
        ScriptValue::Tuple(t) => {
            out.push('(');
            for (i, item) in t.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(item, out, depth + 1);
            }
            if t.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        ScriptValue::Map(m) => {
            let Ok(entries) = m.try_borrow() else {
                out.push_str("{...}");
                return;
            };
            out.push('{');
            for (i, (k, val)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(&k.to_value(), out, depth + 1);
                out.push_str(": ");
                write_repr(val, out, depth + 1);
            }
            out.push('}');
        }
        ScriptValue::Callable(c) => match &**c {
            Callable::Builtin(name) => out.push_str(&format!("<built-in function {name}>")),
            Callable::Host(h) => out.push_str(&format!("<tool {}>", h.name())),
            Callable::User(f) => out.push_str(&format!("<function {}>", f.name)),
            Callable::Method { receiver, name } => {
                out.push_str(&format!("<method {} of {} object>", name, receiver.type_name()))
            }
            Callable::ModuleFn { module, name } => out.push_str(&format!("<function {}.{}>", module.name(), name)),
        },
        ScriptValue::Object(o) => match &**o {
            Object::Module(m) => out.push_str(&format!("<module '{}'>", m.name())),
            Object::Path(p) => out.push_str(&format!("PosixPath({})", py_str_repr(&p.to_string_lossy()))),
            Object::Range { start, stop, step } => {
                if *step == 1 {
                    out.push_str(&format!("range({start}, {stop})"))
                } else {
                    out.push_str(&format!("range({start}, {stop}, {step})"))
                }
            }
            Object::File(f) => out.push_str(&format!("<file {}>", py_str_repr(&f.borrow().display_name))),
        },
    }
}

impl fmt::Debug for ScriptValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

impl fmt::Display for ScriptValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_str())
    }
}

/// Structural equality with Python's numeric cross-type rules.
impl PartialEq for ScriptValue {
    fn eq(&self, other: &Self) -> bool {
        values_equal(self, other, 0)
    }
}

fn values_equal(a: &ScriptValue, b: &ScriptValue, depth: usize) -> bool {
    use ScriptValue as V;
    if depth > MAX_REPR_DEPTH {
        return false;
    }
    match (a, b) {
        (V::None, V::None) => true,
        (V::Str(x), V::Str(y)) => x == y,
        (x, y) if x.is_number() && y.is_number() => match (x, y) {
            (V::Float(_), _) | (_, V::Float(_)) => x.as_f64() == y.as_f64(),
            _ => x.as_int() == y.as_int(),
        },
        (V::List(x), V::List(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q, depth + 1))
        }
        (V::Tuple(x), V::Tuple(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q, depth + 1))
        }
        (V::Map(x), V::Map(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len()
                && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| values_equal(v, w, depth + 1)))
        }
        (V::Callable(x), V::Callable(y)) => Rc::ptr_eq(x, y) || callable_eq(x, y),
        (V::Object(x), V::Object(y)) => match (&**x, &**y) {
            (Object::Path(p), Object::Path(q)) => p == q,
            (Object::Module(p), Object::Module(q)) => p == q,
            (Object::Range { start: a1, stop: b1, step: c1 }, Object::Range { start: a2, stop: b2, step: c2 }) => {
                (a1, b1, c1) == (a2, b2, c2)
            }
            _ => Rc::ptr_eq(x, y),
        },
        _ => false,
    }
}

fn callable_eq(x: &Callable, y: &Callable) -> bool {
    match (x, y) {
        (Callable::Builtin(a), Callable::Builtin(b)) => a == b,
        (Callable::ModuleFn { module: m1, name: n1 }, Callable::ModuleFn { module: m2, name: n2 }) => {
            m1 == m2 && n1 == n2
        }
        (Callable::Host(a), Callable::Host(b)) => a.name() == b.name(),
        _ => false,
    }
}

/// Ordering for `<`, `sorted`, `min`, `max`. `None` means the operands are
/// not orderable against each other.
pub fn compare_values(a: &ScriptValue, b: &ScriptValue) -> Option<Ordering> {
    use ScriptValue as V;
    match (a, b) {
        (x, y) if x.is_number() && y.is_number() => match (x, y) {
            (V::Float(_), _) | (_, V::Float(_)) => x.as_f64()?.partial_cmp(&y.as_f64()?),
            _ => Some(x.as_int()?.cmp(&y.as_int()?)),
        },
        (V::Str(x), V::Str(y)) => Some(x.cmp(y)),
        (V::List(x), V::List(y)) => seq_cmp(&x.borrow(), &y.borrow()),
        (V::Tuple(x), V::Tuple(y)) => seq_cmp(x, y),
        (V::Object(x), V::Object(y)) => match (&**x, &**y) {
            (Object::Path(p), Object::Path(q)) => Some(p.components().cmp(q.components())),
            _ => None,
        },
        _ => None,
    }
}

fn seq_cmp(x: &[ScriptValue], y: &[ScriptValue]) -> Option<Ordering> {
    for (p, q) in x.iter().zip(y.iter()) {
        if p == q {
            continue;
        }
        return compare_values(p, q);
    }
    Some(x.len().cmp(&y.len()))
}
