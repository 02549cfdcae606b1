//! Built-in functions.

use std::cmp::Ordering;
use std::collections::HashSet;

use indexmap::IndexMap;

use crate::interp::{fault, numeric_binop, type_error, value_error, Interp, Unwind, R};
use crate::sandbox::OpenError;
use crate::value::*;

pub const BUILTINS: &[&str] = &[
    "abs", "all", "any", "bool", "chr", "dict", "divmod", "enumerate", "filter", "final_answer", "float", "int",
    "isinstance", "len", "list", "map", "max", "min", "open", "ord", "pow", "print", "range", "repr", "reversed",
    "round", "set", "sorted", "str", "sum", "tuple", "zip",
];

pub fn lookup_builtin(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|b| **b == name).copied()
}

pub(crate) type Kw = Vec<(String, ScriptValue)>;

/// Matches positional and keyword arguments to parameter names.
pub(crate) fn bind(
    fname: &str,
    params: &[&str],
    required: usize,
    args: Vec<ScriptValue>,
    kwargs: Kw,
) -> R<Vec<Option<ScriptValue>>> {
    if args.len() > params.len() {
        return Err(type_error(format!(
            "{fname}() takes at most {} arguments ({} given)",
            params.len(),
            args.len()
        )));
    }
    let mut out: Vec<Option<ScriptValue>> = args.into_iter().map(Some).collect();
    out.resize(params.len(), None);
    for (k, v) in kwargs {
        let Some(i) = params.iter().position(|p| *p == k) else {
            return Err(type_error(format!("{fname}() got an unexpected keyword argument '{k}'")));
        };
        if out[i].is_some() {
            return Err(type_error(format!("{fname}() got multiple values for argument '{k}'")));
        }
        out[i] = Some(v);
    }
    if let Some(i) = out.iter().take(required).position(|v| v.is_none()) {
        return Err(type_error(format!("{fname}() missing required argument: '{}'", params[i])));
    }
    Ok(out)
}

pub(crate) fn expect_str(v: &ScriptValue, what: &str) -> R<String> {
    match v {
        ScriptValue::Str(s) => Ok(s.to_string()),
        other => Err(type_error(format!("{what} must be str, not {}", other.type_name()))),
    }
}

pub(crate) fn expect_int(v: &ScriptValue, what: &str) -> R<i64> {
    match v {
        ScriptValue::Int(_) | ScriptValue::Bool(_) => Ok(v.as_int().unwrap()),
        other => Err(type_error(format!("{what} must be an integer, not {}", other.type_name()))),
    }
}

fn opt_none(v: Option<ScriptValue>) -> Option<ScriptValue> {
    v.filter(|v| !matches!(v, ScriptValue::None))
}

fn parse_int(s: &str, base: u32) -> Option<i64> {
    let t = s.trim().replace('_', "");
    let (neg, digits) = match t.strip_prefix('-') {
        Some(d) => (true, d.to_string()),
        None => (false, t.strip_prefix('+').unwrap_or(&t).to_string()),
    };
    let digits = if base == 16 {
        digits.trim_start_matches("0x").trim_start_matches("0X").to_string()
    } else {
        digits
    };
    if digits.is_empty() {
        return None;
    }
    let v = i64::from_str_radix(&digits, base).ok()?;
    Some(if neg { -v } else { v })
}

pub(crate) fn parse_float(s: &str) -> Option<f64> {
    let t = s.trim().replace('_', "");
    match t.to_ascii_lowercase().as_str() {
        "nan" | "+nan" | "-nan" => return Some(f64::NAN),
        "inf" | "+inf" | "infinity" | "+infinity" => return Some(f64::INFINITY),
        "-inf" | "-infinity" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    if t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    t.parse::<f64>().ok()
}

/// Python `round()` semantics (half-to-even on the exact binary value).
pub(crate) fn round_value(x: &ScriptValue, ndigits: Option<i64>) -> R<ScriptValue> {
    match (x, ndigits) {
        (ScriptValue::Float(f), None) => {
            if !f.is_finite() {
                return Err(fault(
                    if f.is_nan() { "ValueError" } else { "OverflowError" },
                    "cannot convert float to integer",
                ));
            }
            let r = f.round_ties_even();
            if r.abs() >= 9.223_372_036_854_776e18 {
                return Err(fault("OverflowError", "integer result exceeds 64-bit range"));
            }
            Ok(ScriptValue::Int(r as i64))
        }
        (ScriptValue::Float(f), Some(n)) => {
            if !f.is_finite() {
                return Ok(ScriptValue::Float(*f));
            }
            if n >= 0 {
                if n > 300 {
                    return Ok(ScriptValue::Float(*f));
                }
                let s = format!("{:.*}", n as usize, f);
                Ok(ScriptValue::Float(s.parse().unwrap_or(*f)))
            } else {
                let p = 10f64.powi((-n).min(308) as i32);
                Ok(ScriptValue::Float((f / p).round_ties_even() * p))
            }
        }
        (v, None) if v.as_int().is_some() => Ok(ScriptValue::Int(v.as_int().unwrap())),
        (v, Some(n)) if v.as_int().is_some() => {
            let i = v.as_int().unwrap();
            if n >= 0 {
                return Ok(ScriptValue::Int(i));
            }
            if n < -18 {
                return Ok(ScriptValue::Int(0));
            }
            let p = 10i128.pow((-n) as u32);
            let (q, r) = ((i as i128).div_euclid(p), (i as i128).rem_euclid(p));
            let twice = 2 * r;
            let q = if twice > p || (twice == p && q % 2 != 0) { q + 1 } else { q };
            i64::try_from(q * p)
                .map(ScriptValue::Int)
                .map_err(|_| fault("OverflowError", "integer result exceeds 64-bit range"))
        }
        (v, _) => Err(type_error(format!("type {} doesn't define __round__ method", v.type_name()))),
    }
}

fn type_matches(v: &ScriptValue, t: &ScriptValue) -> R<bool> {
    use ScriptValue as V;
    match t {
        V::Tuple(ts) => {
            for t in ts.iter() {
                if type_matches(v, t)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        V::Callable(c) => Ok(match &**c {
            Callable::Builtin(name) => match *name {
                "int" => matches!(v, V::Int(_) | V::Bool(_)),
                "float" => matches!(v, V::Float(_)),
                "str" => matches!(v, V::Str(_)),
                "bool" => matches!(v, V::Bool(_)),
                "list" => matches!(v, V::List(_)),
                "dict" => matches!(v, V::Map(_)),
                "tuple" => matches!(v, V::Tuple(_)),
                "range" => matches!(v, V::Object(o) if matches!(**o, Object::Range { .. })),
                _ => false,
            },
            Callable::ModuleFn { module: ModuleKind::Pathlib, name: "Path" } => {
                matches!(v, V::Object(o) if matches!(**o, Object::Path(_)))
            }
            _ => return Err(type_error("isinstance() arg 2 must be a type or tuple of types")),
        }),
        _ => Err(type_error("isinstance() arg 2 must be a type or tuple of types")),
    }
}

impl Interp<'_> {
    /// Stable sort with an optional key function.
    pub(crate) fn sort_values(
        &mut self,
        items: Vec<ScriptValue>,
        key: Option<ScriptValue>,
        reverse: bool,
    ) -> R<Vec<ScriptValue>> {
        let keys = match &key {
            Some(f) => items
                .iter()
                .map(|v| self.call_value(f, vec![v.clone()], Vec::new()))
                .collect::<R<Vec<_>>>()?,
            None => items.clone(),
        };
        let mut idx: Vec<usize> = (0..items.len()).collect();
        let mut failure: Option<(String, String)> = None;
        idx.sort_by(|&a, &b| {
            let (x, y) = if reverse { (&keys[b], &keys[a]) } else { (&keys[a], &keys[b]) };
            match compare_values(x, y) {
                Some(o) => o,
                None => {
                    if !(x.is_number() && y.is_number()) && failure.is_none() {
                        failure = Some((x.type_name().to_string(), y.type_name().to_string()));
                    }
                    Ordering::Equal
                }
            }
        });
        if let Some((a, b)) = failure {
            return Err(type_error(format!("'<' not supported between instances of '{a}' and '{b}'")));
        }
        Ok(idx.into_iter().map(|i| items[i].clone()).collect())
    }

    fn extreme(&mut self, fname: &str, args: Vec<ScriptValue>, kwargs: Kw, want: Ordering) -> R<ScriptValue> {
        let mut key = None;
        let mut default = None;
        for (k, v) in kwargs {
            match k.as_str() {
                "key" => key = opt_none(Some(v)),
                "default" => default = Some(v),
                _ => return Err(type_error(format!("{fname}() got an unexpected keyword argument '{k}'"))),
            }
        }
        let items = match args.len() {
            0 => return Err(type_error(format!("{fname} expected at least 1 argument, got 0"))),
            1 => self.collect(&args[0])?,
            _ => args,
        };
        if items.is_empty() {
            return default.ok_or_else(|| value_error(format!("{fname}() arg is an empty sequence")));
        }
        let mut best = items[0].clone();
        let mut best_key = match &key {
            Some(f) => self.call_value(f, vec![best.clone()], Vec::new())?,
            None => best.clone(),
        };
        for item in items.into_iter().skip(1) {
            let k = match &key {
                Some(f) => self.call_value(f, vec![item.clone()], Vec::new())?,
                None => item.clone(),
            };
            let ord = compare_values(&k, &best_key).ok_or_else(|| {
                type_error(format!(
                    "'<' not supported between instances of '{}' and '{}'",
                    k.type_name(),
                    best_key.type_name()
                ))
            })?;
            if ord == want {
                best = item;
                best_key = k;
            }
        }
        Ok(best)
    }

    pub(crate) fn call_builtin(&mut self, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        match name {
            "print" => {
                let mut sep = " ".to_string();
                let mut end = "\n".to_string();
                let mut file = None;
                for (k, v) in kwargs {
                    match (k.as_str(), v) {
                        ("sep", V::None) | ("end", V::None) | ("flush", _) | ("file", V::None) => {}
                        ("sep", v) => sep = expect_str(&v, "sep")?,
                        ("end", v) => end = expect_str(&v, "end")?,
                        ("file", v) => file = Some(v),
                        (k, _) => return Err(type_error(format!("print() got an unexpected keyword argument '{k}'"))),
                    }
                }
                let text = args.iter().map(|a| a.to_str()).collect::<Vec<_>>().join(&sep) + &end;
                match file {
                    Some(V::Object(o)) => match &*o {
                        Object::File(f) => {
                            f.borrow_mut().write(&text).map_err(|m| fault("OSError", m))?;
                        }
                        _ => return Err(type_error("print() file must be an open file")),
                    },
                    Some(other) => {
                        return Err(type_error(format!("print() file must be an open file, not {}", other.type_name())))
                    }
                    None => self.write_stdout(&text),
                }
                Ok(V::None)
            }
            "final_answer" => {
                let a = bind("final_answer", &["answer"], 1, args, kwargs)?;
                let v = a.into_iter().next().flatten().unwrap();
                if v.contains_callable() {
                    return Err(type_error(format!(
                        "final_answer() value contains a non-serializable object of type '{}'",
                        first_callable_type(&v)
                    )));
                }
                Err(Unwind::Final(v))
            }
            "len" => {
                let a = bind("len", &["obj"], 1, args, kwargs)?;
                let v = a[0].as_ref().unwrap();
                let n = match v {
                    V::Str(s) => s.chars().count() as i64,
                    V::List(l) => l.borrow().len() as i64,
                    V::Tuple(t) => t.len() as i64,
                    V::Map(m) => m.borrow().len() as i64,
                    V::Object(o) => match **o {
                        Object::Range { start, stop, step } => range_len(start, stop, step),
                        _ => return Err(type_error(format!("object of type '{}' has no len()", v.type_name()))),
                    },
                    other => return Err(type_error(format!("object of type '{}' has no len()", other.type_name()))),
                };
                Ok(V::Int(n))
            }
            "range" => {
                if !kwargs.is_empty() {
                    return Err(type_error("range() takes no keyword arguments"));
                }
                let ints = args.iter().map(|a| expect_int(a, "range() argument")).collect::<R<Vec<_>>>()?;
                let (start, stop, step) = match ints.as_slice() {
                    [stop] => (0, *stop, 1),
                    [start, stop] => (*start, *stop, 1),
                    [start, stop, step] => (*start, *stop, *step),
                    _ => return Err(type_error(format!("range expected 1 to 3 arguments, got {}", ints.len()))),
                };
                if step == 0 {
                    return Err(value_error("range() arg 3 must not be zero"));
                }
                Ok(V::object(Object::Range { start, stop, step }))
            }
            "min" => self.extreme("min", args, kwargs, Ordering::Less),
            "max" => self.extreme("max", args, kwargs, Ordering::Greater),
            "sum" => {
                let a = bind("sum", &["iterable", "start"], 1, args, kwargs)?;
                let mut acc = a[1].clone().unwrap_or(V::Int(0));
                if matches!(acc, V::Str(_)) {
                    return Err(type_error("sum() can't sum strings [use ''.join(seq) instead]"));
                }
                for item in self.iterate(a[0].as_ref().unwrap())? {
                    acc = self.binop(crate::ast::BinOp::Add, &acc, &item)?;
                }
                Ok(acc)
            }
            "sorted" => {
                let a = bind("sorted", &["iterable", "key", "reverse"], 1, args, kwargs)?;
                let items = self.collect(a[0].as_ref().unwrap())?;
                let reverse = a[2].as_ref().is_some_and(|v| v.truthy());
                Ok(V::list(self.sort_values(items, opt_none(a[1].clone()), reverse)?))
            }
            "abs" => {
                let a = bind("abs", &["x"], 1, args, kwargs)?;
                match a[0].as_ref().unwrap() {
                    V::Float(f) => Ok(V::Float(f.abs())),
                    v if v.is_number() => Ok(V::Int(
                        v.as_int().unwrap().checked_abs().ok_or_else(|| fault("OverflowError", "integer overflow"))?,
                    )),
                    v => Err(type_error(format!("bad operand type for abs(): '{}'", v.type_name()))),
                }
            }
            "round" => {
                let a = bind("round", &["number", "ndigits"], 1, args, kwargs)?;
                let nd = match opt_none(a[1].clone()) {
                    Some(v) => Some(expect_int(&v, "ndigits")?),
                    None => None,
                };
                round_value(a[0].as_ref().unwrap(), nd)
            }
            "enumerate" => {
                let a = bind("enumerate", &["iterable", "start"], 1, args, kwargs)?;
                let start = match &a[1] {
                    Some(v) => expect_int(v, "start")?,
                    None => 0,
                };
                let items = self.collect(a[0].as_ref().unwrap())?;
                Ok(V::list(
                    items
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| V::tuple(vec![V::Int(start + i as i64), v]))
                        .collect(),
                ))
            }
            "zip" => {
                if let Some((k, _)) = kwargs.iter().find(|(k, _)| k != "strict") {
                    return Err(type_error(format!("zip() got an unexpected keyword argument '{k}'")));
                }
                let cols = args.iter().map(|a| self.collect(a)).collect::<R<Vec<_>>>()?;
                let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
                Ok(V::list((0..n).map(|i| V::tuple(cols.iter().map(|c| c[i].clone()).collect())).collect()))
            }
            "str" => {
                let a = bind("str", &["object"], 0, args, kwargs)?;
                Ok(V::str(a[0].as_ref().map(|v| v.to_str()).unwrap_or_default()))
            }
            "repr" => {
                let a = bind("repr", &["obj"], 1, args, kwargs)?;
                Ok(V::str(a[0].as_ref().unwrap().repr()))
            }
            "int" => {
                let a = bind("int", &["x", "base"], 0, args, kwargs)?;
                let base = match &a[1] {
                    Some(b) => expect_int(b, "base")? as u32,
                    None => 10,
                };
                match a[0].as_ref() {
                    None => Ok(V::Int(0)),
                    Some(V::Str(s)) => parse_int(s, base)
                        .map(V::Int)
                        .ok_or_else(|| value_error(format!("invalid literal for int() with base {base}: {}", V::Str(s.clone()).repr()))),
                    Some(V::Float(f)) => {
                        if f.is_nan() {
                            return Err(value_error("cannot convert float NaN to integer"));
                        }
                        if !f.is_finite() || f.abs() >= 9.223_372_036_854_776e18 {
                            return Err(fault("OverflowError", "cannot convert float to 64-bit integer"));
                        }
                        Ok(V::Int(f.trunc() as i64))
                    }
                    Some(v) if v.is_number() => Ok(V::Int(v.as_int().unwrap())),
                    Some(v) => Err(type_error(format!(
                        "int() argument must be a string or a number, not '{}'",
                        v.type_name()
                    ))),
                }
            }
            "float" => {
                let a = bind("float", &["x"], 0, args, kwargs)?;
                match a[0].as_ref() {
                    None => Ok(V::Float(0.0)),
                    Some(V::Str(s)) => parse_float(s)
                        .map(V::Float)
                        .ok_or_else(|| value_error(format!("could not convert string to float: {}", V::Str(s.clone()).repr()))),
                    Some(v) if v.is_number() => Ok(V::Float(v.as_f64().unwrap())),
                    Some(v) => Err(type_error(format!(
                        "float() argument must be a string or a real number, not '{}'",
                        v.type_name()
                    ))),
                }
            }
            "bool" => {
                let a = bind("bool", &["x"], 0, args, kwargs)?;
                Ok(V::Bool(a[0].as_ref().is_some_and(|v| v.truthy())))
            }
            "list" => {
                let a = bind("list", &["iterable"], 0, args, kwargs)?;
                match &a[0] {
                    Some(v) => Ok(V::list(self.collect(v)?)),
                    None => Ok(V::list(Vec::new())),
                }
            }
            "tuple" => {
                let a = bind("tuple", &["iterable"], 0, args, kwargs)?;
                match &a[0] {
                    Some(v) => Ok(V::tuple(self.collect(v)?)),
                    None => Ok(V::tuple(Vec::new())),
                }
            }
            "set" => {
                let a = bind("set", &["iterable"], 0, args, kwargs)?;
                let items = match &a[0] {
                    Some(v) => self.collect(v)?,
                    None => Vec::new(),
                };
                Ok(V::list(dedup(items)))
            }
            "dict" => {
                if args.len() > 1 {
                    return Err(type_error(format!("dict expected at most 1 argument, got {}", args.len())));
                }
                let mut m = IndexMap::new();
                if let Some(src) = args.into_iter().next() {
                    self.merge_into(&mut m, &src)?;
                }
                for (k, v) in kwargs {
                    m.insert(MapKey::from(k.as_str()), v);
                }
                Ok(V::map(m))
            }
            "open" => {
                let a = bind("open", &["file", "mode", "encoding", "newline"], 1, args, kwargs)?;
                let path = match a[0].as_ref().unwrap() {
                    V::Str(s) => s.to_string(),
                    V::Object(o) => match &**o {
                        Object::Path(p) => p.to_string_lossy().into_owned(),
                        _ => return Err(type_error("open() expects a path")),
                    },
                    v => return Err(type_error(format!("expected str or Path, not {}", v.type_name()))),
                };
                let mode = match &a[1] {
                    Some(m) => expect_str(m, "mode")?,
                    None => "r".into(),
                };
                self.open_file(&path, &mode)
            }
            "isinstance" => {
                let a = bind("isinstance", &["obj", "class_or_tuple"], 2, args, kwargs)?;
                Ok(V::Bool(type_matches(a[0].as_ref().unwrap(), a[1].as_ref().unwrap())?))
            }
            "reversed" => {
                let a = bind("reversed", &["sequence"], 1, args, kwargs)?;
                let v = a[0].as_ref().unwrap();
                if matches!(v, V::Map(_)) {
                    return Err(type_error("'dict' object is not reversible"));
                }
                let mut items = self.collect(v)?;
                items.reverse();
                Ok(V::list(items))
            }
            "any" | "all" => {
                let a = bind(name, &["iterable"], 1, args, kwargs)?;
                let items = self.iterate(a[0].as_ref().unwrap())?;
                let mut it = items;
                Ok(V::Bool(if name == "any" { it.any(|v| v.truthy()) } else { it.all(|v| v.truthy()) }))
            }
            "map" => {
                if !kwargs.is_empty() {
                    return Err(type_error("map() takes no keyword arguments"));
                }
                if args.len() < 2 {
                    return Err(type_error("map() must have at least two arguments."));
                }
                let f = args[0].clone();
                let cols = args[1..].iter().map(|a| self.collect(a)).collect::<R<Vec<_>>>()?;
                let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    out.push(self.call_value(&f, cols.iter().map(|c| c[i].clone()).collect(), Vec::new())?);
                }
                Ok(V::list(out))
            }
            "filter" => {
                let a = bind("filter", &["function", "iterable"], 2, args, kwargs)?;
                let f = opt_none(a[0].clone());
                let mut out = Vec::new();
                for item in self.collect(a[1].as_ref().unwrap())? {
                    let keep = match &f {
                        Some(f) => self.call_value(f, vec![item.clone()], Vec::new())?.truthy(),
                        None => item.truthy(),
                    };
                    if keep {
                        out.push(item);
                    }
                }
                Ok(V::list(out))
            }
            "divmod" => {
                let a = bind("divmod", &["a", "b"], 2, args, kwargs)?;
                let (x, y) = (a[0].as_ref().unwrap(), a[1].as_ref().unwrap());
                if !(x.is_number() && y.is_number()) {
                    return Err(type_error("unsupported operand type(s) for divmod()"));
                }
                let q = numeric_binop(crate::ast::BinOp::FloorDiv, x, y)?;
                let r = numeric_binop(crate::ast::BinOp::Mod, x, y)?;
                Ok(V::tuple(vec![q, r]))
            }
            "pow" => {
                let a = bind("pow", &["base", "exp"], 2, args, kwargs)?;
                self.binop(crate::ast::BinOp::Pow, a[0].as_ref().unwrap(), a[1].as_ref().unwrap())
            }
            "chr" => {
                let a = bind("chr", &["i"], 1, args, kwargs)?;
                let i = expect_int(a[0].as_ref().unwrap(), "chr() argument")?;
                u32::try_from(i)
                    .ok()
                    .and_then(char::from_u32)
                    .map(|c| V::str(c.to_string()))
                    .ok_or_else(|| value_error("chr() arg not in range(0x110000)"))
            }
            "ord" => {
                let a = bind("ord", &["c"], 1, args, kwargs)?;
                let s = expect_str(a[0].as_ref().unwrap(), "ord() argument")?;
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(V::Int(c as i64)),
                    _ => Err(type_error(format!(
                        "ord() expected a character, but string of length {} found",
                        s.chars().count()
                    ))),
                }
            }
            other => Err(fault("NameError", format!("name '{other}' is not defined"))),
        }
    }

    pub(crate) fn merge_into(&mut self, m: &mut IndexMap<MapKey, ScriptValue>, src: &ScriptValue) -> R<()> {
        if let ScriptValue::Map(other) = src {
            for (k, v) in other.borrow().iter() {
                m.insert(k.clone(), v.clone());
            }
            return Ok(());
        }
        for (i, pair) in self.collect(src)?.into_iter().enumerate() {
            let kv = self.collect(&pair)?;
            if kv.len() != 2 {
                return Err(value_error(format!(
                    "dictionary update sequence element #{i} has length {}; 2 is required",
                    kv.len()
                )));
            }
            let k = kv[0]
                .to_key()
                .ok_or_else(|| type_error(format!("unsupported dict key type: '{}'", kv[0].type_name())))?;
            m.insert(k, kv[1].clone());
        }
        Ok(())
    }

    pub(crate) fn open_file(&mut self, path: &str, mode: &str) -> R<ScriptValue> {
        match self.sandbox.open(path, mode) {
            Ok(h) => Ok(ScriptValue::object(Object::File(std::cell::RefCell::new(h)))),
            Err(OpenError::Sandbox(e)) => Err(e.into()),
            Err(OpenError::Mode(m)) => Err(value_error(format!("invalid mode: '{m}' (only r, w, a text modes)"))),
            Err(OpenError::Io(class, msg)) => Err(fault(class, msg)),
        }
    }
}

fn first_callable_type(v: &ScriptValue) -> &'static str {
    match v {
        ScriptValue::Callable(_) | ScriptValue::Object(_) if v.contains_callable() => v.type_name(),
        ScriptValue::List(l) => l.borrow().iter().find(|x| x.contains_callable()).map(first_callable_type).unwrap_or("?"),
        ScriptValue::Tuple(t) => t.iter().find(|x| x.contains_callable()).map(first_callable_type).unwrap_or("?"),
        ScriptValue::Map(m) => m.borrow().values().find(|x| x.contains_callable()).map(first_callable_type).unwrap_or("?"),
        _ => v.type_name(),
    }
}

/// Order-preserving de-duplication; stands in for `set()`.
pub(crate) fn dedup(items: Vec<ScriptValue>) -> Vec<ScriptValue> {
    let mut seen = HashSet::new();
    let mut out: Vec<ScriptValue> = Vec::new();
    for v in items {
        match v.to_key() {
            Some(k) if !matches!(v, ScriptValue::Float(_)) => {
                if seen.insert(k) {
                    out.push(v);
                }
            }
            _ => {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}
