//! Host shims for the importable modules.
//!
//! * `math`: sqrt floor ceil trunc log log2 log10 exp pow fabs hypot sin cos tan asin acos atan atan2
//!   degrees radians isclose isnan isinf isfinite fsum prod gcd factorial comb copysign;
//!   constants pi e tau inf nan
//! * `json`: dumps loads dump load
//! * `random`: seed random randint randrange uniform choice shuffle sample gauss
//! * `statistics`: mean fmean median median_low median_high mode stdev pstdev variance pvariance
//! * `pathlib`: Path

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builtins::{bind, expect_int, expect_str, Kw};
use crate::format::{json_dumps, JsonOptions};
use crate::interp::{fault, type_error, value_error, Interp, R};
use crate::methods::clean_path;
use crate::value::*;

const MATH_FNS: &[&str] = &[
    "acos", "asin", "atan", "atan2", "ceil", "comb", "copysign", "cos", "degrees", "exp", "fabs", "factorial",
    "floor", "fsum", "gcd", "hypot", "isclose", "isfinite", "isinf", "isnan", "log", "log10", "log2", "pow", "prod",
    "radians", "sin", "sqrt", "tan", "trunc",
];
const JSON_FNS: &[&str] = &["dump", "dumps", "load", "loads"];
const RANDOM_FNS: &[&str] = &["choice", "gauss", "randint", "random", "randrange", "sample", "seed", "shuffle", "uniform"];
const STATS_FNS: &[&str] = &[
    "fmean", "mean", "median", "median_high", "median_low", "mode", "pstdev", "pvariance", "stdev", "variance",
];
const PATHLIB_FNS: &[&str] = &["Path"];

pub fn module_functions(m: ModuleKind) -> &'static [&'static str] {
    match m {
        ModuleKind::Math => MATH_FNS,
        ModuleKind::Json => JSON_FNS,
        ModuleKind::Random => RANDOM_FNS,
        ModuleKind::Statistics => STATS_FNS,
        ModuleKind::Pathlib => PATHLIB_FNS,
    }
}

fn num(v: &ScriptValue, fname: &str) -> R<f64> {
    v.as_f64()
        .ok_or_else(|| type_error(format!("{fname}() must be a real number, not {}", v.type_name())))
}

fn float_to_int(f: f64, fname: &str) -> R<ScriptValue> {
    if f.is_nan() {
        return Err(value_error(format!("{fname}(): cannot convert float NaN to integer")));
    }
    if !f.is_finite() || f.abs() >= 9.223_372_036_854_776e18 {
        return Err(fault("OverflowError", format!("{fname}(): cannot convert float to 64-bit integer")));
    }
    Ok(ScriptValue::Int(f as i64))
}

fn domain() -> crate::interp::Unwind {
    value_error("math domain error")
}

fn json_options(indent: &Option<ScriptValue>, sort_keys: &Option<ScriptValue>, ensure_ascii: &Option<ScriptValue>) -> R<JsonOptions> {
    let indent = match indent {
        None | Some(ScriptValue::None) => None,
        Some(ScriptValue::Str(s)) => Some(s.to_string()),
        Some(v) => Some(" ".repeat(expect_int(v, "indent")?.max(0) as usize)),
    };
    Ok(JsonOptions {
        indent,
        sort_keys: sort_keys.as_ref().is_some_and(|v| v.truthy()),
        ensure_ascii: ensure_ascii.as_ref().is_none_or(|v| v.truthy()),
    })
}

fn json_loads(s: &str) -> R<ScriptValue> {
    serde_json::from_str::<serde_json::Value>(s)
        .map(|v| ScriptValue::from_json(&v))
        .map_err(|e| fault("JSONDecodeError", e.to_string()))
}

impl Interp<'_> {
    pub(crate) fn module_attr(&mut self, m: &ScriptValue, name: &str) -> R<ScriptValue> {
        let ScriptValue::Object(o) = m else {
            return Err(type_error("not a module"));
        };
        let Object::Module(kind) = **o else {
            return Err(type_error("not a module"));
        };
        if kind == ModuleKind::Math {
            let c = match name {
                "pi" => Some(std::f64::consts::PI),
                "e" => Some(std::f64::consts::E),
                "tau" => Some(std::f64::consts::TAU),
                "inf" => Some(f64::INFINITY),
                "nan" => Some(f64::NAN),
                _ => None,
            };
            if let Some(c) = c {
                return Ok(ScriptValue::Float(c));
            }
        }
        match module_functions(kind).iter().find(|f| **f == name) {
            Some(f) => Ok(ScriptValue::Callable(Rc::new(Callable::ModuleFn { module: kind, name: f }))),
            None => Err(fault("AttributeError", format!("module '{}' has no attribute '{}'", kind.name(), name))),
        }
    }

    pub(crate) fn call_module_fn(&mut self, m: ModuleKind, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        match m {
            ModuleKind::Math => self.math_fn(name, args, kwargs),
            ModuleKind::Json => self.json_fn(name, args, kwargs),
            ModuleKind::Random => self.random_fn(name, args, kwargs),
            ModuleKind::Statistics => self.stats_fn(name, args, kwargs),
            ModuleKind::Pathlib => {
                if !kwargs.is_empty() {
                    return Err(type_error("Path() takes no keyword arguments"));
                }
                let mut p = std::path::PathBuf::new();
                for a in &args {
                    match a {
                        ScriptValue::Str(s) => p.push(&**s),
                        ScriptValue::Object(o) => match &**o {
                            Object::Path(q) => p.push(q),
                            _ => return Err(type_error("expected str or Path")),
                        },
                        other => {
                            return Err(type_error(format!(
                                "argument should be a str or a Path, not '{}'",
                                other.type_name()
                            )))
                        }
                    }
                }
                Ok(ScriptValue::object(Object::Path(clean_path(&p))))
            }
        }
    }

    fn math_fn(&mut self, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        let one = |args: Vec<V>, kwargs: Kw| -> R<f64> {
            let a = bind(name, &["x"], 1, args, kwargs)?;
            num(a[0].as_ref().unwrap(), name)
        };
        let f = |x: f64| Ok(V::Float(x));
        match name {
            "sqrt" => {
                let x = one(args, kwargs)?;
                if x < 0.0 {
                    return Err(domain());
                }
                f(x.sqrt())
            }
            "floor" | "ceil" | "trunc" => {
                let a = bind(name, &["x"], 1, args, kwargs)?;
                let v = a[0].as_ref().unwrap();
                if let Some(i) = v.as_int() {
                    return Ok(V::Int(i));
                }
                let x = num(v, name)?;
                float_to_int(
                    match name {
                        "floor" => x.floor(),
                        "ceil" => x.ceil(),
                        _ => x.trunc(),
                    },
                    name,
                )
            }
            "log" => {
                let a = bind(name, &["x", "base"], 1, args, kwargs)?;
                let x = num(a[0].as_ref().unwrap(), name)?;
                if x <= 0.0 {
                    return Err(domain());
                }
                match &a[1] {
                    Some(b) => {
                        let b = num(b, name)?;
                        if b <= 0.0 || b == 1.0 {
                            return Err(if b == 1.0 { fault("ZeroDivisionError", "float division by zero") } else { domain() });
                        }
                        f(x.ln() / b.ln())
                    }
                    None => f(x.ln()),
                }
            }
            "log2" | "log10" => {
                let x = one(args, kwargs)?;
                if x <= 0.0 {
                    return Err(domain());
                }
                f(if name == "log2" { x.log2() } else { x.log10() })
            }
            "exp" => {
                let r = one(args, kwargs)?.exp();
                if r.is_infinite() {
                    return Err(fault("OverflowError", "math range error"));
                }
                f(r)
            }
            "fabs" => f(one(args, kwargs)?.abs()),
            "sin" => f(one(args, kwargs)?.sin()),
            "cos" => f(one(args, kwargs)?.cos()),
            "tan" => f(one(args, kwargs)?.tan()),
            "atan" => f(one(args, kwargs)?.atan()),
            "asin" | "acos" => {
                let x = one(args, kwargs)?;
                if !(-1.0..=1.0).contains(&x) {
                    return Err(domain());
                }
                f(if name == "asin" { x.asin() } else { x.acos() })
            }
            "degrees" => f(one(args, kwargs)?.to_degrees()),
            "radians" => f(one(args, kwargs)?.to_radians()),
            "isnan" => Ok(V::Bool(one(args, kwargs)?.is_nan())),
            "isinf" => Ok(V::Bool(one(args, kwargs)?.is_infinite())),
            "isfinite" => Ok(V::Bool(one(args, kwargs)?.is_finite())),
            "atan2" | "pow" | "copysign" => {
                let a = bind(name, &["x", "y"], 2, args, kwargs)?;
                let x = num(a[0].as_ref().unwrap(), name)?;
                let y = num(a[1].as_ref().unwrap(), name)?;
                match name {
                    "atan2" => f(x.atan2(y)),
                    "copysign" => f(x.copysign(y)),
                    _ => {
                        if x == 0.0 && y < 0.0 || x < 0.0 && y.fract() != 0.0 {
                            return Err(domain());
                        }
                        f(x.powf(y))
                    }
                }
            }
            "hypot" => {
                if !kwargs.is_empty() {
                    return Err(type_error("hypot() takes no keyword arguments"));
                }
                let xs = args.iter().map(|a| num(a, name)).collect::<R<Vec<_>>>()?;
                f(xs.iter().fold(0.0f64, |acc, x| acc.hypot(*x)))
            }
            "isclose" => {
                let a = bind(name, &["a", "b", "rel_tol", "abs_tol"], 2, args, kwargs)?;
                let x = num(a[0].as_ref().unwrap(), name)?;
                let y = num(a[1].as_ref().unwrap(), name)?;
                let rel = a[2].as_ref().map(|v| num(v, name)).transpose()?.unwrap_or(1e-9);
                let abs = a[3].as_ref().map(|v| num(v, name)).transpose()?.unwrap_or(0.0);
                if rel < 0.0 || abs < 0.0 {
                    return Err(value_error("tolerances must be non-negative"));
                }
                Ok(V::Bool(x == y || (x - y).abs() <= (rel * x.abs().max(y.abs())).max(abs)))
            }
            "fsum" | "prod" => {
                let a = bind(name, &["iterable"], 1, args, kwargs)?;
                let items = self.collect(a[0].as_ref().unwrap())?;
                if name == "fsum" {
                    let xs = items.iter().map(|v| num(v, name)).collect::<R<Vec<_>>>()?;
                    return f(neumaier_sum(&xs));
                }
                let mut acc = V::Int(1);
                for it in items {
                    acc = self.binop(crate::ast::BinOp::Mul, &acc, &it)?;
                }
                Ok(acc)
            }
            "gcd" => {
                if !kwargs.is_empty() {
                    return Err(type_error("gcd() takes no keyword arguments"));
                }
                let mut g: i64 = 0;
                for a in &args {
                    let mut x = expect_int(a, "gcd() argument")?.unsigned_abs();
                    let mut y = g.unsigned_abs();
                    while y != 0 {
                        (x, y) = (y, x % y);
                    }
                    g = i64::try_from(x).map_err(|_| fault("OverflowError", "integer overflow"))?;
                }
                Ok(V::Int(g))
            }
            "factorial" => {
                let a = bind(name, &["n"], 1, args, kwargs)?;
                let n = expect_int(a[0].as_ref().unwrap(), "factorial() argument")?;
                if n < 0 {
                    return Err(value_error("factorial() not defined for negative values"));
                }
                let mut acc: i64 = 1;
                for k in 2..=n {
                    acc = acc.checked_mul(k).ok_or_else(|| fault("OverflowError", "integer result exceeds 64-bit range"))?;
                }
                Ok(V::Int(acc))
            }
            "comb" => {
                let a = bind(name, &["n", "k"], 2, args, kwargs)?;
                let n = expect_int(a[0].as_ref().unwrap(), "n")?;
                let k = expect_int(a[1].as_ref().unwrap(), "k")?;
                if n < 0 || k < 0 {
                    return Err(value_error("n and k must be non-negative integers"));
                }
                if k > n {
                    return Ok(V::Int(0));
                }
                let k = k.min(n - k);
                let mut acc: i128 = 1;
                for i in 0..k {
                    acc = acc * (n - i) as i128 / (i + 1) as i128;
                    if acc > i64::MAX as i128 {
                        return Err(fault("OverflowError", "integer result exceeds 64-bit range"));
                    }
                }
                Ok(V::Int(acc as i64))
            }
            _ => Err(fault("AttributeError", format!("module 'math' has no attribute '{name}'"))),
        }
    }

    fn json_fn(&mut self, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        match name {
            "dumps" => {
                let a = bind(name, &["obj", "indent", "sort_keys", "ensure_ascii"], 1, args, kwargs)?;
                let opts = json_options(&a[1], &a[2], &a[3])?;
                json_dumps(a[0].as_ref().unwrap(), &opts).map(V::str).map_err(type_error)
            }
            "dump" => {
                let a = bind(name, &["obj", "fp", "indent", "sort_keys", "ensure_ascii"], 2, args, kwargs)?;
                let opts = json_options(&a[2], &a[3], &a[4])?;
                let text = json_dumps(a[0].as_ref().unwrap(), &opts).map_err(type_error)?;
                let write = self.get_attr(a[1].as_ref().unwrap(), "write")?;
                self.call_value(&write, vec![V::str(text)], Vec::new())?;
                Ok(V::None)
            }
            "loads" => {
                let a = bind(name, &["s"], 1, args, kwargs)?;
                json_loads(&expect_str(a[0].as_ref().unwrap(), "the JSON object")?)
            }
            "load" => {
                let a = bind(name, &["fp"], 1, args, kwargs)?;
                let read = self.get_attr(a[0].as_ref().unwrap(), "read")?;
                let text = self.call_value(&read, Vec::new(), Vec::new())?;
                json_loads(&expect_str(&text, "file content")?)
            }
            _ => Err(fault("AttributeError", format!("module 'json' has no attribute '{name}'"))),
        }
    }

    fn random_fn(&mut self, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        match name {
            "seed" => {
                let a = bind(name, &["a"], 0, args, kwargs)?;
                let seed = match &a[0] {
                    None | Some(V::None) => self.limits.rng_seed,
                    Some(V::Str(s)) => s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3)),
                    Some(V::Float(f)) => f.to_bits(),
                    Some(v) => expect_int(v, "seed")? as u64,
                };
                self.rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(V::None)
            }
            "random" => {
                bind(name, &[], 0, args, kwargs)?;
                Ok(V::Float(self.rng.random::<f64>()))
            }
            "uniform" => {
                let a = bind(name, &["a", "b"], 2, args, kwargs)?;
                let lo = num(a[0].as_ref().unwrap(), name)?;
                let hi = num(a[1].as_ref().unwrap(), name)?;
                Ok(V::Float(lo + (hi - lo) * self.rng.random::<f64>()))
            }
            "randint" => {
                let a = bind(name, &["a", "b"], 2, args, kwargs)?;
                let lo = expect_int(a[0].as_ref().unwrap(), "a")?;
                let hi = expect_int(a[1].as_ref().unwrap(), "b")?;
                if lo > hi {
                    return Err(value_error(format!("empty range in randint({lo}, {hi})")));
                }
                Ok(V::Int(self.rng.random_range(lo..=hi)))
            }
            "randrange" => {
                let a = bind(name, &["start", "stop", "step"], 1, args, kwargs)?;
                let x = expect_int(a[0].as_ref().unwrap(), "start")?;
                let (start, stop) = match &a[1] {
                    Some(s) => (x, expect_int(s, "stop")?),
                    None => (0, x),
                };
                let step = match &a[2] {
                    Some(s) => expect_int(s, "step")?,
                    None => 1,
                };
                if step == 0 {
                    return Err(value_error("zero step for randrange()"));
                }
                let n = range_len(start, stop, step);
                if n <= 0 {
                    return Err(value_error("empty range for randrange()"));
                }
                Ok(V::Int(start + step * self.rng.random_range(0..n)))
            }
            "choice" => {
                let a = bind(name, &["seq"], 1, args, kwargs)?;
                let items = self.collect(a[0].as_ref().unwrap())?;
                if items.is_empty() {
                    return Err(fault("IndexError", "Cannot choose from an empty sequence"));
                }
                let i = self.rng.random_range(0..items.len());
                Ok(items[i].clone())
            }
            "shuffle" => {
                let a = bind(name, &["x"], 1, args, kwargs)?;
                let V::List(l) = a[0].as_ref().unwrap() else {
                    return Err(type_error("shuffle() expects a list"));
                };
                let mut v = l.borrow_mut();
                for i in (1..v.len()).rev() {
                    let j = self.rng.random_range(0..=i);
                    v.swap(i, j);
                }
                Ok(V::None)
            }
            "sample" => {
                let a = bind(name, &["population", "k"], 2, args, kwargs)?;
                let mut items = self.collect(a[0].as_ref().unwrap())?;
                let k = expect_int(a[1].as_ref().unwrap(), "k")?;
                if k < 0 || k as usize > items.len() {
                    return Err(value_error("Sample larger than population or is negative"));
                }
                for i in 0..k as usize {
                    let j = self.rng.random_range(i..items.len());
                    items.swap(i, j);
                }
                items.truncate(k as usize);
                Ok(V::list(items))
            }
            "gauss" => {
                let a = bind(name, &["mu", "sigma"], 0, args, kwargs)?;
                let mu = a[0].as_ref().map(|v| num(v, name)).transpose()?.unwrap_or(0.0);
                let sigma = a[1].as_ref().map(|v| num(v, name)).transpose()?.unwrap_or(1.0);
                let u1: f64 = 1.0 - self.rng.random::<f64>();
                let u2: f64 = self.rng.random::<f64>();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                Ok(V::Float(mu + sigma * z))
            }
            _ => Err(fault("AttributeError", format!("module 'random' has no attribute '{name}'"))),
        }
    }

    fn stats_fn(&mut self, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        let a = bind(name, &["data"], 1, args, kwargs)?;
        let items = self.collect(a[0].as_ref().unwrap())?;
        let stat_err = |m: &str| fault("StatisticsError", m.to_string());
        if name == "mode" {
            if items.is_empty() {
                return Err(stat_err("no mode for empty data"));
            }
            let mut best = (0usize, 0usize);
            for (i, x) in items.iter().enumerate() {
                let c = items.iter().filter(|y| *y == x).count();
                if c > best.1 {
                    best = (i, c);
                }
            }
            return Ok(items[best.0].clone());
        }
        if name.starts_with("median") {
            if items.is_empty() {
                return Err(stat_err("no median for empty data"));
            }
            let sorted = self.sort_values(items, None, false)?;
            let n = sorted.len();
            return Ok(match name {
                "median_low" => sorted[(n - 1) / 2].clone(),
                "median_high" => sorted[n / 2].clone(),
                _ if n % 2 == 1 => sorted[n / 2].clone(),
                _ => {
                    let s = self.binop(crate::ast::BinOp::Add, &sorted[n / 2 - 1], &sorted[n / 2])?;
                    self.binop(crate::ast::BinOp::Div, &s, &V::Int(2))?
                }
            });
        }
        let xs = items.iter().map(|v| num(v, name)).collect::<R<Vec<_>>>()?;
        let n = xs.len();
        let mean = neumaier_sum(&xs) / n as f64;
        match name {
            "mean" | "fmean" => {
                if n == 0 {
                    return Err(stat_err("mean requires at least one data point"));
                }
                if name == "mean" && items.iter().all(|v| matches!(v, V::Int(_) | V::Bool(_))) {
                    let total: i128 = items.iter().map(|v| v.as_int().unwrap() as i128).sum();
                    if total % n as i128 == 0 {
                        return Ok(V::Int((total / n as i128) as i64));
                    }
                }
                Ok(V::Float(mean))
            }
            _ => {
                let sample = matches!(name, "stdev" | "variance");
                if n < 1 + sample as usize {
                    return Err(stat_err(if sample {
                        "variance requires at least two data points"
                    } else {
                        "pvariance requires at least one data point"
                    }));
                }
                let ss = neumaier_sum(&xs.iter().map(|x| (x - mean) * (x - mean)).collect::<Vec<_>>());
                let var = ss / (n - sample as usize) as f64;
                Ok(V::Float(if name.ends_with("stdev") { var.sqrt() } else { var }))
            }
        }
    }
}

/// Compensated summation.
pub(crate) fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
