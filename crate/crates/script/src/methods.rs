//! Attribute access and methods on built-in types, files and paths.

use std::path::{Path, PathBuf};
use std::rc::Rc;

use crate::builtins::{bind, expect_int, expect_str, Kw};
use crate::format::str_format;
use crate::interp::{fault, type_error, value_error, Interp, R};
use crate::sandbox::{io_class, Access};
use crate::value::*;

const STR_METHODS: &[&str] = &[
    "capitalize", "casefold", "center", "count", "endswith", "find", "format", "index", "isalnum", "isalpha",
    "isdecimal", "isdigit", "islower", "isnumeric", "isspace", "isupper", "join", "ljust", "lower", "lstrip",
    "partition", "removeprefix", "removesuffix", "replace", "rfind", "rjust", "rpartition", "rsplit", "rstrip",
    "split", "splitlines", "startswith", "strip", "swapcase", "title", "upper", "zfill",
];
const LIST_METHODS: &[&str] =
    &["append", "clear", "copy", "count", "extend", "index", "insert", "pop", "remove", "reverse", "sort"];
const DICT_METHODS: &[&str] =
    &["clear", "copy", "get", "items", "keys", "pop", "popitem", "setdefault", "update", "values"];
const TUPLE_METHODS: &[&str] = &["count", "index"];
const FILE_METHODS: &[&str] = &["close", "read", "readline", "readlines", "write", "writelines"];
const PATH_METHODS: &[&str] = &[
    "absolute", "as_posix", "exists", "glob", "is_dir", "is_file", "iterdir", "joinpath", "mkdir", "open",
    "read_text", "relative_to", "resolve", "rglob", "unlink", "with_name", "with_stem", "with_suffix", "write_text",
];

fn method_table(v: &ScriptValue) -> &'static [&'static str] {
    match v {
        ScriptValue::Str(_) => STR_METHODS,
        ScriptValue::List(_) => LIST_METHODS,
        ScriptValue::Map(_) => DICT_METHODS,
        ScriptValue::Tuple(_) => TUPLE_METHODS,
        ScriptValue::Float(_) => &["is_integer"],
        ScriptValue::Object(o) => match **o {
            Object::File(_) => FILE_METHODS,
            Object::Path(_) => PATH_METHODS,
            _ => &[],
        },
        _ => &[],
    }
}

/// Python-style path cleanup: drops `.` segments and trailing slashes.
pub(crate) fn clean_path(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        if c != std::path::Component::CurDir {
            out.push(c.as_os_str());
        }
    }
    if out.as_os_str().is_empty() {
        out.push(".");
    }
    out
}

fn path_value(p: PathBuf) -> ScriptValue {
    ScriptValue::object(Object::Path(clean_path(&p)))
}

fn char_index(s: &str, byte: usize) -> i64 {
    s[..byte].chars().count() as i64
}

/// Shell-style wildcard match for one path segment.
pub(crate) fn fnmatch(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    fn go(p: &[char], n: &[char]) -> bool {
        match p.first() {
            None => n.is_empty(),
            Some('*') => (0..=n.len()).any(|i| go(&p[1..], &n[i..])),
            Some('?') => !n.is_empty() && go(&p[1..], &n[1..]),
            Some('[') => {
                let Some(end) = p.iter().skip(1).position(|&c| c == ']').map(|e| e + 1) else {
                    return n.first() == Some(&'[') && go(&p[1..], &n[1..]);
                };
                let Some(&c) = n.first() else { return false };
                let set = &p[1..end];
                let (negate, set) = match set.first() {
                    Some('!') => (true, &set[1..]),
                    _ => (false, set),
                };
                let mut hit = false;
                let mut i = 0;
                while i < set.len() {
                    if i + 2 < set.len() && set[i + 1] == '-' {
                        hit |= set[i] <= c && c <= set[i + 2];
                        i += 3;
                    } else {
                        hit |= set[i] == c;
                        i += 1;
                    }
                }
                hit != negate && go(&p[end + 1..], &n[1..])
            }
            Some(&c) => n.first() == Some(&c) && go(&p[1..], &n[1..]),
        }
    }
    go(&p, &n)
}

fn split_whitespace_max(s: &str, maxsplit: i64) -> Vec<ScriptValue> {
    if maxsplit < 0 {
        return s.split_whitespace().map(ScriptValue::str).collect();
    }
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        if out.len() as i64 == maxsplit {
            out.push(ScriptValue::str(rest));
            break;
        }
        match rest.find(char::is_whitespace) {
            Some(i) => {
                out.push(ScriptValue::str(&rest[..i]));
                rest = rest[i..].trim_start();
            }
            None => {
                out.push(ScriptValue::str(rest));
                break;
            }
        }
    }
    out
}

fn strip_set(s: &str, chars: Option<&str>, left: bool, right: bool) -> String {
    let pred = |c: char| match chars {
        Some(set) => set.contains(c),
        None => c.is_whitespace(),
    };
    let mut t = s;
    if left {
        t = t.trim_start_matches(pred);
    }
    if right {
        t = t.trim_end_matches(pred);
    }
    t.to_string()
}

fn pad_str(s: &str, width: i64, fill: char, align: char) -> String {
    let len = s.chars().count() as i64;
    if width <= len {
        return s.to_string();
    }
    let n = (width - len) as usize;
    let fills = |k: usize| std::iter::repeat_n(fill, k).collect::<String>();
    match align {
        '<' => format!("{s}{}", fills(n)),
        '>' => format!("{}{s}", fills(n)),
        _ => {
            let left = n / 2 + (n & (width as usize) & 1);
            format!("{}{s}{}", fills(left), fills(n - left))
        }
    }
}

impl Interp<'_> {
    pub(crate) fn get_attr(&mut self, v: &ScriptValue, attr: &str) -> R<ScriptValue> {
        if let ScriptValue::Object(o) = v {
            match &**o {
                Object::Module(_) => return self.module_attr(v, attr),
                Object::Path(p) => {
                    let s = |x: Option<&std::ffi::OsStr>| ScriptValue::str(x.map(|x| x.to_string_lossy()).unwrap_or_default());
                    match attr {
                        "name" => return Ok(s(p.file_name())),
                        "stem" => return Ok(s(p.file_stem())),
                        "suffix" => {
                            return Ok(ScriptValue::str(
                                p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default(),
                            ))
                        }
                        "parent" => {
                            let parent = match p.parent() {
                                Some(q) if !q.as_os_str().is_empty() => q.to_path_buf(),
                                Some(_) => PathBuf::from("."),
                                None => p.clone(),
                            };
                            return Ok(path_value(parent));
                        }
                        "parts" => {
                            return Ok(ScriptValue::tuple(
                                p.components().map(|c| ScriptValue::str(c.as_os_str().to_string_lossy())).collect(),
                            ))
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        if let Some(name) = method_table(v).iter().find(|m| **m == attr) {
            return Ok(ScriptValue::Callable(Rc::new(Callable::Method { receiver: v.clone(), name: Rc::from(*name) })));
        }
        Err(fault("AttributeError", format!("'{}' object has no attribute '{}'", v.type_name(), attr)))
    }

    pub(crate) fn call_method(&mut self, recv: &ScriptValue, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        match recv {
            ScriptValue::Str(s) => self.str_method(s, name, args, kwargs),
            ScriptValue::List(l) => self.list_method(l, name, args, kwargs),
            ScriptValue::Map(m) => self.dict_method(m, name, args, kwargs),
            ScriptValue::Tuple(t) => {
                let a = bind(name, &["value"], 1, args, kwargs)?;
                let x = a[0].as_ref().unwrap();
                match name {
                    "count" => Ok(ScriptValue::Int(t.iter().filter(|v| *v == x).count() as i64)),
                    _ => t
                        .iter()
                        .position(|v| v == x)
                        .map(|i| ScriptValue::Int(i as i64))
                        .ok_or_else(|| value_error("tuple.index(x): x not in tuple")),
                }
            }
            ScriptValue::Float(f) => {
                bind(name, &[], 0, args, kwargs)?;
                Ok(ScriptValue::Bool(f.is_finite() && f.fract() == 0.0))
            }
            ScriptValue::Object(o) => match &**o {
                Object::File(f) => {
                    let mut f = f.borrow_mut();
                    let io = |m: String| fault("OSError", m);
                    match name {
                        "read" => {
                            bind(name, &["size"], 0, args, kwargs)?;
                            Ok(ScriptValue::str(f.read().map_err(io)?))
                        }
                        "readline" => {
                            bind(name, &[], 0, args, kwargs)?;
                            Ok(ScriptValue::str(f.readline().map_err(io)?))
                        }
                        "readlines" => {
                            bind(name, &[], 0, args, kwargs)?;
                            let text = f.read().map_err(io)?;
                            Ok(ScriptValue::list(text.split_inclusive('\n').map(ScriptValue::str).collect()))
                        }
                        "write" => {
                            let a = bind(name, &["s"], 1, args, kwargs)?;
                            let s = expect_str(a[0].as_ref().unwrap(), "write() argument")?;
                            Ok(ScriptValue::Int(f.write(&s).map_err(io)? as i64))
                        }
                        "writelines" => {
                            let a = bind(name, &["lines"], 1, args, kwargs)?;
                            drop(f);
                            let lines = self.collect(a[0].as_ref().unwrap())?;
                            let Object::File(f) = &**o else { unreachable!() };
                            for l in lines {
                                let s = expect_str(&l, "writelines() item")?;
                                f.borrow_mut().write(&s).map_err(io)?;
                            }
                            Ok(ScriptValue::None)
                        }
                        _ => {
                            bind(name, &[], 0, args, kwargs)?;
                            f.close();
                            Ok(ScriptValue::None)
                        }
                    }
                }
                Object::Path(p) => self.path_method(p, name, args, kwargs),
                _ => Err(type_error(format!("'{}' object has no methods", recv.type_name()))),
            },
            other => Err(fault("AttributeError", format!("'{}' object has no attribute '{}'", other.type_name(), name))),
        }
    }

    fn str_method(&mut self, s: &str, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        let opt_str = |v: &Option<V>, what: &str| -> R<Option<String>> {
            match v {
                None | Some(V::None) => Ok(None),
                Some(v) => expect_str(v, what).map(Some),
            }
        };
        let b = |v: bool| Ok(V::Bool(v));
        match name {
            "format" => return str_format(s, &args, &kwargs).map(V::str).map_err(value_error),
            "lower" | "upper" | "casefold" | "swapcase" | "title" | "capitalize" | "isdigit" | "isalpha"
            | "isalnum" | "isspace" | "isupper" | "islower" | "isnumeric" | "isdecimal" => {
                if !args.is_empty() || !kwargs.is_empty() {
                    return Err(type_error(format!("str.{name}() takes no arguments")));
                }
            }
            _ => {}
        }
        let has_cased = s.chars().any(|c| c.is_lowercase() || c.is_uppercase());
        match name {
            "lower" | "casefold" => Ok(V::str(s.to_lowercase())),
            "upper" => Ok(V::str(s.to_uppercase())),
            "swapcase" => Ok(V::str(
                s.chars()
                    .flat_map(|c| {
                        if c.is_uppercase() {
                            c.to_lowercase().collect::<Vec<_>>()
                        } else {
                            c.to_uppercase().collect()
                        }
                    })
                    .collect::<String>(),
            )),
            "title" => {
                let mut out = String::new();
                let mut prev_cased = false;
                for c in s.chars() {
                    if prev_cased {
                        out.extend(c.to_lowercase());
                    } else {
                        out.extend(c.to_uppercase());
                    }
                    prev_cased = c.is_alphabetic();
                }
                Ok(V::str(out))
            }
            "capitalize" => {
                let mut cs = s.chars();
                Ok(V::str(match cs.next() {
                    Some(c) => c.to_uppercase().chain(cs.flat_map(|c| c.to_lowercase())).collect::<String>(),
                    None => String::new(),
                }))
            }
            "isdigit" | "isnumeric" | "isdecimal" => b(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit() || c.is_numeric())),
            "isalpha" => b(!s.is_empty() && s.chars().all(char::is_alphabetic)),
            "isalnum" => b(!s.is_empty() && s.chars().all(char::is_alphanumeric)),
            "isspace" => b(!s.is_empty() && s.chars().all(char::is_whitespace)),
            "isupper" => b(has_cased && !s.chars().any(char::is_lowercase)),
            "islower" => b(has_cased && !s.chars().any(char::is_uppercase)),
            "strip" | "lstrip" | "rstrip" => {
                let a = bind(name, &["chars"], 0, args, kwargs)?;
                let chars = opt_str(&a[0], "chars")?;
                Ok(V::str(strip_set(s, chars.as_deref(), name != "rstrip", name != "lstrip")))
            }
            "split" | "rsplit" => {
                let a = bind(name, &["sep", "maxsplit"], 0, args, kwargs)?;
                let sep = opt_str(&a[0], "sep")?;
                let max = match &a[1] {
                    Some(v) => expect_int(v, "maxsplit")?,
                    None => -1,
                };
                let parts: Vec<V> = match sep {
                    None if name == "split" => split_whitespace_max(s, max),
                    None => {
                        let rev: String = s.chars().rev().collect();
                        let mut parts: Vec<V> = split_whitespace_max(&rev, max)
                            .into_iter()
                            .map(|p| V::str(p.to_str().chars().rev().collect::<String>()))
                            .collect();
                        parts.reverse();
                        parts
                    }
                    Some(sep) if sep.is_empty() => return Err(value_error("empty separator")),
                    Some(sep) => {
                        if max < 0 {
                            s.split(sep.as_str()).map(V::str).collect()
                        } else if name == "split" {
                            s.splitn(max as usize + 1, sep.as_str()).map(V::str).collect()
                        } else {
                            let mut p: Vec<V> = s.rsplitn(max as usize + 1, sep.as_str()).map(V::str).collect();
                            p.reverse();
                            p
                        }
                    }
                };
                Ok(V::list(parts))
            }
            "splitlines" => {
                let a = bind(name, &["keepends"], 0, args, kwargs)?;
                let keep = a[0].as_ref().is_some_and(|v| v.truthy());
                let lines: Vec<V> = if keep {
                    s.split_inclusive('\n').map(V::str).collect()
                } else {
                    s.lines().map(V::str).collect()
                };
                Ok(V::list(lines))
            }
            "join" => {
                let a = bind(name, &["iterable"], 1, args, kwargs)?;
                let items = self.collect(a[0].as_ref().unwrap())?;
                let mut parts = Vec::with_capacity(items.len());
                for (i, it) in items.iter().enumerate() {
                    match it {
                        V::Str(x) => parts.push(x.to_string()),
                        other => {
                            return Err(type_error(format!(
                                "sequence item {i}: expected str instance, {} found",
                                other.type_name()
                            )))
                        }
                    }
                }
                let out = parts.join(s);
                if out.len() > crate::interp::MAX_STRING_BYTES {
                    return Err(fault("MemoryError", "string too large"));
                }
                Ok(V::str(out))
            }
            "replace" => {
                let a = bind(name, &["old", "new", "count"], 2, args, kwargs)?;
                let old = expect_str(a[0].as_ref().unwrap(), "old")?;
                let new = expect_str(a[1].as_ref().unwrap(), "new")?;
                let count = match &a[2] {
                    Some(v) => expect_int(v, "count")?,
                    None => -1,
                };
                let est = s.len() + (new.len().saturating_sub(old.len())) * (s.len() + 1);
                if est > crate::interp::MAX_STRING_BYTES && old.is_empty() {
                    return Err(fault("MemoryError", "string too large"));
                }
                Ok(V::str(if count < 0 { s.replace(&old, &new) } else { s.replacen(&old, &new, count as usize) }))
            }
            "startswith" | "endswith" => {
                let a = bind(name, &["prefix"], 1, args, kwargs)?;
                let cands: Vec<String> = match a[0].as_ref().unwrap() {
                    V::Tuple(t) => t.iter().map(|v| expect_str(v, name)).collect::<R<_>>()?,
                    v => vec![expect_str(v, name)?],
                };
                b(cands.iter().any(|c| if name == "startswith" { s.starts_with(c.as_str()) } else { s.ends_with(c.as_str()) }))
            }
            "find" | "rfind" | "index" | "count" => {
                let a = bind(name, &["sub"], 1, args, kwargs)?;
                let sub = expect_str(a[0].as_ref().unwrap(), "sub")?;
                if name == "count" {
                    if sub.is_empty() {
                        return Ok(V::Int(s.chars().count() as i64 + 1));
                    }
                    return Ok(V::Int(s.matches(sub.as_str()).count() as i64));
                }
                let pos = if name == "rfind" { s.rfind(sub.as_str()) } else { s.find(sub.as_str()) };
                match pos {
                    Some(p) => Ok(V::Int(char_index(s, p))),
                    None if name == "index" => Err(value_error("substring not found")),
                    None => Ok(V::Int(-1)),
                }
            }
            "zfill" => {
                let a = bind(name, &["width"], 1, args, kwargs)?;
                let w = expect_int(a[0].as_ref().unwrap(), "width")?;
                let (sign, rest) = match s.chars().next() {
                    Some(c @ ('-' | '+')) => (c.to_string(), &s[1..]),
                    _ => (String::new(), s),
                };
                let pad = (w - s.chars().count() as i64).max(0) as usize;
                Ok(V::str(format!("{sign}{}{rest}", "0".repeat(pad))))
            }
            "center" | "ljust" | "rjust" => {
                let a = bind(name, &["width", "fillchar"], 1, args, kwargs)?;
                let w = expect_int(a[0].as_ref().unwrap(), "width")?;
                let fill = match &a[1] {
                    Some(v) => {
                        let f = expect_str(v, "fillchar")?;
                        let mut cs = f.chars();
                        match (cs.next(), cs.next()) {
                            (Some(c), None) => c,
                            _ => return Err(type_error("The fill character must be exactly one character long")),
                        }
                    }
                    None => ' ',
                };
                if w as usize > crate::interp::MAX_STRING_BYTES {
                    return Err(fault("MemoryError", "string too large"));
                }
                let align = match name {
                    "ljust" => '<',
                    "rjust" => '>',
                    _ => '^',
                };
                Ok(V::str(pad_str(s, w, fill, align)))
            }
            "partition" | "rpartition" => {
                let a = bind(name, &["sep"], 1, args, kwargs)?;
                let sep = expect_str(a[0].as_ref().unwrap(), "sep")?;
                if sep.is_empty() {
                    return Err(value_error("empty separator"));
                }
                let found = if name == "partition" { s.find(sep.as_str()) } else { s.rfind(sep.as_str()) };
                let parts = match found {
                    Some(i) => [&s[..i], sep.as_str(), &s[i + sep.len()..]],
                    None if name == "partition" => [s, "", ""],
                    None => ["", "", s],
                };
                Ok(V::tuple(parts.iter().map(V::str).collect()))
            }
            "removeprefix" | "removesuffix" => {
                let a = bind(name, &["affix"], 1, args, kwargs)?;
                let x = expect_str(a[0].as_ref().unwrap(), name)?;
                let out = if name == "removeprefix" { s.strip_prefix(x.as_str()) } else { s.strip_suffix(x.as_str()) };
                Ok(V::str(out.unwrap_or(s)))
            }
            _ => Err(fault("AttributeError", format!("'str' object has no attribute '{name}'"))),
        }
    }

    fn list_method(&mut self, l: &List, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        match name {
            "append" => {
                let a = bind(name, &["object"], 1, args, kwargs)?;
                let mut v = l.borrow_mut();
                crate::interp::check_len(v.len() + 1)?;
                v.push(a.into_iter().next().flatten().unwrap());
                Ok(V::None)
            }
            "extend" => {
                let a = bind(name, &["iterable"], 1, args, kwargs)?;
                let items = self.collect(a[0].as_ref().unwrap())?;
                let mut v = l.borrow_mut();
                crate::interp::check_len(v.len() + items.len())?;
                v.extend(items);
                Ok(V::None)
            }
            "insert" => {
                let a = bind(name, &["index", "object"], 2, args, kwargs)?;
                let i = expect_int(a[0].as_ref().unwrap(), "index")?;
                let mut v = l.borrow_mut();
                let n = v.len() as i64;
                let i = if i < 0 { (i + n).max(0) } else { i.min(n) } as usize;
                v.insert(i, a[1].clone().unwrap());
                Ok(V::None)
            }
            "pop" => {
                let a = bind(name, &["index"], 0, args, kwargs)?;
                let mut v = l.borrow_mut();
                if v.is_empty() {
                    return Err(fault("IndexError", "pop from empty list"));
                }
                let i = match &a[0] {
                    Some(x) => crate::interp::normalize_index(x, v.len(), "pop")?,
                    None => v.len() - 1,
                };
                Ok(v.remove(i))
            }
            "remove" => {
                let a = bind(name, &["value"], 1, args, kwargs)?;
                let mut v = l.borrow_mut();
                let x = a[0].as_ref().unwrap();
                let i = v.iter().position(|e| e == x).ok_or_else(|| value_error("list.remove(x): x not in list"))?;
                v.remove(i);
                Ok(V::None)
            }
            "index" => {
                let a = bind(name, &["value"], 1, args, kwargs)?;
                let x = a[0].as_ref().unwrap();
                l.borrow()
                    .iter()
                    .position(|e| e == x)
                    .map(|i| V::Int(i as i64))
                    .ok_or_else(|| value_error(format!("{} is not in list", x.repr())))
            }
            "count" => {
                let a = bind(name, &["value"], 1, args, kwargs)?;
                let x = a[0].as_ref().unwrap();
                Ok(V::Int(l.borrow().iter().filter(|e| *e == x).count() as i64))
            }
            "sort" => {
                if !args.is_empty() {
                    return Err(type_error("sort() takes no positional arguments"));
                }
                let a = bind(name, &["key", "reverse"], 0, Vec::new(), kwargs)?;
                let items = l.borrow().clone();
                let key = a[0].clone().filter(|v| !matches!(v, V::None));
                let sorted = self.sort_values(items, key, a[1].as_ref().is_some_and(|v| v.truthy()))?;
                *l.borrow_mut() = sorted;
                Ok(V::None)
            }
            "reverse" => {
                bind(name, &[], 0, args, kwargs)?;
                l.borrow_mut().reverse();
                Ok(V::None)
            }
            "copy" => {
                bind(name, &[], 0, args, kwargs)?;
                Ok(V::list(l.borrow().clone()))
            }
            "clear" => {
                bind(name, &[], 0, args, kwargs)?;
                l.borrow_mut().clear();
                Ok(V::None)
            }
            _ => Err(fault("AttributeError", format!("'list' object has no attribute '{name}'"))),
        }
    }

    fn dict_method(&mut self, m: &Map, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        let key_of = |v: &V| {
            v.to_key().ok_or_else(|| type_error(format!("unhashable or unsupported key type: '{}'", v.type_name())))
        };
        match name {
            "get" => {
                let a = bind(name, &["key", "default"], 1, args, kwargs)?;
                let k = a[0].as_ref().unwrap();
                let found = k.to_key().and_then(|k| m.borrow().get(&k).cloned());
                Ok(found.or_else(|| a[1].clone()).unwrap_or(V::None))
            }
            "keys" | "values" | "items" | "copy" | "clear" | "popitem" => {
                bind(name, &[], 0, args, kwargs)?;
                let mut mm = m.borrow_mut();
                Ok(match name {
                    "keys" => V::list(mm.keys().map(|k| k.to_value()).collect()),
                    "values" => V::list(mm.values().cloned().collect()),
                    "items" => V::list(mm.iter().map(|(k, v)| V::tuple(vec![k.to_value(), v.clone()])).collect()),
                    "copy" => V::map(mm.clone()),
                    "clear" => {
                        mm.clear();
                        V::None
                    }
                    _ => match mm.pop() {
                        Some((k, v)) => V::tuple(vec![k.to_value(), v]),
                        None => return Err(fault("KeyError", "'popitem(): dictionary is empty'")),
                    },
                })
            }
            "pop" => {
                let a = bind(name, &["key", "default"], 1, args, kwargs)?;
                let kv = a[0].as_ref().unwrap();
                let k = key_of(kv)?;
                match m.borrow_mut().shift_remove(&k) {
                    Some(v) => Ok(v),
                    None => a[1].clone().ok_or_else(|| fault("KeyError", kv.repr())),
                }
            }
            "setdefault" => {
                let a = bind(name, &["key", "default"], 1, args, kwargs)?;
                let k = key_of(a[0].as_ref().unwrap())?;
                let d = a[1].clone().unwrap_or(V::None);
                Ok(m.borrow_mut().entry(k).or_insert(d).clone())
            }
            "update" => {
                if args.len() > 1 {
                    return Err(type_error(format!("update expected at most 1 argument, got {}", args.len())));
                }
                let mut staged = m.borrow().clone();
                if let Some(src) = args.into_iter().next() {
                    self.merge_into(&mut staged, &src)?;
                }
                for (k, v) in kwargs {
                    staged.insert(MapKey::from(k.as_str()), v);
                }
                *m.borrow_mut() = staged;
                Ok(V::None)
            }
            _ => Err(fault("AttributeError", format!("'dict' object has no attribute '{name}'"))),
        }
    }

    fn resolve_path(&self, p: &Path, access: Access) -> R<PathBuf> {
        Ok(self.sandbox.resolve(&p.to_string_lossy(), access)?)
    }

    fn path_method(&mut self, p: &Path, name: &str, args: Vec<ScriptValue>, kwargs: Kw) -> R<ScriptValue> {
        use ScriptValue as V;
        let io = |e: std::io::Error| fault(io_class(&e), format!("{e}: '{}'", p.display()));
        match name {
            "exists" | "is_file" | "is_dir" => {
                bind(name, &[], 0, args, kwargs)?;
                let real = self.resolve_path(p, Access::Read)?;
                Ok(V::Bool(match name {
                    "exists" => real.exists(),
                    "is_file" => real.is_file(),
                    _ => real.is_dir(),
                }))
            }
            "read_text" => {
                bind(name, &["encoding"], 0, args, kwargs)?;
                let real = self.resolve_path(p, Access::Read)?;
                Ok(V::str(std::fs::read_to_string(&real).map_err(io)?))
            }
            "write_text" => {
                let a = bind(name, &["data", "encoding"], 1, args, kwargs)?;
                let data = expect_str(a[0].as_ref().unwrap(), "data")?;
                let real = self.resolve_path(p, Access::Write)?;
                std::fs::write(&real, &data).map_err(io)?;
                self.sandbox.record_write(&real);
                Ok(V::Int(data.chars().count() as i64))
            }
            "unlink" => {
                let a = bind(name, &["missing_ok"], 0, args, kwargs)?;
                let real = self.resolve_path(p, Access::Write)?;
                match std::fs::remove_file(&real) {
                    Ok(()) => Ok(V::None),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound && a[0].as_ref().is_some_and(|v| v.truthy()) => {
                        Ok(V::None)
                    }
                    Err(e) => Err(io(e)),
                }
            }
            "mkdir" => {
                let a = bind(name, &["mode", "parents", "exist_ok"], 0, args, kwargs)?;
                let parents = a[1].as_ref().is_some_and(|v| v.truthy());
                let exist_ok = a[2].as_ref().is_some_and(|v| v.truthy());
                let real = self.resolve_path(p, Access::Write)?;
                if real.exists() {
                    if exist_ok && real.is_dir() {
                        return Ok(V::None);
                    }
                    return Err(fault("FileExistsError", format!("File exists: '{}'", p.display())));
                }
                let r = if parents { std::fs::create_dir_all(&real) } else { std::fs::create_dir(&real) };
                r.map_err(io)?;
                Ok(V::None)
            }
            "iterdir" => {
                bind(name, &[], 0, args, kwargs)?;
                let real = self.resolve_path(p, Access::Read)?;
                let mut names: Vec<String> = std::fs::read_dir(&real)
                    .map_err(io)?
                    .filter_map(|e| e.ok())
                    .map(|e| e.file_name().to_string_lossy().into_owned())
                    .collect();
                names.sort();
                Ok(V::list(names.into_iter().map(|n| path_value(p.join(n))).collect()))
            }
            "glob" | "rglob" => {
                let a = bind(name, &["pattern"], 1, args, kwargs)?;
                let pat = expect_str(a[0].as_ref().unwrap(), "pattern")?;
                let pat = if name == "rglob" { format!("**/{pat}") } else { pat };
                let real = self.resolve_path(p, Access::Read)?;
                let segs: Vec<&str> = pat.split('/').filter(|s| !s.is_empty()).collect();
                let mut hits = Vec::new();
                glob_walk(&real, PathBuf::new(), &segs, &mut hits, 0);
                hits.sort();
                hits.dedup();
                crate::interp::check_len(hits.len())?;
                Ok(V::list(hits.into_iter().map(|rel| path_value(p.join(rel))).collect()))
            }
            "joinpath" => {
                let mut out = p.to_path_buf();
                if !kwargs.is_empty() {
                    return Err(type_error("joinpath() takes no keyword arguments"));
                }
                for a in &args {
                    match a {
                        V::Str(s) => out.push(&**s),
                        V::Object(o) => match &**o {
                            Object::Path(q) => out.push(q),
                            _ => return Err(type_error("joinpath() expects str or Path")),
                        },
                        _ => return Err(type_error("joinpath() expects str or Path")),
                    }
                }
                Ok(path_value(out))
            }
            "with_suffix" | "with_name" | "with_stem" => {
                let a = bind(name, &["value"], 1, args, kwargs)?;
                let v = expect_str(a[0].as_ref().unwrap(), name)?;
                let mut out = p.to_path_buf();
                match name {
                    "with_suffix" => {
                        if !v.is_empty() && !v.starts_with('.') {
                            return Err(value_error(format!("Invalid suffix '{v}'")));
                        }
                        out.set_extension(v.trim_start_matches('.'));
                    }
                    "with_name" => out.set_file_name(&v),
                    _ => {
                        let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
                        out.set_file_name(format!("{v}{ext}"));
                    }
                }
                Ok(path_value(out))
            }
            "resolve" | "absolute" => {
                bind(name, &["strict"], 0, args, kwargs)?;
                let joined = self.sandbox.root().join(p);
                Ok(path_value(crate::sandbox::normalize(&joined).unwrap_or(joined)))
            }
            "relative_to" => {
                let a = bind(name, &["other"], 1, args, kwargs)?;
                let other = PathBuf::from(a[0].as_ref().unwrap().to_str());
                p.strip_prefix(&other)
                    .map(|r| path_value(r.to_path_buf()))
                    .map_err(|_| value_error(format!("'{}' is not in the subpath of '{}'", p.display(), other.display())))
            }
            "as_posix" => {
                bind(name, &[], 0, args, kwargs)?;
                Ok(V::str(p.to_string_lossy()))
            }
            "open" => {
                let a = bind(name, &["mode", "encoding"], 0, args, kwargs)?;
                let mode = match &a[0] {
                    Some(m) => expect_str(m, "mode")?,
                    None => "r".into(),
                };
                self.open_file(&p.to_string_lossy(), &mode)
            }
            _ => Err(fault("AttributeError", format!("'Path' object has no attribute '{name}'"))),
        }
    }
}

fn glob_walk(dir: &Path, rel: PathBuf, segs: &[&str], out: &mut Vec<PathBuf>, depth: usize) {
    if depth > 64 {
        return;
    }
    let Some((first, rest)) = segs.split_first() else {
        out.push(rel);
        return;
    };
    let entries = || -> Vec<(String, bool)> {
        let mut v: Vec<(String, bool)> = std::fs::read_dir(dir)
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path().is_dir()))
                    .collect()
            })
            .unwrap_or_default();
        v.sort();
        v
    };
    if *first == "**" {
        glob_walk(dir, rel.clone(), rest, out, depth + 1);
        for (name, is_dir) in entries() {
            if is_dir && !name.starts_with('.') {
                glob_walk(&dir.join(&name), rel.join(&name), segs, out, depth + 1);
            }
        }
        return;
    }
    for (name, is_dir) in entries() {
        if name.starts_with('.') && !first.starts_with('.') {
            continue;
        }
        if fnmatch(first, &name) && (rest.is_empty() || is_dir) {
            glob_walk(&dir.join(&name), rel.join(&name), rest, out, depth + 1);
        }
    }
}
