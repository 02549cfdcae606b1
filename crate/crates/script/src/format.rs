//! Python-compatible text rendering: float repr, string repr, the format
//! mini-language, `%`-formatting and `json.dumps` output.

use crate::value::{MapKey, Object, ScriptValue};

/// Shortest round-trip representation, laid out the way Python's `repr(float)` does.
pub fn py_float_repr(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("valid exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let n = digits.len() as i32;
        let body = if exp >= 0 {
            if n <= exp + 1 {
                format!("{}{}.0", digits, "0".repeat((exp + 1 - n) as usize))
            } else {
                let (a, b) = digits.split_at((exp + 1) as usize);
                format!("{a}.{b}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{body}")
    } else {
        let (first, rest) = digits.split_at(1);
        let mant = if rest.is_empty() { first.to_string() } else { format!("{first}.{rest}") };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mant}e{esign}{:02}", exp.abs())
    }
}

/// Python's `repr(str)`.
pub fn py_str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

#[derive(Debug, Default, Clone)]
struct Spec {
    fill: Option<char>,
    align: Option<char>,
    sign: Option<char>,
    alternate: bool,
    zero: bool,
    width: usize,
    grouping: Option<char>,
    precision: Option<usize>,
    kind: Option<char>,
}

fn parse_spec(spec: &str) -> Result<Spec, String> {
    let chars: Vec<char> = spec.chars().collect();
    let mut i = 0;
    let mut s = Spec::default();
    let is_align = |c: char| matches!(c, '<' | '>' | '^' | '=');
    if chars.len() >= 2 && is_align(chars[1]) {
        s.fill = Some(chars[0]);
        s.align = Some(chars[1]);
        i = 2;
    } else if !chars.is_empty() && is_align(chars[0]) {
        s.align = Some(chars[0]);
        i = 1;
    }
    if i < chars.len() && matches!(chars[i], '+' | '-' | ' ') {
        s.sign = Some(chars[i]);
        i += 1;
    }
    if i < chars.len() && chars[i] == '#' {
        s.alternate = true;
        i += 1;
    }
    if i < chars.len() && chars[i] == '0' {
        s.zero = true;
        i += 1;
    }
    let start = i;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    if i > start {
        s.width = chars[start..i].iter().collect::<String>().parse().map_err(|_| "bad width")?;
    }
    if i < chars.len() && matches!(chars[i], ',' | '_') {
        s.grouping = Some(chars[i]);
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err("Format specifier missing precision".into());
        }
        s.precision = Some(chars[start..i].iter().collect::<String>().parse().map_err(|_| "bad precision")?);
    }
    if i < chars.len() {
        s.kind = Some(chars[i]);
        i += 1;
    }
    if i != chars.len() {
        return Err(format!("Invalid format specifier '{spec}'"));
    }
    Ok(s)
}

fn group_digits(int_part: &str, sep: char) -> String {
    let bytes: Vec<char> = int_part.chars().collect();
    let mut out = String::new();
    for (i, c) in bytes.iter().enumerate() {
        if i > 0 && (bytes.len() - i).is_multiple_of(3) {
            out.push(sep);
        }
        out.push(*c);
    }
    out
}

fn fixed(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.prec$}")
}

fn exponent(x: f64, prec: usize, upper: bool) -> String {
    if !x.is_finite() {
        return fixed(x, prec);
    }
    let s = format!("{x:.prec$e}");
    let (m, e) = s.split_once('e').expect("exponent present");
    let e: i32 = e.parse().expect("valid exponent");
    let esign = if e < 0 { '-' } else { '+' };
    let out = format!("{m}e{esign}{:02}", e.abs());
    if upper {
        out.to_uppercase()
    } else {
        out
    }
}

fn general(x: f64, prec: Option<usize>, alternate: bool) -> String {
    if !x.is_finite() {
        return fixed(x, 0);
    }
    let p = prec.unwrap_or(6).max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.*e}", p - 1);
    let exp: i32 = sci.split_once('e').unwrap().1.parse().unwrap();
    let mut out = if exp >= -4 && exp < p as i32 {
        format!("{x:.*}", (p as i32 - 1 - exp).max(0) as usize)
    } else {
        exponent(x, p - 1, false)
    };
    if !alternate {
        if let Some(epos) = out.find('e') {
            let (m, e) = out.split_at(epos);
            let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
            out = format!("{m}{e}");
        } else if out.contains('.') {
            out = out.trim_end_matches('0').trim_end_matches('.').to_string();
        }
    }
    out
}

fn pad(body: String, spec: &Spec, numeric: bool) -> String {
    let len = body.chars().count();
    if len >= spec.width {
        return body;
    }
    let fill = spec.fill.unwrap_or(if spec.zero && numeric { '0' } else { ' ' });
    let align = spec.align.unwrap_or(if spec.zero && numeric {
        '='
    } else if numeric {
        '>'
    } else {
        '<'
    });
    let n = spec.width - len;
    let fills = |k: usize| std::iter::repeat_n(fill, k).collect::<String>();
    match align {
        '<' => body + &fills(n),
        '>' => fills(n) + &body,
        '^' => fills(n / 2) + &body + &fills(n - n / 2),
        '=' => {
            let (sign, rest) = if body.starts_with(['-', '+', ' ']) { body.split_at(1) } else { ("", body.as_str()) };
            format!("{sign}{}{rest}", fills(n))
        }
        _ => body,
    }
}

fn apply_sign(body: String, negative: bool, sign: Option<char>) -> String {
    if negative {
        return body;
    }
    match sign {
        Some('+') => format!("+{body}"),
        Some(' ') => format!(" {body}"),
        _ => body,
    }
}

fn format_number_body(body: String, grouping: Option<char>) -> String {
    let Some(sep) = grouping else { return body };
    let (sign, rest) = match body.strip_prefix('-') { Some(r) => ("-", r), None => ("", body.as_str()) };
    let (int_part, frac) = match rest.find(['.', 'e']) {
        Some(i) => rest.split_at(i),
        None => (rest, ""),
    };
    format!("{sign}{}{frac}", group_digits(int_part, sep))
}

/// Applies a format spec (the part after `:` in `{x:.2f}`).
pub fn format_with_spec(value: &ScriptValue, spec: &str) -> Result<String, String> {
    if spec.is_empty() {
        return Ok(value.to_str());
    }
    let s = parse_spec(spec)?;
    match value {
        ScriptValue::Int(_) | ScriptValue::Bool(_) if matches!(s.kind, None | Some('d') | Some('n')) => {
            let i = value.as_int().unwrap();
            if matches!(value, ScriptValue::Bool(_)) && s.kind.is_none() {
                return Ok(pad(value.to_str(), &s, false));
            }
            let body = format_number_body(i.to_string(), s.grouping);
            Ok(pad(apply_sign(body, i < 0, s.sign), &s, true))
        }
        ScriptValue::Int(_) | ScriptValue::Bool(_) if matches!(s.kind, Some('x' | 'X' | 'o' | 'b')) => {
            let i = value.as_int().unwrap();
            let mag = i.unsigned_abs();
            let mut body = match s.kind {
                Some('x') => format!("{mag:x}"),
                Some('X') => format!("{mag:X}"),
                Some('o') => format!("{mag:o}"),
                _ => format!("{mag:b}"),
            };
            if i < 0 {
                body.insert(0, '-');
            }
            Ok(pad(apply_sign(body, i < 0, s.sign), &s, true))
        }
        v if v.is_number() => {
            let x = v.as_f64().unwrap();
            let negative = x.is_sign_negative() && !(x == 0.0 && s.kind.is_none());
            let body = match s.kind {
                Some('f') | Some('F') => fixed(x, s.precision.unwrap_or(6)),
                Some('e') | Some('E') => exponent(x, s.precision.unwrap_or(6), s.kind == Some('E')),
                Some('g') | Some('G') | Some('n') => general(x, s.precision, s.alternate),
                Some('%') => format!("{}%", fixed(x * 100.0, s.precision.unwrap_or(6))),
                None => match s.precision {
                    Some(p) => {
                        let g = general(x, Some(p), false);
                        if matches!(v, ScriptValue::Float(_)) && !g.contains(['.', 'e', 'n', 'i']) {
                            format!("{g}.0").replace(".0.0", ".0")
                        } else {
                            g
                        }
                    }
                    None => v.to_str(),
                },
                Some('d') => return Err("Unknown format code 'd' for object of type 'float'".into()),
                Some(c) => return Err(format!("Unknown format code '{c}' for object of type '{}'", v.type_name())),
            };
            let body = format_number_body(body, s.grouping);
            Ok(pad(apply_sign(body, negative, s.sign), &s, true))
        }
        _ => {
            if !matches!(s.kind, None | Some('s')) {
                return Err(format!(
                    "Unknown format code '{}' for object of type '{}'",
                    s.kind.unwrap(),
                    value.type_name()
                ));
            }
            let mut text = value.to_str();
            if let Some(p) = s.precision {
                text = text.chars().take(p).collect();
            }
            Ok(pad(text, &s, false))
        }
    }
}

/// `str.format` over positional and keyword arguments.
pub fn str_format(
    template: &str,
    args: &[ScriptValue],
    kwargs: &[(String, ScriptValue)],
) -> Result<String, String> {
    let chars: Vec<char> = template.chars().collect();
    let mut out = String::new();
    let mut auto = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            out.push('{');
            i += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            out.push('}');
            i += 2;
            continue;
        }
        if c == '}' {
            return Err("Single '}' encountered in format string".into());
        }
        if c != '{' {
            out.push(c);
            i += 1;
            continue;
        }
        let end = chars[i..]
            .iter()
            .position(|&c| c == '}')
            .map(|p| p + i)
            .ok_or("Single '{' encountered in format string")?;
        let field: String = chars[i + 1..end].iter().collect();
        let (head, spec) = match field.find(':') {
            Some(p) => (&field[..p], &field[p + 1..]),
            None => (field.as_str(), ""),
        };
        let (name, conv) = match head.find('!') {
            Some(p) => (&head[..p], head[p + 1..].chars().next()),
            None => (head, None),
        };
        let value = if name.is_empty() {
            let v = args.get(auto).ok_or("Replacement index out of range for positional args tuple")?;
            auto += 1;
            v.clone()
        } else if let Ok(idx) = name.parse::<usize>() {
            args.get(idx)
                .cloned()
                .ok_or("Replacement index out of range for positional args tuple")?
        } else {
            kwargs
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| format!("KeyError: '{name}'"))?
        };
        let value = match conv {
            Some('r') | Some('a') => ScriptValue::str(value.repr()),
            Some('s') => ScriptValue::str(value.to_str()),
            Some(c) => return Err(format!("Unknown conversion specifier {c}")),
            None => value,
        };
        out.push_str(&format_with_spec(&value, spec)?);
        i = end + 1;
    }
    Ok(out)
}

/// `template % args` for strings.
pub fn percent_format(template: &str, args: &ScriptValue) -> Result<String, String> {
    let items: Vec<ScriptValue> = match args {
        ScriptValue::Tuple(t) => t.to_vec(),
        other => vec![other.clone()],
    };
    let chars: Vec<char> = template.chars().collect();
    let mut out = String::new();
    let mut next = 0usize;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '%' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        i += 1;
        if chars.get(i) == Some(&'%') {
            out.push('%');
            i += 1;
            continue;
        }
        let mut spec = String::new();
        while i < chars.len() && matches!(chars[i], '-' | '+' | ' ' | '0' | '#' | '.' | '0'..='9') {
            spec.push(chars[i]);
            i += 1;
        }
        let Some(&kind) = chars.get(i) else {
            return Err("incomplete format".into());
        };
        i += 1;
        let value = items.get(next).cloned().ok_or("not enough arguments for format string")?;
        next += 1;
        let spec = if let Some(rest) = spec.strip_prefix('-') { format!("<{rest}") } else { spec };
        let rendered = match kind {
            's' => format_with_spec(&ScriptValue::str(value.to_str()), &spec)?,
            'r' => format_with_spec(&ScriptValue::str(value.repr()), &spec)?,
            'd' | 'i' | 'u' => {
                let v = match &value {
                    ScriptValue::Float(f) => ScriptValue::Int(f.trunc() as i64),
                    v if v.is_number() => ScriptValue::Int(v.as_int().unwrap()),
                    v => return Err(format!("%d format: a real number is required, not {}", v.type_name())),
                };
                format_with_spec(&v, &spec)?
            }
            'f' | 'F' | 'e' | 'E' | 'g' | 'G' => {
                if !value.is_number() {
                    return Err(format!("must be real number, not {}", value.type_name()));
                }
                format_with_spec(&ScriptValue::Float(value.as_f64().unwrap()), &format!("{spec}{kind}"))?
            }
            'x' | 'X' | 'o' => format_with_spec(&value, &format!("{spec}{kind}"))?,
            c => return Err(format!("unsupported format character '{c}'")),
        };
        out.push_str(&rendered);
    }
    if next < items.len() && matches!(args, ScriptValue::Tuple(_)) {
        return Err("not all arguments converted during string formatting".into());
    }
    Ok(out)
}

/// Options for [`json_dumps`], mirroring `json.dumps` keyword arguments.
#[derive(Debug, Clone, Default)]
pub struct JsonOptions {
    pub indent: Option<String>,
    pub sort_keys: bool,
    pub ensure_ascii: bool,
}

/// Serializes like CPython's `json.dumps`.
pub fn json_dumps(value: &ScriptValue, opts: &JsonOptions) -> Result<String, String> {
    let mut out = String::new();
    json_write(value, opts, 0, &mut out)?;
    Ok(out)
}

fn json_string(s: &str, ensure_ascii: bool, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\x08' => out.push_str("\\b"),
            '\x0c' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c if ensure_ascii && !c.is_ascii() => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    out.push_str(&format!("\\u{unit:04x}"));
                }
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn json_float(f: f64) -> String {
    if f.is_nan() {
        "NaN".into()
    } else if f.is_infinite() {
        if f > 0.0 { "Infinity".into() } else { "-Infinity".into() }
    } else {
        py_float_repr(f)
    }
}

fn json_write(v: &ScriptValue, opts: &JsonOptions, level: usize, out: &mut String) -> Result<(), String> {
    if level > 200 {
        return Err("maximum recursion depth exceeded while encoding a JSON object".into());
    }
    let newline = |out: &mut String, level: usize| {
        if let Some(ind) = &opts.indent {
            out.push('\n');
            for _ in 0..level {
                out.push_str(ind);
            }
        }
    };
    let item_sep = if opts.indent.is_some() { "," } else { ", " };
    match v {
        ScriptValue::None => out.push_str("null"),
        ScriptValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ScriptValue::Int(i) => out.push_str(&i.to_string()),
        ScriptValue::Float(f) => out.push_str(&json_float(*f)),
        ScriptValue::Str(s) => json_string(s, opts.ensure_ascii, out),
        ScriptValue::List(_) | ScriptValue::Tuple(_) => {
            let items: Vec<ScriptValue> = match v {
                ScriptValue::List(l) => l.borrow().clone(),
                ScriptValue::Tuple(t) => t.to_vec(),
                _ => unreachable!(),
            };
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(item_sep);
                }
                newline(out, level + 1);
                json_write(item, opts, level + 1, out)?;
            }
            newline(out, level);
            out.push(']');
        }
        ScriptValue::Map(m) => {
            let mut entries: Vec<(MapKey, ScriptValue)> =
                m.borrow().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            if entries.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            if opts.sort_keys {
                let mixed = entries.iter().any(|(k, _)| matches!(k, MapKey::Int(_)))
                    && entries.iter().any(|(k, _)| matches!(k, MapKey::Str(_)));
                if mixed {
                    return Err("'<' not supported between instances of 'str' and 'int'".into());
                }
                entries.sort_by(|a, b| a.0.cmp(&b.0));
            }
            out.push('{');
            for (i, (k, val)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(item_sep);
                }
                newline(out, level + 1);
                let key = match k {
                    MapKey::Int(n) => n.to_string(),
                    MapKey::Str(s) => s.to_string(),
                };
                json_string(&key, opts.ensure_ascii, out);
                out.push_str(": ");
                json_write(val, opts, level + 1, out)?;
            }
            newline(out, level);
            out.push('}');
        }
        ScriptValue::Object(o) if matches!(**o, Object::Path(_)) => {
            return Err("Object of type PosixPath is not JSON serializable".into())
        }
        other => return Err(format!("Object of type {} is not JSON serializable", other.type_name())),
    }
    Ok(())
}
