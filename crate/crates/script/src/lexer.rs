//! Tokenizer for the script language.
//!
//! Produces a flat token stream with synthetic `Newline`, `Indent` and
//! `Dedent` tokens, following the usual offside rule. Newlines inside
//! brackets and after a trailing backslash are joined.

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
            line: self.line,
            col: self.col,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// f-string: raw body between the quotes and its byte offset in the source.
    FStr { body: String, offset: usize, raw: bool },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", ":=", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "(",
    ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    depth: usize,
    indents: Vec<usize>,
    out: Vec<Token>,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
        depth: 0,
        indents: vec![0],
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn col_of(&self, pos: usize) -> u32 {
        self.src[self.line_start..pos].chars().count() as u32 + 1
    }

    fn span(&self, start: usize) -> Span {
        Span {
            start,
            end: self.pos,
            line: self.line,
            col: self.col_of(start),
        }
    }

    fn err_at(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError::new(msg, self.line, self.col_of(pos.min(self.src.len())))
    }

    fn push(&mut self, tok: Tok, start: usize) {
        let span = self.span(start);
        self.out.push(Token { tok, span });
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn newline(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indent()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek_char() else { break };
            match c {
                ' ' | '\t' | '\x0c' => self.pos += 1,
                '\r' => self.pos += 1,
                '#' => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += c.len_utf8();
                    }
                }
                '\n' => {
                    let start = self.pos;
                    self.pos += 1;
                    if self.depth == 0 {
                        self.push(Tok::Newline, start);
                        at_line_start = true;
                    }
                    self.newline();
                }
                '\\' => {
                    let start = self.pos;
                    self.pos += 1;
                    if self.src[self.pos..].starts_with("\r\n") {
                        self.pos += 2;
                    } else if self.src[self.pos..].starts_with('\n') {
                        self.pos += 1;
                    } else {
                        return Err(self.err_at(start, "unexpected character after line continuation"));
                    }
                    self.newline();
                }
                c if c.is_ascii_digit()
                    || (c == '.' && self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit)) =>
                {
                    self.number()?
                }
                c if is_ident_start(c) => self.name_or_string()?,
                '"' | '\'' => self.string(self.pos, false, false)?,
                _ => self.operator()?,
            }
        }
        if self.depth > 0 {
            return Err(self.err_at(self.pos, "unexpected end of input inside brackets"));
        }
        let end = self.pos;
        if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
            self.push(Tok::Newline, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end);
        }
        self.push(Tok::Eof, end);
        Ok(())
    }

    /// Measures indentation at the start of a logical line. Returns false at EOF.
    fn handle_indent(&mut self) -> Result<bool, ParseError> {
        loop {
            let mut width = 0usize;
            let start = self.pos;
            while let Some(c) = self.peek_char() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\x0c' => width = 0,
                    _ => break,
                }
                self.pos += 1;
            }
            match self.peek_char() {
                None => return Ok(false),
                Some('\n') => {
                    self.pos += 1;
                    self.newline();
                    continue;
                }
                Some('\r') => {
                    self.pos += 1;
                    continue;
                }
                Some('#') => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += c.len_utf8();
                    }
                    continue;
                }
                _ => {}
            }
            let current = *self.indents.last().expect("indent stack never empty");
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent, start);
            } else if width < current {
                while width < *self.indents.last().expect("indent stack never empty") {
                    self.indents.pop();
                    self.push(Tok::Dedent, self.pos);
                }
                if width != *self.indents.last().expect("indent stack never empty") {
                    return Err(self.err_at(self.pos, "unindent does not match any outer indentation level"));
                }
            }
            return Ok(true);
        }
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let rest = &self.src[start..];
        if rest.len() > 1 && rest.as_bytes()[0] == b'0' && matches!(rest.as_bytes()[1], b'x' | b'X' | b'o' | b'O' | b'b' | b'B') {
            let radix = match rest.as_bytes()[1] {
                b'x' | b'X' => 16,
                b'o' | b'O' => 8,
                _ => 2,
            };
            self.pos += 2;
            while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            let digits: String = self.src[start + 2..self.pos].chars().filter(|&c| c != '_').collect();
            let v = i64::from_str_radix(&digits, radix)
                .map_err(|_| self.err_at(start, "invalid or too large integer literal"))?;
            self.push(Tok::Int(v), start);
            return Ok(());
        }
        let mut is_float = false;
        let mut seen_exp = false;
        while let Some(c) = self.peek_char() {
            if c.is_ascii_digit() || c == '_' {
                self.pos += 1;
            } else if c == '.' && !is_float && !seen_exp {
                is_float = true;
                self.pos += 1;
            } else if (c == 'e' || c == 'E') && !seen_exp {
                let next = self.bytes.get(self.pos + 1).copied();
                let next2 = self.bytes.get(self.pos + 2).copied();
                let ok = match next {
                    Some(b) if b.is_ascii_digit() => true,
                    Some(b'+') | Some(b'-') => next2.is_some_and(|b| b.is_ascii_digit()),
                    _ => false,
                };
                if !ok {
                    break;
                }
                seen_exp = true;
                is_float = true;
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.peek_char().is_some_and(is_ident_start) {
            return Err(self.err_at(self.pos, "invalid decimal literal"));
        }
        let text: String = self.src[start..self.pos].chars().filter(|&c| c != '_').collect();
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err_at(start, "invalid float literal"))?;
            self.push(Tok::Float(v), start);
        } else {
            if text.len() > 1 && text.starts_with('0') && text.chars().any(|c| c != '0') {
                return Err(self.err_at(start, "leading zeros in decimal integer literals are not permitted"));
            }
            let v: i64 = text
                .parse()
                .map_err(|_| self.err_at(start, "integer literal too large"))?;
            self.push(Tok::Int(v), start);
        }
        Ok(())
    }

    fn name_or_string(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if !is_ident_char(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        let word = &self.src[start..self.pos];
        if matches!(self.peek_char(), Some('"') | Some('\'')) && word.len() <= 2 {
            let lower = word.to_ascii_lowercase();
            let (mut raw, mut fmt, mut bytes) = (false, false, false);
            let mut ok = true;
            for c in lower.chars() {
                match c {
                    'r' if !raw => raw = true,
                    'f' if !fmt => fmt = true,
                    'b' if !bytes => bytes = true,
                    _ => ok = false,
                }
            }
            if ok && !(fmt && bytes) {
                if bytes {
                    return Err(self.err_at(start, "bytes literals are not supported"));
                }
                return self.string(start, raw, fmt);
            }
        }
        let word = word.to_string();
        self.push(Tok::Name(word), start);
        Ok(())
    }

    fn string(&mut self, start: usize, raw: bool, fstring: bool) -> Result<(), ParseError> {
        let (line, col) = (self.line, self.col_of(start));
        let quote = self.peek_char().expect("caller checked quote");
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let is_triple = self.src[self.pos..].starts_with(&triple);
        let delim_len = if is_triple { 3 } else { 1 };
        self.pos += delim_len;
        let body_start = self.pos;
        loop {
            let Some(c) = self.peek_char() else {
                return Err(self.err_at(start, "unterminated string literal"));
            };
            if c == '\\' {
                self.pos += 1;
                if let Some(n) = self.peek_char() {
                    if n == '\n' {
                        self.pos += 1;
                        self.newline();
                    } else {
                        self.pos += n.len_utf8();
                    }
                }
                continue;
            }
            if c == '\n' {
                if !is_triple {
                    return Err(self.err_at(start, "unterminated string literal"));
                }
                self.pos += 1;
                self.newline();
                continue;
            }
            if c == quote && (!is_triple || self.src[self.pos..].starts_with(&triple)) {
                let body = self.src[body_start..self.pos].to_string();
                self.pos += delim_len;
                let tok = if fstring {
                    Tok::FStr {
                        body,
                        offset: body_start,
                        raw,
                    }
                } else if raw {
                    Tok::Str(body)
                } else {
                    Tok::Str(unescape(&body).map_err(|m| self.err_at(start, m))?)
                };
                // Multi-line strings report the line where they start.
                self.out.push(Token {
                    tok,
                    span: Span {
                        start,
                        end: self.pos,
                        line,
                        col,
                    },
                });
                return Ok(());
            }
            self.pos += c.len_utf8();
        }
    }

    fn operator(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let rest = &self.src[start..];
        for op in OPERATORS {
            if rest.starts_with(op) {
                self.pos += op.len();
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(self.err_at(start, format!("unmatched '{op}'")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(Tok::Op(op), start);
                return Ok(());
            }
        }
        let c = self.peek_char().unwrap_or('?');
        Err(self.err_at(start, format!("invalid character '{c}'")))
    }
}

/// Decodes backslash escapes of a non-raw string literal body.
pub fn unescape(body: &str) -> Result<String, String> {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = chars.next() else {
            out.push('\\');
            break;
        };
        match e {
            '\n' => {}
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            '0' => out.push('\0'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'v' => out.push('\x0b'),
            'x' | 'u' | 'U' => {
                let n = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let hex: String = (0..n).filter_map(|_| chars.next()).collect();
                let code = u32::from_str_radix(&hex, 16)
                    .ok()
                    .filter(|_| hex.len() == n)
                    .ok_or_else(|| format!("truncated \\{e} escape"))?;
                out.push(char::from_u32(code).ok_or_else(|| format!("invalid \\{e} escape"))?);
            }
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}
