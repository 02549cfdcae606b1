//! Recursive-descent parser producing [`Program`].
//!
//! Constructs outside the supported subset (classes, decorators, `with`,
//! `raise`, generators, async, ...) are rejected with a [`ParseError`]
//! rather than skipped.

use std::rc::Rc;

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{tokenize, unescape, Tok, Token};

const MAX_DEPTH: usize = 100;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def",
    "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

/// Parses a complete script.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        depth: 0,
        src: source,
        offset: 0,
    };
    let mut body = Vec::new();
    loop {
        match p.peek() {
            Tok::Eof => break,
            Tok::Newline => {
                p.pos += 1;
            }
            _ => body.extend(p.statement()?),
        }
    }
    check_flow(&body, false, false)?;
    Ok(Program {
        source: source.to_string(),
        body,
    })
}

/// Rejects `return` outside functions and `break`/`continue` outside loops.
fn check_flow(body: &[Stmt], in_loop: bool, in_func: bool) -> Result<(), ParseError> {
    for stmt in body {
        let bad = |what: &str| Err(ParseError::new(format!("'{what}' outside {}", if what == "return" { "function" } else { "loop" }), stmt.span.line, stmt.span.col));
        match &stmt.kind {
            StmtKind::Return(_) if !in_func => return bad("return"),
            StmtKind::Break if !in_loop => return bad("break"),
            StmtKind::Continue if !in_loop => return bad("continue"),
            StmtKind::If { branches, orelse } => {
                for (_, b) in branches {
                    check_flow(b, in_loop, in_func)?;
                }
                if let Some(b) = orelse {
                    check_flow(b, in_loop, in_func)?;
                }
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => check_flow(body, true, in_func)?,
            StmtKind::FunctionDef { body, .. } => check_flow(body, false, true)?,
            StmtKind::Try { body, handlers } => {
                check_flow(body, in_loop, in_func)?;
                for h in handlers {
                    check_flow(&h.body, in_loop, in_func)?;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    /// Full source, used for f-string sub-parsing.
    src: &'a str,
    /// Byte offset of this token stream within `src`.
    offset: usize,
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn cur(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let span = self.cur().span;
        ParseError::new(msg, span.line, span.col)
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Int(i) => format!("'{i}'"),
            Tok::Float(f) => format!("'{f}'"),
            Tok::Str(_) | Tok::FStr { .. } => "string".into(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Tok::Indent => self.error("unexpected indent"),
            _ => self.error(format!("invalid syntax near {}", self.describe())),
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<Span, ParseError> {
        if self.is_op(op) {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("expected '{op}', found {}", self.describe())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, ParseError> {
        if self.is_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("expected '{kw}', found {}", self.describe())))
        }
    }

    fn identifier(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                let span = self.advance().span;
                Ok((n, span))
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("too many nested expressions or blocks"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let Tok::Name(word) = self.peek().clone() else {
            if self.is_op("@") {
                return Err(self.error("decorators are not supported"));
            }
            return self.simple_statements();
        };
        match word.as_str() {
            "if" => Ok(vec![self.if_stmt()?]),
            "for" => Ok(vec![self.for_stmt()?]),
            "while" => Ok(vec![self.while_stmt()?]),
            "def" => Ok(vec![self.def_stmt()?]),
            "try" => Ok(vec![self.try_stmt()?]),
            "class" => Err(self.error("class definitions are not supported")),
            "with" => Err(self.error("'with' blocks are not supported")),
            "async" | "await" => Err(self.error("async constructs are not supported")),
            "elif" | "else" | "except" | "finally" => Err(self.error(format!("unexpected '{word}'"))),
            _ => self.simple_statements(),
        }
    }

    fn simple_statements(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                break;
            }
            out.push(self.small_statement()?);
        }
        match self.peek() {
            Tok::Newline => {
                self.advance();
            }
            Tok::Eof => {}
            _ => return Err(self.unexpected()),
        }
        Ok(out)
    }

    fn small_statement(&mut self) -> Result<Stmt, ParseError> {
        let start = self.cur().span;
        if let Tok::Name(word) = self.peek().clone() {
            match word.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(Stmt { kind: StmtKind::Pass, span: start });
                }
                "break" => {
                    self.advance();
                    return Ok(Stmt { kind: StmtKind::Break, span: start });
                }
                "continue" => {
                    self.advance();
                    return Ok(Stmt { kind: StmtKind::Continue, span: start });
                }
                "return" => {
                    self.advance();
                    let value = if matches!(self.peek(), Tok::Newline | Tok::Eof) || self.is_op(";") {
                        None
                    } else {
                        Some(self.test_list()?)
                    };
                    let span = start.to(self.prev_span());
                    return Ok(Stmt { kind: StmtKind::Return(value), span });
                }
                "import" => return self.import_stmt(),
                "from" => return self.from_stmt(),
                "raise" | "assert" | "del" | "global" | "nonlocal" | "yield" => {
                    return Err(self.error(format!("'{word}' statements are not supported")));
                }
                "class" | "with" | "async" | "def" | "if" | "for" | "while" | "try" => {
                    return Err(self.error(format!("'{word}' is not allowed here")));
                }
                _ => {}
            }
        }
        let first = self.test_list()?;
        if self.eat_op("=") {
            let mut targets = vec![first];
            let mut value = self.test_list()?;
            while self.eat_op("=") {
                targets.push(value);
                value = self.test_list()?;
            }
            for t in &targets {
                self.check_target(t)?;
            }
            let span = start.to(self.prev_span());
            return Ok(Stmt { kind: StmtKind::Assign { targets, value }, span });
        }
        if let Tok::Op(op) = self.peek().clone() {
            let aug = match op {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                "&=" | "|=" | "^=" | ">>=" | "<<=" => {
                    return Err(self.error(format!("operator '{op}' is not supported")));
                }
                _ => None,
            };
            if let Some(op) = aug {
                self.advance();
                if !matches!(first.kind, ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. }) {
                    return Err(ParseError::new(
                        "illegal expression for augmented assignment",
                        first.span.line,
                        first.span.col,
                    ));
                }
                let value = self.test_list()?;
                let span = start.to(self.prev_span());
                return Ok(Stmt { kind: StmtKind::AugAssign { target: first, op, value }, span });
            }
            if op == ":" {
                // Annotated assignment: the annotation is parsed and dropped.
                if !matches!(first.kind, ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. }) {
                    return Err(self.error("illegal target for annotation"));
                }
                self.advance();
                self.test()?;
                if self.eat_op("=") {
                    let value = self.test_list()?;
                    let span = start.to(self.prev_span());
                    return Ok(Stmt { kind: StmtKind::Assign { targets: vec![first], value }, span });
                }
                let span = start.to(self.prev_span());
                return Ok(Stmt { kind: StmtKind::Pass, span });
            }
        }
        let span = start.to(self.prev_span());
        Ok(Stmt { kind: StmtKind::Expr(first), span })
    }

    fn check_target(&self, e: &Expr) -> Result<(), ParseError> {
        match &e.kind {
            ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. } => Ok(()),
            ExprKind::Tuple(items) | ExprKind::List(items) if !items.is_empty() => {
                let stars = items.iter().filter(|i| matches!(i.kind, ExprKind::Starred(_))).count();
                if stars > 1 {
                    return Err(ParseError::new("multiple starred expressions in assignment", e.span.line, e.span.col));
                }
                items.iter().try_for_each(|i| match &i.kind {
                    ExprKind::Starred(inner) => self.check_target(inner),
                    _ => self.check_target(i),
                })
            }
            _ => Err(ParseError::new("cannot assign to expression", e.span.line, e.span.col)),
        }
    }

    fn dotted_name(&mut self) -> Result<String, ParseError> {
        let (mut name, _) = self.identifier()?;
        while self.eat_op(".") {
            let (part, _) = self.identifier()?;
            name.push('.');
            name.push_str(&part);
        }
        Ok(name)
    }

    fn import_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("import")?;
        let mut names = Vec::new();
        loop {
            let name = self.dotted_name()?;
            let alias = if self.eat_kw("as") { Some(self.identifier()?.0) } else { None };
            names.push(ImportName { name, alias });
            if !self.eat_op(",") {
                break;
            }
        }
        let span = start.to(self.prev_span());
        Ok(Stmt { kind: StmtKind::Import(names), span })
    }

    fn from_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("from")?;
        if self.is_op(".") || self.is_op("...") {
            return Err(self.error("relative imports are not supported"));
        }
        let module = self.dotted_name()?;
        self.expect_kw("import")?;
        if self.is_op("*") {
            return Err(self.error("wildcard imports are not supported"));
        }
        let paren = self.eat_op("(");
        let mut names = Vec::new();
        loop {
            let (name, _) = self.identifier()?;
            let alias = if self.eat_kw("as") { Some(self.identifier()?.0) } else { None };
            names.push(ImportName { name, alias });
            if !self.eat_op(",") {
                break;
            }
            if paren && self.is_op(")") {
                break;
            }
        }
        if paren {
            self.expect_op(")")?;
        }
        let span = start.to(self.prev_span());
        Ok(Stmt { kind: StmtKind::ImportFrom { module, names }, span })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_op(":")?;
        if !matches!(self.peek(), Tok::Newline) {
            return self.simple_statements();
        }
        self.advance();
        if !matches!(self.peek(), Tok::Indent) {
            return Err(self.error("expected an indented block"));
        }
        self.advance();
        self.enter()?;
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                _ => body.extend(self.statement()?),
            }
        }
        self.leave();
        Ok(body)
    }

    fn block_span_end(&self, start: Span) -> Span {
        // Blocks end on a Newline/Dedent; report through the last real token.
        let mut i = self.pos.saturating_sub(1);
        while i > 0 && matches!(self.toks[i].tok, Tok::Newline | Tok::Dedent | Tok::Indent) {
            i -= 1;
        }
        start.to(self.toks[i].span)
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("if")?;
        let test = self.named_test()?;
        let body = self.block()?;
        let mut branches = vec![(test, body)];
        let mut orelse = None;
        loop {
            if self.eat_kw("elif") {
                let test = self.named_test()?;
                let body = self.block()?;
                branches.push((test, body));
            } else if self.eat_kw("else") {
                orelse = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt { kind: StmtKind::If { branches, orelse }, span: self.block_span_end(start) })
    }

    fn named_test(&mut self) -> Result<Expr, ParseError> {
        let e = self.test()?;
        if self.is_op(":=") {
            return Err(self.error("assignment expressions are not supported"));
        }
        Ok(e)
    }

    fn target_list(&mut self) -> Result<Expr, ParseError> {
        let first = self.or_expr_target()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_kw("in") {
                break;
            }
            items.push(self.or_expr_target()?);
        }
        let span = items[0].span.to(self.prev_span());
        Ok(Expr { kind: ExprKind::Tuple(items), span })
    }

    fn or_expr_target(&mut self) -> Result<Expr, ParseError> {
        let e = self.arith()?;
        self.check_target(&e)?;
        Ok(e)
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.test_list()?;
        let body = self.block()?;
        if self.is_kw("else") {
            return Err(self.error("'for ... else' is not supported"));
        }
        Ok(Stmt { kind: StmtKind::For { target, iter, body }, span: self.block_span_end(start) })
    }

    fn while_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("while")?;
        let test = self.named_test()?;
        let body = self.block()?;
        if self.is_kw("else") {
            return Err(self.error("'while ... else' is not supported"));
        }
        Ok(Stmt { kind: StmtKind::While { test, body }, span: self.block_span_end(start) })
    }

    fn params(&mut self, closing: &str, annotations: bool) -> Result<Vec<Param>, ParseError> {
        let mut params: Vec<Param> = Vec::new();
        while !self.is_op(closing) {
            if self.is_op("*") || self.is_op("**") || self.is_op("/") {
                return Err(self.error("variadic or positional-only parameters are not supported"));
            }
            let (name, _) = self.identifier()?;
            if params.iter().any(|p| p.name == name) {
                return Err(self.error(format!("duplicate argument '{name}' in function definition")));
            }
            if annotations && self.eat_op(":") {
                self.test()?;
            }
            let default = if self.eat_op("=") { Some(self.test()?) } else { None };
            if default.is_none() && params.last().is_some_and(|p| p.default.is_some()) {
                return Err(self.error("non-default argument follows default argument"));
            }
            params.push(Param { name, default });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn def_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("def")?;
        let (name, _) = self.identifier()?;
        self.expect_op("(")?;
        let params = self.params(")", true)?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        let body = self.block()?;
        reject_imports(&body)?;
        Ok(Stmt {
            kind: StmtKind::FunctionDef { name, params, body: Rc::from(body) },
            span: self.block_span_end(start),
        })
    }

    fn try_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect_kw("try")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.is_kw("except") {
            let hstart = self.advance().span;
            let mut types = Vec::new();
            let mut binding = None;
            if !self.is_op(":") {
                if self.eat_op("(") {
                    loop {
                        types.push(self.dotted_name()?);
                        if !self.eat_op(",") || self.is_op(")") {
                            break;
                        }
                    }
                    self.expect_op(")")?;
                } else {
                    types.push(self.dotted_name()?);
                }
                if self.eat_kw("as") {
                    binding = Some(self.identifier()?.0);
                }
            }
            let hbody = self.block()?;
            let span = self.block_span_end(hstart);
            handlers.push(Handler { types, binding, body: hbody, span });
        }
        if handlers.is_empty() {
            return Err(self.error("expected 'except' after 'try' block"));
        }
        if self.is_kw("else") || self.is_kw("finally") {
            return Err(self.error("'else'/'finally' clauses on 'try' are not supported"));
        }
        Ok(Stmt { kind: StmtKind::Try { body, handlers }, span: self.block_span_end(start) })
    }

    // ---- expressions ----

    /// `test (',' test)* [',']`: a bare tuple when commas are present.
    fn test_list(&mut self) -> Result<Expr, ParseError> {
        let first = self.test_or_star()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_expr_end() {
                break;
            }
            items.push(self.test_or_star()?);
        }
        let span = items[0].span.to(self.prev_span());
        Ok(Expr { kind: ExprKind::Tuple(items), span })
    }

    fn test_or_star(&mut self) -> Result<Expr, ParseError> {
        if self.is_op("*") {
            let star = self.advance().span;
            let inner = self.arith()?;
            let span = star.to(inner.span);
            return Ok(Expr { kind: ExprKind::Starred(Box::new(inner)), span });
        }
        self.test()
    }

    fn at_expr_end(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::Eof)
            || matches!(self.peek(), Tok::Op(o) if matches!(*o, "=" | ")" | "]" | "}" | ":" | ";"))
            || matches!(self.peek(), Tok::Op(o) if o.ends_with('=') && o.len() > 1 && !matches!(*o, "==" | "!=" | "<=" | ">="))
    }

    fn test(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.test_inner();
        self.leave();
        r
    }

    fn test_inner(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("lambda") {
            return self.lambda();
        }
        if self.is_kw("yield") || self.is_kw("await") {
            return Err(self.error(format!("{} is not supported", self.describe())));
        }
        let body = self.or_test()?;
        if self.eat_kw("if") {
            let test = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            let span = body.span.to(orelse.span);
            return Ok(Expr {
                kind: ExprKind::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) },
                span,
            });
        }
        Ok(body)
    }

    fn lambda(&mut self) -> Result<Expr, ParseError> {
        let start = self.expect_kw("lambda")?;
        let params = self.params(":", false)?;
        self.expect_op(":")?;
        let body = self.test()?;
        let span = start.to(body.span);
        Ok(Expr { kind: ExprKind::Lambda { params, body: Rc::new(body) }, span })
    }

    fn or_test(&mut self) -> Result<Expr, ParseError> {
        let first = self.and_test()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr { kind: ExprKind::BoolOp { op: BoolOp::Or, values }, span })
    }

    fn and_test(&mut self) -> Result<Expr, ParseError> {
        let first = self.not_test()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr { kind: ExprKind::BoolOp { op: BoolOp::And, values }, span })
    }

    fn not_test(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("not") {
            let start = self.advance().span;
            self.enter()?;
            let operand = self.not_test();
            self.leave();
            let operand = operand?;
            let span = start.to(operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(operand) }, span });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.arith()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.arith()?);
        }
        if ops.is_empty() {
            if let Tok::Op(o @ ("|" | "&" | "^" | "<<" | ">>" | "@")) = self.peek() {
                return Err(self.error(format!("operator '{o}' is not supported")));
            }
            return Ok(left);
        }
        let span = left.span.to(comparators.last().unwrap().span);
        Ok(Expr { kind: ExprKind::Compare { left: Box::new(left), ops, comparators }, span })
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.term()?;
            let span = left.span.to(right.span);
            left = Expr { kind: ExprKind::BinOp { left: Box::new(left), op, right: Box::new(right) }, span };
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                Tok::Op("@") => return Err(self.error("operator '@' is not supported")),
                _ => break,
            };
            self.advance();
            let right = self.factor()?;
            let span = left.span.to(right.span);
            left = Expr { kind: ExprKind::BinOp { left: Box::new(left), op, right: Box::new(right) }, span };
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek() {
            Tok::Op("-") => Some(UnaryOp::Neg),
            Tok::Op("+") => Some(UnaryOp::Pos),
            Tok::Op("~") => return Err(self.error("operator '~' is not supported")),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.advance().span;
            self.enter()?;
            let operand = self.factor();
            self.leave();
            let operand = operand?;
            let span = start.to(operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op("**") {
            self.enter()?;
            let exp = self.factor();
            self.leave();
            let exp = exp?;
            let span = base.span.to(exp.span);
            return Ok(Expr {
                kind: ExprKind::BinOp { left: Box::new(base), op: BinOp::Pow, right: Box::new(exp) },
                span,
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            if self.is_op("(") {
                self.advance();
                let args = self.call_args()?;
                let end = self.expect_op(")")?;
                let span = e.span.to(end);
                e = Expr { kind: ExprKind::Call { func: Box::new(e), args }, span };
            } else if self.is_op("[") {
                self.advance();
                let index = self.subscript()?;
                let end = self.expect_op("]")?;
                let span = e.span.to(end);
                e = Expr { kind: ExprKind::Subscript { value: Box::new(e), index: Box::new(index) }, span };
            } else if self.is_op(".") {
                self.advance();
                let (attr, aspan) = match self.peek().clone() {
                    Tok::Name(n) => {
                        let s = self.advance().span;
                        (n, s)
                    }
                    _ => return Err(self.error("expected attribute name")),
                };
                let span = e.span.to(aspan);
                e = Expr { kind: ExprKind::Attribute { value: Box::new(e), attr }, span };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> Result<Vec<Arg>, ParseError> {
        let mut args = Vec::new();
        let mut seen_keyword = false;
        while !self.is_op(")") {
            if self.eat_op("**") {
                args.push(Arg::DoubleStar(self.test()?));
                seen_keyword = true;
            } else if self.eat_op("*") {
                args.push(Arg::Star(self.test()?));
            } else if matches!(self.peek(), Tok::Name(n) if !is_keyword(n)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let (name, _) = self.identifier()?;
                self.advance();
                if args.iter().any(|a| matches!(a, Arg::Keyword(k, _) if *k == name)) {
                    return Err(self.error(format!("keyword argument repeated: {name}")));
                }
                args.push(Arg::Keyword(name, self.test()?));
                seen_keyword = true;
            } else {
                let start = self.cur().span;
                let value = self.test()?;
                if self.is_kw("for") {
                    let generators = self.comp_for()?;
                    let span = start.to(self.prev_span());
                    args.push(Arg::Positional(Expr {
                        kind: ExprKind::GenExp { elt: Box::new(value), generators },
                        span,
                    }));
                } else {
                    if seen_keyword {
                        return Err(self.error("positional argument follows keyword argument"));
                    }
                    args.push(Arg::Positional(value));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn subscript(&mut self) -> Result<Expr, ParseError> {
        let first = self.slice_item()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            items.push(self.slice_item()?);
        }
        let span = items[0].span.to(self.prev_span());
        Ok(Expr { kind: ExprKind::Tuple(items), span })
    }

    fn slice_item(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur().span;
        let lower = if self.is_op(":") { None } else { Some(self.test()?) };
        if !self.is_op(":") {
            return lower.ok_or_else(|| self.error("expected expression"));
        }
        self.advance();
        let upper = if self.is_op(":") || self.is_op("]") || self.is_op(",") { None } else { Some(Box::new(self.test()?)) };
        let step = if self.eat_op(":") {
            if self.is_op("]") || self.is_op(",") { None } else { Some(Box::new(self.test()?)) }
        } else {
            None
        };
        let span = start.to(self.prev_span());
        Ok(Expr { kind: ExprKind::Slice { lower: lower.map(Box::new), upper, step }, span })
    }

    fn comp_for(&mut self) -> Result<Vec<Comprehension>, ParseError> {
        let mut gens = Vec::new();
        while self.eat_kw("for") {
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.or_test_no_cond()?);
            }
            gens.push(Comprehension { target, iter, ifs });
        }
        if self.is_kw("async") {
            return Err(self.error("async comprehensions are not supported"));
        }
        Ok(gens)
    }

    fn or_test_no_cond(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("lambda") {
            return self.lambda();
        }
        self.or_test()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.cur().clone();
        let span = tok.span;
        match tok.tok {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr { kind: ExprKind::Int(i), span })
            }
            Tok::Float(f) => {
                self.advance();
                Ok(Expr { kind: ExprKind::Float(f), span })
            }
            Tok::Str(_) | Tok::FStr { .. } => self.strings(),
            Tok::Name(n) => match n.as_str() {
                "None" => {
                    self.advance();
                    Ok(Expr { kind: ExprKind::None, span })
                }
                "True" | "False" => {
                    self.advance();
                    Ok(Expr { kind: ExprKind::Bool(n == "True"), span })
                }
                kw if is_keyword(kw) => Err(self.unexpected()),
                _ => {
                    self.advance();
                    Ok(Expr { kind: ExprKind::Name(n), span })
                }
            },
            Tok::Op("(") => {
                self.advance();
                self.enter()?;
                let r = self.paren_body(span);
                self.leave();
                r
            }
            Tok::Op("[") => {
                self.advance();
                self.enter()?;
                let r = self.list_body(span);
                self.leave();
                r
            }
            Tok::Op("{") => {
                self.advance();
                self.enter()?;
                let r = self.dict_body(span);
                self.leave();
                r
            }
            Tok::Op("...") => Err(self.error("Ellipsis is not supported")),
            _ => Err(self.unexpected()),
        }
    }

    fn paren_body(&mut self, start: Span) -> Result<Expr, ParseError> {
        if self.is_op(")") {
            let end = self.advance().span;
            return Ok(Expr { kind: ExprKind::Tuple(Vec::new()), span: start.to(end) });
        }
        let first = self.test_or_star()?;
        if self.is_kw("for") {
            let generators = self.comp_for()?;
            let end = self.expect_op(")")?;
            return Ok(Expr { kind: ExprKind::GenExp { elt: Box::new(first), generators }, span: start.to(end) });
        }
        if self.is_op(":=") {
            return Err(self.error("assignment expressions are not supported"));
        }
        if self.is_op(")") {
            let end = self.advance().span;
            // Parenthesized expression keeps the inner node but widens its span.
            return Ok(Expr { kind: first.kind, span: start.to(end) });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op(")") {
                break;
            }
            items.push(self.test_or_star()?);
        }
        let end = self.expect_op(")")?;
        Ok(Expr { kind: ExprKind::Tuple(items), span: start.to(end) })
    }

    fn list_body(&mut self, start: Span) -> Result<Expr, ParseError> {
        if self.is_op("]") {
            let end = self.advance().span;
            return Ok(Expr { kind: ExprKind::List(Vec::new()), span: start.to(end) });
        }
        let first = self.test_or_star()?;
        if self.is_kw("for") {
            let generators = self.comp_for()?;
            let end = self.expect_op("]")?;
            return Ok(Expr { kind: ExprKind::ListComp { elt: Box::new(first), generators }, span: start.to(end) });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            items.push(self.test_or_star()?);
        }
        let end = self.expect_op("]")?;
        Ok(Expr { kind: ExprKind::List(items), span: start.to(end) })
    }

    fn dict_body(&mut self, start: Span) -> Result<Expr, ParseError> {
        if self.is_op("}") {
            let end = self.advance().span;
            return Ok(Expr { kind: ExprKind::Dict(Vec::new()), span: start.to(end) });
        }
        if self.is_op("**") {
            return Err(self.error("dict unpacking is not supported"));
        }
        let key = self.test()?;
        if !self.is_op(":") {
            return Err(self.error("set literals are not supported"));
        }
        self.advance();
        let value = self.test()?;
        if self.is_kw("for") {
            let generators = self.comp_for()?;
            let end = self.expect_op("}")?;
            return Ok(Expr {
                kind: ExprKind::DictComp { key: Box::new(key), value: Box::new(value), generators },
                span: start.to(end),
            });
        }
        let mut pairs = vec![(key, value)];
        while self.eat_op(",") {
            if self.is_op("}") {
                break;
            }
            let k = self.test()?;
            self.expect_op(":")?;
            let v = self.test()?;
            pairs.push((k, v));
        }
        let end = self.expect_op("}")?;
        Ok(Expr { kind: ExprKind::Dict(pairs), span: start.to(end) })
    }

    /// Adjacent string literals concatenate; any f-string makes the result an f-string.
    fn strings(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur().span;
        let mut parts: Vec<FPart> = Vec::new();
        let mut any_f = false;
        loop {
            let tok = self.cur().clone();
            match tok.tok {
                Tok::Str(s) => {
                    self.advance();
                    push_literal(&mut parts, s);
                }
                Tok::FStr { body, offset, raw } => {
                    self.advance();
                    any_f = true;
                    self.fstring_parts(&body, offset, raw, tok.span, &mut parts)?;
                }
                _ => break,
            }
        }
        let span = start.to(self.prev_span());
        if !any_f {
            let s = parts
                .into_iter()
                .map(|p| match p {
                    FPart::Literal(s) => s,
                    FPart::Field { .. } => unreachable!("plain strings have no fields"),
                })
                .collect::<String>();
            return Ok(Expr { kind: ExprKind::Str(s), span });
        }
        Ok(Expr { kind: ExprKind::FString(parts), span })
    }

    fn fstring_parts(
        &mut self,
        body: &str,
        offset: usize,
        raw: bool,
        span: Span,
        parts: &mut Vec<FPart>,
    ) -> Result<(), ParseError> {
        let err = |msg: &str| ParseError::new(format!("f-string: {msg}"), span.line, span.col);
        let bytes = body.as_bytes();
        let mut lit = String::new();
        let mut i = 0;
        let flush = |lit: &mut String, parts: &mut Vec<FPart>| -> Result<(), ParseError> {
            if !lit.is_empty() {
                let text = if raw { lit.clone() } else { unescape(lit).map_err(|m| err(&m))? };
                push_literal(parts, text);
                lit.clear();
            }
            Ok(())
        };
        while i < bytes.len() {
            let c = bytes[i];
            if c == b'{' && bytes.get(i + 1) == Some(&b'{') {
                lit.push('{');
                i += 2;
                continue;
            }
            if c == b'}' {
                if bytes.get(i + 1) == Some(&b'}') {
                    lit.push('}');
                    i += 2;
                    continue;
                }
                return Err(err("single '}' is not allowed"));
            }
            if c != b'{' {
                let ch = body[i..].chars().next().unwrap();
                lit.push(ch);
                i += ch.len_utf8();
                continue;
            }
            flush(&mut lit, parts)?;
            // Scan the replacement field.
            let field_start = i + 1;
            let mut j = field_start;
            let mut nest = 0i32;
            let mut quote: Option<u8> = None;
            let mut expr_end = None;
            let mut conversion = None;
            while j < bytes.len() {
                let b = bytes[j];
                if let Some(q) = quote {
                    if b == q {
                        quote = None;
                    }
                    j += 1;
                    continue;
                }
                match b {
                    b'\'' | b'"' => quote = Some(b),
                    b'(' | b'[' | b'{' => nest += 1,
                    b')' | b']' => nest -= 1,
                    b'}' if nest > 0 => nest -= 1,
                    b'}' if nest == 0 => break,
                    b'!' if nest == 0 && bytes.get(j + 1) != Some(&b'=') && expr_end.is_none() => {
                        expr_end = Some(j);
                        conversion = bytes.get(j + 1).map(|&c| c as char);
                        j += 2;
                        break;
                    }
                    b':' if nest == 0 && expr_end.is_none() => {
                        expr_end = Some(j);
                        break;
                    }
                    _ => {}
                }
                j += 1;
            }
            let end_of_expr = expr_end.unwrap_or(j);
            let mut spec = String::new();
            if j < bytes.len() && bytes[j] == b':' {
                let spec_start = j + 1;
                let mut k = spec_start;
                while k < bytes.len() && bytes[k] != b'}' {
                    if bytes[k] == b'{' {
                        return Err(err("nested replacement fields in format specs are not supported"));
                    }
                    k += 1;
                }
                spec = body[spec_start..k].to_string();
                j = k;
            }
            if j >= bytes.len() || bytes[j] != b'}' {
                return Err(err("expecting '}'"));
            }
            if let Some(c) = conversion {
                if !matches!(c, 'r' | 's' | 'a') {
                    return Err(err("invalid conversion character"));
                }
            }
            let expr_text = &body[field_start..end_of_expr];
            if expr_text.trim().is_empty() {
                return Err(err("empty expression not allowed"));
            }
            if expr_text.trim_end().ends_with('=') && !expr_text.trim_end().ends_with("==") {
                return Err(err("self-documenting '=' fields are not supported"));
            }
            let expr = self.sub_expression(offset + field_start, expr_text, span)?;
            parts.push(FPart::Field { expr, conversion, spec });
            i = j + 1;
        }
        flush(&mut lit, parts)?;
        Ok(())
    }

    fn sub_expression(&mut self, abs_offset: usize, text: &str, span: Span) -> Result<Expr, ParseError> {
        let rebase = |e: ParseError| ParseError::new(format!("f-string: {}", e.message), span.line, span.col);
        // Wrapped in parentheses so embedded newlines are joined.
        let wrapped = format!("({text})");
        let mut toks = tokenize(&wrapped).map_err(rebase)?;
        let base = abs_offset - self.offset;
        for t in &mut toks {
            let s = t.span.start.saturating_sub(1).min(text.len());
            let e = t.span.end.saturating_sub(1).min(text.len());
            t.span = Span { start: base + s, end: base + e, line: span.line, col: span.col };
        }
        let mut sub = Parser { toks, pos: 0, depth: self.depth, src: self.src, offset: self.offset };
        sub.expect_op("(").map_err(rebase)?;
        let e = sub.test_list().map_err(rebase)?;
        sub.expect_op(")").map_err(rebase)?;
        if !matches!(sub.peek(), Tok::Newline | Tok::Eof) {
            return Err(rebase(sub.unexpected()));
        }
        Ok(e)
    }
}

fn push_literal(parts: &mut Vec<FPart>, s: String) {
    if let Some(FPart::Literal(prev)) = parts.last_mut() {
        prev.push_str(&s);
    } else {
        parts.push(FPart::Literal(s));
    }
}

fn reject_imports(body: &[Stmt]) -> Result<(), ParseError> {
    let program = Program { source: String::new(), body: body.to_vec() };
    if let Some((name, line)) = program.imports().first() {
        return Err(ParseError::new(format!("import of '{name}' inside a function is not supported"), *line, 1));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_assignment() {
        let p = parse("x = 1 + 2").unwrap();
        assert_eq!(p.body.len(), 1);
        assert!(matches!(p.body[0].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn class_is_rejected_at_line_one() {
        let e = parse("class A: pass").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn for_loop_body() {
        let p = parse("for i in range(3):\n print(i)").unwrap();
        assert_eq!(p.body.len(), 1);
        match &p.body[0].kind {
            StmtKind::For { body, .. } => assert_eq!(body.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn excluded_constructs() {
        for src in [
            "@dec\ndef f():\n    pass",
            "with open('a') as f:\n    pass",
            "raise ValueError('x')",
            "async def f():\n    pass",
            "def f():\n    yield 1",
            "x = {1, 2}",
            "def f():\n    import math",
            "try:\n    x = 1\nfinally:\n    pass",
            "x = a | b",
            "global x",
        ] {
            assert!(parse(src).is_err(), "accepted: {src}");
        }
    }

    #[test]
    fn fstring_fields() {
        let p = parse("s = f\"Image: {img_path} {x:.2f} {{lit}}\"").unwrap();
        let StmtKind::Assign { value, .. } = &p.body[0].kind else { panic!() };
        let ExprKind::FString(parts) = &value.kind else { panic!() };
        assert_eq!(parts.len(), 5);
        let FPart::Field { expr, .. } = &parts[1] else { panic!() };
        assert_eq!(p.text(expr.span), "img_path");
        assert_eq!(parts[4], FPart::Literal(" {lit}".into()));
    }

    #[test]
    fn spans_cover_token_text() {
        let src = "total = sum(values[1:3]) + offset";
        let p = parse(src).unwrap();
        assert_eq!(p.text(p.body[0].span), src);
        let StmtKind::Assign { value, .. } = &p.body[0].kind else { panic!() };
        assert_eq!(p.text(value.span), "sum(values[1:3]) + offset");
    }

    #[test]
    fn semicolons_and_annotations() {
        let p = parse("a = 1; b: int = 2\ndef f(x: int = 3) -> int:\n    return x").unwrap();
        assert_eq!(p.body.len(), 3);
    }

    #[test]
    fn deep_nesting_is_error_not_overflow() {
        let src = format!("x = {}1{}", "(".repeat(500), ")".repeat(500));
        assert!(parse(&src).is_err());
    }
}
