//! Syntax tree for the script language.

use std::rc::Rc;

pub use crate::lexer::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportName {
    pub name: String,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    /// Exception class names; empty means a bare `except:`.
    pub types: Vec<String>,
    pub binding: Option<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    If { branches: Vec<(Expr, Vec<Stmt>)>, orelse: Option<Vec<Stmt>> },
    For { target: Expr, iter: Expr, body: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt> },
    FunctionDef { name: String, params: Vec<Param>, body: Rc<[Stmt]> },
    Return(Option<Expr>),
    Break,
    Continue,
    Pass,
    Import(Vec<ImportName>),
    ImportFrom { module: String, names: Vec<ImportName> },
    Try { body: Vec<Stmt>, handlers: Vec<Handler> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Expr),
    Keyword(String, Expr),
    Star(Expr),
    DoubleStar(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FPart {
    Literal(String),
    Field {
        expr: Expr,
        conversion: Option<char>,
        spec: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    FString(Vec<FPart>),
    Name(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    ListComp { elt: Box<Expr>, generators: Vec<Comprehension> },
    DictComp { key: Box<Expr>, value: Box<Expr>, generators: Vec<Comprehension> },
    /// Generator expression; evaluated eagerly into a list.
    GenExp { elt: Box<Expr>, generators: Vec<Comprehension> },
    BinOp { left: Box<Expr>, op: BinOp, right: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Compare { left: Box<Expr>, ops: Vec<CmpOp>, comparators: Vec<Expr> },
    IfExp { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    Call { func: Box<Expr>, args: Vec<Arg> },
    Attribute { value: Box<Expr>, attr: String },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    Lambda { params: Vec<Param>, body: Rc<Expr> },
    /// `*value`, legal inside list/tuple displays and unpacking targets.
    Starred(Box<Expr>),
}

/// A parsed script.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source: String,
    pub body: Vec<Stmt>,
}

impl Program {
    /// Total number of statement and expression nodes.
    pub fn node_count(&self) -> usize {
        self.body.iter().map(count_stmt).sum()
    }

    /// Source text covered by a span.
    pub fn text(&self, span: Span) -> &str {
        &self.source[span.start..span.end]
    }

    /// Every `import` / `from ... import` statement, at any nesting depth.
    pub fn imports(&self) -> Vec<(&str, u32)> {
        let mut out = Vec::new();
        collect_imports(&self.body, &mut out);
        out
    }
}

fn collect_imports<'a>(body: &'a [Stmt], out: &mut Vec<(&'a str, u32)>) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::Import(names) => {
                out.extend(names.iter().map(|n| (n.name.as_str(), stmt.span.line)));
            }
            StmtKind::ImportFrom { module, .. } => out.push((module.as_str(), stmt.span.line)),
            StmtKind::If { branches, orelse } => {
                for (_, b) in branches {
                    collect_imports(b, out);
                }
                if let Some(b) = orelse {
                    collect_imports(b, out);
                }
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => collect_imports(body, out),
            StmtKind::FunctionDef { body, .. } => collect_imports(body, out),
            StmtKind::Try { body, handlers } => {
                collect_imports(body, out);
                for h in handlers {
                    collect_imports(&h.body, out);
                }
            }
            _ => {}
        }
    }
}

pub(crate) fn count_stmt(stmt: &Stmt) -> usize {
    let block = |b: &[Stmt]| b.iter().map(count_stmt).sum::<usize>();
    1 + match &stmt.kind {
        StmtKind::Expr(e) => count_expr(e),
        StmtKind::Assign { targets, value } => targets.iter().map(count_expr).sum::<usize>() + count_expr(value),
        StmtKind::AugAssign { target, value, .. } => count_expr(target) + count_expr(value),
        StmtKind::If { branches, orelse } => {
            branches.iter().map(|(t, b)| count_expr(t) + block(b)).sum::<usize>()
                + orelse.as_deref().map(block).unwrap_or(0)
        }
        StmtKind::For { target, iter, body } => count_expr(target) + count_expr(iter) + block(body),
        StmtKind::While { test, body } => count_expr(test) + block(body),
        StmtKind::FunctionDef { params, body, .. } => {
            params.iter().filter_map(|p| p.default.as_ref()).map(count_expr).sum::<usize>() + block(body)
        }
        StmtKind::Return(v) => v.as_ref().map(count_expr).unwrap_or(0),
        StmtKind::Try { body, handlers } => block(body) + handlers.iter().map(|h| block(&h.body)).sum::<usize>(),
        StmtKind::Break | StmtKind::Continue | StmtKind::Pass | StmtKind::Import(_) | StmtKind::ImportFrom { .. } => 0,
    }
}

pub(crate) fn count_expr(expr: &Expr) -> usize {
    let many = |v: &[Expr]| v.iter().map(count_expr).sum::<usize>();
    let gens = |g: &[Comprehension]| {
        g.iter()
            .map(|c| count_expr(&c.target) + count_expr(&c.iter) + many(&c.ifs))
            .sum::<usize>()
    };
    1 + match &expr.kind {
        ExprKind::None
        | ExprKind::Bool(_)
        | ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Str(_)
        | ExprKind::Name(_) => 0,
        ExprKind::FString(parts) => parts
            .iter()
            .map(|p| match p {
                FPart::Literal(_) => 0,
                FPart::Field { expr, .. } => count_expr(expr),
            })
            .sum(),
        ExprKind::List(v) | ExprKind::Tuple(v) => many(v),
        ExprKind::Dict(pairs) => pairs.iter().map(|(k, v)| count_expr(k) + count_expr(v)).sum(),
        ExprKind::ListComp { elt, generators } | ExprKind::GenExp { elt, generators } => {
            count_expr(elt) + gens(generators)
        }
        ExprKind::DictComp { key, value, generators } => count_expr(key) + count_expr(value) + gens(generators),
        ExprKind::BinOp { left, right, .. } => count_expr(left) + count_expr(right),
        ExprKind::Unary { operand, .. } | ExprKind::Starred(operand) => count_expr(operand),
        ExprKind::BoolOp { values, .. } => many(values),
        ExprKind::Compare { left, comparators, .. } => count_expr(left) + many(comparators),
        ExprKind::IfExp { test, body, orelse } => count_expr(test) + count_expr(body) + count_expr(orelse),
        ExprKind::Call { func, args } => {
            count_expr(func)
                + args
                    .iter()
                    .map(|a| match a {
                        Arg::Positional(e) | Arg::Keyword(_, e) | Arg::Star(e) | Arg::DoubleStar(e) => count_expr(e),
                    })
                    .sum::<usize>()
        }
        ExprKind::Attribute { value, .. } => count_expr(value),
        ExprKind::Subscript { value, index } => count_expr(value) + count_expr(index),
        ExprKind::Slice { lower, upper, step } => [lower, upper, step]
            .iter()
            .filter_map(|e| e.as_deref())
            .map(count_expr)
            .sum(),
        ExprKind::Lambda { params, body } => {
            params.iter().filter_map(|p| p.default.as_ref()).map(count_expr).sum::<usize>() + count_expr(body)
        }
    }
}
