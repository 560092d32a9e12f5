//! Untyped syntax tree as produced by the parser.

use std::fmt;

use serde::Serialize;

use crate::diagnostics::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TypeTag {
    Int32,
    Bool,
}

impl TypeTag {
    /// Size in bytes of one stored value.
    pub fn size_of(self) -> usize {
        match self {
            TypeTag::Int32 => 4,
            TypeTag::Bool => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TypeTag::Int32 => "Int32",
            TypeTag::Bool => "Bool",
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(i32),
    Bool(bool),
}

impl Literal {
    pub fn type_tag(self) -> TypeTag {
        match self {
            Literal::Int(_) => TypeTag::Int32,
            Literal::Bool(_) => TypeTag::Bool,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 5,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Min,
    Max,
    Abs,
    Int,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "abs" => Builtin::Abs,
            "int" => Builtin::Int,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Abs => "abs",
            Builtin::Int => "int",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Min | Builtin::Max => 2,
            Builtin::Abs | Builtin::Int => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Literal(Literal),
    /// `name` or `name[offset, default]`. A bare name has offset 0 and no default;
    /// it may still resolve to a constant.
    Access {
        target: Ident,
        offset: i32,
        default: Option<Literal>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ite {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Call {
        builtin: Builtin,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    Input { names: Vec<Ident>, ty: TypeTag },
    Constant { name: Ident, ty: TypeTag, value: Literal },
    Output { name: Ident, ty: Option<TypeTag>, expr: Expr },
    Trigger { expr: Expr, message: Option<String> },
}

/// A parsed specification: declarations in source order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawSpec {
    pub decls: Vec<Decl>,
}

impl RawSpec {
    /// Copy of the tree with every span reset, for structural comparison.
    pub fn without_spans(&self) -> RawSpec {
        RawSpec {
            decls: self
                .decls
                .iter()
                .map(|d| Decl {
                    span: Span::default(),
                    kind: match &d.kind {
                        DeclKind::Input { names, ty } => {
                            DeclKind::Input { names: names.iter().map(strip_ident).collect(), ty: *ty }
                        }
                        DeclKind::Constant { name, ty, value } => {
                            DeclKind::Constant { name: strip_ident(name), ty: *ty, value: *value }
                        }
                        DeclKind::Output { name, ty, expr } => {
                            DeclKind::Output { name: strip_ident(name), ty: *ty, expr: expr.without_spans() }
                        }
                        DeclKind::Trigger { expr, message } => {
                            DeclKind::Trigger { expr: expr.without_spans(), message: message.clone() }
                        }
                    },
                })
                .collect(),
        }
    }
}

fn strip_ident(id: &Ident) -> Ident {
    Ident { name: id.name.clone(), span: Span::default() }
}

impl Expr {
    pub fn without_spans(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Literal(l) => ExprKind::Literal(*l),
            ExprKind::Access { target, offset, default } => {
                ExprKind::Access { target: strip_ident(target), offset: *offset, default: *default }
            }
            ExprKind::Unary { op, operand } => ExprKind::Unary { op: *op, operand: Box::new(operand.without_spans()) },
            ExprKind::Binary { op, lhs, rhs } => {
                ExprKind::Binary { op: *op, lhs: Box::new(lhs.without_spans()), rhs: Box::new(rhs.without_spans()) }
            }
            ExprKind::Ite { cond, then, els } => ExprKind::Ite {
                cond: Box::new(cond.without_spans()),
                then: Box::new(then.without_spans()),
                els: Box::new(els.without_spans()),
            },
            ExprKind::Call { builtin, args } => {
                ExprKind::Call { builtin: *builtin, args: args.iter().map(Expr::without_spans).collect() }
            }
        };
        Expr { kind, span: Span::default() }
    }
}
