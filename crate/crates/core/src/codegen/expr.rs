//! Translation of typed expressions to Rust expression text.

use crate::frontend::ast::{BinaryOp, Builtin, UnaryOp};
use crate::frontend::{Literal, TExpr, TExprKind, TypeTag};

pub fn rust_type(ty: TypeTag) -> &'static str {
    match ty {
        TypeTag::Int32 => "i32",
        TypeTag::Bool => "bool",
    }
}

pub fn literal(l: Literal) -> String {
    match l {
        Literal::Int(i32::MIN) => "i32::MIN".to_string(),
        Literal::Int(v) => format!("({v}i32)"),
        Literal::Bool(b) => b.to_string(),
    }
}

/// Renders `expr`; `access` renders the `n`-th access (pre-order) of the tree.
pub fn translate(expr: &TExpr, access: &mut dyn FnMut(usize, &TExpr) -> String) -> String {
    let mut counter = 0;
    go(expr, &mut counter, access)
}

fn go(e: &TExpr, counter: &mut usize, access: &mut dyn FnMut(usize, &TExpr) -> String) -> String {
    match &e.kind {
        TExprKind::Literal(l) | TExprKind::Const { value: l, .. } => literal(*l),
        TExprKind::Access { .. } => {
            let n = *counter;
            *counter += 1;
            access(n, e)
        }
        TExprKind::Unary { op, operand } => {
            let a = go(operand, counter, access);
            match op {
                UnaryOp::Neg => format!("({a}.wrapping_neg())"),
                UnaryOp::Not => format!("(!{a})"),
            }
        }
        TExprKind::Binary { op, lhs, rhs } => {
            let a = go(lhs, counter, access);
            let b = go(rhs, counter, access);
            match op {
                BinaryOp::Add => format!("({a}.wrapping_add({b}))"),
                BinaryOp::Sub => format!("({a}.wrapping_sub({b}))"),
                BinaryOp::Mul => format!("({a}.wrapping_mul({b}))"),
                BinaryOp::Div => format!("div({a}, {b})?"),
                BinaryOp::Rem => format!("rem({a}, {b})?"),
                op => format!("({a} {} {b})", op.symbol()),
            }
        }
        TExprKind::Ite { cond, then, els } => {
            let c = go(cond, counter, access);
            let t = go(then, counter, access);
            let f = go(els, counter, access);
            format!("(if {c} {{ {t} }} else {{ {f} }})")
        }
        TExprKind::Call { builtin, args } => {
            let a: Vec<String> = args.iter().map(|x| go(x, counter, access)).collect();
            match builtin {
                Builtin::Min => format!("({}.min({}))", a[0], a[1]),
                Builtin::Max => format!("({}.max({}))", a[0], a[1]),
                Builtin::Abs => format!("({}.wrapping_abs())", a[0]),
                Builtin::Int => format!("({} as i32)", a[0]),
            }
        }
    }
}

const RUST_KEYWORDS: &[&str] = &[
    "_", "abstract", "as", "async", "await", "become", "box", "break", "const", "continue", "crate", "do", "dyn",
    "else", "enum", "extern", "false", "final", "fn", "for", "gen", "if", "impl", "in", "let", "loop", "macro",
    "match", "mod", "move", "mut", "override", "priv", "pub", "ref", "return", "self", "Self", "static", "struct",
    "super", "trait", "true", "try", "type", "typeof", "unsafe", "unsized", "use", "virtual", "where", "while",
    "yield",
];

/// Rust identifiers for `names`: keywords get a trailing `_`, and repeats are
/// suffixed until unique.
pub fn mangle(names: &[String]) -> Vec<String> {
    let mut used = std::collections::HashSet::new();
    names
        .iter()
        .map(|n| {
            let mut m = n.clone();
            if RUST_KEYWORDS.contains(&m.as_str()) {
                m.push('_');
            }
            while !used.insert(m.clone()) {
                m.push('_');
            }
            m
        })
        .collect()
}

/// A Rust string literal with the same contents.
pub fn string_literal(s: &str) -> String {
    format!("{s:?}")
}
