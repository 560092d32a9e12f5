//! Canonical surface syntax: `&&`, `||`, `==`, `if-then-else`.

use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for RawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for decl in &self.decls {
            writeln!(f, "{decl}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DeclKind::Input { names, ty } => {
                let names: Vec<&str> = names.iter().map(|n| n.name.as_str()).collect();
                write!(f, "input {}: {ty}", names.join(", "))
            }
            DeclKind::Constant { name, ty, value } => {
                write!(f, "constant {}: {ty} := {value}", name.name)
            }
            DeclKind::Output { name, ty, expr } => match ty {
                Some(ty) => write!(f, "output {}: {ty} := {expr}", name.name),
                None => write!(f, "output {} := {expr}", name.name),
            },
            DeclKind::Trigger { expr, message } => {
                write!(f, "trigger {expr}")?;
                if let Some(msg) = message {
                    write!(f, " {}", quote(msg))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_expr(&mut out, self, 0);
        f.write_str(&out)
    }
}

/// Quotes a trigger message using the lexer's escape rules.
pub fn quote(msg: &str) -> String {
    let mut out = String::with_capacity(msg.len() + 2);
    out.push('"');
    for c in msg.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const UNARY_PREC: u8 = 6;
const ATOM_PREC: u8 = 7;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Ite { .. } => 0,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => UNARY_PREC,
        ExprKind::Literal(Literal::Int(v)) if *v < 0 => UNARY_PREC,
        _ => ATOM_PREC,
    }
}

/// Writes `e`, parenthesized if it binds weaker than `min_prec`.
fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = expr_prec(e);
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Literal(l) => {
            let _ = write!(out, "{l}");
        }
        ExprKind::Access { target, offset, default } => {
            out.push_str(&target.name);
            if let Some(d) = default {
                let _ = write!(out, "[{offset}, {d}]");
            }
        }
        ExprKind::Unary { op, operand } => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            // A positive literal directly after `-` would re-read as a negative literal.
            let needs_parens = matches!(
                (op, &operand.kind),
                (UnaryOp::Neg, ExprKind::Literal(Literal::Int(v))) if *v >= 0
            );
            if needs_parens {
                out.push('(');
                write_expr(out, operand, 0);
                out.push(')');
            } else {
                write_expr(out, operand, UNARY_PREC);
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            write_expr(out, lhs, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, p + 1);
        }
        ExprKind::Ite { cond, then, els } => {
            out.push_str("if ");
            write_expr(out, cond, 0);
            out.push_str(" then ");
            write_expr(out, then, 0);
            out.push_str(" else ");
            write_expr(out, els, 0);
        }
        ExprKind::Call { builtin, args } => {
            out.push_str(builtin.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}
