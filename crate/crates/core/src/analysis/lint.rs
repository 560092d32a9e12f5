use std::collections::BTreeSet;

use serde::Serialize;

use crate::diagnostics::Span;
use crate::frontend::ast::{BinaryOp, Literal};
use crate::frontend::{StreamKind, TExpr, TExprKind, TypedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintKind {
    PossibleDivisionByZero,
    DivisionByZeroLiteral,
    UnusedStream,
}

impl LintKind {
    pub fn code(self) -> &'static str {
        match self {
            LintKind::PossibleDivisionByZero => "possible-division-by-zero",
            LintKind::DivisionByZeroLiteral => "division-by-zero-literal",
            LintKind::UnusedStream => "unused-stream",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lint {
    pub kind: LintKind,
    pub severity: Severity,
    #[serde(serialize_with = "serialize_span")]
    pub span: Span,
    pub message: String,
}

fn serialize_span<S: serde::Serializer>(span: &Span, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&span.to_string())
}

/// Static warnings. `source` is the specification text, used to quote the
/// offending expressions.
pub fn lint(spec: &TypedSpec, source: &str) -> Vec<Lint> {
    let mut lints = Vec::new();
    let quote = |span: Span| span.snippet(source).map(str::trim).unwrap_or("expression").to_string();

    for (_, stream) in spec.evaluated() {
        let expr = stream.expr.as_ref().unwrap();
        expr.walk(&mut |e: &TExpr| {
            let TExprKind::Binary { op: op @ (BinaryOp::Div | BinaryOp::Rem), rhs, .. } = &e.kind else {
                return;
            };
            let what = if *op == BinaryOp::Div { "division" } else { "remainder" };
            match static_int(rhs) {
                Some(0) => lints.push(Lint {
                    kind: LintKind::DivisionByZeroLiteral,
                    severity: Severity::Error,
                    span: e.span,
                    message: format!("{what} by zero in `{}`", quote(e.span)),
                }),
                Some(_) => {}
                None => lints.push(Lint {
                    kind: LintKind::PossibleDivisionByZero,
                    severity: Severity::Warning,
                    span: e.span,
                    message: format!(
                        "possible division by zero: denominator `{}` of `{}` may evaluate to 0",
                        quote(rhs.span),
                        quote(e.span)
                    ),
                }),
            }
        });
    }

    let accessed: BTreeSet<_> =
        spec.evaluated().flat_map(|(_, s)| s.expr.as_ref().unwrap().accesses()).map(|(id, _, _)| id).collect();
    for (id, stream) in spec.outputs() {
        if matches!(stream.kind, StreamKind::Output) && !accessed.contains(&id) {
            lints.push(Lint {
                kind: LintKind::UnusedStream,
                severity: Severity::Warning,
                span: stream.span,
                message: format!("output `{}` is never accessed and does not feed a trigger", stream.name),
            });
        }
    }
    lints
}

fn static_int(e: &TExpr) -> Option<i32> {
    match e.kind {
        TExprKind::Literal(Literal::Int(v)) | TExprKind::Const { value: Literal::Int(v), .. } => Some(v),
        _ => None,
    }
}
