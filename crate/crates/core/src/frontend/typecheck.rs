use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use super::typed::*;
use crate::diagnostics::{Located, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error("unresolved name `{name}`")]
    UnresolvedName { name: String, span: Span },
    #[error("duplicate declaration of `{name}` (first declared at {previous})")]
    DuplicateName { name: String, span: Span, previous: Span },
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { span: Span, expected: TypeTag, found: TypeTag },
    #[error("default value of type {found} does not match type {expected} of stream `{stream}`")]
    DefaultType { span: Span, stream: String, expected: TypeTag, found: TypeTag },
    #[error("cannot infer the type of output `{name}`; add a type annotation")]
    CannotInfer { name: String, span: Span },
    #[error("constant `{name}` cannot be accessed with an offset or default")]
    ConstantAccess { name: String, span: Span },
}

impl Located for SemanticError {
    fn span(&self) -> Option<Span> {
        Some(match self {
            SemanticError::UnresolvedName { span, .. }
            | SemanticError::DuplicateName { span, .. }
            | SemanticError::TypeMismatch { span, .. }
            | SemanticError::DefaultType { span, .. }
            | SemanticError::CannotInfer { span, .. }
            | SemanticError::ConstantAccess { span, .. } => *span,
        })
    }
}

type SResult<T> = Result<T, SemanticError>;

/// Resolves names, infers omitted output types, and type-checks every expression.
pub fn resolve_and_typecheck(raw: &RawSpec) -> SResult<TypedSpec> {
    let mut spec = TypedSpec::default();
    let mut spans: BTreeMap<String, Span> = BTreeMap::new();
    let declare = |name: &Ident, spans: &mut BTreeMap<String, Span>| -> SResult<()> {
        if let Some(prev) = spans.get(&name.name) {
            return Err(SemanticError::DuplicateName { name: name.name.clone(), span: name.span, previous: *prev });
        }
        spans.insert(name.name.clone(), name.span);
        Ok(())
    };

    // Inputs come first so that stream ids of inputs are dense from zero.
    for decl in &raw.decls {
        if let DeclKind::Input { names, ty } = &decl.kind {
            for name in names {
                declare(name, &mut spans)?;
                let id = StreamId(spec.streams.len());
                spec.symbols.insert(name.name.clone(), Symbol::Stream(id));
                spec.streams.push(Stream {
                    name: name.name.clone(),
                    kind: StreamKind::Input,
                    ty: *ty,
                    expr: None,
                    span: name.span,
                });
            }
        }
    }

    // Outputs and triggers, with their raw expressions and optional annotations.
    let mut pending: Vec<(StreamId, Option<TypeTag>, &Expr)> = Vec::new();
    let mut trigger_count = 0;
    for decl in &raw.decls {
        match &decl.kind {
            DeclKind::Input { .. } => {}
            DeclKind::Constant { name, ty, value } => {
                declare(name, &mut spans)?;
                if value.type_tag() != *ty {
                    return Err(SemanticError::TypeMismatch {
                        span: decl.span,
                        expected: *ty,
                        found: value.type_tag(),
                    });
                }
                spec.symbols.insert(name.name.clone(), Symbol::Constant(spec.constants.len()));
                spec.constants.push(Constant { name: name.name.clone(), ty: *ty, value: *value, span: name.span });
            }
            DeclKind::Output { name, ty, expr } => {
                declare(name, &mut spans)?;
                let id = StreamId(spec.streams.len());
                spec.symbols.insert(name.name.clone(), Symbol::Stream(id));
                spec.streams.push(Stream {
                    name: name.name.clone(),
                    kind: StreamKind::Output,
                    // Placeholder until inference completes.
                    ty: ty.unwrap_or(TypeTag::Int32),
                    expr: None,
                    span: name.span,
                });
                pending.push((id, *ty, expr));
            }
            DeclKind::Trigger { expr, message } => {
                let id = StreamId(spec.streams.len());
                spec.streams.push(Stream {
                    name: format!("trigger_{trigger_count}"),
                    kind: StreamKind::Trigger { index: trigger_count, message: message.clone() },
                    ty: TypeTag::Bool,
                    expr: None,
                    span: decl.span,
                });
                trigger_count += 1;
                pending.push((id, Some(TypeTag::Bool), expr));
            }
        }
    }

    // Every name must resolve before inference, so that inference failures are real.
    for (_, _, expr) in &pending {
        check_names(expr, &spec)?;
    }

    let mut known: Vec<Option<TypeTag>> =
        spec.streams.iter().map(|s| if s.is_input() { Some(s.ty) } else { None }).collect();
    for (id, ty, _) in &pending {
        known[id.0] = *ty;
    }
    loop {
        let mut progress = false;
        for (id, _, expr) in &pending {
            if known[id.0].is_none() {
                if let Some(ty) = infer_shallow(expr, &spec, &known) {
                    known[id.0] = Some(ty);
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }
    for (id, _, _) in &pending {
        match known[id.0] {
            Some(ty) => spec.streams[id.0].ty = ty,
            None => {
                let s = &spec.streams[id.0];
                return Err(SemanticError::CannotInfer { name: s.name.clone(), span: s.span });
            }
        }
    }

    for (id, _, expr) in &pending {
        let typed = check(expr, &spec)?;
        let expected = spec.streams[id.0].ty;
        if typed.ty != expected {
            return Err(SemanticError::TypeMismatch { span: typed.span, expected, found: typed.ty });
        }
        spec.streams[id.0].expr = Some(typed);
    }
    Ok(spec)
}

fn check_names(expr: &Expr, spec: &TypedSpec) -> SResult<()> {
    match &expr.kind {
        ExprKind::Literal(_) => Ok(()),
        ExprKind::Access { target, offset, default } => match spec.symbols.get(&target.name) {
            None => Err(SemanticError::UnresolvedName { name: target.name.clone(), span: target.span }),
            Some(Symbol::Constant(_)) if *offset != 0 || default.is_some() => {
                Err(SemanticError::ConstantAccess { name: target.name.clone(), span: expr.span })
            }
            Some(_) => Ok(()),
        },
        ExprKind::Unary { operand, .. } => check_names(operand, spec),
        ExprKind::Binary { lhs, rhs, .. } => {
            check_names(lhs, spec)?;
            check_names(rhs, spec)
        }
        ExprKind::Ite { cond, then, els } => {
            check_names(cond, spec)?;
            check_names(then, spec)?;
            check_names(els, spec)
        }
        ExprKind::Call { args, .. } => args.iter().try_for_each(|a| check_names(a, spec)),
    }
}

/// Result type of `expr` as far as it can be determined from the types known so far.
/// An access to a stream of unknown type uses its default literal as a hint.
fn infer_shallow(expr: &Expr, spec: &TypedSpec, known: &[Option<TypeTag>]) -> Option<TypeTag> {
    match &expr.kind {
        ExprKind::Literal(l) => Some(l.type_tag()),
        ExprKind::Access { target, default, .. } => match spec.symbols.get(&target.name)? {
            Symbol::Constant(i) => Some(spec.constants[*i].ty),
            Symbol::Stream(id) => known[id.0].or(default.map(Literal::type_tag)),
        },
        ExprKind::Unary { op: UnaryOp::Neg, .. } => Some(TypeTag::Int32),
        ExprKind::Unary { op: UnaryOp::Not, .. } => Some(TypeTag::Bool),
        ExprKind::Binary { op, .. } if op.is_arithmetic() => Some(TypeTag::Int32),
        ExprKind::Binary { .. } => Some(TypeTag::Bool),
        ExprKind::Ite { then, els, .. } => infer_shallow(then, spec, known).or_else(|| infer_shallow(els, spec, known)),
        ExprKind::Call { .. } => Some(TypeTag::Int32),
    }
}

fn expect(e: &TExpr, expected: TypeTag) -> SResult<()> {
    if e.ty == expected {
        Ok(())
    } else {
        Err(SemanticError::TypeMismatch { span: e.span, expected, found: e.ty })
    }
}

fn check(expr: &Expr, spec: &TypedSpec) -> SResult<TExpr> {
    let span = expr.span;
    let (kind, ty) = match &expr.kind {
        ExprKind::Literal(l) => (TExprKind::Literal(*l), l.type_tag()),
        ExprKind::Access { target, offset, default } => match spec.symbols[&target.name] {
            Symbol::Constant(index) => {
                let c = &spec.constants[index];
                (TExprKind::Const { index, value: c.value }, c.ty)
            }
            Symbol::Stream(stream) => {
                let s = spec.stream(stream);
                if let Some(d) = default {
                    if d.type_tag() != s.ty {
                        return Err(SemanticError::DefaultType {
                            span,
                            stream: s.name.clone(),
                            expected: s.ty,
                            found: d.type_tag(),
                        });
                    }
                }
                (TExprKind::Access { stream, offset: *offset, default: *default }, s.ty)
            }
        },
        ExprKind::Unary { op, operand } => {
            let operand = check(operand, spec)?;
            let ty = match op {
                UnaryOp::Neg => TypeTag::Int32,
                UnaryOp::Not => TypeTag::Bool,
            };
            expect(&operand, ty)?;
            (TExprKind::Unary { op: *op, operand: Box::new(operand) }, ty)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let lhs = check(lhs, spec)?;
            let rhs = check(rhs, spec)?;
            let ty = if op.is_arithmetic() {
                expect(&lhs, TypeTag::Int32)?;
                expect(&rhs, TypeTag::Int32)?;
                TypeTag::Int32
            } else if op.is_ordering() {
                expect(&lhs, TypeTag::Int32)?;
                expect(&rhs, TypeTag::Int32)?;
                TypeTag::Bool
            } else if op.is_logical() {
                expect(&lhs, TypeTag::Bool)?;
                expect(&rhs, TypeTag::Bool)?;
                TypeTag::Bool
            } else {
                expect(&rhs, lhs.ty)?;
                TypeTag::Bool
            };
            (TExprKind::Binary { op: *op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, ty)
        }
        ExprKind::Ite { cond, then, els } => {
            let cond = check(cond, spec)?;
            expect(&cond, TypeTag::Bool)?;
            let then = check(then, spec)?;
            let els = check(els, spec)?;
            expect(&els, then.ty)?;
            let ty = then.ty;
            (TExprKind::Ite { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) }, ty)
        }
        ExprKind::Call { builtin, args } => {
            let args = args.iter().map(|a| check(a, spec)).collect::<SResult<Vec<_>>>()?;
            let arg_ty = match builtin {
                Builtin::Int => TypeTag::Bool,
                _ => TypeTag::Int32,
            };
            for a in &args {
                expect(a, arg_ty)?;
            }
            (TExprKind::Call { builtin: *builtin, args }, TypeTag::Int32)
        }
    };
    Ok(TExpr { kind, ty, span })
}
