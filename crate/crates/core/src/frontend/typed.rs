//! Resolved and type-checked specifications.

use std::collections::BTreeMap;

use super::ast::{BinaryOp, Builtin, Literal, TypeTag, UnaryOp};
use crate::diagnostics::Span;

/// Index of a stream (input, output, or trigger) in [`TypedSpec::streams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamKind {
    Input,
    Output,
    Trigger { index: usize, message: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    /// Declared name; triggers are named `trigger_<index>`.
    pub name: String,
    pub kind: StreamKind,
    pub ty: TypeTag,
    /// Defining expression; `None` for inputs.
    pub expr: Option<TExpr>,
    pub span: Span,
}

impl Stream {
    pub fn is_input(&self) -> bool {
        matches!(self.kind, StreamKind::Input)
    }

    pub fn is_trigger(&self) -> bool {
        matches!(self.kind, StreamKind::Trigger { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            StreamKind::Input => "input",
            StreamKind::Output => "output",
            StreamKind::Trigger { .. } => "trigger",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constant {
    pub name: String,
    pub ty: TypeTag,
    pub value: Literal,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Stream(StreamId),
    Constant(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: TypeTag,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TExprKind {
    Literal(Literal),
    /// A constant reference, carrying its folded value.
    Const {
        index: usize,
        value: Literal,
    },
    Access {
        stream: StreamId,
        offset: i32,
        default: Option<Literal>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<TExpr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    Ite {
        cond: Box<TExpr>,
        then: Box<TExpr>,
        els: Box<TExpr>,
    },
    Call {
        builtin: Builtin,
        args: Vec<TExpr>,
    },
}

impl TExpr {
    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TExpr)) {
        f(self);
        match &self.kind {
            TExprKind::Literal(_) | TExprKind::Const { .. } | TExprKind::Access { .. } => {}
            TExprKind::Unary { operand, .. } => operand.walk(f),
            TExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            TExprKind::Ite { cond, then, els } => {
                cond.walk(f);
                then.walk(f);
                els.walk(f);
            }
            TExprKind::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
        }
    }

    /// Stream accesses in source order: `(stream, offset, default)`.
    pub fn accesses(&self) -> Vec<(StreamId, i32, Option<Literal>)> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let TExprKind::Access { stream, offset, default } = &e.kind {
                out.push((*stream, *offset, *default));
            }
        });
        out
    }

    pub fn contains_division(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let TExprKind::Binary { op: BinaryOp::Div | BinaryOp::Rem, .. } = e.kind {
                found = true;
            }
        });
        found
    }
}

/// A fully resolved specification.
///
/// Streams are ordered inputs first (in declaration order), followed by
/// outputs and triggers interleaved in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypedSpec {
    pub streams: Vec<Stream>,
    pub constants: Vec<Constant>,
    pub symbols: BTreeMap<String, Symbol>,
}

impl TypedSpec {
    pub fn stream(&self, id: StreamId) -> &Stream {
        &self.streams[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = StreamId> + '_ {
        (0..self.streams.len()).map(StreamId)
    }

    pub fn inputs(&self) -> impl Iterator<Item = (StreamId, &Stream)> + '_ {
        self.streams.iter().enumerate().filter(|(_, s)| s.is_input()).map(|(i, s)| (StreamId(i), s))
    }

    pub fn outputs(&self) -> impl Iterator<Item = (StreamId, &Stream)> + '_ {
        self.streams
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.kind, StreamKind::Output))
            .map(|(i, s)| (StreamId(i), s))
    }

    pub fn triggers(&self) -> impl Iterator<Item = (StreamId, &Stream)> + '_ {
        self.streams.iter().enumerate().filter(|(_, s)| s.is_trigger()).map(|(i, s)| (StreamId(i), s))
    }

    /// Outputs and triggers in declaration order.
    pub fn evaluated(&self) -> impl Iterator<Item = (StreamId, &Stream)> + '_ {
        self.streams.iter().enumerate().filter(|(_, s)| !s.is_input()).map(|(i, s)| (StreamId(i), s))
    }

    pub fn lookup(&self, name: &str) -> Option<StreamId> {
        match self.symbols.get(name) {
            Some(Symbol::Stream(id)) => Some(*id),
            _ => None,
        }
    }

    pub fn input_count(&self) -> usize {
        self.inputs().count()
    }
}
