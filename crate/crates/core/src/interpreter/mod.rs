//! Reference semantics: computes every stream value of a finite trace.
//!
//! Cells `(stream, position)` are filled by a dependency-driven worklist, so
//! the result does not rely on the shifts or layers computed by the analysis.

pub mod trace;

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use thiserror::Error;

use crate::diagnostics::Span;
use crate::frontend::ast::{BinaryOp, Builtin, UnaryOp};
use crate::frontend::{Literal, StreamId, StreamKind, TExpr, TExprKind, TypedSpec};
pub use trace::{parse_value, Trace, TraceError};

pub type Value = Literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Value(Value),
    Fault,
}

/// Read access to computed cells during evaluation.
pub trait CellSource {
    /// The state of `stream` at `pos`, where `pos` lies within the trace.
    fn cell(&self, stream: StreamId, pos: usize) -> CellState;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    Value(Value),
    /// The named cell is needed but not yet available.
    Pending(StreamId, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    /// A needed cell holds a fault.
    Poisoned,
    /// No cell can make progress; unreachable for well-formed specs.
    InternalStuck,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} in stream `{stream_name}` at position {position}", match .kind {
    EvalErrorKind::DivisionByZero => "division by zero",
    EvalErrorKind::Poisoned => "faulted dependency",
    EvalErrorKind::InternalStuck => "evaluation cannot make progress",
})]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub stream: StreamId,
    pub stream_name: String,
    pub position: usize,
    pub span: Span,
}

/// Evaluates `expr` at position `k`. Accesses outside `0..len` take their
/// default; `ite`, `&&` and `||` only evaluate the operands they need.
#[allow(clippy::only_used_in_recursion)]
pub fn eval_expr(
    spec: &TypedSpec,
    expr: &TExpr,
    k: usize,
    cells: &dyn CellSource,
) -> Result<Eval, (EvalErrorKind, Span)> {
    macro_rules! value {
        ($e:expr) => {
            match eval_expr(spec, $e, k, cells)? {
                Eval::Value(v) => v,
                pending => return Ok(pending),
            }
        };
    }
    let v = match &expr.kind {
        TExprKind::Literal(l) => *l,
        TExprKind::Const { value, .. } => *value,
        TExprKind::Access { stream, offset, default } => {
            let target = k as i64 + *offset as i64;
            if target < 0 || target >= cells.len() as i64 {
                default.unwrap_or_else(|| panic!("offset-0 access outside the trace"))
            } else {
                match cells.cell(*stream, target as usize) {
                    CellState::Value(v) => v,
                    CellState::Unknown => return Ok(Eval::Pending(*stream, target as usize)),
                    CellState::Fault => return Err((EvalErrorKind::Poisoned, expr.span)),
                }
            }
        }
        TExprKind::Unary { op, operand } => match (op, value!(operand)) {
            (UnaryOp::Neg, Literal::Int(v)) => Literal::Int(v.wrapping_neg()),
            (UnaryOp::Not, Literal::Bool(b)) => Literal::Bool(!b),
            _ => unreachable!("ill-typed unary operand"),
        },
        TExprKind::Binary { op: op @ (BinaryOp::And | BinaryOp::Or), lhs, rhs } => {
            let l = as_bool(value!(lhs));
            if l == (*op == BinaryOp::Or) {
                Literal::Bool(l)
            } else {
                value!(rhs)
            }
        }
        TExprKind::Binary { op, lhs, rhs } => {
            let l = value!(lhs);
            let r = value!(rhs);
            match (l, r) {
                (Literal::Int(a), Literal::Int(b)) => match op {
                    BinaryOp::Add => Literal::Int(a.wrapping_add(b)),
                    BinaryOp::Sub => Literal::Int(a.wrapping_sub(b)),
                    BinaryOp::Mul => Literal::Int(a.wrapping_mul(b)),
                    BinaryOp::Div | BinaryOp::Rem if b == 0 => return Err((EvalErrorKind::DivisionByZero, expr.span)),
                    BinaryOp::Div => Literal::Int(a.wrapping_div(b)),
                    BinaryOp::Rem => Literal::Int(a.wrapping_rem(b)),
                    BinaryOp::Lt => Literal::Bool(a < b),
                    BinaryOp::Le => Literal::Bool(a <= b),
                    BinaryOp::Gt => Literal::Bool(a > b),
                    BinaryOp::Ge => Literal::Bool(a >= b),
                    BinaryOp::Eq => Literal::Bool(a == b),
                    BinaryOp::Ne => Literal::Bool(a != b),
                    BinaryOp::And | BinaryOp::Or => unreachable!(),
                },
                (Literal::Bool(a), Literal::Bool(b)) => match op {
                    BinaryOp::Eq => Literal::Bool(a == b),
                    BinaryOp::Ne => Literal::Bool(a != b),
                    _ => unreachable!("ill-typed boolean operator"),
                },
                _ => unreachable!("mismatched operand types"),
            }
        }
        TExprKind::Ite { cond, then, els } => {
            if as_bool(value!(cond)) {
                value!(then)
            } else {
                value!(els)
            }
        }
        TExprKind::Call { builtin, args } => match builtin {
            Builtin::Int => Literal::Int(as_bool(value!(&args[0])) as i32),
            Builtin::Abs => Literal::Int(as_int(value!(&args[0])).wrapping_abs()),
            Builtin::Min => {
                let a = as_int(value!(&args[0]));
                Literal::Int(a.min(as_int(value!(&args[1]))))
            }
            Builtin::Max => {
                let a = as_int(value!(&args[0]));
                Literal::Int(a.max(as_int(value!(&args[1]))))
            }
        },
    };
    Ok(Eval::Value(v))
}

fn as_bool(v: Value) -> bool {
    match v {
        Literal::Bool(b) => b,
        Literal::Int(_) => unreachable!("expected Bool"),
    }
}

fn as_int(v: Value) -> i32 {
    match v {
        Literal::Int(i) => i,
        Literal::Bool(_) => unreachable!("expected Int32"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub position: usize,
    pub index: usize,
    pub message: String,
}

/// All stream values of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationModel {
    /// Values per stream, indexed by [`StreamId`]; inputs hold their trace column.
    pub values: Vec<Vec<Value>>,
    /// Firings ordered by (position, trigger index).
    pub firings: Vec<Firing>,
    pub len: usize,
}

struct Cells<'a> {
    spec: &'a TypedSpec,
    trace: &'a Trace,
    state: Vec<Vec<CellState>>,
    input_index: Vec<usize>,
}

impl CellSource for Cells<'_> {
    fn cell(&self, stream: StreamId, pos: usize) -> CellState {
        if self.spec.stream(stream).is_input() {
            CellState::Value(self.trace.value(self.input_index[stream.0], pos))
        } else {
            self.state[stream.0][pos]
        }
    }

    fn len(&self) -> usize {
        self.trace.len
    }
}

/// Outcome of evaluation including faults: cells that faulted are absent.
#[derive(Debug, Clone)]
pub struct FaultedEvaluation {
    pub states: Vec<Vec<CellState>>,
    /// Cells whose own evaluation faulted (not merely poisoned), in discovery order.
    pub faults: Vec<EvalError>,
}

/// Evaluates with the default worklist order (position-major, declaration order).
pub fn evaluate_with_faults(spec: &TypedSpec, trace: &Trace) -> Result<FaultedEvaluation, EvalError> {
    let order = (0..trace.len).flat_map(|p| spec.evaluated().map(move |(id, _)| (id, p))).collect();
    evaluate_in_order(spec, trace, order)
}

/// Worklist evaluation seeded with `order`, which must list every
/// (output or trigger, position) cell. Errors only with `InternalStuck`.
pub fn evaluate_in_order(
    spec: &TypedSpec,
    trace: &Trace,
    order: Vec<(StreamId, usize)>,
) -> Result<FaultedEvaluation, EvalError> {
    let mut input_index = vec![usize::MAX; spec.streams.len()];
    for (i, (id, _)) in spec.inputs().enumerate() {
        input_index[id.0] = i;
    }
    let state = spec
        .streams
        .iter()
        .map(|s| if s.is_input() { Vec::new() } else { vec![CellState::Unknown; trace.len] })
        .collect();
    let mut cells = Cells { spec, trace, state, input_index };
    let mut queue: VecDeque<(StreamId, usize)> = order.into();
    let mut waiters: HashMap<(StreamId, usize), Vec<(StreamId, usize)>> = HashMap::new();
    let mut faults = Vec::new();

    while let Some((s, p)) = queue.pop_front() {
        if cells.state[s.0][p] != CellState::Unknown {
            continue;
        }
        let stream = spec.stream(s);
        let expr = stream.expr.as_ref().unwrap();
        let outcome = match eval_expr(spec, expr, p, &cells) {
            Ok(Eval::Pending(ds, dp)) => {
                waiters.entry((ds, dp)).or_default().push((s, p));
                continue;
            }
            Ok(Eval::Value(v)) => CellState::Value(v),
            Err((kind, span)) => {
                if kind == EvalErrorKind::DivisionByZero {
                    faults.push(EvalError { kind, stream: s, stream_name: stream.name.clone(), position: p, span });
                }
                CellState::Fault
            }
        };
        cells.state[s.0][p] = outcome;
        if let Some(ws) = waiters.remove(&(s, p)) {
            queue.extend(ws);
        }
    }

    for (id, stream) in spec.evaluated() {
        if let Some(p) = cells.state[id.0].iter().position(|c| *c == CellState::Unknown) {
            return Err(EvalError {
                kind: EvalErrorKind::InternalStuck,
                stream: id,
                stream_name: stream.name.clone(),
                position: p,
                span: stream.span,
            });
        }
    }
    Ok(FaultedEvaluation { states: cells.state, faults })
}

/// Computes the evaluation model, or the first division fault by
/// (position, declaration order).
pub fn evaluate(spec: &TypedSpec, trace: &Trace) -> Result<EvaluationModel, EvalError> {
    let result = evaluate_with_faults(spec, trace)?;
    if let Some(first) = result.faults.iter().min_by_key(|e| (e.position, e.stream)) {
        return Err(first.clone());
    }
    Ok(model_from_states(spec, trace, result.states))
}

fn model_from_states(spec: &TypedSpec, trace: &Trace, states: Vec<Vec<CellState>>) -> EvaluationModel {
    let mut values: Vec<Vec<Value>> = Vec::with_capacity(spec.streams.len());
    let mut inputs = trace.columns.iter();
    for (stream, col) in spec.streams.iter().zip(states) {
        if stream.is_input() {
            values.push(inputs.next().unwrap().clone());
        } else {
            values.push(
                col.into_iter()
                    .map(|c| match c {
                        CellState::Value(v) => v,
                        _ => unreachable!("faulted cells are reported as errors"),
                    })
                    .collect(),
            );
        }
    }
    let mut firings = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for position in 0..trace.len {
        for (id, stream) in spec.triggers() {
            if let StreamKind::Trigger { index, message } = &stream.kind {
                if values[id.0][position] == Literal::Bool(true) {
                    firings.push(Firing { position, index: *index, message: message.clone().unwrap_or_default() });
                }
            }
        }
    }
    EvaluationModel { values, firings, len: trace.len }
}

/// Escapes a trigger message for single-line output.
pub fn escape_message(msg: &str) -> String {
    msg.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

/// One line per firing: `<position>,<trigger index>,<message>`.
pub fn firings_to_text(firings: &[Firing]) -> String {
    let mut out = String::new();
    for f in firings {
        let _ = writeln!(out, "{},{},{}", f.position, f.index, escape_message(&f.message));
    }
    out
}

/// The stream dump format: a header of output and trigger names in
/// declaration order, one row per position, then `# trigger,...` lines.
pub fn model_to_csv(spec: &TypedSpec, model: &EvaluationModel) -> String {
    let ids: Vec<StreamId> = spec.evaluated().map(|(id, _)| id).collect();
    let names: Vec<&str> = ids.iter().map(|id| spec.stream(*id).name.as_str()).collect();
    let mut out = names.join(",");
    out.push('\n');
    for pos in 0..model.len {
        for (i, id) in ids.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", model.values[id.0][pos]);
        }
        out.push('\n');
    }
    for f in &model.firings {
        let _ = writeln!(out, "# trigger,{},{},{}", f.position, f.index, escape_message(&f.message));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_str;

    fn ints(v: &[i32]) -> Vec<Value> {
        v.iter().map(|&i| Literal::Int(i)).collect()
    }

    fn bools(v: &[bool]) -> Vec<Value> {
        v.iter().map(|&b| Literal::Bool(b)).collect()
    }

    fn altitude_trace() -> (TypedSpec, Trace) {
        let spec = compile_str(include_str!("../../corpus/altitude.lola")).unwrap();
        let trace = Trace::from_csv(&spec, "altitude\n100\n150\n180\n250\n").unwrap();
        (spec, trace)
    }

    #[test]
    fn altitude_model() {
        let (spec, trace) = altitude_trace();
        let m = evaluate(&spec, &trace).unwrap();
        let id = |n| spec.lookup(n).unwrap().0;
        assert_eq!(m.values[id("tooLow")], bools(&[true, true, false, false]));
        assert_eq!(m.values[id("tooHigh")], bools(&[false; 4]));
        let fired: Vec<_> = m.firings.iter().map(|f| (f.position, f.index)).collect();
        assert_eq!(fired, [(0, 0), (1, 0)]);
        assert_eq!(m.firings[0].message, "Flying below minimum altitude.");
    }

    /// Direct substitution of the access rule, independent of the worklist.
    #[test]
    fn altitude_brute_force() {
        let alt = [100, 150, 180, 250];
        let at = |k: i64| if (0..4).contains(&k) { alt[k as usize] } else { 0 };
        let low: Vec<bool> = (0..4).map(|k| at(k - 1) < 200 && at(k) < 200 && at(k + 1) < 200).collect();
        let (spec, trace) = altitude_trace();
        let m = evaluate(&spec, &trace).unwrap();
        assert_eq!(m.values[spec.lookup("tooLow").unwrap().0], bools(&low));
    }

    #[test]
    fn too_low_at_zero_uses_default() {
        let (spec, trace) = altitude_trace();
        let m = evaluate(&spec, &trace).unwrap();
        assert_eq!(m.values[spec.lookup("tooLow").unwrap().0][0], Literal::Bool(true));
    }

    #[test]
    fn sync_pitfall_model() {
        let spec = compile_str(include_str!("../../corpus/sync_pitfall.lola")).unwrap();
        let m = evaluate(&spec, &Trace::empty(3)).unwrap();
        assert_eq!(m.values[spec.lookup("b").unwrap().0], ints(&[1, 2, 3]));
        assert_eq!(m.values[spec.lookup("a").unwrap().0], ints(&[2, 3, 4]));
    }

    #[test]
    fn empty_trace() {
        let (spec, _) = altitude_trace();
        let m = evaluate(&spec, &Trace::from_csv(&spec, "altitude\n").unwrap()).unwrap();
        assert!(m.firings.is_empty());
        assert_eq!(model_to_csv(&spec, &m), "tooLow,tooHigh,trigger_0,trigger_1\n");
    }

    #[test]
    fn division_by_zero_faults() {
        let spec = compile_str("input x: Int32\noutput o := 1 / (x - x)").unwrap();
        let trace = Trace::from_csv(&spec, "x\n4\n5\n").unwrap();
        let err = evaluate(&spec, &trace).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.position, 0);
        assert_eq!(err.to_string(), "division by zero in stream `o` at position 0");
    }

    #[test]
    fn faults_poison_dependents_but_not_others() {
        let spec =
            compile_str("input x: Int32\noutput o := 10 / x\noutput p := o[-1, 0] + 1\noutput q := x + 1").unwrap();
        let trace = Trace::from_csv(&spec, "x\n1\n0\n2\n").unwrap();
        let r = evaluate_with_faults(&spec, &trace).unwrap();
        assert_eq!(r.faults.len(), 1);
        assert_eq!(r.faults[0].position, 1);
        let p = spec.lookup("p").unwrap().0;
        assert_eq!(r.states[p][2], CellState::Fault);
        assert_eq!(r.states[p][1], CellState::Value(Literal::Int(11)));
        assert!(r.states[spec.lookup("q").unwrap().0].iter().all(|c| matches!(c, CellState::Value(_))));
    }

    #[test]
    fn short_circuit_skips_faulting_operands() {
        let spec =
            compile_str("input x: Int32\noutput o := x == 0 || 10 / x > 1\noutput p := if x == 0 then 0 else 10 / x")
                .unwrap();
        let trace = Trace::from_csv(&spec, "x\n0\n5\n").unwrap();
        let m = evaluate(&spec, &trace).unwrap();
        assert_eq!(m.values[spec.lookup("p").unwrap().0], ints(&[0, 2]));
    }

    #[test]
    fn wrapping_and_truncation() {
        let spec = compile_str(
            "input x: Int32\ninput y: Int32\noutput s := x + y\noutput m := x * y\noutput d := x / y\noutput r := x % y\noutput n := -x\noutput a := abs(x)",
        )
        .unwrap();
        let trace = Trace::from_csv(&spec, "x,y\n2147483647,1\n-7,2\n-2147483648,-1\n").unwrap();
        let m = evaluate(&spec, &trace).unwrap();
        let col = |n| m.values[spec.lookup(n).unwrap().0].clone();
        assert_eq!(col("s"), ints(&[i32::MIN, -5, i32::MAX]));
        assert_eq!(col("m"), ints(&[i32::MAX, -14, i32::MIN]));
        assert_eq!(col("d"), ints(&[i32::MAX, -3, i32::MIN]));
        assert_eq!(col("r"), ints(&[0, -1, 0]));
        assert_eq!(col("n"), ints(&[-i32::MAX, 7, i32::MIN]));
        assert_eq!(col("a"), ints(&[i32::MAX, 7, i32::MIN]));
    }

    #[test]
    fn b_plus_one_at_zero_with_empty_model() {
        let spec = compile_str("output b: Int32 := b[-1, 0] + 1").unwrap();
        let m = evaluate(&spec, &Trace::empty(1)).unwrap();
        assert_eq!(m.values[0], ints(&[1]));
    }

    #[test]
    fn csv_dump_format() {
        let (spec, trace) = altitude_trace();
        let m = evaluate(&spec, &trace).unwrap();
        let csv = model_to_csv(&spec, &m);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 2);
        assert_eq!(lines[1], "true,false,true,false");
        assert_eq!(lines[5], "# trigger,0,0,Flying below minimum altitude.");

        let spec = compile_str("input i: Int32\noutput o := i").unwrap();
        let m = evaluate(&spec, &Trace::from_csv(&spec, "i\n7\n").unwrap()).unwrap();
        assert_eq!(model_to_csv(&spec, &m), "o\n7\n");
    }

    #[test]
    fn int_builtin_matches_inferred_type() {
        let spec = compile_str("input altitude: Int32\noutput c := int(altitude > 0)").unwrap();
        let m = evaluate(&spec, &Trace::from_csv(&spec, "altitude\n5\n").unwrap()).unwrap();
        assert_eq!(m.values[1], ints(&[1]));
    }

    /// Panics on any read outside the trace.
    struct Strict<'a>(&'a Cells<'a>);

    impl CellSource for Strict<'_> {
        fn cell(&self, stream: StreamId, pos: usize) -> CellState {
            assert!(pos < self.0.len(), "out-of-range read of {stream:?} at {pos}");
            self.0.cell(stream, pos)
        }
        fn len(&self) -> usize {
            self.0.len()
        }
    }

    #[test]
    fn boundary_reads_use_defaults() {
        let spec = compile_str("input i: Int32\noutput o := i[-3, 7] + i[2, 9] + o[-1, 0]").unwrap();
        let trace = Trace::from_csv(&spec, "i\n1\n2\n").unwrap();
        let m = evaluate(&spec, &trace).unwrap();
        let cells = Cells {
            spec: &spec,
            trace: &trace,
            state: m.values.iter().map(|c| c.iter().map(|v| CellState::Value(*v)).collect()).collect(),
            input_index: vec![0, usize::MAX],
        };
        let expr = spec.stream(StreamId(1)).expr.as_ref().unwrap();
        for k in 0..trace.len {
            let Ok(Eval::Value(v)) = eval_expr(&spec, expr, k, &Strict(&cells)) else { panic!() };
            assert_eq!(v, m.values[1][k]);
        }
        assert_eq!(m.values[1], ints(&[16, 32]));
    }
}
