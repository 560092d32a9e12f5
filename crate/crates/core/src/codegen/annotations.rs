//! Verification annotations: purity markers, getter contracts, ghost memory,
//! loop-entry assertions, unrolled loop invariants and inline assertions.

use std::fmt::Write;

use super::expr::{literal, rust_type, translate};
use super::{Ctx, Phase};
use crate::analysis::AnalysisReport;
use crate::frontend::{StreamId, TExprKind, TypedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    Purity,
    GetterContract,
    GhostMemory,
    GhostFunction,
    LoopEntry,
    LoopInvariant,
    InlineAssertion,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Purity => "purity",
            BlockKind::GetterContract => "contract",
            BlockKind::GhostMemory => "ghost-memory",
            BlockKind::GhostFunction => "ghost-function",
            BlockKind::LoopEntry => "loop-entry",
            BlockKind::LoopInvariant => "loop-invariant",
            BlockKind::InlineAssertion => "inline-assertion",
        }
    }
}

/// Text inserted at an anchor point of the emitted program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationBlock {
    pub kind: BlockKind,
    /// The item the block is attached to, such as `eval_loop_tooLow` or `get_altitude`.
    pub anchor: String,
    pub lines: Vec<String>,
}

/// One conjunct of the loop invariant for stream `s`:
/// `iter >= guard ==> m.get_s(index) == gm.s[iter - lag]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conjunct {
    pub stream: StreamId,
    pub index: u32,
    pub lag: u32,
    pub guard: Option<u32>,
}

/// The loop invariant unrolled over every buffer slot: slot `i` of `s` holds
/// position `iter - 1 - shift(s) - i`, which exists once `iter` exceeds
/// `shift(s) + i`. Conjuncts that always hold at loop entry carry no guard.
pub fn invariant_conjuncts(spec: &TypedSpec, report: &AnalysisReport) -> Vec<Conjunct> {
    let mut out = Vec::new();
    for id in spec.ids() {
        let sh = report.shift(id);
        for i in 0..report.slots(id) {
            let lag = 1 + sh + i;
            let guard = if i + sh >= report.preflen { Some(lag) } else { None };
            out.push(Conjunct { stream: id, index: i, lag, guard });
        }
    }
    out
}

pub(super) fn conjunct_text(ctx: &Ctx, c: &Conjunct) -> String {
    let s = &ctx.names[c.stream.0];
    let body = format!("m.get_{s}({}) == gm.{s}[iter - {}]", c.index, c.lag);
    match c.guard {
        Some(g) => format!("iter >= {g} ==> {body}"),
        None => body,
    }
}

/// The ghost evaluation of stream `s` at position `p`: its defining expression
/// over ghost values, with out-of-range positions taking the default.
pub(super) fn ghost_function(ctx: &Ctx, spec: &TypedSpec, s: StreamId) -> Vec<String> {
    let stream = spec.stream(s);
    let expr = stream.expr.as_ref().unwrap();
    let body = translate(expr, &mut |_, e| {
        let TExprKind::Access { stream: s2, offset, default } = &e.kind else { unreachable!() };
        let n2 = &ctx.names[s2.0];
        match default {
            Some(d) => format!("gget(&gm.{n2}, p + ({offset}), {})", literal(*d)),
            None => format!("gm.{n2}[p as usize]"),
        }
    });
    let ty = rust_type(stream.ty);
    let name = &ctx.names[s.0];
    if ctx.fallible[s.0] {
        vec![
            format!("fn ghost_{name}(gm: &GhostMemory, p: usize) -> Result<{ty}, Fault> {{"),
            "    let p = p as i64;".into(),
            format!("    Ok({body})"),
            "}".into(),
        ]
    } else {
        vec![
            format!("fn ghost_{name}(gm: &GhostMemory, p: usize) -> {ty} {{"),
            "    let p = p as i64;".into(),
            format!("    {body}"),
            "}".into(),
        ]
    }
}

pub(super) fn inline_assertion(ctx: &Ctx, report: &AnalysisReport, s: StreamId) -> String {
    let n = &ctx.names[s.0];
    let sh = report.shift(s);
    if ctx.fallible[s.0] {
        format!("assert!(ghost_{n}(gm, iter - {sh}) == Ok(v_{n}));")
    } else {
        format!("assert!(v_{n} == ghost_{n}(gm, iter - {sh}));")
    }
}

pub(super) fn build(spec: &TypedSpec, report: &AnalysisReport, ctx: &Ctx) -> Vec<AnnotationBlock> {
    let mut blocks = Vec::new();
    let block = |kind, anchor: String, lines: Vec<String>| AnnotationBlock { kind, anchor, lines };

    for (s, _) in spec.evaluated() {
        for phase in ctx.phases_of(report, s) {
            blocks.push(block(BlockKind::Purity, ctx.eval_fn(phase, s), vec!["// #[pure]".into()]));
        }
    }

    for id in spec.ids() {
        let n = &ctx.names[id.0];
        let slots = report.slots(id);
        let mut lines = vec![format!("// #[requires=\"index < {slots}\"]")];
        for i in 0..slots {
            lines.push(format!("// #[ensures=\"index == {i} ==> result == self.{n}[{i}]\"]"));
        }
        blocks.push(block(BlockKind::GetterContract, format!("get_{n}"), lines));
    }

    let mut ghost = vec!["struct GhostMemory {".to_string()];
    for id in spec.ids() {
        ghost.push(format!("    {}: Vec<{}>,", ctx.names[id.0], rust_type(spec.stream(id).ty)));
    }
    ghost.push("}".into());
    blocks.push(block(BlockKind::GhostMemory, "GhostMemory".into(), ghost));

    for (s, _) in spec.evaluated() {
        blocks.push(block(BlockKind::GhostFunction, format!("ghost_{}", ctx.names[s.0]), ghost_function(ctx, spec, s)));
    }

    let mut entry = vec![format!("assert!(iter == {});", report.preflen)];
    for id in spec.ids() {
        entry.push(format!("assert!(gm.{}.len() == {});", ctx.names[id.0], report.preflen - report.shift(id)));
    }
    blocks.push(block(BlockKind::LoopEntry, "monitor loop".into(), entry));

    let conjuncts = invariant_conjuncts(spec, report);
    for id in spec.ids() {
        let mut lines = Vec::new();
        for c in conjuncts.iter().filter(|c| c.stream == id) {
            lines.push(format!("// #[invariant=\"{}\"]", conjunct_text(ctx, c)));
        }
        blocks.push(block(BlockKind::LoopInvariant, ctx.names[id.0].clone(), lines));
    }

    for (s, _) in spec.evaluated() {
        for phase in ctx.phases_of(report, s) {
            blocks.push(block(
                BlockKind::InlineAssertion,
                ctx.eval_fn(phase, s),
                vec![inline_assertion(ctx, report, s)],
            ));
        }
    }
    blocks
}

/// Plain-text rendering used for golden comparisons.
pub fn render_blocks(blocks: &[AnnotationBlock]) -> String {
    let mut out = String::new();
    for b in blocks {
        let _ = writeln!(out, "== {} {}", b.kind.name(), b.anchor);
        for l in &b.lines {
            let _ = writeln!(out, "{l}");
        }
    }
    out
}

impl Ctx {
    /// Evaluation variants emitted for `s`, in program order.
    pub(super) fn phases_of(&self, report: &AnalysisReport, s: StreamId) -> Vec<Phase> {
        let sh = report.shift(s);
        let mut phases: Vec<Phase> = (0..report.preflen).filter(|&t| t >= sh).map(Phase::Prefix).collect();
        phases.push(Phase::Loop);
        phases.extend((1..=report.postlen).filter(|&j| sh >= j).map(Phase::Postfix));
        if report.preflen > 0 {
            phases.push(Phase::Dynamic);
        }
        phases
    }
}
