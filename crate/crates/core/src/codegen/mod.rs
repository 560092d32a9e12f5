//! Emits a single-file Rust monitor: prelude, execution prefix, monitor loop
//! and execution postfix, with accesses resolved statically per phase.

pub mod annotations;
mod emit;
pub mod expr;
pub mod plan;

use std::fmt::Write;

use thiserror::Error;

use crate::analysis::AnalysisReport;
use crate::frontend::{StreamId, TypedSpec};
pub use annotations::{invariant_conjuncts, render_blocks, AnnotationBlock, BlockKind, Conjunct};
pub use plan::{plan_accesses, AccessPlan, Resolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IoMode {
    /// Trace CSV on standard input, firings on standard output.
    #[default]
    CsvStdin,
    /// Inputs drawn from the built-in generator; prints a summary line.
    EmbeddedFunctions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CodegenOptions {
    pub parallel: bool,
    pub annotations: bool,
    pub io_mode: IoMode,
    pub emit_streams: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedProgram {
    pub source: String,
    pub preflen: u32,
    pub postlen: u32,
    /// `(stream name, ring capacity)` in stream order.
    pub slots: Vec<(String, u32)>,
    /// Stream names per layer.
    pub layers: Vec<Vec<String>>,
    pub annotation_blocks: usize,
    pub options: CodegenOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("unsupported specification: {0}")]
    UnsupportedSpec(String),
}

/// Largest number of phase-specialized rounds (prefix plus postfix) emitted.
pub const MAX_SPECIALIZED_ROUNDS: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Prefix(u32),
    Loop,
    Postfix(u32),
    Dynamic,
}

/// Naming and per-stream facts shared by the emitters.
pub(crate) struct Ctx {
    pub names: Vec<String>,
    /// The stream's evaluation may divide by zero.
    pub fallible: Vec<bool>,
}

impl Ctx {
    pub fn new(spec: &TypedSpec) -> Ctx {
        let raw: Vec<String> = spec.streams.iter().map(|s| s.name.clone()).collect();
        Ctx {
            names: expr::mangle(&raw),
            fallible: spec.streams.iter().map(|s| s.expr.as_ref().is_some_and(|e| e.contains_division())).collect(),
        }
    }

    pub fn eval_fn(&self, phase: Phase, s: StreamId) -> String {
        let n = &self.names[s.0];
        match phase {
            Phase::Prefix(t) => format!("eval_pre{t}_{n}"),
            Phase::Loop => format!("eval_loop_{n}"),
            Phase::Postfix(j) => format!("eval_post{j}_{n}"),
            Phase::Dynamic => format!("eval_dyn_{n}"),
        }
    }
}

/// Annotation blocks for the program, in emission order.
pub fn emit_annotations(spec: &TypedSpec, report: &AnalysisReport) -> Vec<AnnotationBlock> {
    annotations::build(spec, report, &Ctx::new(spec))
}

pub fn generate(
    spec: &TypedSpec,
    report: &AnalysisReport,
    options: CodegenOptions,
) -> Result<EmittedProgram, CodegenError> {
    if let Some(l) = report.lints.iter().find(|l| l.severity == crate::analysis::Severity::Error) {
        return Err(CodegenError::UnsupportedSpec(l.message.clone()));
    }
    if report.preflen + report.postlen > MAX_SPECIALIZED_ROUNDS {
        return Err(CodegenError::UnsupportedSpec(format!(
            "{} prefix and {} postfix rounds exceed the limit of {MAX_SPECIALIZED_ROUNDS}",
            report.preflen, report.postlen
        )));
    }
    let ctx = Ctx::new(spec);
    let blocks = if options.annotations { annotations::build(spec, report, &ctx) } else { Vec::new() };
    let source = emit::program(spec, report, &ctx, options, &blocks);
    Ok(EmittedProgram {
        source,
        preflen: report.preflen,
        postlen: report.postlen,
        slots: spec.ids().map(|id| (spec.stream(id).name.clone(), report.slots(id))).collect(),
        layers: report
            .layers
            .schedule()
            .iter()
            .map(|l| l.iter().map(|id| spec.stream(*id).name.clone()).collect())
            .collect(),
        annotation_blocks: blocks.len(),
        options,
    })
}

/// Human-readable summary of a generated monitor.
pub fn render_report(program: &EmittedProgram) -> String {
    if program.slots.is_empty() {
        return "no streams; trivial monitor\n".to_string();
    }
    let mut out = String::new();
    let _ = write!(out, "prefix={} loop postfix={}; memory: ", program.preflen, program.postlen);
    let mem: Vec<String> = program.slots.iter().map(|(n, k)| format!("{n}×{k}")).collect();
    let _ = writeln!(out, "{}", mem.join(", "));
    let _ = writeln!(out, "layers: {}", program.layers.len());
    for (i, l) in program.layers.iter().enumerate() {
        let _ = writeln!(out, "  {}: {}", i + 1, l.join(", "));
    }
    let mode = if program.options.parallel { "parallel" } else { "sequential" };
    let _ = writeln!(out, "evaluation: {mode}");
    let _ = writeln!(out, "annotation blocks: {}", program.annotation_blocks);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::frontend::compile_str;

    fn program(src: &str, options: CodegenOptions) -> EmittedProgram {
        let spec = compile_str(src).unwrap();
        let report = analyze(&spec, src).unwrap();
        generate(&spec, &report, options).unwrap()
    }

    #[test]
    fn altitude_structure() {
        let p = program(include_str!("../../corpus/altitude.lola"), CodegenOptions::default());
        assert_eq!((p.preflen, p.postlen), (2, 1));
        assert!(p.source.contains("altitude: Ring<i32, 3>,"));
        assert!(p.source.contains("tooLow: Ring<bool, 1>,"));
        assert_eq!(p.source.matches("// prefix iteration").count(), 2);
        assert_eq!(p.source.matches("fn round_post").count(), 1);
        assert!(!p.source.contains("Vec<"));
        assert_eq!(
            render_report(&p).lines().next().unwrap(),
            "prefix=2 loop postfix=1; memory: altitude×3, tooLow×1, tooHigh×1, trigger_0×1, trigger_1×1"
        );
    }

    #[test]
    fn identity_is_loop_only() {
        let p = program("input i: Int32\noutput o := i\ntrigger o > 3", CodegenOptions::default());
        assert_eq!((p.preflen, p.postlen), (0, 0));
        assert!(!p.source.contains("// prefix iteration"));
        assert!(!p.source.contains("fn round_post"));
        assert!(!p.source.contains("fn epilogue"));
    }

    #[test]
    fn network_parallel_schedule() {
        let opts = CodegenOptions { parallel: true, ..Default::default() };
        let p = program(include_str!("../../corpus/network.lola"), opts);
        assert_eq!(p.layers.len(), 3);
        assert_eq!(p.layers[0], ["count", "received", "opened", "closed"]);
        assert_eq!(p.layers[1], ["receiver", "workload", "trigger_2"]);
        assert_eq!(p.layers[2], ["trigger_0", "trigger_1"]);
        let lp = p.source.split("fn round_loop").nth(1).unwrap().split("\n}\n").next().unwrap();
        assert_eq!(lp.matches("std::thread::scope").count(), 3);
        assert_eq!(lp.matches("write_layer_").count(), 3);
    }

    #[test]
    fn empty_spec_report() {
        let p = program("", CodegenOptions::default());
        assert_eq!(render_report(&p), "no streams; trivial monitor\n");
    }

    #[test]
    fn literal_zero_division_is_unsupported() {
        let src = "input x: Int32\noutput o := x / 0";
        let spec = compile_str(src).unwrap();
        let report = analyze(&spec, src).unwrap();
        assert!(generate(&spec, &report, CodegenOptions::default()).is_err());
    }

    #[test]
    fn annotation_blocks_for_altitude() {
        let spec = compile_str(include_str!("../../corpus/altitude.lola")).unwrap();
        let report = analyze(&spec, "").unwrap();
        let blocks = emit_annotations(&spec, &report);
        let inv = blocks.iter().find(|b| b.kind == BlockKind::LoopInvariant && b.anchor == "altitude").unwrap();
        assert_eq!(inv.lines.len(), 3);
        assert_eq!(inv.lines[0], "// #[invariant=\"m.get_altitude(0) == gm.altitude[iter - 1]\"]");
        assert_eq!(inv.lines[2], "// #[invariant=\"iter >= 3 ==> m.get_altitude(2) == gm.altitude[iter - 3]\"]");
        let inv = blocks.iter().find(|b| b.kind == BlockKind::LoopInvariant && b.anchor == "tooLow").unwrap();
        assert_eq!(inv.lines, ["// #[invariant=\"m.get_tooLow(0) == gm.tooLow[iter - 2]\"]"]);
        let get = blocks.iter().find(|b| b.anchor == "get_altitude").unwrap();
        assert_eq!(get.lines[0], "// #[requires=\"index < 3\"]");
        assert_eq!(get.lines.len(), 4);
        assert_eq!(blocks.iter().filter(|b| b.kind == BlockKind::GetterContract).count(), 5);
    }
}
