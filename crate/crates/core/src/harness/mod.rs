//! Differential testing of generated monitors against the interpreter, and
//! throughput and memory benchmarks.

mod bench;
pub mod rng;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::AnalysisReport;
use crate::codegen::{generate, CodegenError, CodegenOptions, EmittedProgram};
use crate::frontend::TypedSpec;
use crate::interpreter::{
    evaluate, evaluate_with_faults, firings_to_text, model_to_csv, EvalError, EvalErrorKind, Trace, TraceError,
};

pub use bench::{bench, run_measured, BenchConfig, BenchResult, Measured};
pub use rng::{checksum, generate_dictionary_trace, generate_random_trace, mix, spec_dictionary, XorShift64Star};

/// Default command used to compile a generated monitor.
pub const DEFAULT_TOOLCHAIN: &str = "rustc --edition 2021 -C opt-level=3 -o {out} {src}";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Codegen(#[from] CodegenError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("monitor build failed:\n{0}")]
    Build(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Trace(String, TraceError),
    #[error("monitor failed: {0}")]
    Monitor(String),
}

/// A compiler command template with `{src}` and `{out}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toolchain {
    pub template: String,
}

impl Default for Toolchain {
    fn default() -> Self {
        Toolchain { template: DEFAULT_TOOLCHAIN.to_string() }
    }
}

impl Toolchain {
    /// The template from `LOLAC_TOOLCHAIN`, or the default.
    pub fn from_env() -> Toolchain {
        match std::env::var("LOLAC_TOOLCHAIN") {
            Ok(t) if !t.trim().is_empty() => Toolchain { template: t },
            _ => Toolchain::default(),
        }
    }

    /// Compiles `src` to the executable `out`.
    pub fn build(&self, src: &Path, out: &Path) -> Result<(), HarnessError> {
        let words: Vec<String> = self
            .template
            .split_whitespace()
            .map(|w| w.replace("{src}", &src.to_string_lossy()).replace("{out}", &out.to_string_lossy()))
            .collect();
        let (cmd, args) = words.split_first().ok_or_else(|| HarnessError::Config("empty toolchain".into()))?;
        let output = Command::new(cmd).args(args).stdin(Stdio::null()).output()?;
        if !output.status.success() {
            return Err(HarnessError::Build(String::from_utf8_lossy(&output.stderr).into_owned()));
        }
        Ok(())
    }
}

/// Writes `program` to `dir/name.rs` and compiles it to `dir/name`.
pub fn build_program(
    toolchain: &Toolchain,
    program: &EmittedProgram,
    dir: &Path,
    name: &str,
) -> Result<PathBuf, HarnessError> {
    let src = dir.join(format!("{name}.rs"));
    let exe = dir.join(name);
    std::fs::write(&src, &program.source)?;
    toolchain.build(&src, &exe)?;
    Ok(exe)
}

/// Where difftest traces come from.
#[derive(Debug, Clone)]
pub enum TraceSource {
    /// Seeded random traces. The first cases cover every length up to the
    /// prefix length; the rest have lengths drawn from `0..=max_len`.
    Random {
        count: usize,
        max_len: usize,
        lo: i32,
        hi: i32,
        /// Mix specification literals (and their neighbours) into integer inputs.
        dictionary: bool,
    },
    /// Trace CSV files.
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct DifftestConfig {
    pub source: TraceSource,
    pub seed: u64,
    /// Also test the parallel variant.
    pub parallel: bool,
    pub annotations: bool,
    pub toolchain: Toolchain,
    /// Parent of the temporary artifact directory; the system default if unset.
    pub work_dir: Option<PathBuf>,
    pub keep_artifacts: bool,
    /// Repetitions of the timing run.
    pub repetitions: usize,
}

impl Default for DifftestConfig {
    fn default() -> Self {
        DifftestConfig {
            source: TraceSource::Random { count: 100, max_len: 100, lo: -10, hi: 10, dictionary: true },
            seed: 0,
            parallel: true,
            annotations: false,
            toolchain: Toolchain::from_env(),
            work_dir: None,
            keep_artifacts: false,
            repetitions: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch,
    BuildFailure,
    RuntimeFault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Interpreter,
    Monitor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaultSite {
    pub stream: String,
    pub position: usize,
}

/// The earliest point where the monitor's output departs from the interpreter's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub position: Option<usize>,
    pub stream: Option<String>,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuntimeFault {
    pub side: Side,
    pub position: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub case: usize,
    pub variant: Variant,
    /// `seed=<n>` or the trace file.
    pub trace: String,
    pub length: usize,
    pub verdict: Verdict,
    /// The division-by-zero fault both sides are expected to report.
    pub expected_fault: Option<FaultSite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_fault: Option<RuntimeFault>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub events: usize,
    pub repetitions: usize,
    pub interpreter_ns_per_event: f64,
    pub monitor_ns_per_event: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifftestSummary {
    pub cases: usize,
    pub matches: usize,
    pub mismatches: usize,
    pub build_failures: usize,
    pub runtime_faults: usize,
    /// Cases whose expected outcome is a division-by-zero fault.
    pub faulting_cases: usize,
    /// Median over the repetitions on the longest trace; absent if no trace
    /// has events or no monitor was built.
    pub timing: Option<Timing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifftestReport {
    pub summary: DifftestSummary,
    pub cases: Vec<CaseResult>,
}

impl DifftestReport {
    pub fn all_match(&self) -> bool {
        self.summary.matches == self.summary.cases
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "cases={} match={} mismatch={} build_failure={} runtime_fault={} (expected faults: {})\n",
            s.cases, s.matches, s.mismatches, s.build_failures, s.runtime_faults, s.faulting_cases
        );
        if let Some(t) = &s.timing {
            out.push_str(&format!(
                "timing ({} events, median of {}): interpreter {:.1} ns/event, monitor {:.1} ns/event\n",
                t.events, t.repetitions, t.interpreter_ns_per_event, t.monitor_ns_per_event
            ));
        }
        if let Some(a) = &s.artifacts {
            out.push_str(&format!("artifacts kept in {a}\n"));
        }
        for c in self.cases.iter().filter(|c| c.verdict != Verdict::Match) {
            out.push_str(&format!("case {} ({:?}, {}, length {}): ", c.case, c.variant, c.trace, c.length));
            if let Some(d) = &c.divergence {
                let pos = d.position.map_or("?".to_string(), |p| p.to_string());
                let stream = d.stream.as_deref().unwrap_or("?");
                out.push_str(&format!(
                    "mismatch at position {pos}, stream {stream}: expected {:?}, got {:?}\n",
                    d.expected, d.actual
                ));
            } else if let Some(f) = &c.runtime_fault {
                out.push_str(&format!("runtime fault in {:?}: {}\n", f.side, f.message));
            } else if let Some(e) = &c.build_error {
                out.push_str("build failure\n");
                for line in e.lines() {
                    out.push_str(&format!("  {line}\n"));
                }
            } else {
                out.push_str(&format!("{:?}\n", c.verdict));
            }
        }
        out
    }
}

/// The fault a generated monitor reports: the first primary fault in
/// execution order, that is by round (position plus shift) and then by the
/// stream's place in the evaluation order.
pub fn expected_fault<'a>(report: &AnalysisReport, faults: &'a [EvalError]) -> Option<&'a EvalError> {
    let mut rank = vec![0; report.shifts.len()];
    for (i, s) in report.layers.total_order.iter().enumerate() {
        rank[s.0] = i;
    }
    faults
        .iter()
        .filter(|f| f.kind == EvalErrorKind::DivisionByZero)
        .min_by_key(|f| (f.position + report.shift(f.stream) as usize, rank[f.stream.0]))
}

fn fault_message(stream: &str, position: usize) -> String {
    format!("error: division by zero in stream `{stream}` at position {position}")
}

/// Stream and position of a monitor fault message.
fn parse_fault_message(line: &str) -> Option<(String, usize)> {
    let rest = line.strip_prefix("error: division by zero in stream `")?;
    let (stream, rest) = rest.rsplit_once("` at position ")?;
    Some((stream.to_string(), rest.trim().parse().ok()?))
}

/// The expected observable behavior of a monitor on one trace.
enum Expected {
    Output { firings: String, dump: String },
    Fault(FaultSite),
}

fn expected(spec: &TypedSpec, report: &AnalysisReport, trace: &Trace) -> Result<Expected, RuntimeFault> {
    let stuck =
        |e: EvalError| RuntimeFault { side: Side::Interpreter, position: Some(e.position), message: e.to_string() };
    let result = evaluate_with_faults(spec, trace).map_err(stuck)?;
    if let Some(f) = expected_fault(report, &result.faults) {
        return Ok(Expected::Fault(FaultSite { stream: f.stream_name.clone(), position: f.position }));
    }
    let model = evaluate(spec, trace).map_err(stuck)?;
    Ok(Expected::Output { firings: firings_to_text(&model.firings), dump: model_to_csv(spec, &model) })
}

fn sorted_lines(text: &str) -> String {
    let mut lines: Vec<(usize, usize, &str)> = text
        .lines()
        .map(|l| {
            let mut it = l.splitn(3, ',');
            let p = it.next().and_then(|x| x.parse().ok()).unwrap_or(usize::MAX);
            let i = it.next().and_then(|x| x.parse().ok()).unwrap_or(usize::MAX);
            (p, i, l)
        })
        .collect();
    lines.sort();
    lines.iter().map(|(_, _, l)| format!("{l}\n")).collect()
}

/// The first differing cell of two stream dumps.
fn dump_divergence(expected: &str, actual: &str) -> Option<Divergence> {
    let e: Vec<&str> = expected.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    let header: Vec<&str> = e.first().map(|h| h.split(',').collect()).unwrap_or_default();
    for i in 0..e.len().max(a.len()) {
        let (x, y) = (e.get(i).copied(), a.get(i).copied());
        if x == y {
            continue;
        }
        let line = x.or(y).unwrap_or_default();
        if i == 0 {
            return Some(Divergence {
                position: None,
                stream: None,
                expected: x.unwrap_or("<end>").into(),
                actual: y.unwrap_or("<end>").into(),
            });
        }
        if let Some(rest) = line.strip_prefix("# trigger,") {
            let position = rest.split(',').next().and_then(|p| p.parse().ok());
            return Some(Divergence {
                position,
                stream: None,
                expected: x.unwrap_or("<end>").into(),
                actual: y.unwrap_or("<end>").into(),
            });
        }
        let xs: Vec<&str> = x.map(|l| l.split(',').collect()).unwrap_or_default();
        let ys: Vec<&str> = y.map(|l| l.split(',').collect()).unwrap_or_default();
        let col = (0..xs.len().max(ys.len())).find(|&c| xs.get(c) != ys.get(c)).unwrap_or(0);
        return Some(Divergence {
            position: Some(i - 1),
            stream: header.get(col).map(|s| s.to_string()),
            expected: xs.get(col).copied().unwrap_or("<end>").into(),
            actual: ys.get(col).copied().unwrap_or("<end>").into(),
        });
    }
    None
}

fn firing_divergence(expected: &str, actual: &str) -> Option<Divergence> {
    let (e, a): (Vec<&str>, Vec<&str>) = (expected.lines().collect(), actual.lines().collect());
    (0..e.len().max(a.len())).find(|&i| e.get(i) != a.get(i)).map(|i| {
        let line = e.get(i).or(a.get(i)).copied().unwrap_or_default();
        Divergence {
            position: line.split(',').next().and_then(|p| p.parse().ok()),
            stream: None,
            expected: e.get(i).copied().unwrap_or("<no firing>").into(),
            actual: a.get(i).copied().unwrap_or("<no firing>").into(),
        }
    })
}

struct RunOutput {
    code: Option<i32>,
    stdout: String,
    stderr: String,
    dump: Option<String>,
    elapsed: Duration,
}

fn run_monitor(exe: &Path, input: &str, dump: Option<&Path>) -> Result<RunOutput, HarnessError> {
    let start = Instant::now();
    let mut cmd = Command::new(exe);
    if let Some(d) = dump {
        cmd.arg("--streams-out").arg(d);
    }
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    let mut stdin = child.stdin.take().unwrap();
    let data = input.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(data.as_bytes());
    });
    let output = child.wait_with_output()?;
    let _ = writer.join();
    let elapsed = start.elapsed();
    let dump_text = dump.and_then(|d| {
        let text = std::fs::read_to_string(d).ok();
        let _ = std::fs::remove_file(d);
        text
    });
    Ok(RunOutput {
        code: output.status.code(),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        dump: dump_text,
        elapsed,
    })
}

fn judge(expected: &Expected, out: &RunOutput, result: &mut CaseResult) {
    let stderr = out.stderr.trim().to_string();
    let monitor_fault = out.stderr.lines().find_map(parse_fault_message);
    let mismatch = |result: &mut CaseResult, d: Divergence| {
        result.verdict = Verdict::Mismatch;
        result.divergence = Some(d);
    };
    match (expected, out.code) {
        (_, None) | (_, Some(3)) => {
            result.verdict = Verdict::RuntimeFault;
            result.runtime_fault = Some(RuntimeFault {
                side: Side::Monitor,
                position: None,
                message: format!("exit status {:?}: {stderr}", out.code),
            });
        }
        (Expected::Output { firings, dump }, Some(0)) => {
            let actual = sorted_lines(&out.stdout);
            let d = match &out.dump {
                Some(d) => dump_divergence(dump, d),
                None => Some(Divergence {
                    position: None,
                    stream: None,
                    expected: "stream dump".into(),
                    actual: "none written".into(),
                }),
            };
            match d.or_else(|| firing_divergence(firings, &actual)) {
                Some(d) => mismatch(result, d),
                None => result.verdict = Verdict::Match,
            }
        }
        (Expected::Fault(site), Some(2)) if monitor_fault.as_ref() == Some(&(site.stream.clone(), site.position)) => {
            result.verdict = Verdict::Match;
        }
        (Expected::Fault(site), _) => mismatch(
            result,
            Divergence {
                position: Some(site.position),
                stream: Some(site.stream.clone()),
                expected: fault_message(&site.stream, site.position),
                actual: if stderr.is_empty() { format!("exit status {:?}", out.code) } else { stderr },
            },
        ),
        (Expected::Output { .. }, Some(c)) => mismatch(
            result,
            Divergence {
                position: monitor_fault.as_ref().map(|f| f.1),
                stream: monitor_fault.map(|f| f.0),
                expected: "no fault".into(),
                actual: format!("exit status {c}: {stderr}"),
            },
        ),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Seed and length of random case `i`.
fn case_shape(seed: u64, max_len: usize, preflen: usize, i: usize) -> (u64, usize) {
    let seed = seed.wrapping_add(i as u64);
    let len = if i <= preflen.min(max_len) {
        i
    } else {
        let mut r = XorShift64Star::new(seed ^ 0x5EED);
        (r.next_u64() % (max_len as u64 + 1)) as usize
    };
    (seed, len)
}

/// Materializes the traces of a difftest run with their labels.
fn traces(
    spec: &TypedSpec,
    report: &AnalysisReport,
    cfg: &DifftestConfig,
) -> Result<Vec<(String, Trace)>, HarnessError> {
    match &cfg.source {
        TraceSource::Random { count, max_len, lo, hi, dictionary } => {
            if lo > hi {
                return Err(HarnessError::Config(format!("empty value range {lo}..={hi}")));
            }
            let dict = if *dictionary { spec_dictionary(spec) } else { Vec::new() };
            Ok((0..*count)
                .map(|i| {
                    let (seed, len) = case_shape(cfg.seed, *max_len, report.preflen as usize, i);
                    (format!("seed={seed}"), generate_dictionary_trace(spec, seed, len, *lo, *hi, &dict))
                })
                .collect())
        }
        TraceSource::Files(paths) => paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p)?;
                let trace =
                    Trace::from_csv(spec, &text).map_err(|e| HarnessError::Trace(p.display().to_string(), e))?;
                Ok((p.display().to_string(), trace))
            })
            .collect(),
    }
}

/// Compiles the monitor (and its parallel variant) and compares it with the
/// interpreter on every configured trace.
pub fn run_difftest(
    spec: &TypedSpec,
    report: &AnalysisReport,
    cfg: &DifftestConfig,
) -> Result<DifftestReport, HarnessError> {
    let traces = traces(spec, report, cfg)?;
    let mut variants = vec![Variant::Sequential];
    if cfg.parallel {
        variants.push(Variant::Parallel);
    }
    let mut builder = tempfile::Builder::new();
    builder.prefix("lolac-difftest-");
    let mut dir = match &cfg.work_dir {
        Some(w) => {
            std::fs::create_dir_all(w)?;
            builder.tempdir_in(w)?
        }
        None => builder.tempdir()?,
    };
    if cfg.keep_artifacts {
        dir.disable_cleanup(true);
    }

    let built: Vec<(Variant, Result<PathBuf, String>)> = variants
        .par_iter()
        .map(|&v| {
            let opts = CodegenOptions {
                parallel: v == Variant::Parallel,
                annotations: cfg.annotations,
                emit_streams: true,
                ..Default::default()
            };
            let sub = dir.path().join(format!("{v:?}").to_lowercase());
            let exe = std::fs::create_dir_all(&sub)
                .map_err(HarnessError::from)
                .and_then(|_| Ok(generate(spec, report, opts)?))
                .and_then(|p| build_program(&cfg.toolchain, &p, &sub, "monitor"))
                .map_err(|e| e.to_string());
            (v, exe)
        })
        .collect();

    let jobs: Vec<(usize, Variant, &Result<PathBuf, String>)> =
        (0..traces.len()).flat_map(|i| built.iter().map(move |(v, exe)| (i, *v, exe))).collect();
    let cases: Vec<CaseResult> = jobs
        .into_par_iter()
        .map(|(i, variant, exe)| {
            let (label, trace) = &traces[i];
            let mut result = CaseResult {
                case: i,
                variant,
                trace: label.clone(),
                length: trace.len,
                verdict: Verdict::BuildFailure,
                expected_fault: None,
                divergence: None,
                runtime_fault: None,
                build_error: None,
            };
            let exe = match exe {
                Ok(exe) => exe,
                Err(e) => {
                    result.build_error = Some(e.clone());
                    return result;
                }
            };
            let exp = match expected(spec, report, trace) {
                Ok(e) => e,
                Err(f) => {
                    result.verdict = Verdict::RuntimeFault;
                    result.runtime_fault = Some(f);
                    return result;
                }
            };
            if let Expected::Fault(site) = &exp {
                result.expected_fault = Some(site.clone());
            }
            let dump = exe.with_file_name(format!("case_{i}.csv"));
            match run_monitor(exe, &trace.to_csv(spec), Some(&dump)) {
                Ok(out) => judge(&exp, &out, &mut result),
                Err(e) => {
                    result.verdict = Verdict::RuntimeFault;
                    result.runtime_fault =
                        Some(RuntimeFault { side: Side::Monitor, position: None, message: e.to_string() });
                }
            }
            result
        })
        .collect();

    let timing = match (traces.iter().max_by_key(|(_, t)| t.len), &built[0].1) {
        (Some((_, t)), Ok(exe)) if t.len > 0 => Some(time_trace(spec, exe, t, cfg.repetitions.max(1))?),
        _ => None,
    };

    let count = |v: Verdict| cases.iter().filter(|c| c.verdict == v).count();
    let summary = DifftestSummary {
        cases: cases.len(),
        matches: count(Verdict::Match),
        mismatches: count(Verdict::Mismatch),
        build_failures: count(Verdict::BuildFailure),
        runtime_faults: count(Verdict::RuntimeFault),
        faulting_cases: cases.iter().filter(|c| c.expected_fault.is_some()).count(),
        timing,
        artifacts: cfg.keep_artifacts.then(|| dir.path().display().to_string()),
    };
    Ok(DifftestReport { summary, cases })
}

/// Median per-event time of the interpreter and of the sequential monitor
/// process (including its start-up) on `trace`.
fn time_trace(spec: &TypedSpec, exe: &Path, trace: &Trace, repetitions: usize) -> Result<Timing, HarnessError> {
    let csv = trace.to_csv(spec);
    let mut interp = Vec::with_capacity(repetitions);
    let mut monitor = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let _ = evaluate(spec, trace);
        interp.push(start.elapsed().as_nanos() as f64);
        monitor.push(run_monitor(exe, &csv, None)?.elapsed.as_nanos() as f64);
    }
    let n = trace.len as f64;
    Ok(Timing {
        events: trace.len,
        repetitions,
        interpreter_ns_per_event: median(interp) / n,
        monitor_ns_per_event: median(monitor) / n,
    })
}
