use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{build_program, checksum, generate_random_trace, HarnessError, Toolchain};
use crate::analysis::AnalysisReport;
use crate::codegen::{generate, CodegenOptions, IoMode};
use crate::frontend::TypedSpec;
use crate::interpreter::evaluate;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub events: u64,
    pub seed: u64,
    pub lo: i32,
    pub hi: i32,
    pub parallel: bool,
    /// Also time the interpreter on the same inputs.
    pub interpret: bool,
    /// Runs per side; the median is reported.
    pub repetitions: usize,
    pub toolchain: Toolchain,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            events: 1_000_000,
            seed: 0,
            lo: 0,
            hi: 1000,
            parallel: false,
            interpret: true,
            repetitions: 3,
            toolchain: Toolchain::from_env(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub events: u64,
    pub firings: u64,
    pub checksum: u64,
    pub repetitions: usize,
    pub monitor_ns_per_event: f64,
    /// Largest peak resident set size over the monitor runs.
    pub monitor_maxrss_kb: u64,
    pub interpreter_ns_per_event: Option<f64>,
    /// Interpreter time per event over monitor time per event.
    pub speedup: Option<f64>,
    /// Firing count and checksum agree with the interpreter.
    pub agrees: Option<bool>,
}

/// A finished child process with its peak resident set size.
#[derive(Debug, Clone)]
pub struct Measured {
    pub code: Option<i32>,
    pub stdout: String,
    pub maxrss_kb: u64,
    pub wall: Duration,
}

/// Runs `exe` to completion and reports its peak memory as seen by `wait4`.
pub fn run_measured(exe: &Path, args: &[String]) -> Result<Measured, HarnessError> {
    let start = Instant::now();
    let mut child =
        Command::new(exe).args(args).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn()?;
    let mut stdout = String::new();
    child.stdout.take().unwrap().read_to_string(&mut stdout)?;
    let pid = child.id() as libc::pid_t;
    let mut status: libc::c_int = 0;
    // SAFETY: `rusage` is plain data that wait4 fills in; `pid` is our
    // unreaped child.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    if rc < 0 {
        return Err(std::io::Error::last_os_error().into());
    }
    let wall = start.elapsed();
    let code = if libc::WIFEXITED(status) { Some(libc::WEXITSTATUS(status)) } else { None };
    Ok(Measured { code, stdout, maxrss_kb: usage.ru_maxrss as u64, wall })
}

fn field(line: &str, key: &str) -> Option<u128> {
    line.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Builds the embedded-input monitor and measures it on `cfg.events` generated
/// events, optionally against the interpreter on the identical trace.
pub fn bench(spec: &TypedSpec, report: &AnalysisReport, cfg: &BenchConfig) -> Result<BenchResult, HarnessError> {
    if cfg.events == 0 {
        return Err(HarnessError::Config("benchmark length must be positive".into()));
    }
    if cfg.lo > cfg.hi {
        return Err(HarnessError::Config(format!("empty value range {}..={}", cfg.lo, cfg.hi)));
    }
    let opts = CodegenOptions { parallel: cfg.parallel, io_mode: IoMode::EmbeddedFunctions, ..Default::default() };
    let program = generate(spec, report, opts)?;
    let dir = tempfile::tempdir()?;
    let exe = build_program(&cfg.toolchain, &program, dir.path(), "bench_monitor")?;
    let args: Vec<String> = [
        ("--events", cfg.events.to_string()),
        ("--seed", cfg.seed.to_string()),
        ("--lo", cfg.lo.to_string()),
        ("--hi", cfg.hi.to_string()),
    ]
    .into_iter()
    .flat_map(|(k, v)| [k.to_string(), v])
    .collect();
    let reps = cfg.repetitions.max(1);
    let mut times = Vec::with_capacity(reps);
    let mut maxrss = 0;
    let mut summary = (0, 0);
    for _ in 0..reps {
        let m = run_measured(&exe, &args)?;
        if m.code != Some(0) {
            return Err(HarnessError::Monitor(format!("exit status {:?}", m.code)));
        }
        let line = m.stdout.lines().last().unwrap_or_default();
        let get =
            |k: &str| field(line, k).ok_or_else(|| HarnessError::Monitor(format!("unexpected summary line {line:?}")));
        summary = (get("firings")? as u64, get("checksum")? as u64);
        times.push(get("elapsed_ns")? as f64);
        maxrss = maxrss.max(m.maxrss_kb);
    }
    let events = cfg.events as f64;
    let monitor = (super::median(times) / events).max(f64::MIN_POSITIVE);

    let mut result = BenchResult {
        events: cfg.events,
        firings: summary.0,
        checksum: summary.1,
        repetitions: reps,
        monitor_ns_per_event: monitor,
        monitor_maxrss_kb: maxrss,
        interpreter_ns_per_event: None,
        speedup: None,
        agrees: None,
    };
    if cfg.interpret {
        let trace = generate_random_trace(spec, cfg.seed, cfg.events as usize, cfg.lo, cfg.hi);
        let mut times = Vec::with_capacity(reps);
        let mut agrees = true;
        for _ in 0..reps {
            let start = Instant::now();
            let model = evaluate(spec, &trace);
            times.push(start.elapsed().as_nanos() as f64);
            agrees &= match model {
                Ok(model) => model.firings.len() as u64 == summary.0 && checksum(&model.firings) == summary.1,
                Err(_) => false,
            };
        }
        let interp = super::median(times) / events;
        result.interpreter_ns_per_event = Some(interp);
        result.speedup = Some(interp / monitor);
        result.agrees = Some(agrees);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_fields() {
        let line = "events=10 firings=2 checksum=18446744073709551615 elapsed_ns=77";
        assert_eq!(field(line, "firings"), Some(2));
        assert_eq!(field(line, "checksum"), Some(u64::MAX as u128));
        assert_eq!(field(line, "elapsed_ns"), Some(77));
        assert_eq!(field(line, "missing"), None);
    }

    #[test]
    fn zero_length_rejected() {
        let spec = crate::frontend::compile_str("input x: Int32\ntrigger x > 3").unwrap();
        let report = crate::analysis::analyze(&spec, "").unwrap();
        let cfg = BenchConfig { events: 0, ..Default::default() };
        assert!(matches!(bench(&spec, &report, &cfg), Err(HarnessError::Config(_))));
    }
}
