//! The `lolac` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{analyze, AnalysisError, AnalysisReport, Lint, Severity};
use crate::codegen::{generate, render_report, CodegenOptions, IoMode};
use crate::diagnostics::{render_error, render_warning};
use crate::frontend::{compile_str, TypedSpec};
use crate::harness::{bench, run_difftest, BenchConfig, DifftestConfig, HarnessError, Toolchain, TraceSource};
use crate::interpreter::{evaluate, firings_to_text, model_to_csv, Trace};

pub const EXIT_SPEC_ERROR: u8 = 1;
pub const EXIT_RUNTIME_FAULT: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "lolac", version, about = "Compile Lola specifications to constant-memory monitors")]
pub struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Suppress informational output and warnings.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print shifts, layers and memory requirements.
    Analyze { spec: PathBuf },
    /// Check efficient monitorability and report lints.
    Check { spec: PathBuf },
    /// Emit a monitor program.
    Compile(CompileArgs),
    /// Evaluate a trace with the reference interpreter.
    Interpret {
        spec: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Write every output value per position here.
        #[arg(long)]
        streams_out: Option<PathBuf>,
    },
    /// Compare the compiled monitor with the interpreter.
    Difftest(DifftestArgs),
    /// Time the compiled monitor against the interpreter.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    pub spec: PathBuf,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
    /// Evaluate the streams of a layer concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Emit verification annotations and ghost memory.
    #[arg(long)]
    pub annotations: bool,
    /// Support `--streams-out <path>` in the monitor.
    #[arg(long)]
    pub emit_streams: bool,
    /// Generate inputs inside the monitor instead of reading CSV.
    #[arg(long)]
    pub embedded: bool,
}

#[derive(Debug, Args)]
pub struct DifftestArgs {
    pub spec: PathBuf,
    /// Directory of trace CSV files to use instead of random traces.
    #[arg(long, conflicts_with_all = ["random", "max_len"])]
    pub traces: Option<PathBuf>,
    /// Number of random traces.
    #[arg(long, default_value_t = 100)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_len: usize,
    #[arg(long, default_value_t = -10, allow_negative_numbers = true)]
    pub lo: i32,
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    pub hi: i32,
    /// Draw integers only from the value range, never from specification literals.
    #[arg(long)]
    pub no_dictionary: bool,
    /// Also test the parallel monitor.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub annotations: bool,
    /// Directory for build artifacts.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    #[arg(long)]
    pub keep_artifacts: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub events: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub lo: i32,
    #[arg(long, default_value_t = 1000, allow_negative_numbers = true)]
    pub hi: i32,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long)]
    pub parallel: bool,
    /// Only run the monitor.
    #[arg(long)]
    pub no_interpreter: bool,
}

/// A command failure: exit code plus diagnostic lines for standard error.
struct Failure(u8, String);

type Outcome = Result<(), Failure>;

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_INTERNAL, format!("error: {e}"))
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::Trace(..) => Failure(EXIT_SPEC_ERROR, format!("error: {e}")),
        e => internal(e),
    }
}

struct Loaded {
    file: String,
    source: String,
    spec: TypedSpec,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let file = path.display().to_string();
    let source = std::fs::read_to_string(path).map_err(|e| internal(format!("cannot read {file}: {e}")))?;
    let spec = compile_str(&source).map_err(|e| Failure(EXIT_SPEC_ERROR, render_error(&file, &e)))?;
    Ok(Loaded { file, source, spec })
}

fn ill_formed(file: &str, e: &AnalysisError) -> Failure {
    Failure(EXIT_SPEC_ERROR, format!("{file}: error: {e}"))
}

fn load_analyzed(path: &Path) -> Result<(Loaded, AnalysisReport), Failure> {
    let l = load(path)?;
    let report = analyze(&l.spec, &l.source).map_err(|e| ill_formed(&l.file, &e))?;
    Ok((l, report))
}

fn print_lints(cli: &Cli, file: &str, lints: &[Lint]) {
    if cli.quiet {
        return;
    }
    for l in lints {
        match l.severity {
            Severity::Warning => eprintln!("{} [{}]", render_warning(file, l.span, &l.message), l.kind.code()),
            Severity::Error => {
                eprintln!("{file}:{}:{}: error: {} [{}]", l.span.line, l.span.column, l.message, l.kind.code())
            }
        }
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn cmd_analyze(cli: &Cli, spec: &Path) -> Outcome {
    let (l, report) = load_analyzed(spec)?;
    if cli.json {
        print_json(&report.to_json(&l.spec));
    } else {
        print!("{}", report.to_table(&l.spec));
    }
    Ok(())
}

fn cmd_check(cli: &Cli, spec: &Path) -> Outcome {
    let l = load(spec)?;
    match analyze(&l.spec, &l.source) {
        Ok(report) => {
            let errors = report.has_errors();
            if cli.json {
                print_json(&json!({ "ok": !errors, "errors": [], "lints": report.lints }));
            } else if !errors && !cli.quiet {
                println!("ok: efficiently monitorable");
            }
            print_lints(cli, &l.file, &report.lints);
            if errors {
                return Err(Failure(EXIT_SPEC_ERROR, format!("{}: error: specification has errors", l.file)));
            }
            Ok(())
        }
        Err(e) => {
            if cli.json {
                let AnalysisError::IllFormed { kind, witness, verdict } = &e;
                let weight = verdict.errors.first().map(|w| w.weight());
                let error = json!({ "kind": kind.to_string(), "witness": witness, "weight": weight });
                print_json(&json!({ "ok": false, "errors": [error], "lints": [] }));
            }
            Err(ill_formed(&l.file, &e))
        }
    }
}

fn cmd_compile(cli: &Cli, a: &CompileArgs) -> Outcome {
    let (l, report) = load_analyzed(&a.spec)?;
    print_lints(cli, &l.file, &report.lints);
    let options = CodegenOptions {
        parallel: a.parallel,
        annotations: a.annotations,
        io_mode: if a.embedded { IoMode::EmbeddedFunctions } else { IoMode::CsvStdin },
        emit_streams: a.emit_streams,
    };
    let program =
        generate(&l.spec, &report, options).map_err(|e| Failure(EXIT_SPEC_ERROR, format!("{}: error: {e}", l.file)))?;
    std::fs::write(&a.output, &program.source)
        .map_err(|e| internal(format!("cannot write {}: {e}", a.output.display())))?;
    if cli.json {
        print_json(&json!({
            "output": a.output.display().to_string(),
            "preflen": program.preflen,
            "postlen": program.postlen,
            "slots": program.slots.iter().map(|(n, k)| json!({ "name": n, "slots": k })).collect::<Vec<_>>(),
            "layers": program.layers,
            "annotation_blocks": program.annotation_blocks,
            "parallel": a.parallel,
        }));
    } else if !cli.quiet {
        print!("{}", render_report(&program));
    }
    Ok(())
}

fn cmd_interpret(cli: &Cli, spec: &Path, trace: &Path, streams_out: Option<&Path>) -> Outcome {
    let l = load(spec)?;
    analyze(&l.spec, &l.source).map_err(|e| ill_formed(&l.file, &e))?;
    let text = std::fs::read_to_string(trace).map_err(|e| internal(format!("cannot read {}: {e}", trace.display())))?;
    let trace = Trace::from_csv(&l.spec, &text)
        .map_err(|e| Failure(EXIT_SPEC_ERROR, format!("{}: error: {e}", trace.display())))?;
    let model = evaluate(&l.spec, &trace).map_err(|e| Failure(EXIT_RUNTIME_FAULT, format!("error: {e}")))?;
    if let Some(path) = streams_out {
        std::fs::write(path, model_to_csv(&l.spec, &model))
            .map_err(|e| internal(format!("cannot write {}: {e}", path.display())))?;
    }
    if cli.json {
        let firings: Vec<_> = model
            .firings
            .iter()
            .map(|f| json!({ "position": f.position, "trigger": f.index, "message": f.message }))
            .collect();
        print_json(&json!({ "length": model.len, "firings": firings }));
    } else {
        print!("{}", firings_to_text(&model.firings));
    }
    Ok(())
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| internal(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(internal(format!("no .csv traces in {}", dir.display())));
    }
    Ok(files)
}

fn cmd_difftest(cli: &Cli, a: &DifftestArgs) -> Outcome {
    let (l, report) = load_analyzed(&a.spec)?;
    print_lints(cli, &l.file, &report.lints);
    let source = match &a.traces {
        Some(dir) => TraceSource::Files(trace_files(dir)?),
        None => TraceSource::Random {
            count: a.random,
            max_len: a.max_len,
            lo: a.lo,
            hi: a.hi,
            dictionary: !a.no_dictionary,
        },
    };
    let cfg = DifftestConfig {
        source,
        seed: a.seed,
        parallel: a.parallel,
        annotations: a.annotations,
        toolchain: Toolchain::from_env(),
        work_dir: a.work_dir.clone(),
        keep_artifacts: a.keep_artifacts,
        ..Default::default()
    };
    let r = run_difftest(&l.spec, &report, &cfg).map_err(harness_failure)?;
    if cli.json {
        println!("{}", r.to_json());
    } else if !cli.quiet || !r.all_match() {
        print!("{}", r.to_text());
    }
    if r.all_match() {
        Ok(())
    } else {
        Err(Failure(
            EXIT_INTERNAL,
            format!("error: {} of {} cases did not match", r.summary.cases - r.summary.matches, r.summary.cases),
        ))
    }
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Outcome {
    let (l, report) = load_analyzed(&a.spec)?;
    let cfg = BenchConfig {
        events: a.events,
        seed: a.seed,
        lo: a.lo,
        hi: a.hi,
        parallel: a.parallel,
        interpret: !a.no_interpreter,
        repetitions: a.repetitions,
        toolchain: Toolchain::from_env(),
    };
    let r = bench(&l.spec, &report, &cfg).map_err(harness_failure)?;
    if cli.json {
        print_json(&serde_json::to_value(&r).expect("bench result serializes"));
    } else {
        println!("events: {} (median of {})", r.events, r.repetitions);
        println!("monitor: {:.2} ns/event, peak rss {} KiB", r.monitor_ns_per_event, r.monitor_maxrss_kb);
        if let (Some(i), Some(s)) = (r.interpreter_ns_per_event, r.speedup) {
            println!("interpreter: {i:.2} ns/event");
            println!("speedup: {s:.1}x");
        }
        println!("firings: {} checksum: {}", r.firings, r.checksum);
    }
    if r.agrees == Some(false) {
        return Err(Failure(EXIT_INTERNAL, "error: monitor and interpreter firings disagree".into()));
    }
    if r.speedup.is_some_and(|s| s < 1.0) {
        return Err(Failure(EXIT_INTERNAL, "error: monitor slower than the interpreter".into()));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Analyze { spec } => cmd_analyze(cli, spec),
        Command::Check { spec } => cmd_check(cli, spec),
        Command::Compile(a) => cmd_compile(cli, a),
        Command::Interpret { spec, trace, streams_out } => cmd_interpret(cli, spec, trace, streams_out.as_deref()),
        Command::Difftest(a) => cmd_difftest(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(code)
        }
    }
}

/// Parses `args` and runs the command. Usage errors exit with 3.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INTERNAL } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli =
            Cli::try_parse_from(["lolac", "--json", "difftest", "s.lola", "--random", "5", "--lo", "-3", "--parallel"])
                .unwrap();
        assert!(cli.json);
        let Command::Difftest(a) = cli.command else { panic!() };
        assert_eq!((a.random, a.lo, a.hi, a.parallel), (5, -3, 10, true));
        assert!(Cli::try_parse_from(["lolac", "check", "s.lola", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["lolac", "difftest", "s.lola", "--traces", "d", "--random", "3"]).is_err());
    }
}
