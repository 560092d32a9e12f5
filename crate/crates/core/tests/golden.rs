mod common;

use std::path::PathBuf;

use common::{corpus, quick_toolchain};
use lolac::analysis::analyze;
use lolac::codegen::{emit_annotations, generate, render_blocks, CodegenOptions};
use lolac::frontend::compile_str;
use lolac::harness::{run_difftest, DifftestConfig, TraceSource};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

/// Compares against the stored file; `LOLAC_BLESS=1` rewrites it instead.
fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("LOLAC_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert!(expected == actual, "{} differs from the emitted text:\n{actual}", path.display());
}

#[test]
fn altitude_annotation_blocks() {
    let src = corpus("altitude");
    let spec = compile_str(&src).unwrap();
    let report = analyze(&spec, &src).unwrap();
    let text = render_blocks(&emit_annotations(&spec, &report));
    assert_golden("altitude_annotations.txt", &text);

    let altitude_conjuncts = text.lines().filter(|l| l.contains("#[invariant=") && l.contains("gm.altitude[")).count();
    assert_eq!(altitude_conjuncts, 3);
    assert!(text.contains("#[requires=\"index < 3\"]"));
}

#[test]
fn blocks_appear_in_the_annotated_program() {
    let src = corpus("altitude");
    let spec = compile_str(&src).unwrap();
    let report = analyze(&spec, &src).unwrap();
    let plain = generate(&spec, &report, CodegenOptions::default()).unwrap();
    let annotated = generate(&spec, &report, CodegenOptions { annotations: true, ..Default::default() }).unwrap();
    assert!(!plain.source.contains("#[invariant="));
    assert!(!plain.source.contains("GhostMemory"));
    assert!(annotated.source.contains("GhostMemory"));
    for line in render_blocks(&emit_annotations(&spec, &report)).lines().filter(|l| l.contains("#[")) {
        assert!(annotated.source.contains(line.trim()), "missing {line}");
    }
}

#[test]
fn annotations_change_no_verdict() {
    for name in ["altitude", "network", "flight_phase"] {
        let src = corpus(name);
        let spec = compile_str(&src).unwrap();
        let report = analyze(&spec, &src).unwrap();
        let cfg = DifftestConfig {
            source: TraceSource::Random { count: 20, max_len: 30, lo: -2, hi: 300, dictionary: true },
            toolchain: quick_toolchain(),
            repetitions: 1,
            ..Default::default()
        };
        let plain = run_difftest(&spec, &report, &cfg).unwrap();
        let annotated = run_difftest(&spec, &report, &DifftestConfig { annotations: true, ..cfg }).unwrap();
        assert!(plain.all_match() && annotated.all_match(), "{name}\n{}", annotated.to_text());
        let verdicts = |r: &lolac::harness::DifftestReport| r.cases.iter().map(|c| c.verdict).collect::<Vec<_>>();
        assert_eq!(verdicts(&plain), verdicts(&annotated));
    }
}
