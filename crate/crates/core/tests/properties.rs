mod common;

use std::cell::RefCell;

use common::{corpus, SpecGen, CORPUS};
use lolac::analysis::{analyze, build_dependency_graph, check_well_formed, compute_shifts, CycleKind, DependencyGraph};
use lolac::frontend::{compile_str, parse_str, Literal, StreamId, TypedSpec};
use lolac::harness::{generate_random_trace, XorShift64Star};
use lolac::interpreter::{
    eval_expr, evaluate, evaluate_in_order, evaluate_with_faults, CellSource, CellState, Eval, Trace,
};
use proptest::prelude::*;

/// Longest simple-path weight from every node, clamped at zero.
fn longest_paths(g: &DependencyGraph) -> Vec<i64> {
    fn go(g: &DependencyGraph, v: usize, seen: &mut [bool]) -> i64 {
        seen[v] = true;
        let mut best = 0;
        for e in g.edges.iter().filter(|e| e.accessor.0 == v) {
            if !seen[e.accessed.0] {
                best = best.max(e.offset as i64 + go(g, e.accessed.0, seen));
            }
        }
        seen[v] = false;
        best
    }
    (0..g.node_count()).map(|v| go(g, v, &mut vec![false; g.node_count()])).collect()
}

/// Whether some simple cycle has positive total weight.
fn has_positive_cycle(g: &DependencyGraph) -> bool {
    fn go(g: &DependencyGraph, start: usize, v: usize, acc: i64, seen: &mut [bool]) -> bool {
        g.edges.iter().filter(|e| e.accessor.0 == v).any(|e| {
            let w = e.accessed.0;
            if w == start {
                return acc + e.offset as i64 > 0;
            }
            if w < start || seen[w] {
                return false;
            }
            seen[w] = true;
            let found = go(g, start, w, acc + e.offset as i64, seen);
            seen[w] = false;
            found
        })
    }
    (0..g.node_count()).any(|s| go(g, s, s, 0, &mut vec![false; g.node_count()]))
}

/// Outputs `s0..s{n-1}` summing accesses given as (accessor, accessed, offset).
fn edge_spec(n: usize, edges: &[(usize, usize, i32)]) -> String {
    let mut out = String::from("input x: Int32\n");
    for s in 0..n {
        let terms: Vec<String> = edges
            .iter()
            .filter(|e| e.0 == s)
            .map(|&(_, t, w)| {
                let name = if t == n { "x".to_string() } else { format!("s{t}") };
                if w == 0 {
                    name
                } else {
                    format!("{name}[{w},0]")
                }
            })
            .collect();
        let body = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
        out.push_str(&format!("output s{s}: Int32 := {body}\n"));
    }
    out
}

fn edges_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, i32)>)> {
    (1usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..=n, -3i32..=3), 0..12)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shifts_match_brute_force((n, edges) in edges_strategy()) {
        let spec = compile_str(&edge_spec(n, &edges)).unwrap();
        let g = build_dependency_graph(&spec);
        if has_positive_cycle(&g) {
            prop_assert!(compute_shifts(&g).is_err());
            let verdict = check_well_formed(&g);
            prop_assert!(!verdict.ok);
            prop_assert_eq!(verdict.errors[0].kind, CycleKind::PositiveCycle);
            prop_assert!(verdict.errors[0].weight() > 0);
        } else {
            let shifts: Vec<i64> = compute_shifts(&g).unwrap().into_iter().map(i64::from).collect();
            prop_assert_eq!(shifts, longest_paths(&g));
        }
    }

    #[test]
    fn pretty_printing_round_trips(seed in any::<u64>()) {
        let src = SpecGen::new(seed).spec();
        let once = parse_str(&src).unwrap().to_string();
        let twice = parse_str(&once).unwrap().to_string();
        prop_assert_eq!(&once, &twice);
        match (compile_str(&src), compile_str(&once)) {
            (Ok(a), Ok(b)) => {
                let (ra, rb) = (analyze(&a, &src), analyze(&b, &once));
                prop_assert_eq!(ra.is_ok(), rb.is_ok());
                if let (Ok(ra), Ok(rb)) = (ra, rb) {
                    prop_assert_eq!(ra.shifts, rb.shifts);
                    prop_assert_eq!(ra.layers.layer, rb.layers.layer);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "compile mismatch: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

fn shuffled_order(spec: &TypedSpec, len: usize, r: &mut XorShift64Star) -> Vec<(StreamId, usize)> {
    let mut cells: Vec<(StreamId, usize)> =
        (0..len).flat_map(|p| spec.evaluated().map(move |(id, _)| (id, p))).collect();
    for i in (1..cells.len()).rev() {
        let j = (r.next_u64() % (i as u64 + 1)) as usize;
        cells.swap(i, j);
    }
    cells
}

fn states_equal(spec: &TypedSpec, trace: &Trace, order: Vec<(StreamId, usize)>, expected: &[Vec<CellState>]) -> bool {
    evaluate_in_order(spec, trace, order).unwrap().states == expected
}

#[test]
fn worklist_order_does_not_matter() {
    let mut r = XorShift64Star::new(11);
    for name in CORPUS {
        let spec = compile_str(&corpus(name)).unwrap();
        let trace = generate_random_trace(&spec, 3, 25, -3, 3);
        let reference = evaluate_with_faults(&spec, &trace).unwrap().states;
        for round in 0..100 {
            let order = shuffled_order(&spec, trace.len, &mut r);
            assert!(states_equal(&spec, &trace, order, &reference), "{name}, order {round}");
        }
    }
}

#[test]
fn worklist_order_does_not_matter_on_random_specs() {
    let mut r = XorShift64Star::new(5);
    let mut checked = 0;
    for seed in 0..60 {
        let src = SpecGen::new(seed).spec();
        let Ok(spec) = compile_str(&src) else { continue };
        if analyze(&spec, &src).is_err() {
            continue;
        }
        let trace = generate_random_trace(&spec, seed, 12, -3, 3);
        let reference = evaluate_with_faults(&spec, &trace).unwrap().states;
        for _ in 0..100 {
            let order = shuffled_order(&spec, trace.len, &mut r);
            assert!(states_equal(&spec, &trace, order, &reference), "{src}");
        }
        checked += 1;
    }
    assert!(checked >= 20);
}

/// Records every cell read and refuses reads outside the trace.
struct Audited<'a> {
    spec: &'a TypedSpec,
    trace: &'a Trace,
    values: &'a [Vec<Literal>],
    reads: RefCell<usize>,
}

impl CellSource for Audited<'_> {
    fn cell(&self, stream: StreamId, pos: usize) -> CellState {
        assert!(
            pos < self.trace.len,
            "read of {} at {pos} outside 0..{}",
            self.spec.stream(stream).name,
            self.trace.len
        );
        *self.reads.borrow_mut() += 1;
        CellState::Value(self.values[stream.0][pos])
    }

    fn len(&self) -> usize {
        self.trace.len
    }
}

#[test]
fn accesses_outside_the_trace_use_defaults() {
    for name in ["altitude", "network", "flight_phase_nodiv", "sync_pitfall"] {
        let spec = compile_str(&corpus(name)).unwrap();
        for len in [0, 1, 2, 3, 7] {
            let trace = generate_random_trace(&spec, len as u64, len, 0, 5);
            let model = evaluate(&spec, &trace).unwrap();
            let src = Audited { spec: &spec, trace: &trace, values: &model.values, reads: RefCell::new(0) };
            for (id, s) in spec.evaluated() {
                for k in 0..len {
                    let v = eval_expr(&spec, s.expr.as_ref().unwrap(), k, &src).unwrap();
                    assert_eq!(v, Eval::Value(model.values[id.0][k]), "{name}.{} at {k}", s.name);
                }
            }
            if len > 0 {
                assert!(*src.reads.borrow() > 0);
            }
        }
    }
}

#[test]
fn values_ignore_inputs_beyond_their_shift() {
    let mut checked = 0;
    for seed in 0..80 {
        let src = SpecGen::new(seed).without_division().spec();
        let Ok(spec) = compile_str(&src) else { continue };
        let Ok(report) = analyze(&spec, &src) else { continue };
        let (len, k) = (40, 20);
        let trace = generate_random_trace(&spec, seed, len, -3, 3);
        let other = generate_random_trace(&spec, seed + 1000, len, -3, 3);
        let base = evaluate(&spec, &trace).unwrap();
        for (id, s) in spec.evaluated() {
            let horizon = k + report.shifts[id.0] as usize;
            let mut changed = trace.clone();
            let from = (horizon + 1).min(len);
            for (col, fresh) in changed.columns.iter_mut().zip(&other.columns) {
                col[from..].copy_from_slice(&fresh[from..]);
            }
            let moved = evaluate(&spec, &changed).unwrap();
            assert_eq!(base.values[id.0][k], moved.values[id.0][k], "{} in\n{src}", s.name);
        }
        checked += 1;
    }
    assert!(checked >= 20);
}
