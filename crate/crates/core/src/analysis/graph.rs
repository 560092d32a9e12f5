use std::fmt;

use serde::Serialize;

use crate::frontend::{StreamId, TypedSpec};

/// One syntactic access: `accessor` reads `accessed` at relative `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub accessor: StreamId,
    pub offset: i32,
    pub accessed: StreamId,
}

/// Access multigraph over all streams and triggers, indexed by [`StreamId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub names: Vec<String>,
    pub is_input: Vec<bool>,
    pub edges: Vec<Edge>,
}

impl DependencyGraph {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }
}

pub fn build_dependency_graph(spec: &TypedSpec) -> DependencyGraph {
    let mut edges = Vec::new();
    for (id, stream) in spec.evaluated() {
        let expr = stream.expr.as_ref().expect("evaluated streams have expressions");
        for (accessed, offset, _) in expr.accesses() {
            edges.push(Edge { accessor: id, offset, accessed });
        }
    }
    DependencyGraph {
        names: spec.streams.iter().map(|s| s.name.clone()).collect(),
        is_input: spec.streams.iter().map(|s| s.is_input()).collect(),
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    PositiveCycle,
    ZeroSyncCycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WellFormednessError {
    pub kind: CycleKind,
    /// Edges of the cycle in traversal order; the last edge returns to the first node.
    pub witness: Vec<Edge>,
}

impl WellFormednessError {
    pub fn weight(&self) -> i64 {
        self.witness.iter().map(|e| e.offset as i64).sum()
    }

    pub fn render(&self, graph: &DependencyGraph) -> String {
        let mut out = String::new();
        for (i, e) in self.witness.iter().enumerate() {
            if i == 0 {
                out.push_str(&graph.names[e.accessor.0]);
            }
            out.push_str(&format!(" -({:+})-> {}", e.offset, graph.names[e.accessed.0]));
        }
        out
    }
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleKind::PositiveCycle => "positive_cycle",
            CycleKind::ZeroSyncCycle => "zero_sync_cycle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WellFormednessVerdict {
    pub ok: bool,
    pub errors: Vec<WellFormednessError>,
}

/// Rejects positive-weight cycles and, once shifts exist, cycles of
/// synchronous (distance 0) accesses among outputs and triggers.
pub fn check_well_formed(graph: &DependencyGraph) -> WellFormednessVerdict {
    if let Some(witness) = find_positive_cycle(graph) {
        return WellFormednessVerdict {
            ok: false,
            errors: vec![WellFormednessError { kind: CycleKind::PositiveCycle, witness }],
        };
    }
    let shifts = compute_shifts(graph).expect("no positive cycle");
    match find_zero_sync_cycle(graph, &shifts) {
        Some(witness) => WellFormednessVerdict {
            ok: false,
            errors: vec![WellFormednessError { kind: CycleKind::ZeroSyncCycle, witness }],
        },
        None => WellFormednessVerdict { ok: true, errors: vec![] },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("positive cycle in dependency graph: shifts are unbounded")]
pub struct PositiveCycleError;

/// Longest-path fixpoint of `shift(s) = max(0, max{w + shift(s')})`.
///
/// Starting from zero, each round can only raise values, and without positive
/// cycles the values settle after at most `n` rounds.
pub fn compute_shifts(graph: &DependencyGraph) -> Result<Vec<u32>, PositiveCycleError> {
    let (dist, _, changed) = relax(graph);
    if changed.is_some() {
        return Err(PositiveCycleError);
    }
    Ok(dist.into_iter().map(|d| d as u32).collect())
}

/// Runs `n` rounds of relaxation; returns the distances, the edge that last
/// raised each node, and a node still changing in round `n` if any.
fn relax(graph: &DependencyGraph) -> (Vec<i64>, Vec<Option<usize>>, Option<usize>) {
    let n = graph.node_count();
    let mut dist = vec![0i64; n];
    let mut pred = vec![None; n];
    let mut last_changed = None;
    for _ in 0..=n {
        last_changed = None;
        for (i, e) in graph.edges.iter().enumerate() {
            let cand = e.offset as i64 + dist[e.accessed.0];
            if cand > dist[e.accessor.0] {
                dist[e.accessor.0] = cand;
                pred[e.accessor.0] = Some(i);
                last_changed = Some(e.accessor.0);
            }
        }
        if last_changed.is_none() {
            break;
        }
    }
    (dist, pred, last_changed)
}

fn find_positive_cycle(graph: &DependencyGraph) -> Option<Vec<Edge>> {
    let (_, pred, changed) = relax(graph);
    let mut node = changed?;
    // Following predecessors n times lands on the cycle itself.
    for _ in 0..graph.node_count() {
        node = graph.edges[pred[node].expect("changed nodes have predecessors")].accessed.0;
    }
    let start = node;
    let mut cycle = Vec::new();
    loop {
        let e = graph.edges[pred[node].unwrap()];
        cycle.push(e);
        node = e.accessed.0;
        if node == start {
            break;
        }
    }
    Some(cycle)
}

fn sync_distance(e: &Edge, shifts: &[u32]) -> i64 {
    shifts[e.accessor.0] as i64 - e.offset as i64 - shifts[e.accessed.0] as i64
}

fn find_zero_sync_cycle(graph: &DependencyGraph, shifts: &[u32]) -> Option<Vec<Edge>> {
    let n = graph.node_count();
    let mut adj: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for e in &graph.edges {
        if sync_distance(e, shifts) == 0 && !graph.is_input[e.accessed.0] {
            adj[e.accessor.0].push(*e);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack: Vec<Edge> = Vec::new();
    fn dfs(v: usize, adj: &[Vec<Edge>], state: &mut [u8], stack: &mut Vec<Edge>) -> Option<Vec<Edge>> {
        state[v] = 1;
        for e in &adj[v] {
            let w = e.accessed.0;
            if state[w] == 1 {
                let from = stack.iter().position(|s| s.accessor.0 == w).unwrap_or(stack.len());
                let mut cycle = stack[from..].to_vec();
                cycle.push(*e);
                return Some(cycle);
            }
            if state[w] == 0 {
                stack.push(*e);
                if let Some(c) = dfs(w, adj, state, stack) {
                    return Some(c);
                }
                stack.pop();
            }
        }
        state[v] = 2;
        None
    }
    for v in 0..n {
        if state[v] == 0 {
            if let Some(c) = dfs(v, &adj, &mut state, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::frontend::compile_str;

    fn graph(src: &str) -> DependencyGraph {
        build_dependency_graph(&compile_str(src).unwrap())
    }

    /// Longest simple path weight from each node, clamped at 0, by exhaustive
    /// enumeration. Equals the shift whenever no cycle has positive weight.
    pub(crate) fn brute_force_shifts(g: &DependencyGraph) -> Vec<i64> {
        fn go(g: &DependencyGraph, v: usize, visited: &mut Vec<bool>) -> i64 {
            let mut best = 0;
            visited[v] = true;
            for e in g.edges.iter().filter(|e| e.accessor.0 == v) {
                let w = e.accessed.0;
                if !visited[w] {
                    best = best.max(e.offset as i64 + go(g, w, visited));
                }
            }
            visited[v] = false;
            best
        }
        (0..g.node_count()).map(|v| go(g, v, &mut vec![false; g.node_count()])).collect()
    }

    /// Every simple cycle's total weight, by exhaustive enumeration.
    pub(crate) fn brute_force_cycle_weights(g: &DependencyGraph) -> Vec<i64> {
        fn go(g: &DependencyGraph, start: usize, v: usize, acc: i64, visited: &mut Vec<bool>, out: &mut Vec<i64>) {
            for e in g.edges.iter().filter(|e| e.accessor.0 == v) {
                let w = e.accessed.0;
                if w == start {
                    out.push(acc + e.offset as i64);
                } else if w > start && !visited[w] {
                    visited[w] = true;
                    go(g, start, w, acc + e.offset as i64, visited, out);
                    visited[w] = false;
                }
            }
        }
        let mut out = Vec::new();
        for s in 0..g.node_count() {
            go(g, s, s, 0, &mut vec![false; g.node_count()], &mut out);
        }
        out
    }

    fn offsets(g: &DependencyGraph, from: &str, to: &str) -> Vec<i32> {
        let id = |n: &str| g.names.iter().position(|x| x == n).unwrap();
        let mut v: Vec<i32> =
            g.edges.iter().filter(|e| e.accessor.0 == id(from) && e.accessed.0 == id(to)).map(|e| e.offset).collect();
        v.sort();
        v
    }

    #[test]
    fn altitude_edges() {
        let g = graph(include_str!("../../corpus/altitude.lola"));
        assert_eq!(offsets(&g, "tooLow", "altitude"), [-1, 0, 1]);
        assert_eq!(offsets(&g, "tooHigh", "altitude"), [-1, 0, 1]);
        assert_eq!(offsets(&g, "trigger_0", "tooLow"), [0]);
        assert_eq!(offsets(&g, "trigger_1", "tooHigh"), [0]);
        assert_eq!(g.edges.len(), 8);
    }

    #[test]
    fn constant_expression_has_no_edges() {
        let g = graph("constant c: Int32 := 3\noutput k: Int32 := 1 + c");
        assert_eq!(g.names, ["k"]);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn sync_pitfall_edges() {
        let g = graph(include_str!("../../corpus/sync_pitfall.lola"));
        assert_eq!(offsets(&g, "a", "b"), [0]);
        assert_eq!(offsets(&g, "b", "b"), [-1]);
    }

    #[test]
    fn positive_self_loop_is_rejected_with_witness() {
        let g = graph("output a := a[1, 0]");
        assert_eq!(brute_force_cycle_weights(&g), [1]);
        let v = check_well_formed(&g);
        assert!(!v.ok);
        assert_eq!(v.errors[0].kind, CycleKind::PositiveCycle);
        assert_eq!(v.errors[0].witness, [Edge { accessor: StreamId(0), offset: 1, accessed: StreamId(0) }]);
        assert_eq!(v.errors[0].render(&g), "a -(+1)-> a");
        assert!(compute_shifts(&g).is_err());
    }

    #[test]
    fn positive_cycle_through_two_streams() {
        let g = graph("output a: Int32 := b[2, 0]\noutput b: Int32 := a[-1, 0]");
        let v = check_well_formed(&g);
        assert_eq!(v.errors[0].kind, CycleKind::PositiveCycle);
        assert_eq!(v.errors[0].weight(), 1);
        assert_eq!(v.errors[0].witness.len(), 2);
    }

    #[test]
    fn zero_sync_cycle_is_rejected_with_witness() {
        let g = graph(include_str!("../../corpus/zero_sync_cycle.lola"));
        assert_eq!(brute_force_cycle_weights(&g), [0]);
        let v = check_well_formed(&g);
        assert!(!v.ok);
        let err = &v.errors[0];
        assert_eq!(err.kind, CycleKind::ZeroSyncCycle);
        assert_eq!(err.render(&g), "a -(+0)-> b -(+0)-> a");
    }

    #[test]
    fn corpus_specs_are_well_formed() {
        for src in [
            include_str!("../../corpus/altitude.lola"),
            include_str!("../../corpus/altitude_adapted.lola"),
            include_str!("../../corpus/network.lola"),
            include_str!("../../corpus/flight_phase.lola"),
            include_str!("../../corpus/flight_phase_nodiv.lola"),
            include_str!("../../corpus/sync_pitfall.lola"),
        ] {
            assert!(check_well_formed(&graph(src)).ok);
        }
    }

    #[test]
    fn shifts_match_brute_force_on_examples() {
        let g = graph(include_str!("../../corpus/altitude.lola"));
        let shifts = compute_shifts(&g).unwrap();
        assert_eq!(shifts, [0, 1, 1, 1, 1]);
        let bf: Vec<u32> = brute_force_shifts(&g).into_iter().map(|s| s as u32).collect();
        assert_eq!(shifts, bf);

        let g = graph("input i: Int32\noutput o := i[-2, 0] + i[2, 0]");
        assert_eq!(compute_shifts(&g).unwrap(), [0, 2]);

        let g = graph(include_str!("../../corpus/network.lola"));
        assert!(compute_shifts(&g).unwrap().iter().all(|&s| s == 0));
    }
}
