//! Dependency analysis: shifts, synchronized edges, layers, memory plan.

pub mod graph;
pub mod lint;

use serde_json::{json, Value};
use thiserror::Error;

use crate::frontend::{StreamId, TypedSpec};
pub use graph::{
    build_dependency_graph, check_well_formed, compute_shifts, CycleKind, DependencyGraph, Edge, WellFormednessError,
    WellFormednessVerdict,
};
pub use lint::{lint, Lint, LintKind, Severity};

/// An access edge reweighted by shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncEdge {
    pub accessor: StreamId,
    pub offset: i32,
    pub accessed: StreamId,
    /// Committed rounds between the value read and the accessor's own evaluation.
    pub distance: u32,
}

pub fn synchronize_edges(graph: &DependencyGraph, shifts: &[u32]) -> Vec<SyncEdge> {
    graph
        .edges
        .iter()
        .map(|e| {
            let d = shifts[e.accessor.0] as i64 - e.offset as i64 - shifts[e.accessed.0] as i64;
            assert!(d >= 0, "negative sync distance: shifts are not a fixpoint");
            SyncEdge { accessor: e.accessor, offset: e.offset, accessed: e.accessed, distance: d as u32 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layers {
    /// Layer per stream; 0 for inputs.
    pub layer: Vec<u32>,
    /// Outputs and triggers ordered by (layer, declaration index).
    pub total_order: Vec<StreamId>,
}

impl Layers {
    pub fn count(&self) -> u32 {
        self.layer.iter().copied().max().unwrap_or(0)
    }

    /// Streams of each layer `1..=count`, in total order.
    pub fn schedule(&self) -> Vec<Vec<StreamId>> {
        let mut out = vec![Vec::new(); self.count() as usize];
        for &id in &self.total_order {
            out[self.layer[id.0] as usize - 1].push(id);
        }
        out
    }
}

/// Grades outputs and triggers by the longest chain of synchronous accesses
/// below them. Requires the distance-0 edges among outputs to be acyclic.
pub fn compute_layers(sync: &[SyncEdge], spec: &TypedSpec) -> Layers {
    let n = spec.streams.len();
    let mut layer: Vec<u32> = spec.streams.iter().map(|s| if s.is_input() { 0 } else { 1 }).collect();
    // At most n rounds on an acyclic graph.
    for _ in 0..=n {
        let mut changed = false;
        for e in sync.iter().filter(|e| e.distance == 0) {
            if spec.stream(e.accessed).is_input() {
                continue;
            }
            let want = layer[e.accessed.0] + 1;
            if layer[e.accessor.0] < want {
                layer[e.accessor.0] = want;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut total_order: Vec<StreamId> = spec.evaluated().map(|(id, _)| id).collect();
    total_order.sort_by_key(|id| (layer[id.0], id.0));
    Layers { layer, total_order }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryPlan {
    pub memreq: Vec<u32>,
    pub slots: Vec<u32>,
    pub memcon: usize,
}

pub fn compute_memory(sync: &[SyncEdge], spec: &TypedSpec) -> MemoryPlan {
    let mut memreq = vec![0u32; spec.streams.len()];
    for e in sync {
        memreq[e.accessed.0] = memreq[e.accessed.0].max(e.distance);
    }
    let slots: Vec<u32> = memreq.iter().map(|m| m + 1).collect();
    let memcon = spec.streams.iter().zip(&slots).map(|(s, &k)| k as usize * s.ty.size_of()).sum();
    MemoryPlan { memreq, slots, memcon }
}

/// `(preflen, postlen)`.
pub fn compute_phase_lengths(shifts: &[u32], memreq: &[u32]) -> (u32, u32) {
    let preflen = shifts.iter().zip(memreq).map(|(s, m)| s + m).max().unwrap_or(0);
    let postlen = shifts.iter().copied().max().unwrap_or(0);
    (preflen, postlen)
}

/// The memory-requirement formula read literally, with accessor and accessed
/// in swapped roles: max of `shift(accessed) - shift(accessor) - offset` over
/// accesses into the stream. Reported for comparison only.
pub fn memreq_swapped(graph: &DependencyGraph, shifts: &[u32]) -> Vec<i64> {
    let mut out = vec![None::<i64>; graph.node_count()];
    for e in &graph.edges {
        let v = shifts[e.accessed.0] as i64 - shifts[e.accessor.0] as i64 - e.offset as i64;
        let slot = &mut out[e.accessed.0];
        *slot = Some(slot.map_or(v, |cur| cur.max(v)));
    }
    out.into_iter().map(|v| v.unwrap_or(0)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("specification is not efficiently monitorable: {kind} {witness}")]
    IllFormed { kind: CycleKind, witness: String, verdict: WellFormednessVerdict },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub graph: DependencyGraph,
    pub shifts: Vec<u32>,
    pub sync_edges: Vec<SyncEdge>,
    pub layers: Layers,
    pub memory: MemoryPlan,
    pub memreq_swapped: Vec<i64>,
    pub preflen: u32,
    pub postlen: u32,
    pub lints: Vec<Lint>,
}

impl AnalysisReport {
    pub fn shift(&self, id: StreamId) -> u32 {
        self.shifts[id.0]
    }

    pub fn layer(&self, id: StreamId) -> u32 {
        self.layers.layer[id.0]
    }

    pub fn slots(&self, id: StreamId) -> u32 {
        self.memory.slots[id.0]
    }

    pub fn memreq(&self, id: StreamId) -> u32 {
        self.memory.memreq[id.0]
    }

    pub fn has_errors(&self) -> bool {
        self.lints.iter().any(|l| l.severity == Severity::Error)
    }

    pub fn to_json(&self, spec: &TypedSpec) -> Value {
        let streams: Vec<Value> = spec
            .ids()
            .map(|id| {
                let s = spec.stream(id);
                json!({
                    "name": s.name,
                    "kind": s.kind_name(),
                    "type": s.ty.name(),
                    "shift": self.shift(id),
                    "layer": if s.is_input() { Value::Null } else { json!(self.layer(id)) },
                    "memreq": self.memreq(id),
                    "slots": self.slots(id),
                    "memreq_swapped": self.memreq_swapped[id.0],
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .sync_edges
            .iter()
            .map(|e| {
                json!({
                    "from": spec.stream(e.accessor).name,
                    "offset": e.offset,
                    "to": spec.stream(e.accessed).name,
                    "sync_distance": e.distance,
                })
            })
            .collect();
        json!({
            "streams": streams,
            "edges": edges,
            "preflen": self.preflen,
            "postlen": self.postlen,
            "memcon_bytes": self.memory.memcon,
            "layers": self.layers.count(),
            "lints": self.lints,
        })
    }

    pub fn to_table(&self, spec: &TypedSpec) -> String {
        let width = spec.streams.iter().map(|s| s.name.len()).max().unwrap_or(4).max(6);
        let mut out = format!(
            "{:width$}  {:7}  {:5}  {:>5}  {:>5}  {:>6}  {:>5}  {:>14}\n",
            "stream", "kind", "type", "shift", "layer", "memreq", "slots", "memreq_swapped"
        );
        for id in spec.ids() {
            let s = spec.stream(id);
            let layer = if s.is_input() { "-".to_string() } else { self.layer(id).to_string() };
            out += &format!(
                "{:width$}  {:7}  {:5}  {:>5}  {:>5}  {:>6}  {:>5}  {:>14}\n",
                s.name,
                s.kind_name(),
                s.ty.name(),
                self.shift(id),
                layer,
                self.memreq(id),
                self.slots(id),
                self.memreq_swapped[id.0]
            );
        }
        out += "\nedges:\n";
        for e in &self.sync_edges {
            out += &format!(
                "  {} -({:+})-> {}  sync distance {}\n",
                spec.stream(e.accessor).name,
                e.offset,
                spec.stream(e.accessed).name,
                e.distance
            );
        }
        out += "\nlayers:\n";
        for (i, layer) in self.layers.schedule().iter().enumerate() {
            let names: Vec<&str> = layer.iter().map(|id| spec.stream(*id).name.as_str()).collect();
            out += &format!("  {}: {}\n", i + 1, names.join(", "));
        }
        out += &format!(
            "\npreflen = {}\npostlen = {}\nmemcon  = {} bytes\n",
            self.preflen, self.postlen, self.memory.memcon
        );
        out
    }
}

/// Full analysis of a typed specification.
pub fn analyze(spec: &TypedSpec, source: &str) -> Result<AnalysisReport, AnalysisError> {
    let graph = build_dependency_graph(spec);
    let verdict = check_well_formed(&graph);
    if let Some(err) = verdict.errors.first() {
        return Err(AnalysisError::IllFormed { kind: err.kind, witness: err.render(&graph), verdict });
    }
    let shifts = compute_shifts(&graph).expect("checked for positive cycles");
    let sync_edges = synchronize_edges(&graph, &shifts);
    let layers = compute_layers(&sync_edges, spec);
    let memory = compute_memory(&sync_edges, spec);
    let (preflen, postlen) = compute_phase_lengths(&shifts, &memory.memreq);
    let memreq_swapped = memreq_swapped(&graph, &shifts);
    let lints = lint(spec, source);
    Ok(AnalysisReport { graph, shifts, sync_edges, layers, memory, memreq_swapped, preflen, postlen, lints })
}
