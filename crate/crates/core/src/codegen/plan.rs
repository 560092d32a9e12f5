use crate::analysis::AnalysisReport;
use crate::frontend::{Literal, StreamId, TypedSpec};

/// How one access is realized in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Read the accessed ring buffer at this relative index (0 = newest).
    Read(u32),
    /// The referenced position lies outside the trace.
    Default,
    /// The accessor is not evaluated in this phase.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessPlan {
    pub accessor: StreamId,
    pub accessed: StreamId,
    pub offset: i32,
    pub default: Option<Literal>,
    pub distance: u32,
    /// The accessed stream already holds this round's value when the accessor runs.
    pub committed_this_round: bool,
    /// Buffer index in the monitor loop.
    pub buffer_index: u32,
    /// Per prefix iteration `0..preflen`.
    pub prefix: Vec<Resolution>,
    /// Per postfix round `1..=postlen` (entry `j - 1`).
    pub postfix: Vec<Resolution>,
}

/// Access plans of every output and trigger, in declaration order and, within
/// a stream, in expression pre-order.
pub fn plan_accesses(spec: &TypedSpec, report: &AnalysisReport) -> Vec<AccessPlan> {
    let mut plans = Vec::new();
    for (s, stream) in spec.evaluated() {
        let sh = report.shift(s) as i64;
        for (s2, offset, default) in stream.expr.as_ref().unwrap().accesses() {
            let sh2 = report.shift(s2) as i64;
            let d = sh - offset as i64 - sh2;
            debug_assert!(d >= 0);
            let is_input = spec.stream(s2).is_input();
            let committed = is_input || report.layer(s2) < report.layer(s);
            let buffer_index = if committed { d } else { d - 1 };
            assert!(buffer_index >= 0, "synchronous access to an uncommitted stream");

            let prefix = (0..report.preflen as i64)
                .map(|t| {
                    if t < sh {
                        Resolution::Skipped
                    } else if t - sh2 - d < 0 {
                        Resolution::Default
                    } else {
                        Resolution::Read(buffer_index as u32)
                    }
                })
                .collect();
            let postfix = (1..=report.postlen as i64)
                .map(|j| {
                    if sh < j {
                        Resolution::Skipped
                    } else if !is_input && sh2 >= j {
                        Resolution::Read(buffer_index as u32)
                    } else if j - sh2 - d > 0 {
                        Resolution::Default
                    } else {
                        // The accessed stream stopped at the last position; its
                        // newest value is older than in the loop.
                        Resolution::Read((sh2 + d - j) as u32)
                    }
                })
                .collect();
            plans.push(AccessPlan {
                accessor: s,
                accessed: s2,
                offset,
                default,
                distance: d as u32,
                committed_this_round: committed,
                buffer_index: buffer_index as u32,
                prefix,
                postfix,
            });
        }
    }
    plans
}
