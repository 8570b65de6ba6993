//! Per-event trace lines with a stable field order, for golden-trace
//! tests and offline inspection.

use crate::NodeId;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: &'static str,
    /// -1 when not applicable.
    pub src: i64,
    pub dst: i64,
    pub flow: i64,
    pub group: Vec<NodeId>,
}

impl TraceEvent {
    pub fn new(time: f64, kind: &'static str) -> Self {
        Self {
            time,
            kind,
            src: -1,
            dst: -1,
            flow: -1,
            group: Vec::new(),
        }
    }

    pub fn src(mut self, v: NodeId) -> Self {
        self.src = v as i64;
        self
    }

    pub fn dst(mut self, v: NodeId) -> Self {
        self.dst = v as i64;
        self
    }

    pub fn flow(mut self, v: crate::FlowId) -> Self {
        self.flow = v as i64;
        self
    }

    pub fn group(mut self, g: &[NodeId]) -> Self {
        self.group = g.to_vec();
        self
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = if self.group.is_empty() {
            "-".to_string()
        } else {
            self.group
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join("|")
        };
        write!(
            f,
            "t={:.6} type={} src={} dst={} flow={} group={}",
            self.time, self.kind, self.src, self.dst, self.flow, group
        )
    }
}
