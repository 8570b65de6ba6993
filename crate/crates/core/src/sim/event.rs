//! Event queue with fully deterministic ordering.
//!
//! Events pop in `(time, sequence)` order; the sequence counter is
//! assigned at push time, so simultaneous events replay in the order
//! they were scheduled.

use crate::protocol::hello::HelloPacket;
use crate::protocol::undercover::{Ack, AckReply, RouteReply, RouteRequest};
use crate::{FlowId, NodeId, PuId};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Identifier of a data packet in the simulation arena.
pub type PacketId = u64;
/// Identifier of a transmission record.
pub type TxId = u64;

/// Control packet riding the common control channel.
#[derive(Debug, Clone)]
pub enum CtrlPacket {
    Hello(HelloPacket),
    Rreq {
        rreq: RouteRequest,
        discovery: u64,
    },
    Rrep {
        reply: RouteReply,
        discovery: u64,
    },
    Ack {
        ack: Ack,
        discovery: u64,
    },
    Arep {
        arep: AckReply,
        discovery: u64,
    },
    /// Greedy route-setup notification to the chosen next hop.
    RouteSetup {
        from: NodeId,
        flow: FlowId,
    },
}

/// Payload of a [`EventKind::PacketArrival`].
#[derive(Debug, Clone)]
pub enum ArrivedPacket {
    Data(PacketId),
    Ctrl(CtrlPacket),
}

#[derive(Debug, Clone)]
pub enum EventKind {
    HelloDue { node: NodeId },
    FlowPacketDue { flow: FlowId },
    PacketArrival { node: NodeId, packet: ArrivedPacket },
    TxComplete { tx: TxId },
    PuOn { pu: PuId },
    PuOff { pu: PuId },
    RrepTimeout { node: NodeId, flow: FlowId, discovery: u64 },
    ChannelRefresh,
}

#[derive(Debug)]
pub struct Event {
    pub time: f64,
    pub sequence: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.sequence == other.sequence
    }
}
impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for the max-heap: earliest (time, sequence) pops first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite() && time >= 0.0);
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Event {
            time,
            sequence,
            kind,
        });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_then_sequence_order() {
        let mut q = EventQueue::new();
        q.push(2.0, EventKind::ChannelRefresh);
        q.push(1.0, EventKind::HelloDue { node: 1 });
        q.push(1.0, EventKind::HelloDue { node: 2 });
        q.push(0.5, EventKind::PuOn { pu: 0 });
        let order: Vec<(f64, u64)> = std::iter::from_fn(|| q.pop())
            .map(|e| (e.time, e.sequence))
            .collect();
        assert_eq!(order, vec![(0.5, 3), (1.0, 1), (1.0, 2), (2.0, 0)]);
    }
}
