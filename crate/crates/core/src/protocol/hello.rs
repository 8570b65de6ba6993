//! Periodic hello packets and the two-hop neighborhood view they build.

use crate::channel::ChannelCoeff;
use crate::geometry::{hull_area, DensityEstimate, Position};
use crate::{FlowId, NodeId, PuId};
use std::collections::{BTreeMap, BTreeSet};

/// Timers of the control plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Hello period tau, seconds.
    pub hello_period: f64,
    /// How long a requester collects route replies.
    pub rrep_timeout: f64,
    /// Neighbors silent for longer than this are evicted.
    pub hello_timeout: f64,
}

impl ProtocolConfig {
    pub fn new(hello_period: f64, rrep_timeout: f64, hello_timeout: f64) -> Self {
        assert!(hello_period > 0.0 && rrep_timeout > 0.0 && hello_timeout > 0.0);
        Self {
            hello_period,
            rrep_timeout,
            hello_timeout,
        }
    }
}

/// Periodic announcement: the sender, its direct neighbors with channel
/// coefficients, its detected primary receivers with channel
/// coefficients, and the flows it has witnessed.
#[derive(Debug, Clone, PartialEq)]
pub struct HelloPacket {
    pub origin: NodeId,
    pub origin_position: Position,
    pub timestamp: f64,
    pub neighbor_entries: Vec<(NodeId, ChannelCoeff)>,
    pub pu_entries: Vec<(PuId, ChannelCoeff)>,
    pub witnessed_flows: Vec<FlowId>,
}

impl HelloPacket {
    /// Entry lists must not repeat ids.
    pub fn validate(&self) -> bool {
        let n: BTreeSet<_> = self.neighbor_entries.iter().map(|(id, _)| id).collect();
        let p: BTreeSet<_> = self.pu_entries.iter().map(|(id, _)| id).collect();
        let f: BTreeSet<_> = self.witnessed_flows.iter().collect();
        n.len() == self.neighbor_entries.len()
            && p.len() == self.pu_entries.len()
            && f.len() == self.witnessed_flows.len()
    }
}

/// What one node knows about one neighbor from its last hello.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborInfo {
    pub position: Position,
    pub last_hello: f64,
    /// Channel between us and this neighbor.
    pub coeff: ChannelCoeff,
    /// The neighbor's own neighbors (our two-hop view).
    pub their_neighbors: Vec<(NodeId, ChannelCoeff)>,
    pub their_pus: Vec<(PuId, ChannelCoeff)>,
    pub witnessed: BTreeSet<FlowId>,
}

/// Accumulated hello state: the two-hop view.
#[derive(Debug, Clone, Default)]
pub struct NeighborState {
    neighbors: BTreeMap<NodeId, NeighborInfo>,
}

impl NeighborState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ingest a hello heard from a direct neighbor.  `coeff` is our own
    /// measurement of the channel to the origin.  Packets older than the
    /// stored state are ignored.
    pub fn handle_hello(&mut self, packet: &HelloPacket, coeff: ChannelCoeff) {
        if let Some(existing) = self.neighbors.get(&packet.origin) {
            if packet.timestamp < existing.last_hello {
                return;
            }
        }
        self.neighbors.insert(
            packet.origin,
            NeighborInfo {
                position: packet.origin_position,
                last_hello: packet.timestamp,
                coeff,
                their_neighbors: packet.neighbor_entries.clone(),
                their_pus: packet.pu_entries.clone(),
                witnessed: packet.witnessed_flows.iter().copied().collect(),
            },
        );
    }

    /// Drop neighbors whose last hello is older than the timeout.
    pub fn evict_stale(&mut self, now: f64, hello_timeout: f64) {
        self.neighbors
            .retain(|_, info| now - info.last_hello <= hello_timeout);
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.neighbors.contains_key(&id)
    }

    pub fn get(&self, id: NodeId) -> Option<&NeighborInfo> {
        self.neighbors.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &NeighborInfo)> {
        self.neighbors.iter()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Count of one-hop plus distinct two-hop neighbors (excluding self).
    pub fn two_hop_count(&self, self_id: NodeId) -> usize {
        let mut known: BTreeSet<NodeId> = self.neighbors.keys().copied().collect();
        for info in self.neighbors.values() {
            known.extend(
                info.their_neighbors
                    .iter()
                    .map(|(id, _)| *id)
                    .filter(|id| *id != self_id),
            );
        }
        known.len()
    }

    /// Distinct flow ids witnessed across the neighborhood (self's own
    /// witnessed set is supplied by the caller).
    pub fn distinct_flows(&self, own: &BTreeSet<FlowId>) -> usize {
        let mut flows: BTreeSet<FlowId> = own.clone();
        for info in self.neighbors.values() {
            flows.extend(info.witnessed.iter().copied());
        }
        flows.len()
    }

    /// Density inputs for the link-metric module, from the known one-hop
    /// positions.  Degenerate neighborhoods fall back to the node's own
    /// transmission disk.
    pub fn density_estimate(
        &self,
        self_pos: Position,
        own_flows: &BTreeSet<FlowId>,
        self_id: NodeId,
        tx_range: f64,
    ) -> DensityEstimate {
        let mut points: Vec<Position> = vec![self_pos];
        points.extend(self.neighbors.values().map(|i| i.position));
        let area = hull_area(&points, tx_range);
        let flow_density = self.distinct_flows(own_flows) as f64 / area;
        let node_density = self.two_hop_count(self_id) as f64 / area;
        DensityEstimate::new(flow_density, node_density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn hello(origin: NodeId, t: f64) -> HelloPacket {
        HelloPacket {
            origin,
            origin_position: Position::new(origin as f64, 0.0),
            timestamp: t,
            neighbor_entries: vec![],
            pu_entries: vec![],
            witnessed_flows: vec![],
        }
    }

    fn coeff() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn hello_content_classes() {
        let pkt = HelloPacket {
            origin: 0,
            origin_position: Position::new(0.0, 0.0),
            timestamp: 1.0,
            neighbor_entries: vec![(1, coeff()), (2, coeff())],
            pu_entries: vec![(0, coeff())],
            witnessed_flows: vec![],
        };
        assert!(pkt.validate());
        assert_eq!(pkt.neighbor_entries.len(), 2);
        assert_eq!(pkt.pu_entries.len(), 1);
        assert!(pkt.witnessed_flows.is_empty());
    }

    #[test]
    fn newer_hello_wins_stale_ignored() {
        let mut state = NeighborState::new();
        let mut first = hello(7, 1.0);
        first.witnessed_flows = vec![3];
        state.handle_hello(&first, coeff());
        let mut second = hello(7, 2.0);
        second.witnessed_flows = vec![4];
        state.handle_hello(&second, coeff());
        assert_eq!(state.get(7).unwrap().witnessed, BTreeSet::from([4]));
        // A late-arriving older packet changes nothing.
        state.handle_hello(&first, coeff());
        assert_eq!(state.get(7).unwrap().witnessed, BTreeSet::from([4]));
    }

    #[test]
    fn silence_evicts() {
        let mut state = NeighborState::new();
        state.handle_hello(&hello(1, 0.0), coeff());
        state.handle_hello(&hello(2, 2.5), coeff());
        state.evict_stale(3.2, 3.0);
        assert!(!state.contains(1));
        assert!(state.contains(2));
    }

    #[test]
    fn two_hop_counting() {
        let mut state = NeighborState::new();
        let mut h = hello(1, 0.0);
        h.neighbor_entries = vec![(0, coeff()), (2, coeff()), (3, coeff())];
        state.handle_hello(&h, coeff());
        // Self (0) is filtered; 1 is one-hop; 2 and 3 are two-hop.
        assert_eq!(state.two_hop_count(0), 3);
    }
}
