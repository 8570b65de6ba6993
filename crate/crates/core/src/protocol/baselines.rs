//! Simplified comparison routers.
//!
//! Both baselines avoid active primary users and never cooperate:
//!
//! - **LocationGreedy** stands in for location-aided local routing.  Next
//!   hops are picked purely from local neighbor state: the best-channel
//!   neighbor that is strictly closer to the destination and outside
//!   every active PU's interference range.  One route-setup control
//!   packet per selection.
//! - **FloodingDiscovery** stands in for global on-demand discovery.  A
//!   breadth-first RREQ flood explores links not blocked by active PUs
//!   and the destination answers along the reverse path; every
//!   rebroadcast and reply hop counts as one control packet.

use crate::channel::ChannelCoeff;
use crate::geometry::Position;
use crate::NodeId;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Which baseline a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    LocationGreedy,
    FloodingDiscovery,
}

/// One neighbor as seen by the greedy selector.
#[derive(Debug, Clone, Copy)]
pub struct GreedyNeighbor {
    pub id: NodeId,
    pub position: Position,
    pub coeff: ChannelCoeff,
    /// Inside some active PU's interference range right now.
    pub pu_blocked: bool,
}

/// Greedy next-hop choice: among neighbors strictly closer to the
/// destination and not inside any active PU's interference range, pick
/// the one with the best channel (ties broken by smallest id).  `None`
/// means no usable neighbor exists and the packet is dropped.
pub fn greedy_next_hop(
    self_position: Position,
    dest: NodeId,
    dest_position: Position,
    neighbors: &[GreedyNeighbor],
) -> Option<NodeId> {
    let d_self = self_position.distance(&dest_position);
    let mut best: Option<&GreedyNeighbor> = None;
    for n in neighbors {
        if n.pu_blocked && n.id != dest {
            continue;
        }
        let d = n.position.distance(&dest_position);
        if d >= d_self {
            continue;
        }
        best = match best {
            None => Some(n),
            Some(b) => {
                let (gb, gn) = (b.coeff.norm_sqr(), n.coeff.norm_sqr());
                if gn > gb || (gn == gb && n.id < b.id) {
                    Some(n)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.map(|n| n.id)
}

/// Result of one flood: the hop path from source to destination and the
/// control packets it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct FloodOutcome {
    /// Node sequence, source first, destination last.
    pub path: Vec<NodeId>,
    /// RREQ rebroadcasts plus reverse-path RREP transmissions.
    pub control_packets: u64,
}

/// Breadth-first RREQ flood.  A node inside an active PU's interference
/// range can hear the flood but must not rebroadcast (its control rides
/// the licensed band in this simplified model), so routes never cross PU
/// territory.  Every rebroadcast counts once; the destination's RREP
/// retraces the parent pointers and counts once per hop.
pub fn flood_discover(
    source: NodeId,
    dest: NodeId,
    adjacency: &BTreeMap<NodeId, Vec<NodeId>>,
    blocked: &BTreeSet<NodeId>,
) -> Result<FloodOutcome, u64> {
    let mut control = 0u64;
    if blocked.contains(&source) {
        // The source cannot even emit the request.
        return Err(control);
    }
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut seen: BTreeSet<NodeId> = BTreeSet::from([source]);
    let mut queue: VecDeque<NodeId> = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        // u rebroadcasts (the source's initial broadcast counts too).
        control += 1;
        if let Some(neigh) = adjacency.get(&u) {
            for v in neigh {
                if seen.contains(v) {
                    continue;
                }
                seen.insert(*v);
                parent.insert(*v, u);
                if *v == dest {
                    // Reverse-path reply; the destination itself must be
                    // free to transmit it.
                    if blocked.contains(v) {
                        return Err(control);
                    }
                    let mut path = vec![*v];
                    let mut cur = *v;
                    while cur != source {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    control += (path.len() - 1) as u64;
                    return Ok(FloodOutcome {
                        path,
                        control_packets: control,
                    });
                }
                if !blocked.contains(v) {
                    queue.push_back(*v);
                }
            }
        }
    }
    Err(control)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn gn(id: NodeId, x: f64, gain: f64, blocked: bool) -> GreedyNeighbor {
        GreedyNeighbor {
            id,
            position: Position::new(x, 0.0),
            coeff: Complex64::new(gain.sqrt(), 0.0),
            pu_blocked: blocked,
        }
    }

    #[test]
    fn greedy_picks_best_channel_among_closer() {
        let neighbors = [
            gn(1, 50.0, 1.0, false),
            gn(2, 60.0, 4.0, false),
            gn(3, 40.0, 2.0, false),
            gn(4, 250.0, 9.0, false), // farther from the destination: ignored
        ];
        let next = greedy_next_hop(
            Position::new(0.0, 0.0),
            9,
            Position::new(100.0, 0.0),
            &neighbors,
        );
        assert_eq!(next, Some(2));
    }

    #[test]
    fn greedy_fails_when_all_blocked() {
        let neighbors = [gn(1, 50.0, 1.0, true), gn(2, 60.0, 4.0, true)];
        let next = greedy_next_hop(
            Position::new(0.0, 0.0),
            9,
            Position::new(100.0, 0.0),
            &neighbors,
        );
        assert_eq!(next, None);
    }

    #[test]
    fn greedy_single_candidate_wins_regardless_of_gain() {
        let neighbors = [gn(7, 80.0, 0.001, false)];
        let next = greedy_next_hop(
            Position::new(0.0, 0.0),
            9,
            Position::new(100.0, 0.0),
            &neighbors,
        );
        assert_eq!(next, Some(7));
    }

    fn line_adjacency(n: u32) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj = BTreeMap::new();
        for i in 0..n {
            let mut v = Vec::new();
            if i > 0 {
                v.push(i - 1);
            }
            if i + 1 < n {
                v.push(i + 1);
            }
            adj.insert(i, v);
        }
        adj
    }

    #[test]
    fn flood_line_topology() {
        let adj = line_adjacency(4);
        let out = flood_discover(0, 3, &adj, &BTreeSet::new()).unwrap();
        assert_eq!(out.path, vec![0, 1, 2, 3]);
        // Rebroadcasts by 0, 1, 2 plus 3 reverse-path hops.
        assert_eq!(out.control_packets, 6);
    }

    #[test]
    fn flood_disconnected_fails() {
        let mut adj = line_adjacency(2);
        adj.insert(5, vec![6]);
        adj.insert(6, vec![5]);
        assert!(flood_discover(0, 6, &adj, &BTreeSet::new()).is_err());
    }

    #[test]
    fn flood_respects_blocked_relays() {
        let adj = line_adjacency(4);
        let blocked = BTreeSet::from([1]);
        assert!(flood_discover(0, 3, &adj, &blocked).is_err());
    }
}
