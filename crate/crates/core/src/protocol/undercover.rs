//! Route discovery: RREQ handling, route replies, and next-hop selection.
//!
//! A node receiving an RREQ replies only when it is strictly closer to
//! the destination than the requester.  The reply algorithm runs three
//! phases: collect potential next hops (neighbors strictly closer to the
//! destination than the replier), bound the group size with the
//! elimination heuristic, and maximize the composite metric over all
//! candidate groups for every next hop.  The best metric travels back in
//! the RREP; the requester acknowledges the best replier, which confirms
//! with an AREP and later coordinates the group transmission.

use crate::channel::{ChannelCoeff, RadioConfig};
use crate::geometry::{estimate_affected_flows, interference_radius, Position, PropagationConfig};
use crate::beam::capacity_p2p;
use crate::metric::{
    count_flow_neighbors, link_metric, max_group_size, search_best, CandidateInputs,
    LinkCandidate, ThresholdTable,
};
use crate::protocol::hello::NeighborState;
use crate::{FlowId, NodeId, PuId};
use std::collections::{BTreeMap, BTreeSet};

/// Route request, broadcast by the holder of a data packet.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub source: NodeId,
    pub source_position: Position,
    pub dest: NodeId,
    pub dest_position: Position,
    pub flow: FlowId,
}

/// Route reply carrying the replier's best link-candidate metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteReply {
    pub rreq_source: NodeId,
    pub dest: NodeId,
    pub replier: NodeId,
    pub metric: f64,
}

/// Acknowledgment to the winning replier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ack {
    pub requester: NodeId,
    pub chosen: NodeId,
    pub flow: FlowId,
}

/// Confirmation from the winner back to the requester.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckReply {
    pub relay: NodeId,
    pub requester: NodeId,
    pub flow: FlowId,
}

/// Channel oracle used while scoring candidate groups.  PU channel
/// knowledge is assumed reliable, so the lookup returns current truth.
pub trait ChannelLookup {
    fn su(&self, a: NodeId, b: NodeId) -> ChannelCoeff;
}

/// Snapshot a node needs to answer one RREQ.
pub struct RreqView<'a> {
    pub self_id: NodeId,
    pub self_position: Position,
    pub rreq: &'a RouteRequest,
    pub neighbors: &'a NeighborState,
    pub own_witnessed: &'a BTreeSet<FlowId>,
    /// Active in-range PU channels for this node and each neighbor.
    pub active_pu_channels: &'a BTreeMap<NodeId, Vec<(PuId, ChannelCoeff)>>,
    pub channels: &'a dyn ChannelLookup,
    pub table: &'a ThresholdTable,
    pub beta: f64,
    pub radio: RadioConfig,
    pub prop: PropagationConfig,
    pub su_range: f64,
    pub max_enumeration_neighbors: usize,
}

/// Outcome of processing one RREQ.
#[derive(Debug, Clone)]
pub enum RreqOutcome {
    /// Send an RREP; keep the candidate to execute if the ACK arrives.
    Reply {
        reply: RouteReply,
        candidate: LinkCandidate,
        /// Feasible candidates scored, for the opportunities-gain metric.
        opportunities: usize,
    },
    Discard,
}

/// Apply the route-reply algorithm for one received RREQ.
pub fn handle_rreq(view: &RreqView<'_>) -> RreqOutcome {
    let rreq = view.rreq;
    let d_req = rreq.source_position.distance(&rreq.dest_position);

    // Terminal case: the destination itself replies with a
    // direct-delivery candidate whose capacity is the last hop's.
    if view.self_id == rreq.dest {
        let h = view.channels.su(rreq.source, view.self_id);
        let c = capacity_p2p(h, &view.radio);
        let (adjacency, carriers) = neighborhood_flows(view);
        let n_n = count_flow_neighbors(&[view.self_id], &adjacency, &carriers);
        let metric = link_metric(c, n_n, 0.0, 1, view.beta);
        let candidate = LinkCandidate {
            relay: view.self_id,
            next_hop: view.self_id,
            group: vec![view.self_id],
            coordinator: view.self_id,
            effective_capacity: c,
            n_n,
            n_f: 0.0,
            metric,
        };
        return RreqOutcome::Reply {
            reply: RouteReply {
                rreq_source: rreq.source,
                dest: rreq.dest,
                replier: view.self_id,
                metric,
            },
            candidate,
            opportunities: 1,
        };
    }

    // Only nodes strictly closer to the destination reply.
    let d_self = view.self_position.distance(&rreq.dest_position);
    if d_self >= d_req {
        return RreqOutcome::Discard;
    }

    // Potential next hops: neighbors strictly closer than this node.
    // A next hop under active PU coverage would strand the packet (it
    // could not hand it off on the data channel), so covered candidates
    // are skipped unless they are the destination itself; covered
    // *relays* stay usable, since their group egress is nulled.
    let next_hops: Vec<NodeId> = view
        .neighbors
        .iter()
        .filter(|(id, info)| {
            **id != rreq.source
                && info.position.distance(&rreq.dest_position) < d_self
                && (**id == rreq.dest
                    || view.active_pu_channels.get(*id).map_or(true, |l| l.is_empty()))
        })
        .map(|(id, _)| *id)
        .collect();
    if next_hops.is_empty() {
        return RreqOutcome::Discard;
    }

    // Grouping pool: every neighbor, nearest first, capped to keep the
    // subset enumeration bounded.  The requesting previous hop is a
    // legitimate member: it already holds the packet, so its antenna
    // joins the cooperative phase at zero dissemination cost (the relay
    // example's source-inclusive group).
    let mut pool: Vec<NodeId> = view.neighbors.iter().map(|(id, _)| *id).collect();
    pool.sort_by(|a, b| {
        let da = view.neighbors.get(*a).unwrap().position.distance(&view.self_position);
        let db = view.neighbors.get(*b).unwrap().position.distance(&view.self_position);
        da.partial_cmp(&db).unwrap().then(a.cmp(b))
    });
    pool.truncate(view.max_enumeration_neighbors);

    let m = view
        .active_pu_channels
        .get(&view.self_id)
        .map_or(0, |v| v.len());
    let min_size = m + 1;

    // Density estimates and the interference footprint.
    let density = view.neighbors.density_estimate(
        view.self_position,
        view.own_witnessed,
        view.self_id,
        view.su_range,
    );
    let d_r = interference_radius(1.0, view.radio.power, &view.prop);
    let n_f = estimate_affected_flows(density.flow_density, d_r);

    // N_min: the flow-carrying neighborhood of the smallest admissible
    // group, taken once per RREQ as the relay plus its M nearest pool
    // members.
    let (adjacency, carriers) = neighborhood_flows(view);
    let mut min_group: Vec<NodeId> = std::iter::once(view.self_id)
        .chain(pool.iter().copied().take(m))
        .collect();
    min_group.sort_unstable();
    let n_min = (count_flow_neighbors(&min_group, &adjacency, &carriers) as f64).max(1.0);

    let max_size = match max_group_size(density.flows_per_node, n_min, m, view.table, pool.len()) {
        Ok(s) => s,
        Err(_) => return RreqOutcome::Discard,
    };

    let mut best: Option<LinkCandidate> = None;
    let mut opportunities = 0usize;
    for w in next_hops {
        let pool_w: Vec<NodeId> = pool.iter().copied().filter(|id| *id != w).collect();
        let mut target_channels: BTreeMap<NodeId, ChannelCoeff> = BTreeMap::new();
        let mut dissemination: BTreeMap<NodeId, Option<f64>> = BTreeMap::new();
        target_channels.insert(view.self_id, view.channels.su(view.self_id, w));
        for member in &pool_w {
            target_channels.insert(*member, view.channels.su(*member, w));
            // Dissemination estimate.  The requester holds the packet by
            // definition.  While a PU constrains this node it cannot
            // feed helpers over the data channel at all, so only helpers
            // that will overhear the requester's delivery are usable
            // (free); the rest are priced as unusable.  With no
            // constraint, every helper is priced at its dissemination
            // capacity; helpers that turn out to overhear are skipped at
            // execution time, which only improves on the score.
            let cap = if *member == rreq.source {
                None
            } else if m > 0 {
                let overhears = view.neighbors.get(*member).map_or(false, |info| {
                    info.position.distance(&rreq.source_position) <= view.su_range
                });
                if overhears {
                    None
                } else {
                    Some(0.0)
                }
            } else {
                Some(capacity_p2p(view.channels.su(view.self_id, *member), &view.radio))
            };
            dissemination.insert(*member, cap);
        }
        let inputs = CandidateInputs {
            relay: view.self_id,
            next_hop: w,
            pool: pool_w,
            target_channels,
            pu_channels: view.active_pu_channels.clone(),
            dissemination,
            adjacency: adjacency.clone(),
            flow_carriers: carriers.clone(),
            n_f,
            beta: view.beta,
            radio: view.radio,
        };
        let (cand, count) = search_best(&inputs, min_size, max_size);
        opportunities += count;
        if let Some(c) = cand {
            let better = best.as_ref().map_or(true, |b| c.better_than(b));
            if better {
                best = Some(c);
            }
        }
    }

    match best {
        Some(best) => RreqOutcome::Reply {
            reply: RouteReply {
                rreq_source: rreq.source,
                dest: rreq.dest,
                replier: view.self_id,
                metric: best.metric,
            },
            candidate: best.clone(),
            opportunities,
        },
        None => RreqOutcome::Discard,
    }
}

/// Adjacency and flow-carrier sets as this node can know them: direct
/// neighbors expose their own neighbor lists and witnessed flows through
/// hellos; two-hop nodes with unknown flow state are not counted.
fn neighborhood_flows(
    view: &RreqView<'_>,
) -> (BTreeMap<NodeId, BTreeSet<NodeId>>, BTreeSet<NodeId>) {
    let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    adjacency.insert(view.self_id, view.neighbors.ids().collect());
    let mut carriers: BTreeSet<NodeId> = BTreeSet::new();
    if !view.own_witnessed.is_empty() {
        carriers.insert(view.self_id);
    }
    for (id, info) in view.neighbors.iter() {
        adjacency.insert(*id, info.their_neighbors.iter().map(|(n, _)| *n).collect());
        if !info.witnessed.is_empty() {
            carriers.insert(*id);
        }
    }
    (adjacency, carriers)
}

/// Pick the winner among collected replies: maximal metric, ties broken
/// by the smallest replier id.
pub fn select_next_hop(replies: &[RouteReply]) -> Option<NodeId> {
    let mut best: Option<&RouteReply> = None;
    for r in replies {
        best = match best {
            None => Some(r),
            Some(b) if r.metric > b.metric || (r.metric == b.metric && r.replier < b.replier) => {
                Some(r)
            }
            keep => keep,
        };
    }
    best.map(|r| r.replier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelModel;
    use crate::metric::ThresholdTable;
    use crate::protocol::hello::HelloPacket;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    struct FixedChannels;
    impl ChannelLookup for FixedChannels {
        fn su(&self, a: NodeId, b: NodeId) -> ChannelCoeff {
            // Deterministic nontrivial gains.
            let k = (a.min(b) * 31 + a.max(b)) as f64;
            Complex64::new(1.0 + (k * 0.37).sin() * 0.5, (k * 0.11).cos() * 0.5)
        }
    }

    fn test_table() -> ThresholdTable {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        ThresholdTable::generate(
            &ChannelModel::unit(1.0),
            &RadioConfig::new(1.0, 1.0, 1.0),
            6,
            2,
            10_000,
            &mut rng,
        )
    }

    fn neighbor_state(entries: &[(NodeId, Position)]) -> NeighborState {
        let mut s = NeighborState::new();
        for (id, pos) in entries {
            s.handle_hello(
                &HelloPacket {
                    origin: *id,
                    origin_position: *pos,
                    timestamp: 0.0,
                    neighbor_entries: vec![],
                    pu_entries: vec![],
                    witnessed_flows: vec![],
                },
                Complex64::new(1.0, 0.0),
            );
        }
        s
    }

    fn base_view<'a>(
        self_id: NodeId,
        self_position: Position,
        rreq: &'a RouteRequest,
        neighbors: &'a NeighborState,
        own: &'a BTreeSet<FlowId>,
        pus: &'a BTreeMap<NodeId, Vec<(PuId, ChannelCoeff)>>,
        table: &'a ThresholdTable,
        channels: &'a FixedChannels,
    ) -> RreqView<'a> {
        RreqView {
            self_id,
            self_position,
            rreq,
            neighbors,
            own_witnessed: own,
            active_pu_channels: pus,
            channels,
            table,
            beta: 0.5,
            radio: RadioConfig::new(1.0, 1.0, 1.0),
            prop: PropagationConfig::new(9.9e-5, 1.0),
            su_range: 125.0,
            max_enumeration_neighbors: 12,
        }
    }

    #[test]
    fn farther_node_discards() {
        let rreq = RouteRequest {
            source: 0,
            source_position: Position::new(0.0, 0.0),
            dest: 9,
            dest_position: Position::new(10.0, 0.0),
            flow: 1,
        };
        let neighbors = neighbor_state(&[]);
        let own = BTreeSet::new();
        let pus = BTreeMap::new();
        let table = test_table();
        let ch = FixedChannels;
        // Requester is 10 m from the destination; we are 12 m away.
        let view = base_view(5, Position::new(-2.0, 0.0), &rreq, &neighbors, &own, &pus, &table, &ch);
        assert!(matches!(handle_rreq(&view), RreqOutcome::Discard));
    }

    #[test]
    fn destination_replies_directly() {
        let rreq = RouteRequest {
            source: 0,
            source_position: Position::new(0.0, 0.0),
            dest: 9,
            dest_position: Position::new(10.0, 0.0),
            flow: 1,
        };
        let neighbors = neighbor_state(&[]);
        let own = BTreeSet::new();
        let pus = BTreeMap::new();
        let table = test_table();
        let ch = FixedChannels;
        let view = base_view(9, Position::new(10.0, 0.0), &rreq, &neighbors, &own, &pus, &table, &ch);
        match handle_rreq(&view) {
            RreqOutcome::Reply {
                reply,
                candidate,
                opportunities,
            } => {
                assert_eq!(reply.replier, 9);
                assert_eq!(candidate.group, vec![9]);
                assert_eq!(opportunities, 1);
                assert!(candidate.metric > 0.0);
            }
            RreqOutcome::Discard => panic!("destination must reply"),
        }
    }

    #[test]
    fn closer_node_with_next_hop_replies() {
        let rreq = RouteRequest {
            source: 0,
            source_position: Position::new(0.0, 0.0),
            dest: 9,
            dest_position: Position::new(200.0, 0.0),
            flow: 1,
        };
        // Self at 100 m from origin; neighbors: the requester, one node
        // closer to the destination, and one helper.
        let neighbors = neighbor_state(&[
            (0, Position::new(0.0, 0.0)),
            (2, Position::new(150.0, 0.0)),
            (3, Position::new(100.0, 30.0)),
        ]);
        let own = BTreeSet::new();
        let pus = BTreeMap::new();
        let table = test_table();
        let ch = FixedChannels;
        let view = base_view(1, Position::new(100.0, 0.0), &rreq, &neighbors, &own, &pus, &table, &ch);
        match handle_rreq(&view) {
            RreqOutcome::Reply { opportunities, candidate, .. } => {
                // Next hop must be node 2; the pool is the requester plus
                // the helper, so groups are {1}, {0,1}, {1,3}, {0,1,3}.
                assert_eq!(candidate.next_hop, 2);
                assert_eq!(opportunities, 4);
            }
            RreqOutcome::Discard => panic!("expected a reply"),
        }
    }

    #[test]
    fn pu_without_helpers_discards() {
        let rreq = RouteRequest {
            source: 0,
            source_position: Position::new(0.0, 0.0),
            dest: 9,
            dest_position: Position::new(200.0, 0.0),
            flow: 1,
        };
        // Only neighbor is the potential next hop; with one PU in range a
        // size-2 group is required but no helper exists.
        let neighbors = neighbor_state(&[(2, Position::new(150.0, 0.0))]);
        let own = BTreeSet::new();
        let mut pus = BTreeMap::new();
        pus.insert(1u32, vec![(0u32, Complex64::new(0.5, 0.2))]);
        let table = test_table();
        let ch = FixedChannels;
        let view = base_view(1, Position::new(100.0, 0.0), &rreq, &neighbors, &own, &pus, &table, &ch);
        assert!(matches!(handle_rreq(&view), RreqOutcome::Discard));
    }

    #[test]
    fn select_winner_by_metric_then_id() {
        let mk = |replier, metric| RouteReply {
            rreq_source: 0,
            dest: 9,
            replier,
            metric,
        };
        assert_eq!(select_next_hop(&[mk(1, 0.7), mk(2, 0.9)]), Some(2));
        assert_eq!(select_next_hop(&[mk(4, 0.4)]), Some(4));
        assert_eq!(select_next_hop(&[mk(5, 0.4), mk(3, 0.4)]), Some(3));
        assert_eq!(select_next_hop(&[]), None);
    }
}
