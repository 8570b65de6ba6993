//! Interference-aware composite link metric and cooperative-group search.
//!
//! The metric of a candidate link is the effective capacity divided by an
//! interference term mixing the flow-carrying neighborhood of the group
//! (`N_n`) with the estimated number of flows inside its interference
//! footprint (`N_f`), weighted by the altruism parameter `beta`:
//!
//! ```text
//! LC = C_hat / (N_n + beta * (N_f - N_n))
//! ```
//!
//! Group search enumerates every subset of the relay's eligible neighbors
//! between the minimum feasible size (`PUs + 1`) and a maximum size chosen
//! by the elimination heuristic, which excludes sizes whose projected
//! interference growth exceeds the average capacity gain they could buy
//! (the regenerated threshold table).

use crate::beam::{effective_capacity, NullWorkspace};
use crate::channel::{ChannelCoeff, ChannelModel, RadioConfig};
use crate::{FlowId, NodeId, PuId};
use num_complex::Complex64;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricError {
    /// Fewer usable neighbors than surrounding PUs: no group can satisfy
    /// `N > M`.
    #[error("no feasible group: {neighbors} neighbors cannot null {pus} primary users")]
    NoFeasibleGroup { neighbors: usize, pus: usize },
}

/// Tuning knobs of the link-metric computation.
#[derive(Debug, Clone)]
pub struct MetricConfig {
    /// Altruistic/egoistic mixing parameter in `[0, 1]`.
    pub beta: f64,
    /// Regenerated acceptable-gain thresholds.
    pub thresholds: ThresholdTable,
    /// Nearest-neighbor cap on the grouping pool; bounds the subset
    /// enumeration at `2^max_enumeration_neighbors`.
    pub max_enumeration_neighbors: usize,
}

impl MetricConfig {
    pub fn new(beta: f64, thresholds: ThresholdTable, max_enumeration_neighbors: usize) -> Self {
        assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1]");
        Self {
            beta,
            thresholds,
            max_enumeration_neighbors,
        }
    }
}

/// Acceptable percentage increase in `N_n` per (PU count, group size),
/// relative to the minimum allowable group size.  Entries are defined for
/// `j > M`; the self entry at `j = M + 1` is zero by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    max_pus: usize,
    max_size: usize,
    /// `rows[m][k]` holds the entry for group size `j = m + 1 + k`.
    rows: Vec<Vec<f64>>,
}

impl ThresholdTable {
    /// Regenerate the table by Monte Carlo: the entry for `M` PUs and
    /// group size `j` is the mean percentage capacity gain of a size-`j`
    /// group over the minimum allowable size `M + 1`.
    pub fn generate<R: Rng + ?Sized>(
        model: &ChannelModel,
        radio: &RadioConfig,
        max_size: usize,
        max_pus: usize,
        samples: usize,
        rng: &mut R,
    ) -> Self {
        assert!(samples >= 10_000, "need at least 1e4 Monte Carlo samples");
        assert!(max_size > max_pus, "largest size must exceed the PU count");
        let mut rows = Vec::with_capacity(max_pus + 1);
        for m in 0..=max_pus {
            let base = crate::beam::avg_max_capacity(m + 1, m, samples, rng, model, radio)
                .expect("minimum group size is always feasible");
            let mut row = vec![0.0];
            for j in (m + 2)..=max_size {
                let avg = crate::beam::avg_max_capacity(j, m, samples, rng, model, radio)
                    .expect("j > m by construction");
                row.push(100.0 * (avg - base) / base);
            }
            rows.push(row);
        }
        Self {
            max_pus,
            max_size,
            rows,
        }
    }

    pub fn max_pus(&self) -> usize {
        self.max_pus
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Entry for `m` PUs and group size `j`.  Sizes beyond the table's
    /// last column saturate at the last entry; `None` when the PU count
    /// is not covered or `j <= m`.
    pub fn entry(&self, m: usize, j: usize) -> Option<f64> {
        if m > self.max_pus || j <= m {
            return None;
        }
        let row = &self.rows[m];
        let k = (j - m - 1).min(row.len() - 1);
        Some(row[k])
    }

    /// Plain-text rendering: rows by PU count, columns by group size,
    /// one decimal, blank below the minimum allowable size.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12}", "Group Size"));
        for j in 2..=self.max_size {
            out.push_str(&format!("{j:>9}"));
        }
        out.push('\n');
        for m in 0..=self.max_pus {
            out.push_str(&format!("{:<12}", format!("{m} PU")));
            for j in 2..=self.max_size {
                match self.entry(m, j) {
                    // Saturated columns do not exist in the layout.
                    Some(v) if j <= self.max_size => out.push_str(&format!("{v:>9.1}")),
                    _ => out.push_str(&format!("{:>9}", "")),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Hand-built table for tests.
    pub fn from_rows(max_pus: usize, max_size: usize, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(rows.len(), max_pus + 1);
        for (m, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), max_size - m, "row {m} must cover sizes {}..={max_size}", m + 1);
        }
        Self {
            max_pus,
            max_size,
            rows,
        }
    }
}

/// A scored cooperative-transmission possibility: the relay plus a group
/// of helpers delivering to one next hop.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCandidate {
    pub relay: NodeId,
    pub next_hop: NodeId,
    /// Sorted member ids, always containing the relay.
    pub group: Vec<NodeId>,
    /// The relay coordinates dissemination.
    pub coordinator: NodeId,
    /// min(cooperative capacity, dissemination bottleneck), bits/s.
    pub effective_capacity: f64,
    /// Flow-carrying direct neighbors of the group.
    pub n_n: usize,
    /// Estimated flows inside the interference footprint (0 for a single
    /// transmitter).
    pub n_f: f64,
    /// Composite metric value, bits/s.
    pub metric: f64,
}

impl LinkCandidate {
    /// Deterministic total order: higher metric wins, ties prefer the
    /// smaller group, then the lexicographically smallest member set.
    pub fn better_than(&self, other: &LinkCandidate) -> bool {
        if self.metric != other.metric {
            return self.metric > other.metric;
        }
        if self.group.len() != other.group.len() {
            return self.group.len() < other.group.len();
        }
        self.group < other.group
    }
}

/// Number of flow-carrying direct neighbors of all participating nodes:
/// the union of each member's flow-carrying neighbors, excluding the
/// group itself.  A neighbor relaying no flow is not counted.
pub fn count_flow_neighbors(
    group: &[NodeId],
    adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    flow_carriers: &BTreeSet<NodeId>,
) -> usize {
    let members: BTreeSet<NodeId> = group.iter().copied().collect();
    let mut counted: BTreeSet<NodeId> = BTreeSet::new();
    for m in group {
        if let Some(neigh) = adjacency.get(m) {
            for v in neigh {
                if flow_carriers.contains(v) && !members.contains(v) {
                    counted.insert(*v);
                }
            }
        }
    }
    counted.len()
}

/// Composite link metric.  For single transmitters the external
/// interference term is dropped; the denominator is floored at one so
/// interference-free candidates stay ordered by capacity.
pub fn link_metric(c_hat: f64, n_n: usize, n_f: f64, group_size: usize, beta: f64) -> f64 {
    assert!(c_hat >= 0.0);
    assert!((0.0..=1.0).contains(&beta));
    let nn = n_n as f64;
    let den = if group_size >= 2 {
        nn + beta * (n_f - nn)
    } else {
        nn
    };
    c_hat / den.max(1.0)
}

/// Largest admissible group size for the elimination heuristic: the
/// biggest `j <= neighbor_count + 1` whose projected interference growth
/// `100 (j F_n - N_min) / N_min` stays within the table's acceptable
/// capacity gain, floored at the minimum allowable size `M + 1`.
///
/// PU counts beyond the table fall back to `M + 2` (documented
/// extrapolation); sizes beyond the table reuse its last column.
pub fn max_group_size(
    f_n: f64,
    n_min: f64,
    m: usize,
    table: &ThresholdTable,
    neighbor_count: usize,
) -> Result<usize, MetricError> {
    assert!(n_min >= 1.0, "N_min must be at least one");
    if neighbor_count + 1 <= m {
        return Err(MetricError::NoFeasibleGroup {
            neighbors: neighbor_count,
            pus: m,
        });
    }
    let hard_cap = neighbor_count + 1;
    if m > table.max_pus() {
        return Ok((m + 2).min(hard_cap));
    }
    let mut best = m + 1;
    for j in (m + 1)..=hard_cap {
        let factor = 100.0 * (j as f64 * f_n - n_min) / n_min;
        if let Some(threshold) = table.entry(m, j) {
            if factor <= threshold {
                best = j;
            }
        }
    }
    Ok(best.min(hard_cap))
}

/// Everything needed to score one (relay, next hop) pair's candidate
/// groups, assembled by the caller from protocol state.
#[derive(Debug, Clone)]
pub struct CandidateInputs {
    pub relay: NodeId,
    pub next_hop: NodeId,
    /// Eligible co-members (relay excluded), nearest first, already
    /// stripped of the next hop and the requesting previous hop.
    pub pool: Vec<NodeId>,
    /// Channel from each member (and the relay) toward the next hop.
    pub target_channels: BTreeMap<NodeId, ChannelCoeff>,
    /// Active in-range PU channels per member; a PU absent from a
    /// member's list contributes a zero entry in that member's column.
    pub pu_channels: BTreeMap<NodeId, Vec<(PuId, ChannelCoeff)>>,
    /// Dissemination capacity from the coordinator per pool member;
    /// `None` marks members that already hold the packet by overhearing.
    pub dissemination: BTreeMap<NodeId, Option<f64>>,
    /// Direct neighbors per member, for `N_n`.
    pub adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Nodes known to carry at least one flow.
    pub flow_carriers: BTreeSet<NodeId>,
    /// Estimated flows inside the group interference footprint; constant
    /// across subsets because total weight power is normalized to one.
    pub n_f: f64,
    pub beta: f64,
    pub radio: RadioConfig,
}

/// One participant (the relay or a pool member) with everything the
/// per-subset kernel needs, held in id order so column order is
/// deterministic.
#[derive(Debug, Clone)]
struct Slot {
    id: NodeId,
    is_relay: bool,
    /// Bit in the subset mask (unused for the relay).
    pool_bit: u32,
    target: Complex64,
    dissemination: Option<f64>,
    /// Bit per entry of the active-PU list this member is in range of.
    pu_mask: u32,
    /// Coefficient toward each active PU (zero when out of range).
    pu_coeff: Vec<Complex64>,
    /// Flow-carrying direct neighbors, as bits of the carrier universe.
    carrier_mask: u128,
    /// This member's own bit in the carrier universe (subtracted from
    /// the union: the group does not contend with itself).
    self_bit: u128,
}

/// Reusable group-scoring state for one (relay, next hop) pair.  Every
/// subset of the pool is addressed by a bitmask; the relay is always a
/// member.  [`score_group`], [`enumerate_candidates`] and
/// [`search_best`] all run the same kernel, so their metric values are
/// bit-identical.
pub struct GroupScorer<'a> {
    inputs: &'a CandidateInputs,
    slots: Vec<Slot>,
    ws: NullWorkspace,
    selected: Vec<usize>,
    pu_rows: Vec<usize>,
}

/// Kernel output for one subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredGroup {
    pub metric: f64,
    pub effective_capacity: f64,
    pub n_n: usize,
    pub n_f: f64,
    pub size: usize,
}

impl<'a> GroupScorer<'a> {
    pub fn new(inputs: &'a CandidateInputs) -> Self {
        assert!(inputs.pool.len() <= 20, "grouping pool must be capped by the caller");
        // Active-PU universe across relay and pool, in id order.
        let mut pu_ids: BTreeSet<PuId> = BTreeSet::new();
        for id in std::iter::once(&inputs.relay).chain(&inputs.pool) {
            if let Some(list) = inputs.pu_channels.get(id) {
                pu_ids.extend(list.iter().map(|(p, _)| *p));
            }
        }
        let pu_ids: Vec<PuId> = pu_ids.into_iter().collect();
        assert!(pu_ids.len() <= 32, "active PU universe exceeds 32");

        // Carrier universe: flow-carrying direct neighbors of any
        // participant, plus the participants themselves (so member bits
        // can be subtracted from the union).
        let mut universe: BTreeSet<NodeId> = BTreeSet::new();
        for id in std::iter::once(&inputs.relay).chain(&inputs.pool) {
            if let Some(neigh) = inputs.adjacency.get(id) {
                for v in neigh {
                    if inputs.flow_carriers.contains(v) {
                        universe.insert(*v);
                    }
                }
            }
        }
        let universe: Vec<NodeId> = universe.into_iter().collect();
        assert!(universe.len() <= 128, "carrier universe exceeds 128");
        let bit_of = |id: NodeId| -> u128 {
            universe
                .binary_search(&id)
                .map(|i| 1u128 << i)
                .unwrap_or(0)
        };

        let mut slots: Vec<Slot> = Vec::with_capacity(inputs.pool.len() + 1);
        for (pool_idx, id) in std::iter::once(&inputs.relay)
            .chain(&inputs.pool)
            .enumerate()
        {
            let id = *id;
            let is_relay = pool_idx == 0;
            let mut pu_mask = 0u32;
            let mut pu_coeff = vec![Complex64::new(0.0, 0.0); pu_ids.len()];
            if let Some(list) = inputs.pu_channels.get(&id) {
                for (p, h) in list {
                    let k = pu_ids.binary_search(p).expect("pu in universe");
                    pu_mask |= 1 << k;
                    pu_coeff[k] = *h;
                }
            }
            let mut carrier_mask = 0u128;
            if let Some(neigh) = inputs.adjacency.get(&id) {
                for v in neigh {
                    if inputs.flow_carriers.contains(v) {
                        carrier_mask |= bit_of(*v);
                    }
                }
            }
            slots.push(Slot {
                id,
                is_relay,
                pool_bit: if is_relay { 0 } else { 1 << (pool_idx - 1) },
                target: inputs.target_channels[&id],
                dissemination: if is_relay {
                    None
                } else {
                    inputs.dissemination.get(&id).copied().flatten()
                },
                pu_mask,
                pu_coeff,
                carrier_mask,
                self_bit: bit_of(id),
            });
        }
        slots.sort_by_key(|s| s.id);
        Self {
            inputs,
            slots,
            ws: NullWorkspace::new(),
            selected: Vec::new(),
            pu_rows: Vec::new(),
        }
    }

    fn select(&mut self, mask: u32) -> usize {
        self.selected.clear();
        for (i, slot) in self.slots.iter().enumerate() {
            if slot.is_relay || (mask & slot.pool_bit) != 0 {
                self.selected.push(i);
            }
        }
        self.selected.len()
    }

    /// Score the subset `relay + mask`.  `None` when the group cannot
    /// satisfy `N > M` for the PUs in range of its members; degenerate
    /// beamforming yields a zero-capacity entry.
    pub fn score_mask(&mut self, mask: u32) -> Option<ScoredGroup> {
        let size = self.select(mask);
        let mut pu_union = 0u32;
        let mut carrier_union = 0u128;
        let mut member_bits = 0u128;
        let mut c_wor = f64::INFINITY;
        for &i in &self.selected {
            let slot = &self.slots[i];
            pu_union |= slot.pu_mask;
            carrier_union |= slot.carrier_mask;
            member_bits |= slot.self_bit;
            if !slot.is_relay {
                if let Some(c) = slot.dissemination {
                    c_wor = c_wor.min(c);
                }
            }
        }
        let m = pu_union.count_ones() as usize;
        if size <= m {
            return None;
        }

        self.pu_rows.clear();
        let mut bits = pu_union;
        while bits != 0 {
            self.pu_rows.push(bits.trailing_zeros() as usize);
            bits &= bits - 1;
        }
        let (slots, selected, pu_rows) = (&self.slots, &self.selected, &self.pu_rows);
        let gain = crate::beam::null_projection_gain(
            &mut self.ws,
            m,
            size,
            |r, c| slots[selected[c]].pu_coeff[pu_rows[r]],
            |c| slots[selected[c]].target,
        );
        let snr = self.inputs.radio.snr();
        let c_coop = if gain > 0.0 {
            self.inputs.radio.bandwidth * (1.0 + snr * gain * gain).log2()
        } else {
            0.0
        };
        let c_hat = effective_capacity(c_coop, c_wor);
        let n_n = (carrier_union & !member_bits).count_ones() as usize;
        let n_f = if size >= 2 { self.inputs.n_f } else { 0.0 };
        let metric = link_metric(c_hat, n_n, n_f, size, self.inputs.beta);
        Some(ScoredGroup {
            metric,
            effective_capacity: c_hat,
            n_n,
            n_f,
            size,
        })
    }

    /// Materialize the full candidate for a subset mask.
    pub fn candidate_for_mask(&mut self, mask: u32) -> Option<LinkCandidate> {
        let scored = self.score_mask(mask)?;
        let group: Vec<NodeId> = self.selected.iter().map(|&i| self.slots[i].id).collect();
        Some(LinkCandidate {
            relay: self.inputs.relay,
            next_hop: self.inputs.next_hop,
            group,
            coordinator: self.inputs.relay,
            effective_capacity: scored.effective_capacity,
            n_n: scored.n_n,
            n_f: scored.n_f,
            metric: scored.metric,
        })
    }

    /// Compare two subsets under the candidate tie-break order without
    /// materializing their groups: smaller group first, then the
    /// lexicographically smaller sorted member-id sequence.
    fn mask_order(&self, a: u32, b: u32) -> std::cmp::Ordering {
        let size = |mask: u32| mask.count_ones() + 1;
        size(a).cmp(&size(b)).then_with(|| {
            for slot in &self.slots {
                let in_a = slot.is_relay || (a & slot.pool_bit) != 0;
                let in_b = slot.is_relay || (b & slot.pool_bit) != 0;
                match (in_a, in_b) {
                    (true, false) => return std::cmp::Ordering::Less,
                    (false, true) => return std::cmp::Ordering::Greater,
                    _ => {}
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

/// Iterate the masks of all subsets with total group size (mask bits
/// plus the relay) within `[min_size, max_size]`.
fn masks_in_range(
    pool_len: usize,
    min_size: usize,
    max_size: usize,
) -> impl Iterator<Item = u32> {
    let lo = min_size.max(1);
    (0u32..(1u32 << pool_len)).filter(move |mask| {
        let size = mask.count_ones() as usize + 1;
        size >= lo && size <= max_size
    })
}

/// Score one group (sorted member ids including the relay) against the
/// candidate inputs.  Returns `None` when the group cannot satisfy
/// `N > M` for the PUs in range of its members; a degenerate beamforming
/// solution yields a zero-capacity candidate.
pub fn score_group(inputs: &CandidateInputs, subset: &[NodeId]) -> Option<LinkCandidate> {
    debug_assert!(subset.contains(&inputs.relay));
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]), "subset must be sorted");
    let mut mask = 0u32;
    for m in subset {
        if *m == inputs.relay {
            continue;
        }
        let i = inputs
            .pool
            .iter()
            .position(|p| p == m)
            .expect("subset member must come from the pool");
        mask |= 1 << i;
    }
    GroupScorer::new(inputs).candidate_for_mask(mask)
}

/// Score every group of the pool whose size lies in
/// `[min_size, max_size]` (the relay is always a member).  Passing
/// `max_size = pool.len() + 1` disables the elimination bound.
pub fn enumerate_candidates(
    inputs: &CandidateInputs,
    min_size: usize,
    max_size: usize,
) -> Vec<LinkCandidate> {
    let mut scorer = GroupScorer::new(inputs);
    let mut out = Vec::new();
    for mask in masks_in_range(inputs.pool.len(), min_size, max_size) {
        if let Some(c) = scorer.candidate_for_mask(mask) {
            out.push(c);
        }
    }
    out
}

/// Best candidate over all groups in the size range, plus the number of
/// feasible candidates scored.  Exactly equivalent to
/// `best_candidate(&enumerate_candidates(..))` but without
/// materializing the list.
pub fn search_best(
    inputs: &CandidateInputs,
    min_size: usize,
    max_size: usize,
) -> (Option<LinkCandidate>, usize) {
    let mut scorer = GroupScorer::new(inputs);
    let mut best: Option<(f64, u32)> = None;
    let mut count = 0usize;
    for mask in masks_in_range(inputs.pool.len(), min_size, max_size) {
        let Some(scored) = scorer.score_mask(mask) else {
            continue;
        };
        count += 1;
        let better = match &best {
            None => true,
            Some((bm, bmask)) => {
                scored.metric > *bm
                    || (scored.metric == *bm
                        && scorer.mask_order(mask, *bmask) == std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some((scored.metric, mask));
        }
    }
    let candidate = best.and_then(|(_, mask)| scorer.candidate_for_mask(mask));
    (candidate, count)
}

/// Best candidate under the deterministic tie-break order.
pub fn best_candidate(candidates: &[LinkCandidate]) -> Option<&LinkCandidate> {
    let mut best: Option<&LinkCandidate> = None;
    for c in candidates {
        match best {
            None => best = Some(c),
            Some(b) if c.better_than(b) => best = Some(c),
            _ => {}
        }
    }
    best
}

/// Flow ids witnessed across a neighborhood, for the flow-density input.
pub fn distinct_flows(witnessed: impl IntoIterator<Item = FlowId>) -> usize {
    witnessed.into_iter().collect::<BTreeSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::capacity_p2p;
    use crate::channel::{sample_channel, ChannelModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn radio() -> RadioConfig {
        RadioConfig::new(1.0, 1.0, 1.0)
    }

    #[test]
    fn link_metric_examples() {
        assert!((link_metric(1.0, 2, 4.0, 2, 0.5) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(link_metric(5.0, 0, 0.0, 1, 0.5), 5.0);
        assert_eq!(link_metric(2.0, 4, 100.0, 3, 0.0), 0.5);
    }

    #[test]
    fn count_flow_neighbors_union() {
        let mut adjacency = BTreeMap::new();
        adjacency.insert(0, BTreeSet::from([10, 11, 12, 13]));
        adjacency.insert(1, BTreeSet::from([12, 13, 20, 21, 22]));
        let carriers = BTreeSet::from([10, 11, 12, 13, 20, 21, 22]);
        // Group {0}: the four flow-carrying neighbors of node 0.
        assert_eq!(count_flow_neighbors(&[0], &adjacency, &carriers), 4);
        // Group {0,1}: node 1 adds three distinct carriers -> 7 (+75%).
        assert_eq!(count_flow_neighbors(&[0, 1], &adjacency, &carriers), 7);
        // Carrier-free neighborhoods count nothing.
        assert_eq!(
            count_flow_neighbors(&[0, 1], &adjacency, &BTreeSet::new()),
            0
        );
    }

    #[test]
    fn count_flow_neighbors_excludes_members() {
        let mut adjacency = BTreeMap::new();
        adjacency.insert(0, BTreeSet::from([1, 5]));
        adjacency.insert(1, BTreeSet::from([0, 5]));
        let carriers = BTreeSet::from([0, 1, 5]);
        assert_eq!(count_flow_neighbors(&[0, 1], &adjacency, &carriers), 1);
    }

    fn paper_like_table() -> ThresholdTable {
        // Row layout mirrors the printed thresholds for 2 PUs; only the
        // size-7 entry matters for the admission check.
        ThresholdTable::from_rows(
            2,
            7,
            vec![
                vec![0.0, 50.0, 80.0, 100.0, 115.0, 130.0, 140.0],
                vec![0.0, 60.0, 100.0, 130.0, 150.0, 165.0],
                vec![0.0, 39.2, 75.5, 111.5, 174.1],
            ],
        )
    }

    #[test]
    fn max_group_size_admission_threshold() {
        let table = paper_like_table();
        // factor(7) = 100 (7 F_n - N_min) / N_min with N_min = 2:
        // admitted iff factor <= 174.1, i.e. F_n <= 0.7832.
        let admitted = max_group_size(0.78, 2.0, 2, &table, 6).unwrap();
        assert_eq!(admitted, 7);
        let rejected = max_group_size(0.80, 2.0, 2, &table, 6).unwrap();
        assert!(rejected < 7);
    }

    #[test]
    fn max_group_size_zero_flow_density_is_unbounded() {
        let table = paper_like_table();
        assert_eq!(max_group_size(0.0, 1.0, 2, &table, 9).unwrap(), 10);
    }

    #[test]
    fn max_group_size_infeasible() {
        // Two PUs but only one potential co-member: even the full group
        // of two cannot satisfy N > M.
        let table = paper_like_table();
        assert_eq!(
            max_group_size(0.0, 1.0, 2, &table, 1),
            Err(MetricError::NoFeasibleGroup {
                neighbors: 1,
                pus: 2
            })
        );
        // One helper against one PU is exactly enough.
        assert_eq!(max_group_size(0.0, 1.0, 1, &table, 1).unwrap(), 2);
    }

    #[test]
    fn max_group_size_extrapolates_beyond_table() {
        let table = paper_like_table();
        assert_eq!(max_group_size(0.5, 1.0, 5, &table, 10).unwrap(), 7);
    }

    fn synth_inputs(
        rng: &mut ChaCha12Rng,
        pool: &[NodeId],
        pus_per_member: &BTreeMap<NodeId, Vec<PuId>>,
    ) -> CandidateInputs {
        let model = ChannelModel::unit(1.0);
        let relay = 0;
        let next_hop = 99;
        let mut target_channels = BTreeMap::new();
        let mut pu_channels = BTreeMap::new();
        let mut dissemination = BTreeMap::new();
        for id in std::iter::once(&relay).chain(pool) {
            target_channels.insert(*id, sample_channel(rng, &model));
            let pus = pus_per_member.get(id).cloned().unwrap_or_default();
            pu_channels.insert(
                *id,
                pus.iter().map(|p| (*p, sample_channel(rng, &model))).collect(),
            );
            if *id != relay {
                dissemination.insert(*id, Some(capacity_p2p(sample_channel(rng, &model), &radio())));
            }
        }
        CandidateInputs {
            relay,
            next_hop,
            pool: pool.to_vec(),
            target_channels,
            pu_channels,
            dissemination,
            adjacency: BTreeMap::new(),
            flow_carriers: BTreeSet::new(),
            n_f: 0.0,
            beta: 0.5,
            radio: radio(),
        }
    }

    #[test]
    fn enumeration_counts_no_pu() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let inputs = synth_inputs(&mut rng, &[1, 2], &BTreeMap::new());
        // {relay}, {relay,1}, {relay,2}
        assert_eq!(enumerate_candidates(&inputs, 1, 2).len(), 3);
    }

    #[test]
    fn enumeration_counts_one_pu() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let every: BTreeMap<NodeId, Vec<PuId>> =
            [(0, vec![7]), (1, vec![7]), (2, vec![7]), (3, vec![7])]
                .into_iter()
                .collect();
        let inputs = synth_inputs(&mut rng, &[1, 2, 3], &every);
        // Sizes 2 and 3 containing the relay: C(3,1) + C(3,2) = 6.
        assert_eq!(enumerate_candidates(&inputs, 2, 3).len(), 6);
    }

    #[test]
    fn best_matches_exhaustive_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let pus: BTreeMap<NodeId, Vec<PuId>> = [(0, vec![1]), (2, vec![1, 2]), (4, vec![2])]
            .into_iter()
            .collect();
        let pool = [1, 2, 3, 4, 5];
        let inputs = synth_inputs(&mut rng, &pool, &pus);
        let all = enumerate_candidates(&inputs, 1, pool.len() + 1);
        let best = best_candidate(&all).unwrap();

        // Independent subset scan over indices.
        let mut brute: Option<LinkCandidate> = None;
        for mask in 0u32..(1 << pool.len()) {
            let mut subset = vec![0];
            for (i, m) in pool.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    subset.push(*m);
                }
            }
            subset.sort_unstable();
            if let Some(c) = score_group(&inputs, &subset) {
                let better = brute.as_ref().map_or(true, |b| c.better_than(b));
                if better {
                    brute = Some(c);
                }
            }
        }
        let brute = brute.unwrap();
        assert_eq!(best.metric, brute.metric);
        assert_eq!(best.group, brute.group);
    }

    #[test]
    fn table_generation_shape_and_monotonicity() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let table = ThresholdTable::generate(
            &ChannelModel::unit(1.0),
            &radio(),
            6,
            2,
            10_000,
            &mut rng,
        );
        for m in 0..=2 {
            assert_eq!(table.entry(m, m + 1), Some(0.0));
            let mut prev = -1.0;
            for j in (m + 1)..=6 {
                let e = table.entry(m, j).unwrap();
                assert!(e >= prev, "row {m} not monotone at size {j}");
                prev = e;
            }
        }
        assert_eq!(table.entry(3, 5), None);
        assert_eq!(table.entry(1, 1), None);
        // Saturation beyond the last column.
        assert_eq!(table.entry(0, 99), table.entry(0, 6));
    }

    #[test]
    fn table_text_layout() {
        let table = paper_like_table();
        let text = table.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Group Size"));
        assert!(lines[1].starts_with("0 PU"));
        assert!(lines[3].contains("174.1"));
    }
}
