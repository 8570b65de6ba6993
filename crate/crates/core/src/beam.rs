//! Null-space beamforming weights and link capacities.
//!
//! A cooperative group of `N` transmitters facing `M` in-range primary
//! receivers picks a unit-power weight vector inside the null space of
//! the PU constraint matrix, so the superposed signal vanishes at every
//! primary receiver.  Within that subspace the weights are matched to the
//! target channel, which maximizes received power: the optimum is the
//! normalized orthogonal projection of the target channel vector onto the
//! null space.

use crate::channel::{sample_channel, ChannelCoeff, ChannelModel, RadioConfig};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Residual tolerance for a verified null: `max_j |<row_j, w>| <= NULL_TOL`.
pub const NULL_TOL: f64 = 1e-8;

/// Singular-value cutoff of the rank-revealing orthogonalization.
const RANK_CUTOFF: f64 = 1e-10;

/// Below this projection norm the cooperative link is unusable.
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    /// The group must be strictly larger than the number of surrounding
    /// PUs (`N > M`).
    #[error("group of {group} cannot null {pus} primary users (need N > M)")]
    GroupTooSmall { group: usize, pus: usize },
    /// The target direction lies entirely inside the PU row space; the
    /// caller must treat the cooperative link capacity as zero.
    #[error("target channel is orthogonal to the null space")]
    DegenerateChannel,
}

/// PU constraint matrix: one row per primary receiver, one column per
/// group member.  Entry `(j, i)` is the channel from member `i` to
/// primary receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(cols >= 1, "constraint matrix needs at least one column");
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// A matrix with no constraint rows (no surrounding PUs).
    pub fn empty(cols: usize) -> Self {
        Self::new(0, cols, Vec::new())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    /// `max_j |<row_j, w>|` — the worst-case residual power leak at a PU.
    pub fn max_residual(&self, w: &[Complex64]) -> f64 {
        (0..self.rows)
            .map(|j| {
                self.row(j)
                    .iter()
                    .zip(w)
                    .map(|(h, wi)| h * wi)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Unit-total-power beamforming weights, one entry per group member.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    w: Vec<Complex64>,
}

impl BeamWeights {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Total transmit-power factor `sum_i |w_i|^2` (1 by construction).
    pub fn power_sum(&self) -> f64 {
        self.w.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Received-power factor `|w^H h|^2` toward a target channel vector.
    pub fn received_power_factor(&self, h: &[Complex64]) -> f64 {
        inner(&self.w, h).norm_sqr()
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Reusable buffers for the projection kernel, so group-search loops do
/// not allocate per subset.
#[derive(Debug, Default)]
pub struct NullWorkspace {
    basis: Vec<Vec<Complex64>>,
    basis_len: usize,
    pub(crate) proj: Vec<Complex64>,
}

impl NullWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn basis_slot(&mut self, n: usize) -> &mut Vec<Complex64> {
        if self.basis_len == self.basis.len() {
            self.basis.push(Vec::new());
        }
        let v = &mut self.basis[self.basis_len];
        v.clear();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    }
}

/// Project the target channel vector onto the null space of the
/// constraint rows and return the projection norm (the achievable
/// amplitude gain).  The normalized projection is left in `ws.proj`.
///
/// Rank-revealing modified Gram-Schmidt with one re-orthogonalization
/// pass orthonormalizes the conjugated rows; rows below `RANK_CUTOFF`
/// relative to the largest row norm are redundant and dropped.
pub fn null_projection(
    ws: &mut NullWorkspace,
    m: usize,
    n: usize,
    mut row: impl FnMut(usize, usize) -> Complex64,
    mut target: impl FnMut(usize) -> Complex64,
) -> f64 {
    ws.basis_len = 0;
    let mut scale: f64 = 0.0;
    for j in 0..m {
        let rn: f64 = (0..n).map(|i| row(j, i).norm_sqr()).sum::<f64>().sqrt();
        scale = scale.max(rn);
    }
    if scale > 0.0 {
        let cutoff = RANK_CUTOFF * scale;
        for j in 0..m {
            let slot = ws.basis_slot(n);
            for (i, s) in slot.iter_mut().enumerate() {
                *s = row(j, i).conj();
            }
            for _ in 0..2 {
                for q_idx in 0..ws.basis_len {
                    let (done, rest) = ws.basis.split_at_mut(ws.basis_len);
                    let q = &done[q_idx];
                    let v = &mut rest[0];
                    let c = inner(q, v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let v = &mut ws.basis[ws.basis_len];
            let vn = norm(v);
            if vn > cutoff {
                for vi in v.iter_mut() {
                    *vi /= vn;
                }
                ws.basis_len += 1;
            }
        }
    }
    ws.proj.clear();
    for i in 0..n {
        let t = target(i);
        ws.proj.push(t);
    }
    for _ in 0..2 {
        for q in &ws.basis[..ws.basis_len] {
            let c = inner(q, &ws.proj);
            for (pi, qi) in ws.proj.iter_mut().zip(q) {
                *pi -= c * qi;
            }
        }
    }
    norm(&ws.proj)
}

/// Compute beamforming weights that null transmission at every primary
/// receiver while maximizing received power at the target.
///
/// Returns the normalized orthogonal projection of `h_cd` onto
/// `Null(H_P)`; this maximizes `|w^H h_cd|^2` over unit-norm vectors in
/// the null space.
pub fn compute_null_weights(
    h_p: &ChannelMatrix,
    h_cd: &[ChannelCoeff],
) -> Result<BeamWeights, BeamError> {
    let n = h_cd.len();
    assert_eq!(h_p.cols(), n, "constraint matrix width must match group size");
    if n <= h_p.rows() {
        return Err(BeamError::GroupTooSmall {
            group: n,
            pus: h_p.rows(),
        });
    }
    let mut ws = NullWorkspace::new();
    let pn = null_projection(
        &mut ws,
        h_p.rows(),
        n,
        |j, i| h_p.row(j)[i],
        |i| h_cd[i],
    );
    if pn < DEGENERATE_TOL {
        return Err(BeamError::DegenerateChannel);
    }
    let mut w = ws.proj;
    for wi in &mut w {
        *wi /= pn;
    }
    Ok(BeamWeights { w })
}

/// Achievable amplitude gain of the best null-space weights, without
/// materializing them: the projection norm.  Returns zero for degenerate
/// targets (capacity zero), mirroring the caller contract of
/// [`compute_null_weights`].
pub fn null_projection_gain(
    ws: &mut NullWorkspace,
    m: usize,
    n: usize,
    row: impl FnMut(usize, usize) -> Complex64,
    target: impl FnMut(usize) -> Complex64,
) -> f64 {
    let pn = null_projection(ws, m, n, row, target);
    if pn < DEGENERATE_TOL {
        0.0
    } else {
        pn
    }
}

/// Shannon capacity of a node-to-node link: `B log2(1 + P |h|^2 / s2)`.
pub fn capacity_p2p(h: ChannelCoeff, radio: &RadioConfig) -> f64 {
    radio.bandwidth * (1.0 + radio.snr() * h.norm_sqr()).log2()
}

/// Capacity of a cooperative multi-node-to-node link with the given
/// weights: `B log2(1 + P |w^H h|^2 / s2)`.
pub fn capacity_coop(w: &BeamWeights, h_cd: &[ChannelCoeff], radio: &RadioConfig) -> f64 {
    radio.bandwidth * (1.0 + radio.snr() * w.received_power_factor(h_cd)).log2()
}

/// Effective capacity of a cooperative hop: dissemination to the group
/// and the cooperative transmission are approximated by their minimum.
/// Pass `f64::INFINITY` as the dissemination capacity when every group
/// member already holds the packet by overhearing.
pub fn effective_capacity(c_coop: f64, c_wor: f64) -> f64 {
    c_coop.min(c_wor)
}

/// Monte Carlo estimate of the average best achievable capacity, in
/// bits/s/Hz, of an `n`-member group nulling `m` PUs under the given
/// fading model.  Degenerate draws contribute zero.
pub fn avg_max_capacity<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    samples: usize,
    rng: &mut R,
    model: &ChannelModel,
    radio: &RadioConfig,
) -> Result<f64, BeamError> {
    if n <= m {
        return Err(BeamError::GroupTooSmall { group: n, pus: m });
    }
    assert!(samples >= 1);
    let snr = radio.snr();
    let mut acc = 0.0;
    let mut row = vec![Complex64::new(0.0, 0.0); m * n];
    for _ in 0..samples {
        for c in row.iter_mut() {
            *c = sample_channel(rng, model);
        }
        let h_p = ChannelMatrix::new(m, n, row.clone());
        let h_cd: Vec<Complex64> = (0..n).map(|_| sample_channel(rng, model)).collect();
        match compute_null_weights(&h_p, &h_cd) {
            Ok(w) => {
                acc += (1.0 + snr * w.received_power_factor(&h_cd)).log2();
            }
            Err(BeamError::DegenerateChannel) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(acc / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn unit_radio() -> RadioConfig {
        RadioConfig::new(1.0, 1.0, 1.0)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn p2p_capacity_known_values() {
        let radio = unit_radio();
        // |h|^2 = 4 -> log2(5)
        assert!((capacity_p2p(c(2.0, 0.0), &radio) - 5f64.log2()).abs() < 1e-12);
        // h = 0 -> 0
        assert_eq!(capacity_p2p(c(0.0, 0.0), &radio), 0.0);
        // |h|^2 = 1 -> 1
        assert!((capacity_p2p(c(1.0, 0.0), &radio) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_constraint_gives_matched_weights() {
        let h = vec![c(2.0, 0.0), c(2.0, 0.0)];
        let w = compute_null_weights(&ChannelMatrix::empty(2), &h).unwrap();
        assert!((w.power_sum() - 1.0).abs() < 1e-9);
        // |w^H h|^2 = ||h||^2 = 8
        assert!((w.received_power_factor(&h) - 8.0).abs() < 1e-9);
        // Relay example: ||h||^2 = 8 -> capacity log2(9)
        assert!((capacity_coop(&w, &h, &unit_radio()) - 9f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_target_passes_through() {
        let h_p = ChannelMatrix::new(1, 2, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let h = vec![c(1.0, 0.0), c(-1.0, 0.0)];
        let w = compute_null_weights(&h_p, &h).unwrap();
        let s = 0.5f64.sqrt();
        assert!((w.as_slice()[0] - c(s, 0.0)).norm() < 1e-9);
        assert!((w.as_slice()[1] - c(-s, 0.0)).norm() < 1e-9);
        assert!((w.received_power_factor(&h) - 2.0).abs() < 1e-9);
        // Power factor 2 -> capacity log2(3)
        assert!((capacity_coop(&w, &h, &unit_radio()) - 3f64.log2()).abs() < 1e-9);
        assert!(h_p.max_residual(w.as_slice()) <= NULL_TOL);
    }

    #[test]
    fn target_in_row_space_is_degenerate() {
        let h_p = ChannelMatrix::new(1, 2, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let h = vec![c(1.0, 0.0), c(1.0, 0.0)];
        assert_eq!(
            compute_null_weights(&h_p, &h),
            Err(BeamError::DegenerateChannel)
        );
    }

    #[test]
    fn group_too_small_is_rejected() {
        let h_p = ChannelMatrix::new(2, 2, vec![c(1.0, 0.0); 4]);
        let h = vec![c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(
            compute_null_weights(&h_p, &h),
            Err(BeamError::GroupTooSmall { group: 2, pus: 2 })
        );
    }

    #[test]
    fn zero_rows_impose_no_constraint() {
        // A PU out of range of every member contributes an all-zero row;
        // the matched solution must survive it.
        let h_p = ChannelMatrix::new(1, 2, vec![c(0.0, 0.0), c(0.0, 0.0)]);
        let h = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let w = compute_null_weights(&h_p, &h).unwrap();
        assert!((w.received_power_factor(&h) - 2.0).abs() < 1e-9);
    }

    /// Oracle for the N=4, M=2 case: the null space is two-dimensional, so
    /// every unit vector in it is `cos(t) q1 + sin(t) e^{i p} q2` up to an
    /// irrelevant global phase.  A dense grid over (t, p) must not beat the
    /// projection solution by more than numerical slack.
    #[test]
    fn projection_matches_grid_search() {
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let model = ChannelModel::unit(1.0);
        let (n, m) = (4usize, 2usize);
        let data: Vec<Complex64> = (0..m * n).map(|_| sample_channel(&mut rng, &model)).collect();
        let h_p = ChannelMatrix::new(m, n, data);
        let h: Vec<Complex64> = (0..n).map(|_| sample_channel(&mut rng, &model)).collect();

        let w = compute_null_weights(&h_p, &h).unwrap();
        let best = w.received_power_factor(&h);

        // Build an orthonormal basis of the null space by projecting unit
        // vectors and orthogonalizing.
        let mut row_basis: Vec<Vec<Complex64>> = Vec::new();
        for j in 0..m {
            let mut v: Vec<Complex64> = h_p.row(j).iter().map(|x| x.conj()).collect();
            for q in &row_basis {
                let coeff = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= coeff * qi;
                }
            }
            let nv = norm(&v);
            assert!(nv > 1e-9, "random rows should be independent");
            for vi in &mut v {
                *vi /= nv;
            }
            row_basis.push(v);
        }
        let mut null_basis: Vec<Vec<Complex64>> = Vec::new();
        for k in 0..n {
            let mut v = vec![c(0.0, 0.0); n];
            v[k] = c(1.0, 0.0);
            for basis in [&row_basis, &null_basis] {
                for q in basis {
                    let coeff = inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= coeff * qi;
                    }
                }
            }
            let nv = norm(&v);
            if nv > 1e-9 {
                for vi in &mut v {
                    *vi /= nv;
                }
                null_basis.push(v);
            }
        }
        assert_eq!(null_basis.len(), n - m);

        let c1 = inner(&null_basis[0], &h);
        let c2 = inner(&null_basis[1], &h);
        let mut grid_best: f64 = 0.0;
        let steps = 400;
        for ti in 0..=steps {
            let t = std::f64::consts::FRAC_PI_2 * ti as f64 / steps as f64;
            for pi in 0..steps {
                let p = 2.0 * std::f64::consts::PI * pi as f64 / steps as f64;
                let alpha = c(t.cos(), 0.0);
                let beta = c(0.0, p).exp() * t.sin();
                let val = (alpha.conj() * c1 + beta.conj() * c2).norm_sqr();
                grid_best = grid_best.max(val);
            }
        }
        assert!(
            (best - grid_best).abs() <= 1e-3 * best.max(grid_best),
            "projection {best} vs grid {grid_best}"
        );
        assert!(best + 1e-9 >= grid_best);
    }

    #[test]
    fn effective_capacity_examples() {
        let l9 = 9f64.log2();
        let l5 = 5f64.log2();
        assert_eq!(effective_capacity(l9, l5), l5);
        assert_eq!(effective_capacity(3.0, f64::INFINITY), 3.0);
        assert_eq!(effective_capacity(0.0, 123.0), 0.0);
    }

    #[test]
    fn avg_capacity_rejects_small_groups() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let err = avg_max_capacity(2, 2, 10, &mut rng, &ChannelModel::unit(1.0), &unit_radio());
        assert_eq!(err, Err(BeamError::GroupTooSmall { group: 2, pus: 2 }));
    }

    #[test]
    fn avg_capacity_single_node_matches_exponential_mean() {
        // E[log2(1 + X)], X ~ Exp(1) equals e*E1(1)/ln 2 ~= 0.8603; a looser
        // bound suffices here, the acceptance suite pins the 2% check.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let v = avg_max_capacity(1, 0, 20_000, &mut rng, &ChannelModel::unit(1.0), &unit_radio())
            .unwrap();
        assert!((v - 0.8603).abs() < 0.03, "got {v}");
    }

    #[test]
    fn nulling_costs_capacity() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let model = ChannelModel::unit(1.0);
        let radio = unit_radio();
        let free = avg_max_capacity(2, 0, 20_000, &mut rng, &model, &radio).unwrap();
        let nulled = avg_max_capacity(2, 1, 20_000, &mut rng, &model, &radio).unwrap();
        assert!(nulled > 0.0);
        assert!(nulled < free);
    }
}
