//! Primary-user ON-OFF activity processes.

use crate::geometry::Position;
use crate::PuId;
use rand::Rng;
use rand_distr::Exp;

/// One primary receiver with an exponential ON-OFF activity process.
#[derive(Debug, Clone)]
pub struct PuProcess {
    pub id: PuId,
    pub position: Position,
    /// Mean duration of active periods, seconds.
    pub mean_on: f64,
    /// Mean duration of inactive periods, seconds.
    pub mean_off: f64,
    /// Licensed channel index (single data channel in this model).
    pub channel: usize,
}

impl PuProcess {
    /// Long-run fraction of time the PU is active.
    pub fn activity(&self) -> f64 {
        if self.mean_on <= 0.0 {
            0.0
        } else if self.mean_off <= 0.0 {
            1.0
        } else {
            self.mean_on / (self.mean_on + self.mean_off)
        }
    }
}

/// Sample the ON intervals of one PU over `[0, horizon)`.
///
/// Holding times are exponential with the configured means; the initial
/// state is drawn from the stationary distribution.  Degenerate
/// activities collapse to an always-off or always-on schedule.
pub fn sample_pu_schedule<R: Rng + ?Sized>(
    pu: &PuProcess,
    horizon: f64,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    if pu.mean_on <= 0.0 {
        return Vec::new();
    }
    if pu.mean_off <= 0.0 {
        return vec![(0.0, horizon)];
    }
    let on_dist = Exp::new(1.0 / pu.mean_on).expect("positive mean");
    let off_dist = Exp::new(1.0 / pu.mean_off).expect("positive mean");
    let mut intervals = Vec::new();
    let mut t = 0.0;
    let mut active = rng.gen_bool(pu.activity());
    while t < horizon {
        if active {
            let d: f64 = rng.sample(on_dist);
            let end = (t + d).min(horizon);
            intervals.push((t, end));
            t += d;
        } else {
            let d: f64 = rng.sample(off_dist);
            t += d;
        }
        active = !active;
    }
    intervals
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn pu(mean_on: f64, mean_off: f64) -> PuProcess {
        PuProcess {
            id: 0,
            position: Position::new(0.0, 0.0),
            mean_on,
            mean_off,
            channel: 0,
        }
    }

    #[test]
    fn zero_activity_never_turns_on() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(sample_pu_schedule(&pu(0.0, 5.0), 100.0, &mut rng).is_empty());
    }

    #[test]
    fn full_activity_covers_horizon() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        assert_eq!(
            sample_pu_schedule(&pu(5.0, 0.0), 100.0, &mut rng),
            vec![(0.0, 100.0)]
        );
    }

    #[test]
    fn long_run_on_fraction_matches_activity() {
        // Renewal theory: the empirical ON fraction converges to
        // mean_on / (mean_on + mean_off) = 0.2.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let p = pu(2.0, 8.0);
        let horizon = 10_000.0 * 10.0;
        let on: f64 = sample_pu_schedule(&p, horizon, &mut rng)
            .iter()
            .map(|(s, e)| e - s)
            .sum();
        let fraction = on / horizon;
        assert!(
            (fraction - 0.2).abs() < 0.02,
            "ON fraction {fraction}, expected 0.20 +/- 0.02"
        );
    }

    #[test]
    fn intervals_are_ordered_and_disjoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let intervals = sample_pu_schedule(&pu(1.0, 3.0), 500.0, &mut rng);
        for w in intervals.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        for (s, e) in &intervals {
            assert!(s < e);
        }
    }
}
