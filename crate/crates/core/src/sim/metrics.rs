//! Simulation output metrics.

/// Metrics over the measurement window (the first 10% of the horizon is
/// warm-up and excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Bits delivered end-to-end per second of measurement window.
    pub goodput_bps: f64,
    /// Mean end-to-end delay of delivered packets, seconds.
    pub mean_delay_s: f64,
    /// Sorted end-to-end delays of all delivered packets (the delay CDF
    /// sample set).
    pub delay_cdf: Vec<f64>,
    /// Routing-phase control packets (RREQ/RREP/ACK/AREP, route setups,
    /// flood transmissions).  Periodic hellos are neighborhood
    /// maintenance and not counted here.
    pub control_packets: u64,
    /// Mean size of cooperative transmission groups (1.0 when no
    /// cooperative transmission happened).
    pub mean_group_size: f64,
    /// Mean number of feasible link candidates per answered discovery
    /// (1.0 for non-cooperative protocols).
    pub routing_opportunities_gain: f64,
    /// Time-weighted mean data-queue length per node.
    pub mean_queue_len: f64,
}

impl MetricsReport {
    pub fn median_delay_s(&self) -> f64 {
        quantile(&self.delay_cdf, 0.5)
    }

    pub fn p90_delay_s(&self) -> f64 {
        quantile(&self.delay_cdf, 0.9)
    }

    /// Order-insensitive content digest, for determinism checks.
    pub fn digest(&self) -> u64 {
        let mut acc = 0xcbf29ce484222325u64;
        let mut mixin = |v: u64| {
            acc ^= v;
            acc = acc.wrapping_mul(0x100000001b3);
        };
        mixin(self.goodput_bps.to_bits());
        mixin(self.mean_delay_s.to_bits());
        mixin(self.control_packets);
        mixin(self.mean_group_size.to_bits());
        mixin(self.routing_opportunities_gain.to_bits());
        mixin(self.mean_queue_len.to_bits());
        for d in &self.delay_cdf {
            mixin(d.to_bits());
        }
        acc
    }
}

/// Quantile of a pre-sorted sample set (nearest-rank); 0.0 when empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() as f64) * q).ceil() as usize;
    sorted[idx.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.9), 4.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[], 0.5), 0.0);
    }
}
