//! Fading channel model and radio parameters.
//!
//! Channel coefficients are circularly-symmetric complex Gaussians: with
//! per-coefficient variance `v`, the real and imaginary parts are each
//! drawn from `N(0, v/2)`, so `E[|h|^2] = v`.  Coefficients are held
//! constant over a coherence interval and redrawn afterwards.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Complex fading gain between a transmitter and a receiver.
pub type ChannelCoeff = Complex64;

/// Statistical description of the fading process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    /// Per-coefficient complex-Gaussian variance (`E[|h|^2]`).
    pub variance: f64,
    /// Coherence time in seconds; coefficients are constant within one
    /// interval.
    pub coherence_time: f64,
}

impl ChannelModel {
    pub fn new(variance: f64, coherence_time: f64) -> Self {
        assert!(
            variance.is_finite() && variance >= 0.0,
            "channel variance must be finite and non-negative"
        );
        assert!(
            coherence_time > 0.0,
            "coherence time must be strictly positive"
        );
        Self {
            variance,
            coherence_time,
        }
    }

    /// Unit-variance Rayleigh fading.
    pub fn unit(coherence_time: f64) -> Self {
        Self::new(1.0, coherence_time)
    }
}

/// Transmit power, noise floor and bandwidth of the data radio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    /// Maximum SU transmit power in watts.
    pub power: f64,
    /// Thermal noise variance in watts.
    pub noise_variance: f64,
    /// Available bandwidth in Hz.
    pub bandwidth: f64,
}

impl RadioConfig {
    pub fn new(power: f64, noise_variance: f64, bandwidth: f64) -> Self {
        assert!(power > 0.0, "transmit power must be positive");
        assert!(noise_variance > 0.0, "noise variance must be positive");
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        Self {
            power,
            noise_variance,
            bandwidth,
        }
    }

    /// Nominal SNR of a unit-gain channel.
    pub fn snr(&self) -> f64 {
        self.power / self.noise_variance
    }
}

/// Draw one circularly-symmetric complex Gaussian coefficient.
///
/// Deterministic for a fixed generator state and call sequence; a zero
/// variance yields exactly zero.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, model: &ChannelModel) -> ChannelCoeff {
    let sigma = (model.variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sigma, im * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_variance_is_degenerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let model = ChannelModel::new(0.0, 1.0);
        for _ in 0..10 {
            assert_eq!(sample_channel(&mut rng, &model), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn unit_variance_mean_power() {
        // Law of large numbers: mean |h|^2 over 1e5 draws is 1.0 +/- 2%.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let model = ChannelModel::unit(1.0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_channel(&mut rng, &model).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!(
            (mean - 1.0).abs() < 0.02,
            "mean |h|^2 = {mean}, expected 1.0 +/- 0.02"
        );
    }

    #[test]
    fn same_seed_same_sequence() {
        let model = ChannelModel::unit(1.0);
        let mut a = ChaCha12Rng::seed_from_u64(99);
        let mut b = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..100 {
            assert_eq!(sample_channel(&mut a, &model), sample_channel(&mut b, &model));
        }
    }
}
