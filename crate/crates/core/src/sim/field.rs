//! Global fading field: every node pair's coefficient per coherence
//! epoch, computed statelessly from a hash of the endpoints.
//!
//! Stateless sampling keeps the field order-independent: no matter which
//! protocol path asks first, the coefficient of a pair in an epoch is
//! the same, and reciprocity holds (`h(a,b) = h(b,a)`).

use crate::channel::{sample_channel, ChannelCoeff, ChannelModel};
use crate::{NodeId, PuId};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct ChannelField {
    seed: u64,
    pub model: ChannelModel,
}

const SU_TAG: u64 = 0x5u64;
const PU_TAG: u64 = 0xAu64;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x243F6A8885A308D3u64;
    for p in parts {
        acc = splitmix(acc ^ *p);
    }
    acc
}

impl ChannelField {
    pub fn new(seed: u64, model: ChannelModel) -> Self {
        Self { seed, model }
    }

    /// Coherence epoch containing time `t`.
    pub fn epoch(&self, t: f64) -> u64 {
        debug_assert!(t >= 0.0);
        (t / self.model.coherence_time).floor() as u64
    }

    fn draw(&self, tag: u64, lo: u64, hi: u64, epoch: u64) -> ChannelCoeff {
        let mut rng = ChaCha12Rng::seed_from_u64(mix(&[self.seed, tag, lo, hi, epoch]));
        sample_channel(&mut rng, &self.model)
    }

    /// Coefficient between two SUs (reciprocal).
    pub fn su(&self, a: NodeId, b: NodeId, epoch: u64) -> ChannelCoeff {
        let (lo, hi) = (a.min(b) as u64, a.max(b) as u64);
        self.draw(SU_TAG, lo, hi, epoch)
    }

    /// Coefficient between an SU and a primary receiver.
    pub fn su_pu(&self, su: NodeId, pu: PuId, epoch: u64) -> ChannelCoeff {
        self.draw(PU_TAG, su as u64, pu as u64, epoch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> ChannelField {
        ChannelField::new(123, ChannelModel::unit(10.0))
    }

    #[test]
    fn reciprocity_and_stability() {
        let f = field();
        assert_eq!(f.su(3, 7, 0), f.su(7, 3, 0));
        assert_eq!(f.su(3, 7, 0), f.su(3, 7, 0));
    }

    #[test]
    fn epochs_decorrelate() {
        let f = field();
        assert_ne!(f.su(3, 7, 0), f.su(3, 7, 1));
        assert_ne!(f.su_pu(3, 0, 0), f.su_pu(3, 0, 1));
    }

    #[test]
    fn epoch_boundaries() {
        let f = field();
        assert_eq!(f.epoch(0.0), 0);
        assert_eq!(f.epoch(9.999), 0);
        assert_eq!(f.epoch(10.0), 1);
    }

    #[test]
    fn su_and_pu_streams_differ() {
        let f = field();
        assert_ne!(f.su(1, 2, 0), f.su_pu(1, 2, 0));
    }
}
