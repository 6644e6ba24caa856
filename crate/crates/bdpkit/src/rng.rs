//! Seeded random number streams and the integer-variate samplers used by the
//! simulation algorithms.
//!
//! Every sample path, bootstrap replicate, or ABC proposal owns an
//! independent substream identified by `(master_seed, stream_index)`.
//! Substreams are independent by construction (distinct ChaCha keys), so
//! results do not depend on how work is scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Identifies one reproducible random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Derived substream with index offset; used when one logical stream
    /// needs private children (e.g., per-iteration ABC proposals).
    pub fn child(&self, offset: u64) -> Self {
        let mut s = self.master_seed;
        let mixed = splitmix64(&mut s) ^ self.stream_index.wrapping_mul(0xD1B5_4A32_D192_ED03);
        Self { master_seed: mixed, stream_index: offset }
    }

    /// Instantiates the generator for this substream. Identical
    /// `(master_seed, stream_index)` pairs always produce the identical
    /// variate sequence.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let mut a = self.master_seed;
        let mut b = self.stream_index ^ 0xA076_1D64_78BD_642F;
        for chunk in key.chunks_exact_mut(8) {
            let w = splitmix64(&mut a) ^ splitmix64(&mut b).rotate_left(23);
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// Exponential variate with the given rate; `rate <= 0` yields `+inf`
/// (an absorbing state never leaves).
pub fn exp_variate<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let mut u: f64 = rng.gen();
    if u <= 0.0 {
        u = f64::MIN_POSITIVE;
    }
    -u.ln() / rate
}

/// Poisson variate; `mean <= 0` yields 0.
pub fn poisson_variate<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let dist = rand_distr::Poisson::new(mean).expect("positive finite mean");
    rng.sample(dist) as u64
}

/// Binomial variate with `n` trials and success probability `p` (clamped to [0,1]).
pub fn binomial_variate<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || !(p > 0.0) {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let dist = rand_distr::Binomial::new(n, p).expect("probability in range");
    rng.sample(dist)
}

/// Number of failures before the `r`-th success when each trial succeeds
/// with probability `p`. Exact: for small `r` sums geometric variates, for
/// large `r` uses the gamma-Poisson mixture.
pub fn neg_binomial_failures<R: Rng>(rng: &mut R, r: u64, p: f64) -> u64 {
    if r == 0 || p >= 1.0 {
        return 0;
    }
    let p = p.max(1e-300);
    if r <= 64 {
        let lq = (1.0 - p).ln(); // log failure probability, < 0
        let mut total = 0u64;
        for _ in 0..r {
            let mut u: f64 = rng.gen();
            if u <= 0.0 {
                u = f64::MIN_POSITIVE;
            }
            total += (u.ln() / lq).floor() as u64;
        }
        total
    } else {
        let scale = (1.0 - p) / p;
        let gamma = rand_distr::Gamma::new(r as f64, scale).expect("valid gamma");
        let mean: f64 = rng.sample(gamma);
        poisson_variate(rng, mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_reproduce() {
        let mut a = RngStream::new(42, 3).rng();
        let mut b = RngStream::new(42, 3).rng();
        for _ in 0..200 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn streams_differ_by_index() {
        let mut a = RngStream::new(42, 0).rng();
        let mut b = RngStream::new(42, 1).rng();
        let same = (0..100).filter(|_| a.gen::<u64>() == b.gen::<u64>()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn exp_variate_zero_rate_is_infinite() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(exp_variate(&mut rng, 0.0).is_infinite());
    }

    #[test]
    fn neg_binomial_mean_matches() {
        // failures before r successes: mean r(1-p)/p
        let mut rng = RngStream::new(7, 0).rng();
        let (r, p) = (5u64, 0.4);
        let n = 20000;
        let mean: f64 = (0..n).map(|_| neg_binomial_failures(&mut rng, r, p) as f64).sum::<f64>() / n as f64;
        let expect = r as f64 * (1.0 - p) / p;
        assert!((mean - expect).abs() < 0.15, "mean {mean} vs {expect}");
    }

    #[test]
    fn neg_binomial_large_r_mean_matches() {
        let mut rng = RngStream::new(8, 0).rng();
        let (r, p) = (200u64, 0.7);
        let n = 20000;
        let mean: f64 = (0..n).map(|_| neg_binomial_failures(&mut rng, r, p) as f64).sum::<f64>() / n as f64;
        let expect = r as f64 * (1.0 - p) / p;
        assert!((mean - expect).abs() / expect < 0.01, "mean {mean} vs {expect}");
    }
}
