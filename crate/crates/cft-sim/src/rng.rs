//! Named, seeded random-number streams.
//!
//! Every source of randomness in a run is a stream derived from the pair
//! `(master seed, stream name)`. Streams are mutually independent by
//! construction (distinct ChaCha keys), so adding draws to one stream never
//! shifts the sequence of another. This is what makes common-random-number
//! comparisons work: two scenario variants run from the same master seed see
//! the same arrival pattern and the same connectivity trace, isolating the
//! protocol-variant effect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Stream names used by the simulator.
pub mod streams {
    pub const ARRIVALS: &str = "arrivals";
    pub const PARTICIPANTS: &str = "participants";
    pub const DELAYS: &str = "delays";
    pub const LINKS: &str = "links";
    pub const FUNCTIONS: &str = "functions";
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives independent [`RngStream`]s from a master seed.
#[derive(Debug, Clone, Copy)]
pub struct StreamFactory {
    master: u64,
}

impl StreamFactory {
    pub fn new(master: u64) -> Self {
        StreamFactory { master }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// Returns the stream for `name`. The same `(master, name)` pair always
    /// yields the same draw sequence.
    pub fn stream(&self, name: &str) -> RngStream {
        let mut state = self.master ^ fnv1a(name.as_bytes());
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            rng: ChaCha12Rng::from_seed(seed),
        }
    }

    /// Stream for a per-entity substream, e.g. one link process per host.
    pub fn substream(&self, name: &str, index: usize) -> RngStream {
        self.stream(&format!("{name}/{index}"))
    }
}

/// A deterministic generator with draw helpers for the distributions the
/// simulator needs.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    /// Uniform draw on `[lo, hi]`. Rejects `lo > hi`; the degenerate range
    /// `(x, x)` yields `x`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo <= hi, "uniform range inverted: [{lo}, {hi}]");
        let u: f64 = self.rng.random();
        lo + (hi - lo) * u
    }

    /// Exponential draw with the given mean. Rejects non-positive means.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        assert!(mean > 0.0, "exponential mean must be positive, got {mean}");
        let u: f64 = self.rng.random();
        -mean * (1.0 - u).ln()
    }

    /// Bernoulli draw: true with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
        self.rng.random::<f64>() < p
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is empty");
        self.rng.random_range(0..n)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_range(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        self.rng.random_range(lo..=hi)
    }

    /// Samples `k` distinct indices from `0..n`, uniformly, without
    /// replacement. Order is the draw order (partial Fisher-Yates).
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} distinct from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(k);
        for drawn in 0..k {
            let pick = drawn + self.below(n - drawn);
            pool.swap(drawn, pick);
            out.push(pool[drawn]);
        }
        out
    }
}
