//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha12 generator keyed by a 64-bit seed and addressed
//! by a 64-bit stream id. ChaCha's stream parameter gives disjoint keystreams
//! for distinct ids under the same key, so `split` only has to hand out
//! distinct ids. Child ids are derived by hashing `(parent id, index)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Well-known sub-stream labels used by the samplers.
pub mod labels {
    pub const INIT: u64 = 0x1;
    pub const PROPOSAL: u64 = 0x2;
    pub const ACCEPT: u64 = 0x3;
    pub const CLOCK: u64 = 0x4;
    pub const REFRESH_TIME: u64 = 0x5;
    pub const REFRESH_VELOCITY: u64 = 0x6;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A child stream addressed by `label`. Depends only on `(seed, stream_id,
    /// label)`, never on how much of the parent has been consumed.
    pub fn substream(&self, label: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RngStream::new(self.seed, id)
    }

    /// `k` independent child streams.
    pub fn split(&self, k: usize) -> Vec<RngStream> {
        (0..k as u64)
            .map(|i| self.substream(0xA5A5_0000_0000_0000 | i))
            .collect()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on (0, 1), suitable for taking logarithms.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn exponential(&mut self, rate: f64) -> Result<f64> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain(format!(
                "exponential rate must be positive and finite, got {rate}"
            )));
        }
        Ok(self.standard_exponential() / rate)
    }

    pub fn standard_exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
