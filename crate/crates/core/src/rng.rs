//! Deterministic, seedable random streams.
//!
//! Every random draw in a simulation goes through a [`RandomSource`] keyed by
//! `(seed, stream_id)`. The generator is ChaCha8 with the stream id mapped onto
//! ChaCha's native 64-bit stream counter, so distinct streams share no state and
//! an identical key replays an identical sequence on every platform.
//!
//! Transforms are fixed so other implementations can match draw for draw:
//!
//! * reals: `lo + (hi - lo) * u` with `u = (next_u64 >> 11) * 2^-53`, result kept below `hi`;
//! * integers: Lemire's multiply-and-reject on `next_u64`;
//! * normals: Marsaglia's polar method, second deviate of each pair cached.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Stable stream assignments for one simulation run. Append only: reordering
/// changes every existing stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    Rewiring = 1,
    Heterogeneity = 2,
    InitialInformation = 3,
    Drive = 4,
    AgentNoise = 5,
    RandomPricing = 6,
    GlobalNoise = 7,
}

impl StreamRole {
    pub const ALL: [StreamRole; 7] = [
        StreamRole::Rewiring,
        StreamRole::Heterogeneity,
        StreamRole::InitialInformation,
        StreamRole::Drive,
        StreamRole::AgentNoise,
        StreamRole::RandomPricing,
        StreamRole::GlobalNoise,
    ];

    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamRole::Rewiring => "rewiring",
            StreamRole::Heterogeneity => "heterogeneity",
            StreamRole::InitialInformation => "initial_information",
            StreamRole::Drive => "drive",
            StreamRole::AgentNoise => "agent_noise",
            StreamRole::RandomPricing => "random_pricing",
            StreamRole::GlobalNoise => "global_noise",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
            spare_normal: None,
        }
    }

    pub fn for_role(seed: u64, role: StreamRole) -> Self {
        Self::new(seed, role.id())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform real in [lo, hi). A degenerate interval returns `lo` (one draw is still consumed).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::InvalidRange { lo, hi });
        }
        let u = self.next_unit();
        if lo == hi {
            return Ok(lo);
        }
        let x = lo + (hi - lo) * u;
        Ok(if x >= hi { hi.next_down() } else { x })
    }

    /// Uniform integer in the closed range [lo, hi].
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Err(Error::InvalidRange {
                lo: lo as f64,
                hi: hi as f64,
            });
        }
        let span = hi.wrapping_sub(lo) as u64;
        if span == u64::MAX {
            return Ok(self.next_u64() as i64);
        }
        Ok(lo.wrapping_add(self.below(span + 1) as i64))
    }

    /// Uniform index in [0, n). `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be nonempty");
        self.below(n as u64) as usize
    }

    fn below(&mut self, n: u64) -> u64 {
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    pub fn normal(&mut self, mean: f64, stdev: f64) -> Result<f64> {
        if !(stdev >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normal stdev must be nonnegative, got {stdev}"
            )));
        }
        let z = self.standard_normal();
        if stdev == 0.0 {
            return Ok(mean);
        }
        Ok(mean + stdev * z)
    }

    fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_unit() - 1.0;
            let v = 2.0 * self.next_unit() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Fisher-Yates shuffle driven by this source.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// Mixes a master seed with a path of indices (cell, run, ...) into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0x6a09_e667_f3bc_c909);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
