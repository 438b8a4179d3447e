//! Seeded peer sampling without replacement.
//!
//! The seed is derived on-chain style from the block timestamp and the mining
//! difficulty:
//!
//! ```text
//! seed = uint64(keccak256(uint256_be(timestamp) ‖ uint256_be(difficulty)))
//! ```
//!
//! i.e. the low 64 bits (last eight bytes, big-endian) of the Keccak-256 of
//! the two values each encoded as a 32-byte big-endian word.
//!
//! Draws come from SplitMix64 with these exact constants:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! A draw maps to an index as `draw mod remaining`; the chosen entry is
//! swapped with the last live entry of the pool (Fisher–Yates prefix). The
//! modulo bias is below 2^-48 for pools up to 2^16 and is accepted.
//!
//! Per-(agent, question) streams start from
//! `mix(seed ^ mix((agent << 32 | question) + 0x9E3779B97F4A7C15))`
//! where `mix` is the SplitMix64 output function.

use thiserror::Error;

use crate::commitment::keccak256;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("cannot draw {k} peers from {available} candidates")]
    KTooLarge { k: usize, available: usize },
    #[error("peer count must be at least 1")]
    ZeroK,
    #[error("rejection sampling hit its cap of {cap} draws")]
    DrawBudgetExceeded { cap: u64 },
}

/// Public block data that seeds peer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectionSeed {
    pub block_timestamp: u64,
    pub difficulty: u64,
}

impl SelectionSeed {
    pub fn new(block_timestamp: u64, difficulty: u64) -> Self {
        Self { block_timestamp, difficulty }
    }

    pub fn value(&self) -> u64 {
        let mut input = [0u8; 64];
        input[24..32].copy_from_slice(&self.block_timestamp.to_be_bytes());
        input[56..64].copy_from_slice(&self.difficulty.to_be_bytes());
        let digest = keccak256(&input);
        u64::from_be_bytes(digest[24..32].try_into().expect("8 bytes"))
    }

    pub fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.value())
    }

    /// Independent stream for one `(agent, question)` cell.
    pub fn stream(&self, agent: u32, question: u32) -> SplitMix64 {
        let cell = (u64::from(agent) << 32 | u64::from(question)).wrapping_add(GOLDEN_GAMMA);
        SplitMix64::new(mix64(self.value() ^ mix64(cell)))
    }
}

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
    draws: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, draws: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        self.draws += 1;
        mix64(self.state)
    }

    /// Draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

fn check_k(k: usize, available: usize) -> Result<(), SamplingError> {
    if k == 0 {
        Err(SamplingError::ZeroK)
    } else if k > available {
        Err(SamplingError::KTooLarge { k, available })
    } else {
        Ok(())
    }
}

/// Fisher–Yates prefix: exactly `k` draws from `rng`.
pub fn sample_with<T: Clone>(
    candidates: &[T],
    k: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<T>, SamplingError> {
    check_k(k, candidates.len())?;
    let mut pool: Vec<usize> = (0..candidates.len()).collect();
    let mut live = pool.len();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let r = rng.below(live);
        picked.push(candidates[pool[r]].clone());
        pool.swap(r, live - 1);
        live -= 1;
    }
    Ok(picked)
}

/// Bounded-work sampler used for rewards.
pub fn sample_peers<T: Clone>(
    candidates: &[T],
    k: usize,
    seed: &SelectionSeed,
) -> Result<Vec<T>, SamplingError> {
    sample_with(candidates, k, &mut seed.rng())
}

/// Draw-and-retry sampler; `draw_cap` bounds the number of draws.
pub fn rejection_with<T: Clone>(
    candidates: &[T],
    k: usize,
    rng: &mut SplitMix64,
    draw_cap: Option<u64>,
) -> Result<(Vec<T>, u64), SamplingError> {
    check_k(k, candidates.len())?;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut draws = 0u64;
    while chosen.len() < k {
        if let Some(cap) = draw_cap {
            if draws >= cap {
                return Err(SamplingError::DrawBudgetExceeded { cap });
            }
        }
        let r = rng.below(candidates.len());
        draws += 1;
        if !chosen.contains(&r) {
            chosen.push(r);
        }
    }
    Ok((chosen.into_iter().map(|i| candidates[i].clone()).collect(), draws))
}

pub fn sample_peers_rejection<T: Clone>(
    candidates: &[T],
    k: usize,
    seed: &SelectionSeed,
    draw_cap: Option<u64>,
) -> Result<(Vec<T>, u64), SamplingError> {
    rejection_with(candidates, k, &mut seed.rng(), draw_cap)
}

/// Parses the peer-selection golden-vector format:
/// `timestamp difficulty candidates k idx0,idx1,...` per line.
pub fn parse_golden_vectors(text: &str) -> Result<Vec<(SelectionSeed, usize, usize, Vec<usize>)>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [ts, diff, n, k, idx] = fields[..] else {
                return Err(format!("expected 5 fields: {line}"));
            };
            let num = |s: &str| s.parse::<u64>().map_err(|e| format!("{s}: {e}"));
            let indices = idx
                .split(',')
                .map(|s| s.parse::<usize>().map_err(|e| format!("{s}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((SelectionSeed::new(num(ts)?, num(diff)?), num(n)? as usize, num(k)? as usize, indices))
        })
        .collect()
}
