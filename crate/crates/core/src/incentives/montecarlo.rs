use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GenerativeWorld, IncentiveError};
use crate::peer_selection::mix64;

/// How an agent turns its observation into a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Truthful,
    AlwaysZero,
    AlwaysOne,
    Flip,
    /// Reports 1 with the given probability, ignoring the observation.
    Random(f64),
}

impl Strategy {
    pub fn report<R: Rng + ?Sized>(&self, observed: bool, rng: &mut R) -> bool {
        match *self {
            Strategy::Truthful => observed,
            Strategy::AlwaysZero => false,
            Strategy::AlwaysOne => true,
            Strategy::Flip => !observed,
            Strategy::Random(p) => rng.random::<f64>() < p,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Truthful => f.write_str("truthful"),
            Strategy::AlwaysZero => f.write_str("always_0"),
            Strategy::AlwaysOne => f.write_str("always_1"),
            Strategy::Flip => f.write_str("flip"),
            Strategy::Random(p) => write!(f, "random_{p}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = IncentiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "truthful" => Ok(Strategy::Truthful),
            "always_0" => Ok(Strategy::AlwaysZero),
            "always_1" => Ok(Strategy::AlwaysOne),
            "flip" => Ok(Strategy::Flip),
            _ => s
                .strip_prefix("random_")
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| (0.0..=1.0).contains(p))
                .map(Strategy::Random)
                .ok_or_else(|| IncentiveError::InvalidScenario(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    StrictlyPositive,
    StrictlyNegative,
    Inconclusive,
}

impl Verdict {
    /// Sign of `mean` when it is more than three standard errors from zero.
    pub fn of(estimate: &Estimate) -> Self {
        let margin = 3.0 * estimate.std_error;
        if estimate.mean > margin {
            Verdict::StrictlyPositive
        } else if estimate.mean < -margin {
            Verdict::StrictlyNegative
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::StrictlyPositive => "strictly_positive",
            Verdict::StrictlyNegative => "strictly_negative",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Monte-Carlo run parameters. Questions are simulated in blocks; each block
/// has its own generator derived from `master_seed`, and frequencies are
/// estimated within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub rounds: u64,
    pub block_size: usize,
    pub master_seed: u64,
}

impl McConfig {
    pub fn new(rounds: u64, master_seed: u64) -> Self {
        Self { rounds, block_size: 1000, master_seed }
    }

    fn blocks(&self) -> u64 {
        self.rounds.div_ceil(self.block_size as u64).max(1)
    }

    fn block_len(&self, b: u64) -> usize {
        let start = b * self.block_size as u64;
        (self.rounds.saturating_sub(start)).min(self.block_size as u64).max(1) as usize
    }

    fn rng(&self, b: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix64(self.master_seed ^ mix64(b.wrapping_add(1))))
    }
}

/// Sample mean with its standard error across blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub blocks: u64,
}

impl Estimate {
    fn from_blocks(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self { mean, std_error: (var / k).sqrt(), blocks: values.len() as u64 }
    }

    /// `|mean - target| <= 3 SE + slack`.
    pub fn agrees_with(&self, target: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= 3.0 * self.std_error + slack
    }
}

/// Fraction of zeros among the reports of one question.
pub fn outcome(reports: &[bool]) -> f64 {
    reports.iter().filter(|r| !**r).count() as f64 / reports.len() as f64
}

fn check(n: usize, c: f64, alpha: f64) -> Result<(), IncentiveError> {
    if n < 2 {
        return Err(IncentiveError::InvalidScenario(format!("need at least 2 agents, got {n}")));
    }
    if !(c > 0.0) || !(alpha >= 0.0) {
        return Err(IncentiveError::InvalidScenario("alpha must be non-negative and c positive".into()));
    }
    Ok(())
}

/// PTSC payment for report `y` against peer report `peer`, with
/// `counts` the frequencies of 0 and 1 among the reports that exclude the
/// agent's own.
fn ptsc(alpha: f64, y: bool, peer: bool, counts: [u64; 2]) -> f64 {
    let num = counts[y as usize];
    if num == 0 {
        return 0.0;
    }
    let freq = num as f64 / (counts[0] + counts[1]) as f64;
    let matched = if y == peer { 1.0 } else { 0.0 };
    alpha * (matched / freq - 1.0)
}

fn run_blocks<F>(config: &McConfig, block: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, usize) -> f64 + Sync,
{
    (0..config.blocks())
        .into_par_iter()
        .map(|b| block(&mut config.rng(b), config.block_len(b)))
        .collect()
}

/// Expected utility of truth-telling minus that of `deviation` for one agent
/// while the other `n - 1` report truthfully. Utility is the PTSC payment
/// against one uniformly chosen peer plus the refund `c · o_q` on a 0 report.
/// Both strategies see the same observations and peer (common random
/// numbers).
pub fn utility_gap(
    n: usize,
    c: f64,
    alpha: f64,
    world: &GenerativeWorld,
    deviation: Strategy,
    config: &McConfig,
) -> Result<Estimate, IncentiveError> {
    check(n, c, alpha)?;
    let means = run_blocks(config, |rng, len| {
        let mut obs = vec![false; n];
        let mut rows = Vec::with_capacity(len * n);
        let mut counts = [0u64; 2];
        for _ in 0..len {
            world.observe(rng, &mut obs);
            for &x in &obs[1..] {
                counts[x as usize] += 1;
            }
            rows.extend_from_slice(&obs);
        }
        let mut total = 0.0;
        for row in rows.chunks(n) {
            let x = row[0];
            let peer = row[rng.random_range(1..n)];
            let zeros = row[1..].iter().filter(|r| !**r).count();
            let dev = deviation.report(x, rng);
            let utility = |y: bool| {
                let refund = if y { 0.0 } else { c * (zeros + 1) as f64 / n as f64 };
                ptsc(alpha, y, peer, counts) + refund
            };
            total += utility(x) - utility(dev);
        }
        total / len as f64
    });
    Ok(Estimate::from_blocks(&means))
}

/// Per-agent PTSC payment and the payer's relative saving
/// `(n c - payments) / (n c)`, per question, with everyone truthful.
fn truthful_rounds(n: usize, c: f64, alpha: f64, world: &GenerativeWorld, config: &McConfig) -> (Vec<f64>, Vec<f64>) {
    run_blocks_pair(config, |rng, len| {
        let mut obs = vec![false; n];
        let mut rows = Vec::with_capacity(len * n);
        let mut own = vec![[0u64; 2]; n];
        let mut counts = [0u64; 2];
        for _ in 0..len {
            world.observe(rng, &mut obs);
            for (i, &x) in obs.iter().enumerate() {
                own[i][x as usize] += 1;
                counts[x as usize] += 1;
            }
            rows.extend_from_slice(&obs);
        }
        let (mut paid, mut saved) = (0.0, 0.0);
        for row in rows.chunks(n) {
            let o = outcome(row);
            let mut question_total = 0.0;
            for (i, &y) in row.iter().enumerate() {
                let mut p = rng.random_range(0..n - 1);
                if p >= i {
                    p += 1;
                }
                let excl = [counts[0] - own[i][0], counts[1] - own[i][1]];
                let pay = ptsc(alpha, y, row[p], excl);
                paid += pay;
                question_total += pay + if y { 0.0 } else { c * o };
            }
            let nc = n as f64 * c;
            saved += (nc - question_total) / nc;
        }
        (paid / (len * n) as f64, saved / len as f64)
    })
}

fn run_blocks_pair<F>(config: &McConfig, block: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&mut ChaCha8Rng, usize) -> (f64, f64) + Sync,
{
    (0..config.blocks())
        .into_par_iter()
        .map(|b| block(&mut config.rng(b), config.block_len(b)))
        .unzip()
}

/// Average PTSC payment per agent and question with everyone truthful.
pub fn expected_payment_mc(
    n: usize,
    c: f64,
    alpha: f64,
    world: &GenerativeWorld,
    config: &McConfig,
) -> Result<Estimate, IncentiveError> {
    check(n, c, alpha)?;
    Ok(Estimate::from_blocks(&truthful_rounds(n, c, alpha, world, config).0))
}

/// Average relative saving `(n c - P) / (n c)` with everyone truthful, where
/// `P` is the PTSC payments plus refunds for one question.
pub fn relative_saving_mc(
    n: usize,
    c: f64,
    alpha: f64,
    world: &GenerativeWorld,
    config: &McConfig,
) -> Result<Estimate, IncentiveError> {
    check(n, c, alpha)?;
    Ok(Estimate::from_blocks(&truthful_rounds(n, c, alpha, world, config).1))
}
