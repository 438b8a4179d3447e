//! Peer-consistency reward mechanisms.
//!
//! Three mechanisms score an agent's report on a question against the reports
//! of her peers on the same question:
//!
//! * **Output Agreement**: 1 if the answers match, 0 otherwise.
//! * **Dasgupta–Ghosh**: the OA match minus a penalty equal to the fraction of
//!   agreeing `(q', q'')` pairs, `q'` answered only by the agent and `q''`
//!   only by the peer.
//! * **PTSC**: `alpha * (match / R_i(y) - 1)` where `R_i(y)` is the frequency
//!   of `y` among all answers of the other agents; 0 when `R_i(y) = 0`.
//!
//! A question's score is the mean over its peers; an agent's reward is the
//! mean over questions where she has at least one peer. Agents with no scored
//! question get 0.
//!
//! Each mechanism exists twice: an optimized path that reuses intermediary
//! values (per-question counts, [`FrequencyTable`], a pairwise penalty cache)
//! and a naive path that recomputes everything per agent. Both return the
//! same exact values and tally the abstract operations they perform in an
//! [`OpTally`] for the gas model.

mod frequency;
mod matrix;
mod naive;
mod optimized;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use frequency::FrequencyTable;
pub use matrix::{AgentId, AnswerMatrix, MatrixError, QuestionId};

use crate::gas_model::OpTally;
use crate::peer_selection::{sample_with, SamplingError, SelectionSeed};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("the answer matrix has no answers")]
    EmptyMatrix,
    #[error("agents {agent} and {peer} have no non-common questions")]
    NoNonCommonQuestions { agent: AgentId, peer: AgentId },
    #[error("PTSC scaling constant must be positive")]
    NonPositiveAlpha,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    OutputAgreement,
    DasguptaGhosh,
    PeerTruthSerum,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] =
        [Mechanism::OutputAgreement, Mechanism::DasguptaGhosh, Mechanism::PeerTruthSerum];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::OutputAgreement => "oa",
            Mechanism::DasguptaGhosh => "dg",
            Mechanism::PeerTruthSerum => "ptsc",
        }
    }

    /// Whether rewards can be negative (and deposits are needed).
    pub fn allows_negative(self) -> bool {
        !matches!(self, Mechanism::OutputAgreement)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mechanism `{s}` (expected oa, dg or ptsc)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeerMode {
    AllPeers,
    /// `k` peers per (agent, question), drawn from that cell's own stream.
    Sampled { k: usize, seed: SelectionSeed },
}

impl fmt::Display for PeerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeerMode::AllPeers => f.write_str("all"),
            PeerMode::Sampled { k, .. } => write!(f, "{k}"),
        }
    }
}

/// Which reward implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ComputePath {
    #[default]
    Optimized,
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardReport<S> {
    pub mechanism: Mechanism,
    /// PTSC `alpha`; 1 for the other mechanisms.
    pub scaling: S,
    pub peer_mode: PeerMode,
    /// One row per registered agent, in matrix order.
    pub rewards: Vec<(AgentId, S)>,
    pub ops: OpTally,
}

impl<S> RewardReport<S> {
    pub fn reward(&self, agent: AgentId) -> Option<&S> {
        self.rewards.iter().find(|(a, _)| *a == agent).map(|(_, r)| r)
    }

    pub fn values(&self) -> impl Iterator<Item = &S> {
        self.rewards.iter().map(|(_, r)| r)
    }
}

/// Candidate peers of `agent` on `question` under `mode`, given the
/// question's answerers. Sampling charges building the not-selected pool and
/// each draw; iterating peers is charged by the caller.
pub(crate) fn select_peers(
    matrix: &AnswerMatrix,
    agent: usize,
    question: usize,
    answerers: &[usize],
    mode: &PeerMode,
    ops: &mut OpTally,
) -> Result<Vec<usize>, SamplingError> {
    let candidates: Vec<usize> = answerers.iter().copied().filter(|&p| p != agent).collect();
    match *mode {
        PeerMode::AllPeers => Ok(candidates),
        PeerMode::Sampled { k, seed } => {
            if k == 0 {
                return Err(SamplingError::ZeroK);
            }
            if candidates.is_empty() {
                return Ok(candidates);
            }
            ops.cmp(answerers.len() as u64);
            ops.mem(candidates.len() as u64);
            let k = k.min(candidates.len());
            // splitmix step, modulo, swap-to-end
            ops.arith(10 * k as u64);
            ops.mem(2 * k as u64);
            let mut rng = seed.stream(matrix.agents()[agent].0, matrix.questions()[question].0);
            sample_with(&candidates, k, &mut rng)
        }
    }
}

/// Running mean of question scores.
pub(crate) struct Mean<S> {
    sum: S,
    count: usize,
}

impl<S: Scalar> Mean<S> {
    pub(crate) fn new() -> Self {
        Self { sum: S::zero(), count: 0 }
    }

    pub(crate) fn push(&mut self, value: S) {
        self.sum = self.sum.clone() + value;
        self.count += 1;
    }

    pub(crate) fn finish(self) -> S {
        if self.count == 0 {
            S::zero()
        } else {
            self.sum / S::from_count(self.count)
        }
    }
}

fn check_inputs<S: Scalar>(matrix: &AnswerMatrix, mechanism: Mechanism, alpha: &S) -> Result<(), MechanismError> {
    if matrix.is_empty() {
        return Err(MechanismError::EmptyMatrix);
    }
    if mechanism == Mechanism::PeerTruthSerum && *alpha <= S::zero() {
        return Err(MechanismError::NonPositiveAlpha);
    }
    Ok(())
}

/// Rewards of `mechanism` computed along `path`. `alpha` is ignored except
/// for PTSC.
pub fn compute_rewards<S: Scalar>(
    matrix: &AnswerMatrix,
    mechanism: Mechanism,
    alpha: S,
    peer_mode: PeerMode,
    path: ComputePath,
) -> Result<RewardReport<S>, MechanismError> {
    check_inputs(matrix, mechanism, &alpha)?;
    let mut ops = OpTally::default();
    let values = match (mechanism, path) {
        (Mechanism::OutputAgreement, ComputePath::Optimized) => optimized::oa(matrix, &peer_mode, &mut ops)?,
        (Mechanism::OutputAgreement, ComputePath::Naive) => naive::oa(matrix, &peer_mode, &mut ops)?,
        (Mechanism::DasguptaGhosh, ComputePath::Optimized) => optimized::dg(matrix, &peer_mode, &mut ops)?,
        (Mechanism::DasguptaGhosh, ComputePath::Naive) => naive::dg(matrix, &peer_mode, &mut ops)?,
        (Mechanism::PeerTruthSerum, ComputePath::Optimized) => {
            optimized::ptsc(matrix, &alpha, &peer_mode, &mut ops)?
        }
        (Mechanism::PeerTruthSerum, ComputePath::Naive) => naive::ptsc(matrix, &alpha, &peer_mode, &mut ops)?,
    };
    let scaling = if mechanism == Mechanism::PeerTruthSerum { alpha } else { S::one() };
    Ok(RewardReport {
        mechanism,
        scaling,
        peer_mode,
        rewards: matrix.agents().iter().copied().zip(values).collect(),
        ops,
    })
}

pub fn oa_rewards<S: Scalar>(matrix: &AnswerMatrix, peer_mode: PeerMode) -> Result<RewardReport<S>, MechanismError> {
    compute_rewards(matrix, Mechanism::OutputAgreement, S::one(), peer_mode, ComputePath::Optimized)
}

pub fn dg_rewards<S: Scalar>(matrix: &AnswerMatrix, peer_mode: PeerMode) -> Result<RewardReport<S>, MechanismError> {
    compute_rewards(matrix, Mechanism::DasguptaGhosh, S::one(), peer_mode, ComputePath::Optimized)
}

pub fn ptsc_rewards<S: Scalar>(
    matrix: &AnswerMatrix,
    alpha: S,
    peer_mode: PeerMode,
) -> Result<RewardReport<S>, MechanismError> {
    compute_rewards(matrix, Mechanism::PeerTruthSerum, alpha, peer_mode, ComputePath::Optimized)
}

/// Reference path recomputing every count from scratch.
pub fn rewards_naive<S: Scalar>(
    matrix: &AnswerMatrix,
    mechanism: Mechanism,
    alpha: S,
    peer_mode: PeerMode,
) -> Result<RewardReport<S>, MechanismError> {
    compute_rewards(matrix, mechanism, alpha, peer_mode, ComputePath::Naive)
}
