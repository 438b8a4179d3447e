//! PTSC under outside incentives.
//!
//! Agents who report 0 ("bad service") on a question receive a refund
//! `c · o_q`, where `o_q` is the fraction of the `n` reports that are 0. Left
//! alone this makes reporting 0 dominant. PTSC with a large enough scaling
//! constant restores truthfulness as a strict equilibrium:
//!
//! ```text
//! beta  = min_i  P_i(1|1)/P_i(1) - P_i(0|1)/P_i(0)
//! gamma = max_i  P_i(0|1)
//! alpha > c (1 + (n-1) gamma) / (n beta)
//! ```
//!
//! The expected PTSC payment per agent is at most `alpha`, and the payer's
//! expected relative saving `(n c - payments) / (n c)` is at least
//! `P(1)(2 - P(1)) - alpha / c`.
//!
//! The closed forms are generic over [`Scalar`]; the Monte-Carlo checks draw
//! observations from a [`GenerativeWorld`] calibrated to the beliefs and run
//! in `f64`.

mod montecarlo;
mod scenario;
mod world;

use thiserror::Error;

pub use montecarlo::{
    expected_payment_mc, outcome, relative_saving_mc, utility_gap, Estimate, McConfig, Strategy, Verdict,
};
pub use scenario::{AlphaSpec, IncentiveScenario, ScenarioFile, ScenarioResult, ScenarioSpec, DEVIATIONS};
pub use world::{calibrate_world, GenerativeWorld};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncentiveError {
    #[error("prior {0} is not strictly between 0 and 1")]
    DegeneratePrior(f64),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("belief model has no agents")]
    NoAgents,
    #[error("correlation strength beta = {0} is not positive")]
    NonPositiveBeta(f64),
    #[error("alpha {alpha} does not exceed the bound {bound}")]
    AlphaTooSmall { alpha: f64, bound: f64 },
    #[error("no symmetric mixture reproduces prior {prior} with posterior {posterior}")]
    NoSolution { prior: f64, posterior: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// One agent's beliefs about a random peer's observation.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBelief<S> {
    /// `P_i(x_p = 1)`.
    pub prior_1: S,
    /// `P_i(x_p = 1 | x_i = 1)`.
    pub post_1_given_1: S,
    /// `P_i(x_p = 0 | x_i = 1)`, always `1 - post_1_given_1`.
    pub post_0_given_1: S,
    /// `P_i(x_p = 0 | x_i = 0)`.
    pub post_0_given_0: S,
}

fn check_probability<S: Scalar>(p: &S) -> Result<(), IncentiveError> {
    if *p < S::zero() || *p > S::one() {
        Err(IncentiveError::InvalidProbability(p.to_f64_lossy()))
    } else {
        Ok(())
    }
}

impl<S: Scalar> AgentBelief<S> {
    pub fn new(prior_1: S, post_1_given_1: S, post_0_given_0: S) -> Result<Self, IncentiveError> {
        if prior_1 <= S::zero() || prior_1 >= S::one() {
            return Err(IncentiveError::DegeneratePrior(prior_1.to_f64_lossy()));
        }
        check_probability(&post_1_given_1)?;
        check_probability(&post_0_given_0)?;
        let post_0_given_1 = S::one() - post_1_given_1.clone();
        Ok(Self { prior_1, post_1_given_1, post_0_given_1, post_0_given_0 })
    }

    /// Posteriors raised by `bump` over the priors for both observations.
    pub fn with_bump(prior_1: S, bump: S) -> Result<Self, IncentiveError> {
        let post_1_given_1 = prior_1.clone() + bump.clone();
        let post_0_given_0 = S::one() - prior_1.clone() + bump;
        Self::new(prior_1, post_1_given_1, post_0_given_0)
    }

    /// `P(1|1)/P(1) - P(0|1)/P(0)`.
    pub fn correlation(&self) -> S {
        let prior_0 = S::one() - self.prior_1.clone();
        self.post_1_given_1.clone() / self.prior_1.clone() - self.post_0_given_1.clone() / prior_0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefModel<S> {
    agents: Vec<AgentBelief<S>>,
}

impl<S: Scalar> BeliefModel<S> {
    pub fn new(agents: Vec<AgentBelief<S>>) -> Result<Self, IncentiveError> {
        if agents.is_empty() {
            return Err(IncentiveError::NoAgents);
        }
        Ok(Self { agents })
    }

    /// Every agent shares one belief.
    pub fn uniform(belief: AgentBelief<S>) -> Self {
        Self { agents: vec![belief] }
    }

    pub fn agents(&self) -> &[AgentBelief<S>] {
        &self.agents
    }

    /// Weakest correlation strength over agents.
    pub fn beta(&self) -> S {
        self.agents
            .iter()
            .map(AgentBelief::correlation)
            .reduce(|a, b| if b < a { b } else { a })
            .expect("non-empty")
    }

    /// Largest `P_i(x_p = 0 | x_i = 1)`.
    pub fn gamma(&self) -> S {
        self.agents
            .iter()
            .map(|a| a.post_0_given_1.clone())
            .reduce(|a, b| if b > a { b } else { a })
            .expect("non-empty")
    }
}

/// Smallest scaling constant (exclusive) for which truthful reporting is a
/// strict equilibrium: `c (1 + (n-1) gamma) / (n beta)`.
pub fn alpha_bound<S: Scalar>(n: usize, c: &S, model: &BeliefModel<S>) -> Result<S, IncentiveError> {
    if n < 2 {
        return Err(IncentiveError::InvalidScenario(format!("need at least 2 agents, got {n}")));
    }
    if *c <= S::zero() {
        return Err(IncentiveError::InvalidScenario("refund coefficient must be positive".into()));
    }
    let beta = model.beta();
    if beta <= S::zero() {
        return Err(IncentiveError::NonPositiveBeta(beta.to_f64_lossy()));
    }
    let n_s = S::from_count(n);
    let numerator = c.clone() * (S::one() + S::from_count(n - 1) * model.gamma());
    Ok(numerator / (n_s * beta))
}

/// Expected PTSC payment per agent that suffices for truthfulness: `alpha`.
pub fn expected_payment_per_agent<S: Scalar>(alpha: &S) -> S {
    alpha.clone()
}

/// Best-case relative saving with non-strategic agents: `p1 (2 - p1)`.
pub fn max_saving<S: Scalar>(p1: &S) -> Result<S, IncentiveError> {
    check_probability(p1)?;
    Ok(p1.clone() * (S::from_count(2) - p1.clone()))
}

/// Guaranteed relative saving in the truthful equilibrium:
/// `p1 (2 - p1) - alpha / c`.
pub fn saving_lower_bound<S: Scalar>(p1: &S, alpha: &S, c: &S) -> Result<S, IncentiveError> {
    if *c <= S::zero() || *alpha <= S::zero() {
        return Err(IncentiveError::InvalidScenario("alpha and c must be positive".into()));
    }
    Ok(max_saving(p1)? - alpha.clone() / c.clone())
}
