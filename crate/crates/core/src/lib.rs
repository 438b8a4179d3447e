//! Decentralized-oracle protocol simulator.
//!
//! * [`mechanisms`]: Output Agreement, Dasgupta–Ghosh and PTSC rewards, exact
//!   or floating point, over all peers or sampled peers.
//! * [`commitment`]: 42-answer bit packing and Keccak-256 commitments.
//! * [`ledger`]: the on-chain contract as a deterministic state machine with
//!   deposits, settlement and a replayable event log.
//! * [`peer_selection`]: block-seeded sampling without replacement.
//! * [`gas_model`]: table-driven gas accounting.
//! * [`incentives`]: outside-incentive bounds for PTSC and their Monte-Carlo
//!   checks.
//! * [`sim`]: QoS dataset ingestion, agent behaviours and experiment sweeps.

pub mod commitment;
pub mod gas_model;
pub mod incentives;
pub mod ledger;
pub mod mechanisms;
pub mod peer_selection;
pub mod scalar;
pub mod sim;

pub use scalar::{Rational, Scalar};

/// Rewards in exact arithmetic, as settled on the ledger.
pub type ExactRewardReport = mechanisms::RewardReport<Rational>;
/// Rewards in double precision.
pub type FloatRewardReport = mechanisms::RewardReport<f64>;
/// Belief model with exact probabilities.
pub type ExactBeliefModel = incentives::BeliefModel<Rational>;
/// Belief model in double precision.
pub type FloatBeliefModel = incentives::BeliefModel<f64>;
