use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::mechanisms::AnswerMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Behavior {
    /// Reports the observation.
    Truthful,
    /// Reports a fair coin.
    Random,
    /// Reports the opposite of the observation.
    Adversarial,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Truthful, Behavior::Random, Behavior::Adversarial];

    pub fn report<R: Rng + ?Sized>(self, truth: bool, rng: &mut R) -> bool {
        match self {
            Behavior::Truthful => truth,
            Behavior::Random => rng.random::<bool>(),
            Behavior::Adversarial => !truth,
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Behavior::Truthful => "truthful",
            Behavior::Random => "random",
            Behavior::Adversarial => "adversarial",
        })
    }
}

/// Fractions of truthful, random and adversarial agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPopulation {
    pub truthful: f64,
    pub random: f64,
    pub adversarial: f64,
}

impl Default for AgentPopulation {
    fn default() -> Self {
        Self { truthful: 0.5, random: 0.25, adversarial: 0.25 }
    }
}

impl AgentPopulation {
    pub fn new(truthful: f64, random: f64, adversarial: f64) -> Result<Self, SimError> {
        let p = Self { truthful, random, adversarial };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform(behavior: Behavior) -> Self {
        let mut p = Self { truthful: 0.0, random: 0.0, adversarial: 0.0 };
        match behavior {
            Behavior::Truthful => p.truthful = 1.0,
            Behavior::Random => p.random = 1.0,
            Behavior::Adversarial => p.adversarial = 1.0,
        }
        p
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let parts = [self.truthful, self.random, self.adversarial];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidPopulation(format!("{parts:?} must be probabilities summing to 1")));
        }
        Ok(())
    }

    /// Behaviors for `n` agents: `floor(n · truthful)` truthful,
    /// `floor(n · random)` random, the rest adversarial, in seeded random
    /// order.
    pub fn assign(&self, n: usize, seed: u64) -> Result<Vec<Behavior>, SimError> {
        self.validate()?;
        let truthful = (n as f64 * self.truthful + 1e-9).floor() as usize;
        let random = ((n as f64 * self.random + 1e-9).floor() as usize).min(n - truthful);
        let mut out = vec![Behavior::Adversarial; n];
        out[..truthful].fill(Behavior::Truthful);
        out[truthful..truthful + random].fill(Behavior::Random);
        out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(out)
    }
}

/// Reports of agents with the given behaviors, one per row of `truth`.
pub fn apply_behaviors(truth: &AnswerMatrix, behaviors: &[Behavior], seed: u64) -> AnswerMatrix {
    assert_eq!(truth.agents().len(), behaviors.len(), "one behavior per agent");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = AnswerMatrix::new(truth.agents().to_vec(), truth.questions().to_vec()).expect("ids of a matrix");
    for (agent, question, bit) in truth.cells() {
        let i = truth.agent_position(agent).expect("agent of matrix");
        out.set(agent, question, behaviors[i].report(bit, &mut rng)).expect("cell of matrix");
    }
    out
}

/// Assigns behaviors with `seed` and applies them.
pub fn generate_reports(
    truth: &AnswerMatrix,
    population: &AgentPopulation,
    seed: u64,
) -> Result<(AnswerMatrix, Vec<Behavior>), SimError> {
    let behaviors = population.assign(truth.agents().len(), seed)?;
    let reports = apply_behaviors(truth, &behaviors, seed ^ 0x005E_ED0F_BE4A_7105);
    Ok((reports, behaviors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mix_counts() {
        let b = AgentPopulation::default().assign(50, 1).unwrap();
        let count = |x| b.iter().filter(|&&y| y == x).count();
        assert_eq!((count(Behavior::Truthful), count(Behavior::Random), count(Behavior::Adversarial)), (25, 12, 13));
        assert_ne!(b, AgentPopulation::default().assign(50, 2).unwrap());
    }

    #[test]
    fn invalid_fractions() {
        assert!(AgentPopulation::new(0.5, 0.5, 0.5).is_err());
        assert!(AgentPopulation::new(-0.1, 0.6, 0.5).is_err());
    }

    #[test]
    fn pure_populations() {
        let truth = AnswerMatrix::from_grid(&["10.1", "0110"]).unwrap();
        let (same, _) = generate_reports(&truth, &AgentPopulation::uniform(Behavior::Truthful), 4).unwrap();
        assert_eq!(same, truth);
        let (flipped, _) = generate_reports(&truth, &AgentPopulation::uniform(Behavior::Adversarial), 4).unwrap();
        assert_eq!(flipped, AnswerMatrix::from_grid(&["01.0", "1001"]).unwrap());
    }
}
