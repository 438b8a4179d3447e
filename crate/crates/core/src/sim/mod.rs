//! Experiment harness: dataset ingestion, agent behaviors and full protocol
//! rounds with gas and reward statistics.

mod dataset;
mod population;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use dataset::{binarize, col_question, row_agent, QoSDataset, MISSING};
pub use population::{apply_behaviors, generate_reports, AgentPopulation, Behavior};

use crate::commitment::{CommitmentError, PackedAnswerVector, SecretKey};
use crate::gas_model::GasTable;
use crate::ledger::{Ledger, LedgerConfig, LedgerError, PeerChoice, Phase, Settlement};
use crate::mechanisms::{AnswerMatrix, ComputePath, Mechanism, QuestionId};
use crate::scalar::{format_decimal, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset parse error: {0}")]
    Parse(String),
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Commitment(#[from] CommitmentError),
    #[error("gas report does not reconcile with the gas ledger")]
    GasMismatch,
}

/// Requester funds escrowed for gas reimbursements.
const REQUESTER_DEPOSIT: u128 = 1_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub mechanism: Mechanism,
    pub alpha: Rational,
    pub peers: PeerChoice,
    pub packing: bool,
    pub compute_path: ComputePath,
    pub gas_table: GasTable,
    pub agents: usize,
    pub questions_per_agent: usize,
    pub population: AgentPopulation,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            id: "default".into(),
            mechanism: Mechanism::OutputAgreement,
            alpha: Rational::from_count(1),
            peers: PeerChoice::All,
            packing: true,
            compute_path: ComputePath::Optimized,
            gas_table: GasTable::default(),
            agents: 50,
            questions_per_agent: 50,
            population: AgentPopulation::default(),
            threshold: 1.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn ledger_config(&self) -> LedgerConfig {
        LedgerConfig {
            mechanism: self.mechanism,
            alpha: self.alpha.clone(),
            peers: self.peers,
            compute_path: self.compute_path,
            packing: self.packing,
            gas_table: self.gas_table,
            ..LedgerConfig::default()
        }
    }
}

/// A single ledger round and its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub agents: usize,
    pub behaviors: Vec<Behavior>,
    pub truth: AnswerMatrix,
    pub reports: AnswerMatrix,
    pub gas_per_phase: BTreeMap<Phase, u64>,
    pub total_gas: u64,
    pub settlement: Settlement,
    pub ledger: Ledger,
}

pub const REPORT_HEADER: &str = "config_id,mechanism,packing,k_peers,agents,questions_per_agent,phase,gas,\
mean_reward_truthful,mean_reward_random,mean_reward_adversarial";

impl ExperimentReport {
    pub fn phase_gas(&self, phase: Phase) -> u64 {
        self.gas_per_phase.get(&phase).copied().unwrap_or(0)
    }

    /// Mean mechanism reward of agents with `behavior`, if any.
    pub fn mean_reward(&self, behavior: Behavior) -> Option<f64> {
        let values: Vec<f64> = self
            .settlement
            .rewards
            .rewards
            .iter()
            .zip(&self.behaviors)
            .filter(|(_, b)| **b == behavior)
            .map(|((_, r), _)| r.to_f64_lossy())
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// One row per phase plus a `total` row.
    pub fn csv_rows(&self) -> Vec<String> {
        let c = &self.config;
        let means: Vec<String> = Behavior::ALL
            .iter()
            .map(|&b| self.mean_reward(b).map(|m| format_decimal(&m)).unwrap_or_default())
            .collect();
        let row = |phase: &str, gas: u64| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                c.id,
                c.mechanism.name(),
                if c.packing { "on" } else { "off" },
                c.peers,
                self.agents,
                c.questions_per_agent,
                phase,
                gas,
                means.join(",")
            )
        };
        let mut rows: Vec<String> = self.gas_per_phase.iter().map(|(p, g)| row(&p.to_string(), *g)).collect();
        rows.push(row("total", self.total_gas));
        rows
    }
}

pub fn reports_to_csv(reports: &[ExperimentReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// Each agent answers the first `limit` services its row has values for.
fn assigned_questions(truth: &AnswerMatrix, agent: usize, limit: usize) -> Vec<(QuestionId, bool)> {
    truth
        .row(agent)
        .take(limit)
        .map(|(q, bit)| (truth.questions()[q], bit))
        .collect()
}

/// Runs post, select, commit, reveal and settle on the top-left
/// `agents` rows of `dataset`.
pub fn run_experiment(dataset: &QoSDataset, config: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    if config.agents == 0 || config.questions_per_agent == 0 {
        return Err(SimError::InvalidConfig("agents and questions per agent must be positive".into()));
    }
    let corner = dataset.corner(config.agents, dataset.cols());
    let full_truth = binarize(&corner, config.threshold)?;
    let assignments: Vec<_> = (0..corner.rows())
        .map(|i| assigned_questions(&full_truth, i, config.questions_per_agent))
        .collect();
    let mut truth = AnswerMatrix::new(full_truth.agents().to_vec(), full_truth.questions().to_vec())
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    for (i, answers) in assignments.iter().enumerate() {
        for &(q, bit) in answers {
            truth.set(full_truth.agents()[i], q, bit).expect("cell of matrix");
        }
    }
    let (reports, behaviors) = generate_reports(&truth, &config.population, config.seed)?;

    let ledger_config = config.ledger_config();
    let deposit = ledger_config.min_deposit();
    let mut ledger = Ledger::new(ledger_config)?;
    let budget = ledger.config().scale * corner.rows() as u128;
    ledger.post_questions(truth.questions(), budget, REQUESTER_DEPOSIT)?;
    for (i, answers) in assignments.iter().enumerate() {
        let qs: Vec<QuestionId> = answers.iter().map(|(q, _)| *q).collect();
        ledger.select_questions(truth.agents()[i], &qs, deposit)?;
    }
    ledger.close_selection()?;

    let mut key_rng = ChaCha8Rng::seed_from_u64(config.seed.rotate_left(17) ^ 0x6B65_7973);
    let mut openings = Vec::new();
    for (i, &agent) in truth.agents().iter().enumerate() {
        let registration = ledger.registration(agent).expect("registered").clone();
        for (b, order) in registration.batches().enumerate() {
            let answers: Vec<(QuestionId, bool)> =
                order.iter().map(|&q| (q, reports.get(agent, q).expect("assigned"))).collect();
            let vector = PackedAnswerVector::pack(&answers, order)?;
            let key = SecretKey::generate(&mut key_rng);
            ledger.submit_commitment(agent, b as u32, crate::commitment::commit(&vector, key))?;
            openings.push((i, b as u32, vector, key));
        }
    }
    ledger.advance_blocks(1);
    for (i, b, vector, key) in &openings {
        ledger.reveal(truth.agents()[*i], *b, vector, *key)?;
    }
    let settlement = ledger.settle()?.clone();

    let gas_per_phase = ledger.gas().per_phase().clone();
    let total_gas = ledger.gas().total();
    if gas_per_phase.values().sum::<u64>() != total_gas || !ledger.gas().is_consistent() {
        return Err(SimError::GasMismatch);
    }
    Ok(ExperimentReport {
        config: config.clone(),
        agents: corner.rows(),
        behaviors,
        truth,
        reports,
        gas_per_phase,
        total_gas,
        settlement,
        ledger,
    })
}

/// Runs independent configurations in parallel, preserving order.
pub fn run_sweep(dataset: &QoSDataset, configs: &[ExperimentConfig]) -> Result<Vec<ExperimentReport>, SimError> {
    configs.par_iter().map(|c| run_experiment(dataset, c)).collect()
}

/// Questions-per-agent sweep with packing on and off.
pub fn packing_sweep(base: &ExperimentConfig, questions: impl IntoIterator<Item = usize>) -> Vec<ExperimentConfig> {
    questions
        .into_iter()
        .flat_map(|n| {
            [true, false].map(|packing| ExperimentConfig {
                id: format!("pack-{}-{n}", if packing { "on" } else { "off" }),
                packing,
                questions_per_agent: n,
                ..base.clone()
            })
        })
        .collect()
}

/// One configuration per mechanism.
pub fn mechanism_sweep(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    [Mechanism::OutputAgreement, Mechanism::DasguptaGhosh, Mechanism::PeerTruthSerum]
        .map(|mechanism| ExperimentConfig { id: format!("mech-{}", mechanism.name()), mechanism, ..base.clone() })
        .to_vec()
}

/// Optimized and naive reward computation for every agent count and
/// questions-per-agent pair.
pub fn computation_sweep(base: &ExperimentConfig, agents: &[usize], questions: &[usize]) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for &a in agents {
        for &q in questions {
            for (path, name) in [(ComputePath::Optimized, "opt"), (ComputePath::Naive, "naive")] {
                out.push(ExperimentConfig {
                    id: format!("comp-{name}-{a}x{q}"),
                    compute_path: path,
                    agents: a,
                    questions_per_agent: q,
                    ..base.clone()
                });
            }
        }
    }
    out
}

/// All peers followed by sampled `k` for each value given.
pub fn peer_sweep(base: &ExperimentConfig, ks: impl IntoIterator<Item = usize>) -> Vec<ExperimentConfig> {
    let mut out = vec![ExperimentConfig { id: "peers-all".into(), peers: PeerChoice::All, ..base.clone() }];
    out.extend(
        ks.into_iter()
            .map(|k| ExperimentConfig { id: format!("peers-{k}"), peers: PeerChoice::Sampled(k), ..base.clone() }),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> QoSDataset {
        QoSDataset::synthetic(12, 30, 0.5, 7).unwrap()
    }

    #[test]
    fn round_reconciles_and_conserves() {
        for mechanism in [Mechanism::OutputAgreement, Mechanism::DasguptaGhosh, Mechanism::PeerTruthSerum] {
            let config = ExperimentConfig { mechanism, agents: 12, ..ExperimentConfig::default() };
            let report = run_experiment(&small(), &config).unwrap();
            report.ledger.audit().unwrap();
            assert_eq!(report.total_gas, report.ledger.gas().total());
            assert_eq!(report.csv_rows().len(), report.gas_per_phase.len() + 1);
        }
    }

    #[test]
    fn deterministic() {
        let config = ExperimentConfig { agents: 12, seed: 3, ..ExperimentConfig::default() };
        let a = run_experiment(&small(), &config).unwrap();
        let b = run_experiment(&small(), &config).unwrap();
        assert_eq!(reports_to_csv(&[a.clone()]), reports_to_csv(&[b]));
        assert_eq!(a.ledger.events(), run_experiment(&small(), &config).unwrap().ledger.events());
    }

    #[test]
    fn truncates_to_first_present_columns() {
        let d = QoSDataset::parse("0.5 -1 2.0 0.1\n-1 0.3 0.4 0.2\n").unwrap();
        let config = ExperimentConfig { agents: 2, questions_per_agent: 2, ..ExperimentConfig::default() };
        let r = run_experiment(&d, &config).unwrap();
        assert_eq!(r.truth, AnswerMatrix::from_grid(&["1.0.", ".11."]).unwrap());
    }

    #[test]
    fn sweep_builders() {
        let base = ExperimentConfig::default();
        assert_eq!(packing_sweep(&base, 1..=3).len(), 6);
        assert_eq!(mechanism_sweep(&base).len(), 3);
        let peers = peer_sweep(&base, [1, 2]);
        assert_eq!(peers[0].peers, PeerChoice::All);
        assert_eq!(peers[2].peers, PeerChoice::Sampled(2));
    }
}
