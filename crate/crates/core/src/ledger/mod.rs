//! The oracle contract as a single-writer state machine.
//!
//! Lifecycle: `Posting → Selection → Commit → Reveal → Settled`.
//!
//! * The requester posts questions and escrows a budget plus a refundable
//!   deposit.
//! * Agents select questions and lock a deposit large enough to cover the
//!   worst-case negative reward (`alpha·scale` for PTSC, `scale` for DG,
//!   nothing for OA).
//! * Each agent commits one digest per batch of up to 42 selected questions.
//!   The commit phase ends when every batch is committed or the commit window
//!   elapses.
//! * Reveals are checked against the stored digest; mismatches are discarded.
//! * Settlement computes rewards, pays the budget out in proportion to the
//!   positive rewards, takes negative rewards out of deposits, reimburses the
//!   gas of agents whose reveal was accepted from the requester's deposit, and
//!   returns everything else.
//!
//! Time is a logical block counter moved only by [`Ledger::advance_blocks`].
//! Every successful mutation is appended to the event log, and
//! [`Ledger::replay`] rebuilds a bit-identical ledger from it.

mod events;
mod settlement;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use events::{parse_event_log, write_event_log, Event, LoggedEvent};
pub use settlement::{Settlement, SettlementRow};

use crate::commitment::{self, keccak256, Commitment, PackedAnswerVector, SecretKey, LAYOUT_BYTES, MAX_ANSWERS};
use crate::gas_model::{GasLedger, GasTable, OpKind, Party};
use crate::mechanisms::{AgentId, AnswerMatrix, ComputePath, Mechanism, MechanismError, QuestionId};
use crate::scalar::Rational;

/// Integer units per mechanism reward unit.
pub const DEFAULT_SCALE: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Posting,
    Selection,
    Commit,
    Reveal,
    Settled,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Posting => "posting",
            Phase::Selection => "selection",
            Phase::Commit => "commit",
            Phase::Reveal => "reveal",
            Phase::Settled => "settled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("operation needs phase {expected}, ledger is in {actual}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("the reveal window is still open")]
    RevealOpen,
    #[error("the reveal window has closed")]
    RevealClosed,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("question {0} posted twice")]
    DuplicateQuestion(QuestionId),
    #[error("unknown question {0}")]
    UnknownQuestion(QuestionId),
    #[error("deposit {offered} is below the required {required}")]
    InsufficientDeposit { required: u128, offered: u128 },
    #[error("agent {0} is already registered")]
    AlreadyRegistered(AgentId),
    #[error("agent {0} is not registered")]
    UnregisteredAgent(AgentId),
    #[error("agent {agent} has no commitment batch {batch}")]
    UnknownBatch { agent: AgentId, batch: u32 },
    #[error("agent {agent} already committed batch {batch}")]
    DuplicateCommitment { agent: AgentId, batch: u32 },
    #[error("agent {agent} has no commitment for batch {batch}")]
    NoCommitment { agent: AgentId, batch: u32 },
    #[error("agent {agent} already revealed batch {batch}")]
    AlreadyRevealed { agent: AgentId, batch: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("event log: {0}")]
    Log(String),
    #[error("replay diverged at event {index}: {reason}")]
    ReplayMismatch { index: usize, reason: String },
    #[error("audit failed: {0}")]
    Audit(String),
}

/// How peers are chosen at settlement. Sampled peers are seeded from the
/// settlement block number and the configured difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeerChoice {
    All,
    Sampled(usize),
}

impl fmt::Display for PeerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeerChoice::All => f.write_str("all"),
            PeerChoice::Sampled(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for PeerChoice {
    type Err = String;

    /// `all` or a positive peer count.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(PeerChoice::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(PeerChoice::Sampled(k)),
            _ => Err(format!("expected `all` or a positive peer count, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerConfig {
    pub mechanism: Mechanism,
    /// PTSC scaling constant; ignored by OA and DG.
    pub alpha: Rational,
    pub peers: PeerChoice,
    pub compute_path: ComputePath,
    /// Bit-vector packing of answers; off charges one word and one hash per
    /// answer instead of per batch.
    pub packing: bool,
    pub gas_table: GasTable,
    pub scale: u128,
    pub commit_window: u64,
    pub reveal_window: u64,
    pub difficulty: u64,
    /// Units reimbursed per unit of gas.
    pub gas_price: u128,
    /// Replaces the mechanism-derived minimum deposit.
    pub min_deposit_override: Option<u128>,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self {
            mechanism: Mechanism::OutputAgreement,
            alpha: Rational::from_integer(1.into()),
            peers: PeerChoice::All,
            compute_path: ComputePath::Optimized,
            packing: true,
            gas_table: GasTable::default(),
            scale: DEFAULT_SCALE,
            commit_window: 10,
            reveal_window: 10,
            difficulty: 1,
            gas_price: 1,
            min_deposit_override: None,
        }
    }
}

impl LedgerConfig {
    pub fn new(mechanism: Mechanism) -> Self {
        Self { mechanism, ..Self::default() }
    }

    /// Smallest agent deposit accepted at selection.
    pub fn min_deposit(&self) -> u128 {
        if let Some(d) = self.min_deposit_override {
            return d;
        }
        match self.mechanism {
            Mechanism::OutputAgreement => 0,
            Mechanism::DasguptaGhosh => self.scale,
            Mechanism::PeerTruthSerum => {
                let scaled = &self.alpha * Rational::from_integer(self.scale.into());
                scaled.ceil().to_integer().to_u128().unwrap_or(u128::MAX)
            }
        }
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        if self.mechanism == Mechanism::PeerTruthSerum && !self.alpha.is_positive() {
            return Err(LedgerError::InvalidConfig("alpha must be positive".into()));
        }
        if self.scale == 0 {
            return Err(LedgerError::InvalidConfig("scale must be positive".into()));
        }
        if let PeerChoice::Sampled(0) = self.peers {
            return Err(LedgerError::InvalidConfig("sampled peer count must be positive".into()));
        }
        self.gas_table
            .validate()
            .map_err(|e| LedgerError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registration {
    pub questions: Vec<QuestionId>,
    pub deposit: u128,
}

impl Registration {
    /// Slot order of each commitment batch.
    pub fn batches(&self) -> impl Iterator<Item = &[QuestionId]> {
        self.questions.chunks(MAX_ANSWERS)
    }

    pub fn batch_count(&self) -> usize {
        self.questions.len().div_ceil(MAX_ANSWERS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub agent: AgentId,
    pub batch: u32,
    pub commitment: Commitment,
    pub submitted_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevealRecord {
    pub layout: [u8; LAYOUT_BYTES],
    pub accepted: bool,
    pub revealed_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevealOutcome {
    Accepted,
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    config: LedgerConfig,
    phase: Phase,
    block: u64,
    questions: Vec<QuestionId>,
    budget: u128,
    requester_deposit: u128,
    agent_order: Vec<AgentId>,
    registrations: BTreeMap<AgentId, Registration>,
    commitments: BTreeMap<(AgentId, u32), CommitRecord>,
    reveals: BTreeMap<(AgentId, u32), RevealRecord>,
    revealed: Option<AnswerMatrix>,
    commit_deadline: u64,
    reveal_deadline: u64,
    gas: GasLedger,
    events: Vec<LoggedEvent>,
    settlement: Option<Settlement>,
}

impl Ledger {
    pub fn new(config: LedgerConfig) -> Result<Self, LedgerError> {
        config.validate()?;
        Ok(Self {
            config,
            phase: Phase::Posting,
            block: 0,
            questions: Vec::new(),
            budget: 0,
            requester_deposit: 0,
            agent_order: Vec::new(),
            registrations: BTreeMap::new(),
            commitments: BTreeMap::new(),
            reveals: BTreeMap::new(),
            revealed: None,
            commit_deadline: 0,
            reveal_deadline: 0,
            gas: GasLedger::new(),
            events: Vec::new(),
            settlement: None,
        })
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn block(&self) -> u64 {
        self.block
    }

    pub fn questions(&self) -> &[QuestionId] {
        &self.questions
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }

    pub fn requester_deposit(&self) -> u128 {
        self.requester_deposit
    }

    /// Budget plus requester deposit.
    pub fn requester_escrow(&self) -> u128 {
        self.budget + self.requester_deposit
    }

    /// Everything held by the contract: budget and all deposits.
    pub fn escrow_total(&self) -> u128 {
        self.requester_escrow() + self.registrations.values().map(|r| r.deposit).sum::<u128>()
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agent_order
    }

    pub fn registration(&self, agent: AgentId) -> Option<&Registration> {
        self.registrations.get(&agent)
    }

    pub fn agent_deposit(&self, agent: AgentId) -> Option<u128> {
        self.registrations.get(&agent).map(|r| r.deposit)
    }

    pub fn commitments(&self) -> impl Iterator<Item = &CommitRecord> {
        self.commitments.values()
    }

    pub fn reveal_record(&self, agent: AgentId, batch: u32) -> Option<&RevealRecord> {
        self.reveals.get(&(agent, batch))
    }

    /// Accepted answers so far (empty before selection closes).
    pub fn revealed(&self) -> Option<&AnswerMatrix> {
        self.revealed.as_ref()
    }

    pub fn gas(&self) -> &GasLedger {
        &self.gas
    }

    pub fn events(&self) -> &[LoggedEvent] {
        &self.events
    }

    pub fn settlement(&self) -> Option<&Settlement> {
        self.settlement.as_ref()
    }

    pub fn commit_deadline(&self) -> u64 {
        self.commit_deadline
    }

    pub fn reveal_deadline(&self) -> u64 {
        self.reveal_deadline
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), LedgerError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(LedgerError::WrongPhase { expected, actual: self.phase })
        }
    }

    fn charge(&mut self, party: Party, kind: OpKind, words: u64) {
        let table = self.config.gas_table;
        self.gas.charge(&table, self.phase, party, kind, words);
    }

    fn log(&mut self, event: Event) {
        self.events.push(LoggedEvent { block: self.block, event });
    }

    pub fn post_questions(
        &mut self,
        questions: &[QuestionId],
        budget: u128,
        requester_deposit: u128,
    ) -> Result<(), LedgerError> {
        self.expect_phase(Phase::Posting)?;
        if budget == 0 {
            return Err(LedgerError::ZeroBudget);
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(&dup) = questions.iter().find(|q| !seen.insert(**q)) {
            return Err(LedgerError::DuplicateQuestion(dup));
        }
        self.questions = questions.to_vec();
        self.budget = budget;
        self.requester_deposit = requester_deposit;
        self.charge(Party::Requester, OpKind::TxBase, 0);
        // one word per question plus budget and deposit
        self.charge(Party::Requester, OpKind::StorageWriteNew, questions.len() as u64 + 2);
        self.log(Event::PostQuestions { questions: questions.to_vec(), budget, requester_deposit });
        self.phase = Phase::Selection;
        Ok(())
    }

    pub fn select_questions(&mut self, agent: AgentId, questions: &[QuestionId], deposit: u128) -> Result<(), LedgerError> {
        self.expect_phase(Phase::Selection)?;
        if self.registrations.contains_key(&agent) {
            return Err(LedgerError::AlreadyRegistered(agent));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &q in questions {
            if !self.questions.contains(&q) {
                return Err(LedgerError::UnknownQuestion(q));
            }
            if !seen.insert(q) {
                return Err(LedgerError::DuplicateQuestion(q));
            }
        }
        let required = self.config.min_deposit();
        if deposit < required {
            return Err(LedgerError::InsufficientDeposit { required, offered: deposit });
        }
        self.agent_order.push(agent);
        self.registrations.insert(agent, Registration { questions: questions.to_vec(), deposit });
        self.charge(Party::Agent(agent), OpKind::TxBase, 0);
        self.charge(Party::Agent(agent), OpKind::StorageWriteNew, questions.len() as u64 + 1);
        self.log(Event::SelectQuestions { agent, questions: questions.to_vec(), deposit });
        Ok(())
    }

    /// Ends selection and opens the commit window.
    pub fn close_selection(&mut self) -> Result<(), LedgerError> {
        self.expect_phase(Phase::Selection)?;
        let matrix = AnswerMatrix::new(self.agent_order.clone(), self.questions.clone())
            .map_err(|e| LedgerError::InvalidConfig(e.to_string()))?;
        self.revealed = Some(matrix);
        self.charge(Party::Requester, OpKind::TxBase, 0);
        self.log(Event::CloseSelection);
        self.phase = Phase::Commit;
        self.commit_deadline = self.block + self.config.commit_window;
        self.maybe_open_reveal();
        Ok(())
    }

    fn all_committed(&self) -> bool {
        self.registrations.iter().all(|(&agent, reg)| {
            (0..reg.batch_count() as u32).all(|b| self.commitments.contains_key(&(agent, b)))
        })
    }

    fn maybe_open_reveal(&mut self) {
        if self.phase == Phase::Commit && (self.all_committed() || self.block >= self.commit_deadline) {
            self.phase = Phase::Reveal;
            self.reveal_deadline = self.block + self.config.reveal_window;
        }
    }

    fn batch_questions(&self, agent: AgentId, batch: u32) -> Result<&[QuestionId], LedgerError> {
        let reg = self.registrations.get(&agent).ok_or(LedgerError::UnregisteredAgent(agent))?;
        reg.batches().nth(batch as usize).ok_or(LedgerError::UnknownBatch { agent, batch })
    }

    pub fn submit_commitment(&mut self, agent: AgentId, batch: u32, commitment: Commitment) -> Result<(), LedgerError> {
        self.expect_phase(Phase::Commit)?;
        let answers = self.batch_questions(agent, batch)?.len() as u64;
        if self.commitments.contains_key(&(agent, batch)) {
            return Err(LedgerError::DuplicateCommitment { agent, batch });
        }
        self.commitments.insert(
            (agent, batch),
            CommitRecord { agent, batch, commitment, submitted_at: self.block },
        );
        let words = if self.config.packing { 1 } else { answers };
        self.charge(Party::Agent(agent), OpKind::TxBase, 0);
        self.charge(Party::Agent(agent), OpKind::StorageWriteNew, words);
        self.log(Event::SubmitCommitment { agent, batch, commitment });
        self.maybe_open_reveal();
        Ok(())
    }

    pub fn advance_blocks(&mut self, blocks: u64) {
        self.log(Event::AdvanceBlocks { blocks });
        self.block += blocks;
        self.maybe_open_reveal();
    }

    fn reveal_closed(&self) -> bool {
        self.block >= self.reveal_deadline || self.all_revealed()
    }

    fn all_revealed(&self) -> bool {
        self.commitments.keys().all(|k| self.reveals.contains_key(k))
    }

    /// Reveals `(vector, key)` for one committed batch.
    pub fn reveal(
        &mut self,
        agent: AgentId,
        batch: u32,
        vector: &PackedAnswerVector,
        key: SecretKey,
    ) -> Result<RevealOutcome, LedgerError> {
        self.reveal_layout(agent, batch, commitment::layout(vector, key))
    }

    /// Reveal in wire form. The layout is accepted iff its Keccak-256 equals
    /// the stored digest and it decodes against the batch's slot order.
    pub fn reveal_layout(
        &mut self,
        agent: AgentId,
        batch: u32,
        layout: [u8; LAYOUT_BYTES],
    ) -> Result<RevealOutcome, LedgerError> {
        self.expect_phase(Phase::Reveal)?;
        if self.block >= self.reveal_deadline {
            return Err(LedgerError::RevealClosed);
        }
        let order = self.batch_questions(agent, batch)?.to_vec();
        let stored = self
            .commitments
            .get(&(agent, batch))
            .ok_or(LedgerError::NoCommitment { agent, batch })?
            .commitment;
        if self.reveals.contains_key(&(agent, batch)) {
            return Err(LedgerError::AlreadyRevealed { agent, batch });
        }

        let decoded = if Commitment(keccak256(&layout)) == stored {
            commitment::parse_layout(&layout, &order).ok()
        } else {
            None
        };

        let party = Party::Agent(agent);
        let per_answer = if self.config.packing { 1 } else { order.len() as u64 };
        self.charge(party, OpKind::TxBase, 0);
        self.charge(party, OpKind::StorageRead, per_answer);
        for _ in 0..per_answer {
            self.charge(party, OpKind::Hash, 1);
        }
        self.charge(party, OpKind::Comparison, per_answer);

        let outcome = match decoded {
            Some((vector, _)) => {
                self.charge(party, OpKind::StorageWriteNew, per_answer);
                let matrix = self.revealed.as_mut().expect("created at close_selection");
                for (q, bit) in vector.answers() {
                    matrix
                        .set(agent, q, bit)
                        .map_err(|e| LedgerError::Audit(e.to_string()))?;
                }
                RevealOutcome::Accepted
            }
            None => RevealOutcome::Discarded,
        };
        self.reveals.insert(
            (agent, batch),
            RevealRecord { layout, accepted: outcome == RevealOutcome::Accepted, revealed_at: self.block },
        );
        self.log(Event::Reveal { agent, batch, layout });
        Ok(outcome)
    }

    /// Whether the agent had at least one batch accepted.
    pub fn has_accepted_reveal(&self, agent: AgentId) -> bool {
        self.reveals.iter().any(|((a, _), r)| *a == agent && r.accepted)
    }

    /// Computes rewards and pays everything out.
    ///
    /// On a mechanism error the ledger is left unchanged in the reveal phase.
    pub fn settle(&mut self) -> Result<&Settlement, LedgerError> {
        self.expect_phase(Phase::Reveal)?;
        if !self.reveal_closed() {
            return Err(LedgerError::RevealOpen);
        }
        let (settlement, gas) = settlement::compute(self)?;
        self.phase = Phase::Settled;
        let table = self.config.gas_table;
        self.gas.charge(&table, Phase::Settled, Party::Requester, OpKind::TxBase, 0);
        self.gas.charge_tally(&table, Phase::Settled, Party::Requester, &gas);
        self.settlement = Some(settlement);
        self.log(Event::Settle);
        Ok(self.settlement.as_ref().expect("just set"))
    }

    /// Checks that every accepted answer traces back to a matching
    /// commitment and that settlement conserved funds.
    pub fn audit(&self) -> Result<(), LedgerError> {
        let fail = |msg: String| Err(LedgerError::Audit(msg));
        let mut expected = match &self.revealed {
            Some(m) => AnswerMatrix::new(m.agents().to_vec(), m.questions().to_vec())
                .map_err(|e| LedgerError::Audit(e.to_string()))?,
            None => return Ok(()),
        };
        for (&(agent, batch), record) in &self.reveals {
            if !record.accepted {
                continue;
            }
            let Some(c) = self.commitments.get(&(agent, batch)) else {
                return fail(format!("{agent} batch {batch} revealed without commitment"));
            };
            if Commitment(keccak256(&record.layout)) != c.commitment {
                return fail(format!("{agent} batch {batch} does not match its commitment"));
            }
            let order = self.batch_questions(agent, batch)?;
            let (vector, _) = commitment::parse_layout(&record.layout, order)
                .map_err(|e| LedgerError::Audit(e.to_string()))?;
            for (q, bit) in vector.answers() {
                expected.set(agent, q, bit).map_err(|e| LedgerError::Audit(e.to_string()))?;
            }
        }
        if self.revealed.as_ref() != Some(&expected) {
            return fail("answer matrix differs from verified reveals".into());
        }
        if !self.gas.is_consistent() {
            return fail("gas ledger totals disagree".into());
        }
        if let Some(s) = &self.settlement {
            let paid: u128 = s.rows.iter().map(|r| r.payout()).sum::<u128>() + s.requester_payout;
            if paid != self.escrow_total() {
                return fail(format!("paid out {paid}, escrow held {}", self.escrow_total()));
            }
            if s.transfers.values().sum::<i128>() != 0 {
                return fail("transfers do not sum to zero".into());
            }
        }
        Ok(())
    }

    /// Applies one logged event.
    pub fn apply(&mut self, event: &Event) -> Result<(), LedgerError> {
        match event {
            Event::PostQuestions { questions, budget, requester_deposit } => {
                self.post_questions(questions, *budget, *requester_deposit)
            }
            Event::SelectQuestions { agent, questions, deposit } => {
                self.select_questions(*agent, questions, *deposit)
            }
            Event::CloseSelection => self.close_selection(),
            Event::SubmitCommitment { agent, batch, commitment } => {
                self.submit_commitment(*agent, *batch, *commitment)
            }
            Event::AdvanceBlocks { blocks } => {
                self.advance_blocks(*blocks);
                Ok(())
            }
            Event::Reveal { agent, batch, layout } => self.reveal_layout(*agent, *batch, *layout).map(|_| ()),
            Event::Settle => self.settle().map(|_| ()),
        }
    }

    /// Rebuilds a ledger from its event log.
    pub fn replay(config: LedgerConfig, events: &[LoggedEvent]) -> Result<Self, LedgerError> {
        let mut ledger = Self::new(config)?;
        for (index, logged) in events.iter().enumerate() {
            if logged.block != ledger.block {
                return Err(LedgerError::ReplayMismatch {
                    index,
                    reason: format!("event at block {} but ledger is at {}", logged.block, ledger.block),
                });
            }
            ledger
                .apply(&logged.event)
                .map_err(|e| LedgerError::ReplayMismatch { index, reason: e.to_string() })?;
        }
        Ok(ledger)
    }

    /// Total reward-unit value of a reward: `reward · scale`.
    pub(crate) fn scaled(&self, reward: &Rational) -> Rational {
        reward * Rational::from_integer(self.config.scale.into())
    }
}

/// Zero-sum helper for callers that only hold transfers.
pub fn transfers_balance(transfers: &BTreeMap<Party, i128>) -> bool {
    transfers.values().sum::<i128>().is_zero()
}
