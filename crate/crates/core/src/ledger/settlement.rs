use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive, Zero};

use super::{Ledger, LedgerError, PeerChoice};
use crate::gas_model::{OpTally, Party};
use crate::mechanisms::{compute_rewards, AgentId, MechanismError, PeerMode, RewardReport};
use crate::peer_selection::SelectionSeed;
use crate::scalar::{format_decimal, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettlementRow {
    pub agent: AgentId,
    pub reward: Rational,
    /// Share of the budget.
    pub payment: u128,
    /// Deducted from the deposit for a negative reward.
    pub penalty: u128,
    pub deposit: u128,
    pub deposit_returned: u128,
    pub gas_reimbursed: u128,
}

impl SettlementRow {
    /// Total sent back to the agent.
    pub fn payout(&self) -> u128 {
        self.payment + self.deposit_returned + self.gas_reimbursed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settlement {
    pub rewards: RewardReport<Rational>,
    pub rows: Vec<SettlementRow>,
    pub requester_payout: u128,
    /// Net flow per party relative to what it deposited; sums to zero.
    pub transfers: BTreeMap<Party, i128>,
    /// Clamped penalties and reimbursement shortfalls.
    pub notes: Vec<String>,
}

impl Settlement {
    pub fn row(&self, agent: AgentId) -> Option<&SettlementRow> {
        self.rows.iter().find(|r| r.agent == agent)
    }

    /// CSV with header `agent,mechanism_reward,payment_units,deposit_returned,gas_reimbursed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,mechanism_reward,payment_units,deposit_returned,gas_reimbursed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.agent,
                format_decimal(&r.reward),
                r.payment,
                r.deposit_returned,
                r.gas_reimbursed
            ));
        }
        out
    }
}

fn floor_u128(value: &Rational) -> u128 {
    value.floor().to_integer().to_u128().unwrap_or(u128::MAX)
}

pub(super) fn compute(ledger: &Ledger) -> Result<(Settlement, OpTally), LedgerError> {
    let config = ledger.config();
    let matrix = ledger.revealed().expect("settlement follows selection");
    let mut ops = OpTally::default();

    // Load accepted answers from storage.
    for reg_agent in ledger.agents() {
        let reg = ledger.registration(*reg_agent).expect("registered");
        for (b, order) in reg.batches().enumerate() {
            let accepted = ledger.reveal_record(*reg_agent, b as u32).is_some_and(|r| r.accepted);
            if !accepted {
                continue;
            }
            let n = order.len() as u64;
            if config.packing {
                ops.read(1);
                ops.mem(n);
                ops.arith(2 * n);
            } else {
                ops.read(n);
                ops.mem(n);
            }
        }
    }

    let peer_mode = match config.peers {
        PeerChoice::All => PeerMode::AllPeers,
        PeerChoice::Sampled(k) => {
            ops.hash(2);
            PeerMode::Sampled { k, seed: SelectionSeed::new(ledger.block(), config.difficulty) }
        }
    };

    let rewards = match compute_rewards(matrix, config.mechanism, config.alpha.clone(), peer_mode, config.compute_path) {
        Ok(r) => r,
        Err(MechanismError::EmptyMatrix) => RewardReport {
            mechanism: config.mechanism,
            scaling: config.alpha.clone(),
            peer_mode,
            rewards: matrix.agents().iter().map(|&a| (a, Rational::zero())).collect(),
            ops: OpTally::default(),
        },
        Err(e) => return Err(e.into()),
    };
    ops.add(&rewards.ops);

    let budget = Rational::from_integer(ledger.budget().into());
    let positive_total: Rational = rewards
        .values()
        .filter(|r| r.is_positive())
        .fold(Rational::zero(), |acc, r| acc + r);

    let mut notes = Vec::new();
    let mut reimbursement_pool = ledger.requester_deposit();
    let mut rows = Vec::with_capacity(rewards.rewards.len());
    for (agent, reward) in &rewards.rewards {
        let deposit = ledger.agent_deposit(*agent).expect("registered");
        ops.arith(4);
        ops.cmp(2);
        let payment = if reward.is_positive() {
            floor_u128(&(&budget * reward / &positive_total))
        } else {
            0
        };
        let mut penalty = if reward.is_negative() { floor_u128(&ledger.scaled(&reward.abs())) } else { 0 };
        if penalty > deposit {
            notes.push(format!("DepositExhausted({agent}): penalty {penalty} clamped to deposit {deposit}"));
            penalty = deposit;
        }
        let gas_reimbursed = if ledger.has_accepted_reveal(*agent) {
            let want = u128::from(ledger.gas().agent_total(*agent)) * config.gas_price;
            let give = want.min(reimbursement_pool);
            if give < want {
                notes.push(format!("gas reimbursement for {agent} short by {}", want - give));
            }
            reimbursement_pool -= give;
            give
        } else {
            0
        };
        rows.push(SettlementRow {
            agent: *agent,
            reward: reward.clone(),
            payment,
            penalty,
            deposit,
            deposit_returned: deposit - penalty,
            gas_reimbursed,
        });
    }
    // balance updates: one per agent and one for the requester
    ops.storage_writes_update += rows.len() as u64 + 1;

    let paid: u128 = rows.iter().map(|r| r.payment).sum();
    let penalties: u128 = rows.iter().map(|r| r.penalty).sum();
    let reimbursed: u128 = rows.iter().map(|r| r.gas_reimbursed).sum();
    let requester_payout = ledger.budget() - paid + ledger.requester_deposit() - reimbursed + penalties;

    let mut transfers = BTreeMap::new();
    for r in &rows {
        transfers.insert(Party::Agent(r.agent), r.payout() as i128 - r.deposit as i128);
    }
    transfers.insert(Party::Requester, requester_payout as i128 - ledger.requester_escrow() as i128);

    Ok((Settlement { rewards, rows, requester_payout, transfers, notes }, ops))
}
