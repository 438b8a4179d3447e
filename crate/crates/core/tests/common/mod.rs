#![allow(dead_code)]

use infochain::commitment::{commit, layout, PackedAnswerVector, SecretKey};
use infochain::ledger::{Ledger, LedgerConfig, LedgerError, Phase, PeerChoice, RevealOutcome};
use infochain::mechanisms::{AgentId, Mechanism, MechanismError, QuestionId};
use infochain::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SCALE: u128 = 1_000_000_000;

pub fn qs(n: u32) -> Vec<QuestionId> {
    (0..n).map(QuestionId).collect()
}

pub struct Agent {
    pub id: AgentId,
    pub questions: Vec<QuestionId>,
    pub answers: Vec<(QuestionId, bool)>,
    pub keys: Vec<SecretKey>,
}

impl Agent {
    pub fn batch(&self, b: usize) -> (Vec<QuestionId>, PackedAnswerVector) {
        let order: Vec<QuestionId> = self.questions.chunks(42).nth(b).unwrap().to_vec();
        let answers: Vec<_> = self.answers.iter().filter(|(q, _)| order.contains(q)).copied().collect();
        let v = PackedAnswerVector::pack(&answers, &order).unwrap();
        (order, v)
    }

    pub fn batches(&self) -> usize {
        self.questions.len().div_ceil(42)
    }
}

pub fn agent(id: u32, questions: &[u32], bits: &[bool], rng: &mut ChaCha8Rng) -> Agent {
    let questions: Vec<QuestionId> = questions.iter().map(|&q| QuestionId(q)).collect();
    let answers = questions.iter().copied().zip(bits.iter().copied()).collect();
    let keys = (0..questions.len().div_ceil(42)).map(|_| SecretKey::generate(rng)).collect();
    Agent { id: AgentId(id), questions, answers, keys }
}

/// One randomized round: random mechanism, selections, answers, deposits,
/// silent agents and tampered reveals. `None` when DG cannot settle.
pub fn random_round(seed: u64) -> Option<(LedgerConfig, Ledger, u128)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mechanism = Mechanism::ALL[rng.random_range(0..3)];
    let n_questions: u32 = rng.random_range(1..=60);
    let n_agents: u32 = rng.random_range(1..=8);
    let config = LedgerConfig {
        mechanism,
        alpha: Rational::new(rng.random_range(1..20).into(), rng.random_range(1..8).into()),
        peers: if rng.random_bool(0.5) { PeerChoice::All } else { PeerChoice::Sampled(rng.random_range(1..=4)) },
        packing: rng.random_bool(0.8),
        min_deposit_override: rng.random_bool(0.2).then(|| rng.random_range(0..SCALE)),
        difficulty: rng.random(),
        ..LedgerConfig::default()
    };
    let budget: u128 = rng.random_range(1..=10 * SCALE);
    let requester_deposit: u128 = if rng.random_bool(0.3) { rng.random_range(0..1_000_000) } else { 1 << 50 };

    let mut ledger = Ledger::new(config.clone()).unwrap();
    ledger.post_questions(&qs(n_questions), budget, requester_deposit).unwrap();
    let mut escrow = budget + requester_deposit;
    let mut agents = Vec::new();
    for id in 0..n_agents {
        let mut pool: Vec<u32> = (0..n_questions).collect();
        pool.shuffle(&mut rng);
        pool.truncate(rng.random_range(0..=n_questions as usize));
        let bits: Vec<bool> = pool.iter().map(|_| rng.random()).collect();
        let a = agent(id, &pool, &bits, &mut rng);
        let deposit = config.min_deposit() + rng.random_range(0..SCALE);
        ledger.select_questions(a.id, &a.questions, deposit).unwrap();
        escrow += deposit;
        agents.push(a);
    }
    ledger.close_selection().unwrap();
    for a in &agents {
        for b in 0..a.batches() {
            if rng.random_bool(0.9) {
                let (_, v) = a.batch(b);
                ledger.submit_commitment(a.id, b as u32, commit(&v, a.keys[b])).unwrap();
            }
        }
    }
    if ledger.phase() == Phase::Commit {
        ledger.advance_blocks(rng.random_range(1..=config.commit_window));
    }
    if ledger.phase() == Phase::Commit {
        ledger.advance_blocks(config.commit_window);
    }
    ledger.advance_blocks(rng.random_range(0..config.reveal_window));
    for a in &agents {
        for b in 0..a.batches() {
            if ledger.commitments().all(|c| (c.agent, c.batch) != (a.id, b as u32)) || rng.random_bool(0.1) {
                continue;
            }
            let (order, v) = a.batch(b);
            let mut wire = layout(&v, a.keys[b]);
            if rng.random_bool(0.1) {
                let bit = rng.random_range(0..wire.len() * 8 - 7);
                wire[bit / 8] ^= 1 << (bit % 8);
            }
            let outcome = ledger.reveal_layout(a.id, b as u32, wire).unwrap();
            assert_eq!(outcome == RevealOutcome::Accepted, wire == layout(&v, a.keys[b]), "{order:?}");
        }
    }
    ledger.advance_blocks(config.reveal_window);
    match ledger.settle() {
        Ok(_) => Some((config, ledger, escrow)),
        Err(LedgerError::Mechanism(MechanismError::NoNonCommonQuestions { .. })) => None,
        Err(e) => panic!("seed {seed}: {e}"),
    }
}

