use infochain::gas_model::*;
use infochain::ledger::{PeerChoice, Phase};
use infochain::mechanisms::{AgentId, Mechanism};
use infochain::sim::{
    computation_sweep, mechanism_sweep, packing_sweep, peer_sweep, run_sweep, ExperimentConfig, QoSDataset,
};

#[test]
fn shipped_table_is_the_default() {
    let table = GasTable::parse(include_str!("../../../data/gas_table.toml")).unwrap();
    assert_eq!(table, GasTable::default());
    assert_eq!(GasTable::parse(&table.to_config()).unwrap(), table);
}

#[test]
fn table_errors() {
    assert_eq!(GasTable::parse("sstore = 1"), Err(GasError::UnknownOpKind("sstore".into())));
    assert_eq!(GasTable::parse("tx_base = 0"), Err(GasError::NonPositiveEntry("tx_base".into())));
    assert_eq!(GasTable::parse("tx_base = -4"), Err(GasError::NonPositiveEntry("tx_base".into())));
    assert_eq!(GasTable::parse("storage_write_update_word = 30000"), Err(GasError::BadOrdering));
    assert!(matches!(GasTable::parse("tx_base = "), Err(GasError::Parse(_))));
    let partial = GasTable::parse("tx_base = 100").unwrap();
    assert_eq!(partial.tx_base, 100);
    assert_eq!(partial.memory_word, 3);
}

#[test]
fn commit_scheme_costs() {
    let t = GasTable::default();
    let batch = 20_000 + 30 + 6;
    for n in 1..=42 {
        assert_eq!(cost_of_commit_scheme(n, true, &t), batch);
        assert_eq!(cost_of_commit_scheme(n, false, &t), n as u64 * batch);
    }
    assert_eq!(cost_of_commit_scheme(43, true, &t), 2 * batch);
    assert_eq!(cost_of_commit_scheme(84, true, &t), 2 * batch);
    assert_eq!(cost_of_commit_scheme(85, true, &t), 3 * batch);
    assert_eq!(cost_of_commit_scheme(0, true, &t), 0);
}

#[test]
fn ledger_totals_are_consistent() {
    let t = GasTable::default();
    let mut g = GasLedger::new();
    let a = Party::Agent(AgentId(1));
    g.charge(&t, Phase::Commit, a, OpKind::TxBase, 0);
    g.charge(&t, Phase::Commit, a, OpKind::StorageWriteNew, 1);
    g.charge(&t, Phase::Settled, Party::Requester, OpKind::Hash, 3);
    assert_eq!(g.total(), 21_000 + 20_000 + 30 + 18);
    assert_eq!(g.agent_total(AgentId(1)), 41_000);
    assert_eq!(g.requester_total(), 48);
    assert_eq!(g.phase_total(Phase::Commit), 41_000);
    assert!(g.is_consistent());
    let csv = g.to_csv();
    assert!(csv.starts_with("phase,party,op_kind,words,gas\n"));
    assert!(csv.contains("commit,a1,storage_write_new_word,1,20000"));
}

fn wide() -> QoSDataset {
    QoSDataset::synthetic(10, 60, 0.0, 1).unwrap()
}

#[test]
fn writing_gas_flat_when_packed_and_rising_when_not() {
    let base = ExperimentConfig { agents: 10, ..ExperimentConfig::default() };
    let reports = run_sweep(&wide(), &packing_sweep(&base, 1..=44)).unwrap();
    let commit = |packing: bool, n: usize| {
        reports
            .iter()
            .find(|r| r.config.packing == packing && r.config.questions_per_agent == n)
            .unwrap()
            .phase_gas(Phase::Commit)
    };
    let t = GasTable::default();
    let per_agent_batch = t.tx_base + t.storage_write_new_word;
    for n in 1..=42 {
        assert_eq!(commit(true, n), 10 * per_agent_batch, "n = {n}");
    }
    assert_eq!(commit(true, 43), 20 * per_agent_batch);
    assert_eq!(commit(true, 44), commit(true, 43));
    for n in 2..=44 {
        assert!(commit(false, n) > commit(false, n - 1), "n = {n}");
    }
}

#[test]
fn dg_settlement_costs_most() {
    let reports = run_sweep(&QoSDataset::desk(), &mechanism_sweep(&ExperimentConfig::default())).unwrap();
    let settled = |m: Mechanism| reports.iter().find(|r| r.config.mechanism == m).unwrap().phase_gas(Phase::Settled);
    assert!(settled(Mechanism::DasguptaGhosh) > settled(Mechanism::PeerTruthSerum));
    assert!(settled(Mechanism::DasguptaGhosh) > settled(Mechanism::OutputAgreement));
}

#[test]
fn sampling_one_peer_is_cheaper_and_many_peers_dearer() {
    let base = ExperimentConfig { mechanism: Mechanism::DasguptaGhosh, ..ExperimentConfig::default() };
    let reports = run_sweep(&QoSDataset::desk(), &peer_sweep(&base, 1..=50)).unwrap();
    let all = reports[0].phase_gas(Phase::Settled);
    let gas = |k: usize| {
        reports
            .iter()
            .find(|r| r.config.peers == PeerChoice::Sampled(k))
            .unwrap()
            .phase_gas(Phase::Settled)
    };
    assert!(gas(1) < all);
    assert!((1..=50).any(|k| gas(k) > all));
    // more sampled peers never cost less
    assert!((2..=50).all(|k| gas(k) >= gas(k - 1)));
}

#[test]
fn optimized_computation_saves_more_as_rounds_grow() {
    let base = ExperimentConfig { mechanism: Mechanism::PeerTruthSerum, ..ExperimentConfig::default() };
    let reports = run_sweep(&QoSDataset::desk(), &computation_sweep(&base, &[10, 30, 50], &[5, 15, 25])).unwrap();
    let saving: Vec<u64> = reports
        .chunks(2)
        .map(|pair| {
            let (opt, naive) = (pair[0].phase_gas(Phase::Settled), pair[1].phase_gas(Phase::Settled));
            assert!(naive > opt, "{}", pair[0].config.id);
            naive - opt
        })
        .collect();
    // grows with questions for each agent count, and with agents for each question count
    for a in 0..3 {
        assert!(saving[a * 3] < saving[a * 3 + 1] && saving[a * 3 + 1] < saving[a * 3 + 2]);
    }
    for q in 0..3 {
        assert!(saving[q] < saving[3 + q] && saving[3 + q] < saving[6 + q]);
    }
}
