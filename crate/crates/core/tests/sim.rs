use infochain::ledger::Phase;
use infochain::mechanisms::Mechanism;
use infochain::sim::*;
use infochain::{Rational, Scalar};

#[test]
fn sample_matrix_loads() {
    let d = QoSDataset::parse(include_str!("../../../data/sample_rtmatrix.txt")).unwrap();
    assert_eq!((d.rows(), d.cols()), (5, 12));
    assert_eq!(d.get(0, 1), None);
    let m = binarize(&d, 1.0).unwrap();
    assert_eq!(m.at(0, 0), Some(true));
    assert_eq!(m.at(0, 3), Some(false));
    assert_eq!(m.answer_count(), 60 - 14);
}

#[test]
fn sample_matrix_round() {
    let d = QoSDataset::parse(include_str!("../../../data/sample_rtmatrix.txt")).unwrap();
    let config = ExperimentConfig {
        agents: 5,
        questions_per_agent: 8,
        population: AgentPopulation::uniform(Behavior::Truthful),
        ..ExperimentConfig::default()
    };
    for c in mechanism_sweep(&config) {
        let r = run_experiment(&d, &c).unwrap();
        assert_eq!(r.reports, r.truth);
        assert!(r.truth.row(0).count() <= 8);
        r.ledger.audit().unwrap();
    }
}

#[test]
fn reports_follow_behaviors() {
    let d = QoSDataset::desk();
    let (mut agree, mut total) = ([0u64; 3], [0u64; 3]);
    for seed in 0..20 {
        let r = run_experiment(&d, &ExperimentConfig { seed, ..ExperimentConfig::default() }).unwrap();
        let counts: Vec<usize> =
            Behavior::ALL.iter().map(|b| r.behaviors.iter().filter(|x| *x == b).count()).collect();
        assert_eq!(counts, vec![25, 12, 13]);
        for (a, q, bit) in r.truth.cells() {
            let i = r.truth.agent_position(a).unwrap();
            let k = Behavior::ALL.iter().position(|b| *b == r.behaviors[i]).unwrap();
            total[k] += 1;
            agree[k] += u64::from(r.reports.get(a, q) == Some(bit));
        }
    }
    let rate = |k: usize| agree[k] as f64 / total[k] as f64;
    assert_eq!(rate(0), 1.0);
    assert!((rate(1) - 0.5).abs() < 0.02, "{}", rate(1));
    assert_eq!(rate(2), 0.0);
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn truthful_agents_earn_more() {
    let d = QoSDataset::desk();
    for mechanism in Mechanism::ALL {
        let configs: Vec<ExperimentConfig> = (0..30)
            .map(|seed| ExperimentConfig { mechanism, seed, ..ExperimentConfig::default() })
            .collect();
        let reports = run_sweep(&d, &configs).unwrap();
        let diff = |a: Behavior, b: Behavior| -> Vec<f64> {
            reports.iter().map(|r| r.mean_reward(a).unwrap() - r.mean_reward(b).unwrap()).collect()
        };
        let (m, se) = mean_and_se(&diff(Behavior::Truthful, Behavior::Random));
        assert!(m > 3.0 * se, "{mechanism:?} truthful-random {m} ± {se}");
        let (m, se) = mean_and_se(&diff(Behavior::Random, Behavior::Adversarial));
        assert!(m > -3.0 * se, "{mechanism:?} random-adversarial {m} ± {se}");
    }
}

#[test]
fn experiments_are_reproducible() {
    let d = QoSDataset::desk();
    let config = ExperimentConfig { mechanism: Mechanism::PeerTruthSerum, seed: 9, ..ExperimentConfig::default() };
    let a = run_experiment(&d, &config).unwrap();
    let b = run_experiment(&d, &config).unwrap();
    assert_eq!(a.settlement, b.settlement);
    assert_eq!(a.gas_per_phase, b.gas_per_phase);
    let c = run_experiment(&d, &ExperimentConfig { seed: 10, ..config }).unwrap();
    assert_ne!(a.reports, c.reports);
}

#[test]
fn naive_path_settles_identically_but_dearer() {
    let d = QoSDataset::synthetic(12, 30, 0.5, 7).unwrap();
    for mechanism in Mechanism::ALL {
        let base = ExperimentConfig { mechanism, agents: 12, ..ExperimentConfig::default() };
        let fast = run_experiment(&d, &base).unwrap();
        let slow = run_experiment(
            &d,
            &ExperimentConfig { compute_path: infochain::mechanisms::ComputePath::Naive, ..base },
        )
        .unwrap();
        assert_eq!(fast.settlement.rewards.rewards, slow.settlement.rewards.rewards);
        assert!(slow.phase_gas(Phase::Settled) > fast.phase_gas(Phase::Settled));
    }
}

#[test]
fn csv_report() {
    let d = QoSDataset::desk();
    let base = ExperimentConfig { alpha: Rational::from_count(2), ..ExperimentConfig::default() };
    let reports = run_sweep(&d, &mechanism_sweep(&base)).unwrap();
    let csv = reports_to_csv(&reports);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(REPORT_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().all(|r| r.split(',').count() == REPORT_HEADER.split(',').count()));
    assert!(rows.iter().any(|r| r.starts_with("mech-dg,dg,on,all,50,50,total,")));
}

#[test]
fn invalid_setups() {
    let d = QoSDataset::desk();
    assert!(matches!(
        run_experiment(&d, &ExperimentConfig { agents: 0, ..ExperimentConfig::default() }),
        Err(SimError::InvalidConfig(_))
    ));
    assert!(matches!(
        run_experiment(&d, &ExperimentConfig { threshold: -1.0, ..ExperimentConfig::default() }),
        Err(SimError::InvalidConfig(_))
    ));
    assert!(AgentPopulation::new(0.5, 0.5, 0.5).is_err());
}
