use infochain::incentives::*;
use infochain::{Rational, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn r(s: &str) -> Rational {
    Rational::parse_decimal(s).unwrap()
}

/// Bound recomputed in floating point straight from the beliefs.
fn bound_oracle(n: f64, c: f64, prior: f64, bump: f64) -> f64 {
    let post11 = prior + bump;
    let post01 = 1.0 - post11;
    let beta = post11 / prior - post01 / (1.0 - prior);
    c * (1.0 + (n - 1.0) * post01) / (n * beta)
}

fn model(prior: &str, bump: &str) -> BeliefModel<Rational> {
    BeliefModel::uniform(AgentBelief::with_bump(r(prior), r(bump)).unwrap())
}

const PRIORS: [&str; 3] = ["0.7", "0.9", "0.95"];
const BUMPS: [&str; 2] = ["0.01", "0.05"];
const AGENTS: [usize; 3] = [5, 10, 25];

#[test]
fn bound_matches_oracle_on_grid() {
    for n in AGENTS {
        for prior in PRIORS {
            for bump in BUMPS {
                for c in ["0.5", "1", "3"] {
                    let exact = alpha_bound(n, &r(c), &model(prior, bump)).unwrap();
                    let want = bound_oracle(n as f64, c.parse().unwrap(), prior.parse().unwrap(), bump.parse().unwrap());
                    assert!((exact.to_f64_lossy() - want).abs() < 1e-12 * want.max(1.0), "{n} {prior} {bump} {c}");
                    let float = alpha_bound(n, &c.parse::<f64>().unwrap(), &BeliefModel::uniform(
                        AgentBelief::with_bump(prior.parse::<f64>().unwrap(), bump.parse().unwrap()).unwrap(),
                    ))
                    .unwrap();
                    assert!((float - want).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn example_bound() {
    let b = alpha_bound(10, &Rational::from_count(1), &model("0.95", "0.01")).unwrap();
    // 1.36 / (10 · 16/76)
    assert_eq!(b, Rational::ratio(10336, 16000));
    assert_eq!(b, r("0.646"));
    let doubled = alpha_bound(10, &Rational::from_count(2), &model("0.95", "0.01")).unwrap();
    assert_eq!(doubled, b * Rational::from_count(2));
}

#[test]
fn bound_monotonicity() {
    let c = Rational::from_count(1);
    for prior in PRIORS {
        for bump in BUMPS {
            let m = model(prior, bump);
            let by_n: Vec<Rational> = (2..40).map(|n| alpha_bound(n, &c, &m).unwrap()).collect();
            assert!(by_n.windows(2).all(|w| w[1] < w[0]), "decreasing in n");
            let by_c: Vec<Rational> =
                (1..10).map(|k| alpha_bound(10, &Rational::ratio(k, 4), &m).unwrap()).collect();
            assert!(by_c.windows(2).all(|w| w[1] > w[0]), "increasing in c");
        }
    }
    // two-agent populations where one agent fixes γ and the other fixes β
    let belief = |p: &str, post: &str| AgentBelief::new(r(p), r(post), r("0.5")).unwrap();
    let by_beta: Vec<(Rational, Rational)> = ["0.52", "0.53", "0.54", "0.55"]
        .iter()
        .map(|post| {
            let m = BeliefModel::new(vec![belief("0.4", "0.5"), belief("0.5", post)]).unwrap();
            assert_eq!(m.gamma(), r("0.5"));
            (m.beta(), alpha_bound(10, &c, &m).unwrap())
        })
        .collect();
    assert!(by_beta.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1), "decreasing in beta");
    let by_gamma: Vec<(Rational, Rational)> = ["0.5", "0.45", "0.42"]
        .iter()
        .map(|post| {
            let m = BeliefModel::new(vec![belief("0.4", post), belief("0.5", "0.52")]).unwrap();
            assert_eq!(m.beta(), r("0.08"));
            (m.gamma(), alpha_bound(10, &c, &m).unwrap())
        })
        .collect();
    assert!(by_gamma.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1), "increasing in gamma");
    // a mixed population: the weakest agent sets β, the most pessimistic sets γ
    let strong = AgentBelief::with_bump(r("0.9"), r("0.05")).unwrap();
    let weak = AgentBelief::with_bump(r("0.9"), r("0.01")).unwrap();
    let mixed = BeliefModel::new(vec![strong.clone(), weak.clone()]).unwrap();
    assert_eq!(mixed.beta(), weak.correlation());
    assert_eq!(mixed.gamma(), weak.post_0_given_1);
    let swapped = BeliefModel::new(vec![weak, strong.clone()]).unwrap();
    assert_eq!(swapped.beta(), mixed.beta());
    assert!(alpha_bound(10, &c, &mixed).unwrap() > alpha_bound(10, &c, &BeliefModel::uniform(strong)).unwrap());
}

#[test]
fn bound_errors() {
    let c = Rational::from_count(1);
    let flat = BeliefModel::uniform(AgentBelief::with_bump(r("0.9"), r("0")).unwrap());
    assert!(matches!(alpha_bound(10, &c, &flat), Err(IncentiveError::NonPositiveBeta(_))));
    assert!(matches!(AgentBelief::with_bump(r("1"), r("0")), Err(IncentiveError::DegeneratePrior(_))));
    assert!(matches!(AgentBelief::with_bump(r("0.95"), r("0.1")), Err(IncentiveError::InvalidProbability(_))));
    assert!(matches!(BeliefModel::<Rational>::new(vec![]), Err(IncentiveError::NoAgents)));
    assert!(alpha_bound(1, &c, &model("0.9", "0.01")).is_err());
}

#[test]
fn saving_formulas() {
    assert_eq!(max_saving(&r("0.95")).unwrap(), r("0.9975"));
    assert_eq!(max_saving(&r("0")).unwrap(), r("0"));
    assert_eq!(max_saving(&r("1")).unwrap(), r("1"));
    let c = Rational::from_count(1);
    let bound = saving_lower_bound(&r("0.95"), &r("0.646"), &c).unwrap();
    assert_eq!(bound, r("0.3515"));
    assert!(saving_lower_bound(&r("0.95"), &r("1"), &c).unwrap() <= Rational::from_count(0));
    // more agents, smaller bound, larger guaranteed saving
    let m = model("0.95", "0.01");
    let at = |n| saving_lower_bound(&r("0.95"), &alpha_bound(n, &c, &m).unwrap(), &c).unwrap();
    assert!(at(20) > at(10));
    assert_eq!(expected_payment_per_agent(&r("0.7")), r("0.7"));
}

#[test]
fn calibrated_worlds_reproduce_beliefs() {
    for prior in [0.7, 0.9, 0.95] {
        for bump in [0.01, 0.05] {
            let w = calibrate_world(prior, prior + bump).unwrap();
            assert!((w.prior_1() - prior).abs() < 1e-9);
            assert!((w.post_1_given_1() - (prior + bump)).abs() < 1e-9);
        }
    }
    assert!(matches!(calibrate_world(0.9, 0.8), Err(IncentiveError::NoSolution { .. })));
}

#[test]
fn empirical_pairs_match_posterior() {
    let w = calibrate_world(0.95, 0.96).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut obs = [false; 2];
    let (mut ones, mut both) = (0u64, 0u64);
    for _ in 0..1_000_000 {
        w.observe(&mut rng, &mut obs);
        if obs[0] {
            ones += 1;
            both += obs[1] as u64;
        }
    }
    let post = both as f64 / ones as f64;
    assert!((post - 0.96).abs() < 0.002, "{post}");
}

#[test]
fn outcome_is_fraction_of_zeros() {
    assert_eq!(outcome(&[true, false, false, true]), 0.5);
    assert_eq!(outcome(&[true; 5]), 0.0);
    assert_eq!(outcome(&[false; 3]), 1.0);
}

#[test]
fn deterministic_world_pays_nothing() {
    let w = GenerativeWorld::new(1.0, 1.0, 0.0).unwrap();
    let est = expected_payment_mc(10, 1.0, 0.7, &w, &McConfig::new(20_000, 3)).unwrap();
    assert_eq!(est.mean, 0.0);
}

#[test]
fn payment_is_bounded_by_alpha_in_example() {
    let w = calibrate_world(0.95, 0.96).unwrap();
    let alpha = 1.292;
    let est = expected_payment_mc(10, 1.0, alpha, &w, &McConfig::new(200_000, 9)).unwrap();
    assert!(est.mean <= alpha + 3.0 * est.std_error, "{est:?}");
}

#[test]
fn saving_exceeds_bound_in_every_batch() {
    let w = calibrate_world(0.95, 0.96).unwrap();
    let alpha = 0.65;
    let bound = 0.9975 - alpha;
    for seed in 0..3 {
        let est = relative_saving_mc(10, 1.0, alpha, &w, &McConfig::new(100_000, seed)).unwrap();
        assert!(est.mean >= bound, "{est:?}");
    }
}

#[test]
fn without_ptsc_everyone_reports_zero() {
    let w = calibrate_world(0.95, 0.96).unwrap();
    let est = utility_gap(10, 1.0, 0.0, &w, Strategy::AlwaysZero, &McConfig::new(100_000, 4)).unwrap();
    assert_eq!(Verdict::of(&est), Verdict::StrictlyNegative);
}

#[test]
fn scenario_file_roundtrip() {
    let text = include_str!("../../../data/scenarios.toml");
    let scenarios = ScenarioFile::parse(text).unwrap();
    assert_eq!(scenarios.len(), 2);
    assert_eq!(scenarios[0].alpha_bound().unwrap(), r("0.646"));
    assert_eq!(scenarios[0].alpha_used().unwrap(), r("1.292"));
    let mut small = scenarios[0].clone();
    small.mc = McConfig::new(50_000, 1);
    small.alpha = AlphaSpec::parse("0.6").unwrap();
    assert!(matches!(small.equilibrium_check(), Err(IncentiveError::AlphaTooSmall { .. })));
    small.alpha = AlphaSpec::parse("auto").unwrap();
    let result = small.run().unwrap();
    let row = result.csv_row();
    assert_eq!(row.split(',').count(), ScenarioResult::csv_header().split(',').count());
    assert!(row.starts_with("n10,0.646000000000,1.29200000000,"), "{row}");
}

#[test]
fn truthfulness_is_strict_across_the_grid() {
    for n in AGENTS {
        for prior in PRIORS {
            for bump in BUMPS {
                let text = format!(
                    "[[scenario]]\nid = \"grid\"\nagents = {n}\nrefund = 1\nprior = {prior}\nbump = {bump}\n\
                     alpha = \"auto:1.5\"\nrounds = 1000000\nseed = 11\n"
                );
                let s = ScenarioFile::parse(&text).unwrap().remove(0);
                for (d, est, v) in s.equilibrium_check().unwrap() {
                    assert_eq!(v, Verdict::StrictlyPositive, "n={n} prior={prior} bump={bump} {d}: {est:?}");
                }
            }
        }
    }
}
