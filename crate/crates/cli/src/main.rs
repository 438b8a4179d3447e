use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infochain::gas_model::GasTable;
use infochain::incentives::{AlphaSpec, IncentiveScenario, McConfig, ScenarioFile, ScenarioResult};
use infochain::ledger::{PeerChoice, Phase};
use infochain::mechanisms::Mechanism;
use infochain::sim::{
    computation_sweep, mechanism_sweep, packing_sweep, peer_sweep, reports_to_csv, run_experiment, run_sweep,
    Behavior, ExperimentConfig, ExperimentReport, QoSDataset,
};
use infochain::{Rational, Scalar};

const EXAMPLE_SCENARIO: &str = r#"
[[scenario]]
id = "example"
agents = 10
refund = 1
prior = 0.95
bump = 0.01
alpha = "auto"
rounds = 1000000
seed = 2019
"#;

#[derive(Parser)]
#[command(name = "infochain", version, about = "Peer-consistency oracle ledger, gas benchmarks and incentive analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one post, select, commit, reveal and settle round.
    Round(RoundArgs),
    /// Sweep packing, computation path, mechanism and sampled peers.
    GasBench(BenchArgs),
    /// Evaluate incentive scenarios.
    Incentives(IncentiveArgs),
}

#[derive(Args)]
struct Common {
    /// Response-time matrix; `-1` marks a missing value. Defaults to the
    /// built-in 50 x 50 synthetic matrix.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// TOML gas table; entries left out keep their defaults.
    #[arg(long)]
    gas_table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RoundArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "oa")]
    mechanism: Mechanism,
    /// PTSC scaling constant.
    #[arg(long, default_value = "1")]
    alpha: String,
    /// `all` or the number of sampled peers.
    #[arg(long, default_value = "all")]
    peers: PeerChoice,
    #[arg(long, default_value = "on", value_parser = parse_switch, action = clap::ArgAction::Set)]
    pack: bool,
    #[arg(long, default_value_t = 50)]
    agents: usize,
    #[arg(long, default_value_t = 50)]
    questions: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Mechanism for the packing, computation and peer sweeps. Defaults to
    /// oa, ptsc and dg respectively.
    #[arg(long)]
    mechanism: Option<Mechanism>,
    #[arg(long, default_value = "1")]
    alpha: String,
    #[arg(long, default_value_t = 50)]
    agents: usize,
    /// Largest questions-per-agent value in the packing sweep.
    #[arg(long, default_value_t = 60)]
    questions: usize,
}

#[derive(Args)]
struct IncentiveArgs {
    /// TOML scenario file. Defaults to the n = 10, 95% good-service example.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides every scenario's alpha: a decimal, `auto` or `auto:MARGIN`.
    #[arg(long)]
    alpha: Option<String>,
    /// Overrides every scenario's Monte-Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected `on` or `off`, got `{s}`")),
    }
}

/// Exit 2 for bad input, exit 1 when the run itself fails.
enum Failure {
    Usage(String),
    Domain(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file so readers never see a partial CSV.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let path = dir.join(name);
    fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, &path))
        .map_err(|e| domain(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_dataset(common: &Common) -> Result<Option<QoSDataset>, Failure> {
    common
        .dataset
        .as_deref()
        .map(|p| QoSDataset::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))))
        .transpose()
}

fn load_gas_table(common: &Common) -> Result<GasTable, Failure> {
    match &common.gas_table {
        Some(p) => GasTable::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(GasTable::default()),
    }
}

fn parse_alpha(s: &str) -> Result<Rational, Failure> {
    match Rational::parse_decimal(s) {
        Some(a) if a > Rational::from_count(0) => Ok(a),
        _ => Err(usage(format!("--alpha must be a positive decimal here, got `{s}`"))),
    }
}

fn print_report(r: &ExperimentReport) {
    println!("{}: {} agents, mechanism {}, peers {}", r.config.id, r.agents, r.config.mechanism, r.config.peers);
    for (phase, gas) in &r.gas_per_phase {
        println!("  gas {:<10} {gas}", phase.to_string());
    }
    println!("  gas {:<10} {}", "total", r.total_gas);
    for b in Behavior::ALL {
        if let Some(m) = r.mean_reward(b) {
            println!("  mean reward {:<11} {m:.6}", b.to_string());
        }
    }
    for note in &r.settlement.notes {
        println!("  note: {note}");
    }
}

fn cmd_round(args: RoundArgs) -> CmdResult {
    let dataset = load_dataset(&args.common)?.unwrap_or_else(QoSDataset::desk);
    let config = ExperimentConfig {
        id: "round".into(),
        mechanism: args.mechanism,
        alpha: parse_alpha(&args.alpha)?,
        peers: args.peers,
        packing: args.pack,
        gas_table: load_gas_table(&args.common)?,
        agents: args.agents,
        questions_per_agent: args.questions,
        seed: args.common.seed,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&dataset, &config).map_err(domain)?;
    print_report(&report);
    write_atomic(&args.common.out, "settlement.csv", &report.settlement.to_csv())?;
    write_atomic(&args.common.out, "gas.csv", &report.ledger.gas().to_csv())
}

fn cmd_gas_bench(args: BenchArgs) -> CmdResult {
    let dataset = load_dataset(&args.common)?;
    let base = ExperimentConfig {
        alpha: parse_alpha(&args.alpha)?,
        gas_table: load_gas_table(&args.common)?,
        agents: args.agents,
        seed: args.common.seed,
        ..ExperimentConfig::default()
    };
    let desk = dataset.clone().unwrap_or_else(QoSDataset::desk);
    // dense matrix for the packing sweep
    let dense = match dataset {
        Some(d) => d,
        None => QoSDataset::synthetic(10, args.questions.max(1), 0.0, args.common.seed).map_err(domain)?,
    };
    let out = &args.common.out;
    let pick = |default| args.mechanism.unwrap_or(default);

    let packing = ExperimentConfig { mechanism: pick(Mechanism::OutputAgreement), agents: 10, ..base.clone() };
    let reports = run_sweep(&dense, &packing_sweep(&packing, 1..=args.questions)).map_err(domain)?;
    write_atomic(out, "packing.csv", &reports_to_csv(&reports))?;

    let steps = [10, 20, 30, 40, 50];
    let agents: Vec<usize> = steps.iter().copied().filter(|&a| a <= args.agents).collect();
    let computation = ExperimentConfig { mechanism: pick(Mechanism::PeerTruthSerum), ..base.clone() };
    let reports = run_sweep(&desk, &computation_sweep(&computation, &agents, &steps)).map_err(domain)?;
    write_atomic(out, "computation.csv", &reports_to_csv(&reports))?;

    let reports = run_sweep(&desk, &mechanism_sweep(&base)).map_err(domain)?;
    for r in &reports {
        println!("{}: settlement gas {}", r.config.id, r.phase_gas(Phase::Settled));
    }
    write_atomic(out, "mechanisms.csv", &reports_to_csv(&reports))?;

    let peers = ExperimentConfig { mechanism: pick(Mechanism::DasguptaGhosh), ..base };
    let max_k = args.agents.min(desk.rows()).saturating_sub(1).max(1);
    let reports = run_sweep(&desk, &peer_sweep(&peers, 1..=max_k)).map_err(domain)?;
    write_atomic(out, "peers.csv", &reports_to_csv(&reports))
}

fn cmd_incentives(args: IncentiveArgs) -> CmdResult {
    let text = match &args.scenario {
        Some(p) => read(p)?,
        None => EXAMPLE_SCENARIO.to_string(),
    };
    let mut scenarios: Vec<IncentiveScenario> = ScenarioFile::parse(&text).map_err(usage)?;
    let alpha = args.alpha.as_deref().map(AlphaSpec::parse).transpose().map_err(usage)?;
    let mut csv = ScenarioResult::csv_header() + "\n";
    for s in &mut scenarios {
        if let Some(a) = &alpha {
            s.alpha = a.clone();
        }
        if let Some(seed) = args.seed {
            s.mc = McConfig { master_seed: seed, ..s.mc };
        }
        let result = s.run().map_err(|e| domain(format!("scenario `{}`: {e}", s.id)))?;
        println!(
            "{}: alpha bound {:.6}, alpha {:.6}, payment {:.6} ± {:.6}, saving {:.6} (bound {:.6})",
            result.id,
            result.alpha_bound.to_f64_lossy(),
            result.alpha_used.to_f64_lossy(),
            result.payment.mean,
            result.payment.std_error,
            result.saving.mean,
            result.saving_bound.to_f64_lossy()
        );
        for (d, est, v) in &result.verdicts {
            println!("  {:<10} gap {:+.6} ± {:.6} {v}", d.to_string(), est.mean, est.std_error);
        }
        csv.push_str(&result.csv_row());
        csv.push('\n');
    }
    write_atomic(&args.out, "incentives.csv", &csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Round(a) => cmd_round(a),
        Command::GasBench(a) => cmd_gas_bench(a),
        Command::Incentives(a) => cmd_incentives(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
