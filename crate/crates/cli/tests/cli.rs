use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infochain")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn round_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let sample = data("sample_rtmatrix.txt");
    let args = ["round", "--dataset", sample.to_str().unwrap(), "--agents", "5", "--questions", "8", "--out", out];
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let settlement = fs::read_to_string(dir.path().join("settlement.csv")).unwrap();
    let gas = fs::read_to_string(dir.path().join("gas.csv")).unwrap();
    assert!(settlement.starts_with("agent,mechanism_reward,payment_units,deposit_returned,gas_reimbursed\n"));
    assert_eq!(settlement.lines().count(), 6);
    assert!(gas.starts_with("phase,party,op_kind,words,gas\n"));

    let again = run(&args);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(dir.path().join("settlement.csv")).unwrap(), settlement);
    assert_eq!(fs::read_to_string(dir.path().join("gas.csv")).unwrap(), gas);
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn round_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let table = data("gas_table.toml");
    let args = [
        "round", "--mechanism", "ptsc", "--alpha", "2.5", "--peers", "3", "--pack", "off", "--agents", "20",
        "--questions", "10", "--seed", "7", "--gas-table", table.to_str().unwrap(), "--out", out,
    ];
    let res = run(&args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("mechanism ptsc, peers 3"), "{stdout}");
    assert_eq!(fs::read_to_string(dir.path().join("settlement.csv")).unwrap().lines().count(), 21);
}

#[test]
fn dg_without_non_common_questions_fails() {
    let dir = tempfile::tempdir().unwrap();
    let dense = dir.path().join("dense.txt");
    fs::write(&dense, "0.2 3.1 0.4\n0.3 2.5 0.1\n").unwrap();
    let out = dir.path().join("out");
    let res = run(&["round", "--dataset", dense.to_str().unwrap(), "--mechanism", "dg", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("agents a0 and a1 have no non-common questions"), "{}", stderr(&res));
    assert!(!out.join("settlement.csv").exists());
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad_table = dir.path().join("gas.toml");
    fs::write(&bad_table, "tx_base = 0\n").unwrap();
    let bad_data = dir.path().join("data.txt");
    fs::write(&bad_data, "1 2\n3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["round", "--pack", "yes"],
        vec!["round", "--mechanism", "bts"],
        vec!["round", "--peers", "0"],
        vec!["round", "--alpha", "auto"],
        vec!["round", "--gas-table", bad_table.to_str().unwrap()],
        vec!["round", "--dataset", bad_data.to_str().unwrap()],
        vec!["round", "--dataset", "/nonexistent/file.txt"],
        vec!["incentives", "--alpha", "often"],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}

#[test]
fn incentives_example_and_degenerate_beliefs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.toml");
    fs::write(
        &scenario,
        "[[scenario]]\nid = \"small\"\nagents = 10\nrefund = 1\nprior = 0.95\nbump = 0.01\nalpha = \"auto\"\n\
         rounds = 20000\nseed = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = run(&["incentives", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("incentives.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("scenario_id,alpha_bound,alpha_used,payment_mc,saving_bound,saving_mc"));
    assert!(lines.next().unwrap().starts_with("small,0.646000000000,1.29200000000,"));

    let flat = dir.path().join("flat.toml");
    fs::write(&flat, "[[scenario]]\nid = \"flat\"\nagents = 10\nrefund = 1\nprior = 0.9\nbump = 0\nrounds = 1000\n")
        .unwrap();
    let res = run(&["incentives", "--scenario", flat.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("beta"), "{}", stderr(&res));
}

#[test]
fn incentive_bound_falls_with_agents() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for n in [5, 10, 20, 40] {
        text.push_str(&format!(
            "[[scenario]]\nid = \"n{n}\"\nagents = {n}\nrefund = 1\nprior = 0.9\nbump = 0.05\nrounds = 5000\nseed = 1\n"
        ));
    }
    let scenario = dir.path().join("sweep.toml");
    fs::write(&scenario, text).unwrap();
    let out = dir.path().join("out");
    let res = run(&["incentives", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("incentives.csv")).unwrap();
    let bounds: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(bounds.len(), 4);
    assert!(bounds.windows(2).all(|w| w[1] < w[0]), "{bounds:?}");
}

#[test]
fn gas_bench_writes_every_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["gas-bench", "--questions", "44", "--out", out]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();

    let commit_gas = |csv: &str, id: &str| -> u64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("{id},")) && l.contains(",commit,"))
            .and_then(|l| l.split(',').nth(7))
            .unwrap()
            .parse()
            .unwrap()
    };
    let packing = read("packing.csv");
    assert_eq!(commit_gas(&packing, "pack-on-1"), commit_gas(&packing, "pack-on-42"));
    assert!(commit_gas(&packing, "pack-on-43") > commit_gas(&packing, "pack-on-42"));
    assert!(commit_gas(&packing, "pack-off-42") > commit_gas(&packing, "pack-off-41"));

    let settled = |csv: &str, id: &str| -> u64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("{id},")) && l.contains(",settled,"))
            .and_then(|l| l.split(',').nth(7))
            .unwrap()
            .parse()
            .unwrap()
    };
    let mechanisms = read("mechanisms.csv");
    assert!(settled(&mechanisms, "mech-dg") > settled(&mechanisms, "mech-oa"));
    assert!(settled(&mechanisms, "mech-dg") > settled(&mechanisms, "mech-ptsc"));
    let peers = read("peers.csv");
    assert!(settled(&peers, "peers-1") < settled(&peers, "peers-all"));
    assert!(peers.contains("peers-49,"));
    let computation = read("computation.csv");
    assert!(settled(&computation, "comp-naive-10x50") > settled(&computation, "comp-opt-10x50"));
}
