//! End-to-end tests of the farectl binary: exit codes, file outputs and
//! reproducibility.

use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use farekit::instance::samples::{cycle, parallel_arcs};
use farekit::instance::{save_instance, save_strategy, Instance, InspectionStrategy};

fn farectl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farectl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_instance(dir: &Path, name: &str, instance: &Instance) -> String {
    let path = dir.join(name);
    save_instance(instance, File::create(&path).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn write_strategy(dir: &Path, name: &str, strategy: &InspectionStrategy) -> String {
    let path = dir.join(name);
    save_strategy(strategy, File::create(&path).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    let help = farectl(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout_of(&help).contains("farectl"));

    let bad = farectl(&["solve", "--no-such-flag"]);
    assert_eq!(bad.status.code(), Some(1));

    let missing = farectl(&["solve", "--instance", "/nonexistent.json", "--variant", "flex-n"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr_of(&missing).contains("cannot open"));
}

#[test]
fn solve_writes_solution_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = parallel_arcs();
    let instance = write_instance(dir.path(), "pa.json", &inst);
    let out_path = dir.path().join("sol.json");

    let out = farectl(&[
        "solve",
        "--instance",
        &instance,
        "--variant",
        "flex-n",
        "--start",
        "lp",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let summary = stdout_of(&out);
    let parts: Vec<&str> = summary.trim().split(" / ").collect();
    assert_eq!(parts.len(), 3, "summary line is 'profit / upper_bound / gap': {summary}");
    let gap: f64 = parts[2].parse().unwrap();
    assert!(gap > 0.0 && gap <= 1.0 + 1e-6);

    let parsed: serde_json::Value =
        serde_json::from_reader(File::open(&out_path).unwrap()).unwrap();
    assert_eq!(parsed["variant"]["fares"], "flexible");
    assert!(parsed["profit"].as_f64().unwrap() > 0.0);
    assert_eq!(
        parsed["probabilities"].as_array().unwrap().len(),
        inst.network.edge_count()
    );
}

#[test]
fn solve_zero_budget_reports_gap_one() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = parallel_arcs();
    let instance = write_instance(dir.path(), "pa0.json", &inst.with_budget(0.0));
    let out_path = dir.path().join("sol.json");

    let out = farectl(&[
        "solve",
        "--instance",
        &instance,
        "--variant",
        "flex-n",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let parts: Vec<f64> = stdout_of(&out)
        .trim()
        .split(" / ")
        .map(|p| p.parse().unwrap())
        .collect();
    assert_eq!(parts[0], 0.0, "no budget, no profit");
    assert_eq!(parts[2], 1.0, "gap defaults to 1 on a zero bound");
}

#[test]
fn solve_cycle_five_meets_the_rounding_floor() {
    let dir = tempfile::tempdir().unwrap();
    let instance = write_instance(dir.path(), "cycle5.json", &cycle(5));
    let out_path = dir.path().join("sol.json");

    let out = farectl(&[
        "solve",
        "--instance",
        &instance,
        "--variant",
        "flex-n",
        "--start",
        "lp",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let profit: f64 = stdout_of(&out).trim().split(" / ").next().unwrap().parse().unwrap();
    assert!(profit >= 3.41796875 - 1e-9, "profit {profit}");
}

#[test]
fn follower_values_match_the_known_example() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, strategy) = parallel_arcs();
    let instance = write_instance(dir.path(), "pa.json", &inst);
    let strat = write_strategy(dir.path(), "strategy.json", &strategy);

    for (variant, expected) in [("a", 1.5f64), ("n", 2.0f64)] {
        let out_path = dir.path().join(format!("resp_{variant}.json"));
        let out = farectl(&[
            "follower",
            "--instance",
            &instance,
            "--strategy",
            &strat,
            "--commodity",
            "0",
            "--variant",
            variant,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
        let parsed: serde_json::Value =
            serde_json::from_reader(File::open(&out_path).unwrap()).unwrap();
        let value = parsed["value"].as_f64().unwrap();
        assert!((value - expected).abs() < 1e-12, "variant {variant}: {value}");
        assert!(parsed["path"].is_array());
        assert!(parsed["label"]["cost"].is_number());
    }
}

#[test]
fn follower_without_out_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, strategy) = parallel_arcs();
    let instance = write_instance(dir.path(), "pa.json", &inst);
    let strat = write_strategy(dir.path(), "strategy.json", &strategy);

    let out = farectl(&[
        "follower", "--instance", &instance, "--strategy", &strat, "--commodity", "0",
        "--variant", "n", "--algo", "oracle",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let parsed: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert!((parsed["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn follower_sp_solver_rejects_non_series_parallel_graphs() {
    use farekit::graph::{Edge, Network};
    use farekit::instance::Commodity;

    // Wheatstone bridge: the crossing arc a -> b breaks two-terminal
    // series-parallel structure between s and t.
    let net = Network::new(
        vec!["s".into(), "a".into(), "b".into(), "t".into()],
        vec![
            Edge { id: 0, tail: 0, head: 1, cost: 1.0 },
            Edge { id: 1, tail: 0, head: 2, cost: 1.0 },
            Edge { id: 2, tail: 1, head: 2, cost: 0.1 },
            Edge { id: 3, tail: 1, head: 3, cost: 1.0 },
            Edge { id: 4, tail: 2, head: 3, cost: 1.0 },
        ],
    )
    .unwrap();
    let inst = Instance::new(
        net,
        vec![Commodity { source: 0, target: 3, demand: 1.0, ticket: 1.0 }],
        2.0,
        1.0,
    )
    .unwrap();
    let strategy = InspectionStrategy::zeros(inst.network.edge_count());

    let dir = tempfile::tempdir().unwrap();
    let instance = write_instance(dir.path(), "bridge.json", &inst);
    let strat = write_strategy(dir.path(), "strategy.json", &strategy);

    let out = farectl(&[
        "follower", "--instance", &instance, "--strategy", &strat, "--commodity", "0",
        "--variant", "n", "--algo", "sp",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("series-parallel"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn generate_is_deterministic_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        let run = farectl(&[
            "generate",
            "--nodes",
            "12",
            "--commodities",
            "3",
            "--count",
            "2",
            "--seed",
            "9",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    }

    let names = ["net_n12_k3_s9.json", "net_n12_k3_s10.json", "manifest.json"];
    for name in names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let manifest: Vec<serde_json::Value> =
        serde_json::from_reader(File::open(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 2);
    assert_eq!(manifest[0]["seed"], 9);
    assert_eq!(manifest[1]["seed"], 10);

    // An empty batch still leaves a valid (empty) manifest.
    let empty_dir = dir.path().join("empty");
    let run = farectl(&[
        "generate", "--nodes", "12", "--commodities", "3", "--count", "0",
        "--out-dir", empty_dir.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let manifest: Vec<serde_json::Value> =
        serde_json::from_reader(File::open(empty_dir.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.is_empty());
}

#[test]
fn bench_produces_stable_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let gen = farectl(&[
        "generate", "--nodes", "10", "--commodities", "2", "--count", "2", "--seed", "3",
        "--out-dir", suite.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr_of(&gen));

    let run_bench = |out_dir: &Path, parallel: &str| {
        let out = farectl(&[
            "bench",
            "--suite",
            suite.to_str().unwrap(),
            "--variants",
            "flex-n,fix-n",
            "--algorithms",
            "lp,mc+ls",
            "--budgets",
            "0.5,1.5",
            "--parallel",
            parallel,
            "--freeze-times",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
        assert!(stdout_of(&out).contains("net_n10_k2"), "aggregate table printed");
    };

    let out_one = dir.path().join("run1");
    let out_two = dir.path().join("run2");
    let out_par = dir.path().join("run4");
    run_bench(&out_one, "1");
    run_bench(&out_two, "1");
    run_bench(&out_par, "4");

    let runs = std::fs::read_to_string(out_one.join("runs.csv")).unwrap();
    let mut lines = runs.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,variant,algorithm,budget,profit,upper_bound,gap,wall_time_ms,seed,status"
    );
    // 2 instances x 2 variants x 2 algorithms x 2 budgets.
    assert_eq!(lines.count(), 16);

    for name in ["runs.csv", "aggregate.csv", "budget_curves.csv"] {
        let one = std::fs::read(out_one.join(name)).unwrap();
        let two = std::fs::read(out_two.join(name)).unwrap();
        let par = std::fs::read(out_par.join(name)).unwrap();
        assert_eq!(one, two, "{name} differs between identical runs");
        assert_eq!(one, par, "{name} differs under parallel workers");
    }

    // Every seeded row carries its generator seed from the manifest.
    for line in runs.lines().skip(1) {
        let seed = line.split(',').nth(8).unwrap();
        assert!(seed == "3" || seed == "4", "seed column: {line}");
    }
}

#[test]
fn bench_default_budget_sweep_has_twenty_points() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let gen = farectl(&[
        "generate", "--nodes", "8", "--commodities", "1", "--count", "1",
        "--out-dir", suite.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr_of(&gen));

    let out_dir = dir.path().join("bench");
    let out = farectl(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--variants",
        "flex-n",
        "--algorithms",
        "lp",
        "--parallel",
        "1",
        "--freeze-times",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    let rows: Vec<&str> = runs.lines().skip(1).collect();
    assert_eq!(rows.len(), 20, "default sweep is 20 budget points");

    // Warm-started sweeps keep the profit curve nondecreasing.
    let profits: Vec<f64> = rows
        .iter()
        .map(|line| line.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    for pair in profits.windows(2) {
        assert!(pair[1] >= pair[0] - 1e-12, "{profits:?}");
    }
}
