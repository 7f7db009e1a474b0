//! `farectl`: solve, inspect and benchmark fare-inspection instances.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use farectl::{
    aggregate, budget_curves, parse_tag, run_algorithm, run_suite, write_csv, Algorithm, Failure,
    LsConfigFile, ManifestEntry, SweepSettings,
};
use farekit::follower::{
    brute_force_best_response, solve_adaptive, solve_nonadaptive_exact, solve_nonadaptive_fptas,
    solve_nonadaptive_sp, FollowerResult, FptasError, ResponseModel, SpError,
};
use farekit::generate::{default_budget_sweep, generate_instance, GeneratorConfig};
use farekit::instance::{load_instance, load_strategy, save_instance, Instance};
use farekit::leader::{LeaderSolution, VariantId};

#[derive(Parser)]
#[command(
    name = "farectl",
    version,
    about = "Fare inspection strategies: solvers, passenger responses, instance generation and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the operator problem on one instance and write the strategy.
    Solve(SolveArgs),
    /// Compute one passenger's best response to a strategy.
    Follower(FollowerArgs),
    /// Generate a deterministic batch of benchmark instances.
    Generate(GenerateArgs),
    /// Sweep solver pipelines over an instance directory and tabulate gaps.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long, env = "FP_INSTANCE")]
    instance: PathBuf,
    /// Problem variant: fix-n, fix-a, flex-n or flex-a.
    #[arg(long, env = "FP_VARIANT")]
    variant: VariantId,
    /// Warm-start pipeline: lp (relaxation rounding) or multicut.
    #[arg(long, env = "FP_START", default_value = "lp")]
    start: String,
    /// Relative stall tolerance of the relaxation ascent.
    #[arg(long, env = "FP_EPSILON")]
    epsilon: Option<f64>,
    /// Seed recorded in the local-search configuration.
    #[arg(long, env = "FP_SEED")]
    seed: Option<u64>,
    /// JSON file overriding local-search settings.
    #[arg(long, env = "FP_LS_CONFIG")]
    ls_config: Option<PathBuf>,
    /// Output path of the solution JSON.
    #[arg(long, env = "FP_OUT", default_value = "solution.json")]
    out: PathBuf,
}

#[derive(Args)]
struct FollowerArgs {
    /// Instance JSON file.
    #[arg(long, env = "FP_INSTANCE")]
    instance: PathBuf,
    /// Strategy JSON file (sparse edge probabilities), or a solution file
    /// written by `farectl solve`.
    #[arg(long, env = "FP_STRATEGY")]
    strategy: PathBuf,
    /// Commodity index inside the instance.
    #[arg(long, env = "FP_COMMODITY")]
    commodity: usize,
    /// Passenger model: n (commits to a path) or a (reroutes when fined).
    #[arg(long, env = "FP_VARIANT")]
    variant: String,
    /// Solver: exact, fptas, sp or oracle.
    #[arg(long, env = "FP_ALGO", default_value = "exact")]
    algo: String,
    /// Approximation ratio of the fptas solver.
    #[arg(long, env = "FP_EPSILON", default_value_t = 0.1)]
    epsilon: f64,
    /// Output path; stdout when omitted.
    #[arg(long, env = "FP_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Stations per instance.
    #[arg(long, env = "FP_NODES")]
    nodes: usize,
    /// Origin-destination pairs per instance.
    #[arg(long, env = "FP_COMMODITIES")]
    commodities: usize,
    /// Number of instances; seeds run from --seed upward.
    #[arg(long, env = "FP_COUNT")]
    count: u64,
    /// Seed of the first instance.
    #[arg(long, env = "FP_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory; created if missing.
    #[arg(long, env = "FP_OUT_DIR", default_value = "instances")]
    out_dir: PathBuf,
    /// File name prefix.
    #[arg(long, env = "FP_TAG", default_value = "net")]
    tag: String,
    /// Fine collected from a caught evader.
    #[arg(long, env = "FP_FINE")]
    fine: Option<f64>,
    /// Ticket price at distance zero.
    #[arg(long, env = "FP_BASE_PRICE")]
    base_price: Option<f64>,
    /// Ticket price increase up to the network diameter.
    #[arg(long, env = "FP_PRICE_SLOPE")]
    price_slope: Option<f64>,
    /// Smallest demand.
    #[arg(long, env = "FP_DEMAND_MIN")]
    demand_min: Option<f64>,
    /// Largest demand.
    #[arg(long, env = "FP_DEMAND_MAX")]
    demand_max: Option<f64>,
    /// Inspection budget stored in the instance files; the default is the
    /// first point of the standard sweep.
    #[arg(long, env = "FP_BUDGET")]
    budget: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance JSON files.
    #[arg(long, env = "FP_SUITE")]
    suite: PathBuf,
    /// Comma-separated variant codes, or "all".
    #[arg(long, env = "FP_VARIANTS", default_value = "all")]
    variants: String,
    /// "default" for the standard 20-point sweep, or a comma-separated list.
    #[arg(long, env = "FP_BUDGETS", default_value = "default")]
    budgets: String,
    /// Comma-separated pipelines (lp, lp+ls, mc, mc+ls, oracle-grid), or "all".
    #[arg(long, env = "FP_ALGORITHMS", default_value = "all")]
    algorithms: String,
    /// Worker threads.
    #[arg(long, env = "FP_PARALLEL", default_value_t = 1)]
    parallel: usize,
    /// Output directory for runs.csv, aggregate.csv and budget_curves.csv.
    #[arg(long, env = "FP_OUT_DIR", default_value = "bench-out")]
    out_dir: PathBuf,
    /// Record wall_time_ms as 0 so repeated runs are byte-identical.
    #[arg(long, env = "FP_FREEZE_TIMES", default_value_t = false)]
    freeze_times: bool,
    /// JSON file overriding local-search settings.
    #[arg(long, env = "FP_LS_CONFIG")]
    ls_config: Option<PathBuf>,
    /// Cap on exactly evaluated local-search moves per iteration, picked by
    /// a supergradient ranking; 0 evaluates every move. Defaults to 64 when
    /// neither this flag nor the config file sets it.
    #[arg(long, env = "FP_MOVE_BUDGET")]
    move_budget: Option<usize>,
    /// Grid step of the oracle-grid pipeline.
    #[arg(long, env = "FP_GRID_STEP", default_value_t = 0.05)]
    grid_step: f64,
    /// Skip oracle-grid when the multicut support exceeds this many edges.
    #[arg(long, env = "FP_GRID_MAX_SUPPORT", default_value_t = 4)]
    grid_max_support: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Follower(args) => cmd_follower(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

fn load_instance_path(path: &Path) -> Result<Instance, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::Input(format!("cannot open {}: {e}", path.display())))?;
    load_instance(file).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_ls_config(
    path: Option<&Path>,
    base: &farekit::leader::LocalSearchConfig,
) -> Result<farekit::leader::LocalSearchConfig, Failure> {
    let Some(path) = path else {
        return Ok(base.clone());
    };
    let file = File::open(path)
        .map_err(|e| Failure::Input(format!("cannot open {}: {e}", path.display())))?;
    let parsed: LsConfigFile = serde_json::from_reader(file)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parsed.apply(base)
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let instance = load_instance_path(&args.instance)?;
    let algorithm = match args.start.as_str() {
        "lp" => Algorithm::LpLs,
        "multicut" => Algorithm::McLs,
        other => {
            return Err(Failure::Input(format!(
                "unknown start '{other}', expected 'lp' or 'multicut'"
            )))
        }
    };

    let mut settings = SweepSettings::default();
    settings.ls = load_ls_config(args.ls_config.as_deref(), &settings.ls)?;
    if let Some(seed) = args.seed {
        settings.ls.seed = seed;
    }
    if let Some(eps) = args.epsilon {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Failure::Input(format!("epsilon must be positive, got {eps}")));
        }
        settings.relaxation.stall_tolerance = eps;
    }

    let outcome = run_algorithm(&instance, args.variant, algorithm, &settings, None, None)?;
    let solution = outcome.solution.expect("solve pipelines never skip");

    let out = File::create(&args.out)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", args.out.display())))?;
    serde_json::to_writer_pretty(&out, &solution)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", args.out.display())))?;
    writeln!(&out).map_err(|e| Failure::Input(e.to_string()))?;

    println!("{} / {} / {}", solution.profit(), solution.upper_bound, solution.gap);
    Ok(())
}

fn cmd_follower(args: FollowerArgs) -> Result<(), Failure> {
    let instance = load_instance_path(&args.instance)?;
    let text = std::fs::read_to_string(&args.strategy)
        .map_err(|e| Failure::Input(format!("cannot open {}: {e}", args.strategy.display())))?;
    // Accept either a bare strategy file or a solution written by `solve`,
    // which carries the probabilities as a dense array.
    let strategy = match load_strategy(text.as_bytes(), instance.network.edge_count()) {
        Ok(s) => s,
        Err(primary) => serde_json::from_str::<LeaderSolution>(&text)
            .ok()
            .map(|sol| sol.strategy)
            .filter(|s| s.edge_count() == instance.network.edge_count())
            .ok_or_else(|| Failure::Input(format!("{}: {primary}", args.strategy.display())))?,
    };
    strategy
        .validate_feasible(&instance)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.strategy.display())))?;

    if args.commodity >= instance.commodities.len() {
        return Err(Failure::Input(format!(
            "commodity {} out of range; instance has {}",
            args.commodity,
            instance.commodities.len()
        )));
    }
    let model = match args.variant.as_str() {
        "n" => ResponseModel::NonAdaptive,
        "a" => ResponseModel::Adaptive,
        other => {
            return Err(Failure::Input(format!(
                "unknown follower variant '{other}', expected 'n' or 'a'"
            )))
        }
    };
    let com = &instance.commodities[args.commodity];
    let net = &instance.network;
    let fine = instance.fine;

    let result: FollowerResult = match (model, args.algo.as_str()) {
        (ResponseModel::NonAdaptive, "exact") => {
            solve_nonadaptive_exact(net, &strategy, fine, com.source, com.target)
                .map_err(Failure::solver)?
                .result
        }
        (ResponseModel::NonAdaptive, "fptas") => {
            solve_nonadaptive_fptas(net, &strategy, fine, com.source, com.target, args.epsilon)
                .map_err(|e| match e {
                    FptasError::BadEpsilon(_) | FptasError::EpsilonTooSmall { .. } => {
                        Failure::input(e)
                    }
                    FptasError::Solve(inner) => Failure::solver(inner),
                })?
        }
        (ResponseModel::NonAdaptive, "sp") => {
            solve_nonadaptive_sp(net, &strategy, fine, com.source, com.target).map_err(
                |e| match e {
                    SpError::NotSeriesParallel { .. } | SpError::NoPath => Failure::input(e),
                },
            )?
        }
        (model, "oracle") => {
            brute_force_best_response(net, &strategy, fine, com.source, com.target, model)
                .map_err(Failure::solver)?
                .0
        }
        (ResponseModel::Adaptive, "exact") => {
            solve_adaptive(net, &strategy, fine, com.source, com.target)
                .map_err(Failure::solver)?
        }
        (ResponseModel::Adaptive, algo @ ("fptas" | "sp")) => {
            return Err(Failure::Input(format!(
                "--algo {algo} only applies to the non-adaptive model"
            )))
        }
        (_, other) => {
            return Err(Failure::Input(format!(
                "unknown algorithm '{other}', expected exact, fptas, sp or oracle"
            )))
        }
    };

    let rendered = serde_json::to_string_pretty(&result)
        .map_err(|e| Failure::Input(format!("cannot encode result: {e}")))?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, rendered + "\n")
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
            println!("value {}", result.value);
        }
        None => println!("{rendered}"),
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let mut manifest: Vec<ManifestEntry> = Vec::new();
    for i in 0..args.count {
        let seed = args.seed + i;
        let mut config = GeneratorConfig::new(args.nodes, args.commodities, seed);
        if let Some(f) = args.fine {
            config.fine = f;
        }
        if let Some(b) = args.base_price {
            config.base_price = b;
        }
        if let Some(s) = args.price_slope {
            config.price_slope = s;
        }
        if let Some(lo) = args.demand_min {
            config.demand_range.0 = lo;
        }
        if let Some(hi) = args.demand_max {
            config.demand_range.1 = hi;
        }
        if let Some(b) = args.budget {
            config.budgets = vec![b];
        }
        let generated = generate_instance(&config).map_err(Failure::input)?;

        let name = format!("{}_n{}_k{}_s{}.json", args.tag, args.nodes, args.commodities, seed);
        let path = args.out_dir.join(&name);
        let file = File::create(&path)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        save_instance(&generated.instance, file)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;

        manifest.push(ManifestEntry {
            file: name,
            seed,
            nodes: args.nodes,
            commodities: args.commodities,
            links: generated.links.len(),
            budget: generated.instance.budget,
            fine: generated.instance.fine,
        });
    }

    let manifest_path = args.out_dir.join("manifest.json");
    let rendered = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Failure::Input(format!("cannot encode manifest: {e}")))?;
    std::fs::write(&manifest_path, rendered + "\n")
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", manifest_path.display())))?;

    println!("wrote {} instances to {}", manifest.len(), args.out_dir.display());
    Ok(())
}

fn parse_variants(input: &str) -> Result<Vec<VariantId>, Failure> {
    if input == "all" {
        return Ok(VariantId::all().to_vec());
    }
    input
        .split(',')
        .map(|code| code.trim().parse::<VariantId>().map_err(Failure::Input))
        .collect()
}

fn parse_algorithms(input: &str) -> Result<Vec<Algorithm>, Failure> {
    if input == "all" {
        return Ok(Algorithm::all().to_vec());
    }
    input
        .split(',')
        .map(|code| code.trim().parse::<Algorithm>().map_err(Failure::Input))
        .collect()
}

fn parse_budgets(input: &str) -> Result<Vec<f64>, Failure> {
    if input == "default" {
        return Ok(default_budget_sweep());
    }
    let mut budgets = Vec::new();
    for part in input.split(',') {
        let value: f64 = part
            .trim()
            .parse()
            .map_err(|e| Failure::Input(format!("bad budget '{part}': {e}")))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(Failure::Input(format!("budget {value} must be nonnegative")));
        }
        budgets.push(value);
    }
    if budgets.is_empty() {
        return Err(Failure::Input("budget list is empty".into()));
    }
    budgets.sort_by(f64::total_cmp);
    Ok(budgets)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let variants = parse_variants(&args.variants)?;
    let algorithms = parse_algorithms(&args.algorithms)?;

    let mut settings = SweepSettings::default();
    settings.budgets = parse_budgets(&args.budgets)?;
    settings.ls = load_ls_config(args.ls_config.as_deref(), &settings.ls)?;
    settings.ls.move_budget = match args.move_budget {
        Some(0) => None,
        Some(m) => Some(m),
        None => settings.ls.move_budget.or(Some(64)),
    };
    settings.grid_step = args.grid_step;
    settings.grid_max_support = args.grid_max_support;

    // Seeds by file name from the generator manifest, if one is present.
    let mut manifest_seeds: BTreeMap<String, u64> = BTreeMap::new();
    let manifest_path = args.suite.join("manifest.json");
    if manifest_path.exists() {
        let file = File::open(&manifest_path)
            .map_err(|e| Failure::Input(format!("{}: {e}", manifest_path.display())))?;
        let entries: Vec<ManifestEntry> = serde_json::from_reader(file)
            .map_err(|e| Failure::Input(format!("{}: {e}", manifest_path.display())))?;
        for entry in entries {
            manifest_seeds.insert(entry.file, entry.seed);
        }
    }

    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.suite)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", args.suite.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|ext| ext == "json")
                && p.file_name().is_some_and(|n| n != "manifest.json")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Input(format!(
            "no instance files found in {}",
            args.suite.display()
        )));
    }

    let mut instances = Vec::with_capacity(paths.len());
    let mut class_of: BTreeMap<String, String> = BTreeMap::new();
    for path in &paths {
        let (tag, class, parsed_seed) = parse_tag(path);
        let file_name =
            path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let seed = manifest_seeds.get(&file_name).copied().unwrap_or(parsed_seed);
        let instance = load_instance_path(path)?;
        class_of.insert(tag.clone(), class);
        instances.push((tag, seed, instance));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel.max(1))
        .build()
        .map_err(|e| Failure::Solver(format!("cannot build worker pool: {e}")))?;
    let records = pool.install(|| {
        run_suite(&instances, &variants, &algorithms, &settings, args.freeze_times)
    });

    for record in &records {
        if !record.gap_in_bounds() {
            return Err(Failure::Solver(format!(
                "gap {} out of bounds for {}/{}/{} at budget {}",
                record.gap, record.instance, record.variant, record.algorithm, record.budget
            )));
        }
    }

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", args.out_dir.display())))?;
    write_csv(&args.out_dir.join("runs.csv"), &records)?;
    let table = aggregate(&records, &class_of);
    write_csv(&args.out_dir.join("aggregate.csv"), &table)?;
    let curves = budget_curves(&records, &class_of);
    write_csv(&args.out_dir.join("budget_curves.csv"), &curves)?;

    println!(
        "{:<24} {:<7} {:<12} {:>9} {:>6} {:>7}",
        "class", "variant", "algorithm", "mean gap", "runs", "failed"
    );
    for row in &table {
        println!(
            "{:<24} {:<7} {:<12} {:>8.2}% {:>6} {:>7}",
            row.class,
            row.variant,
            row.algorithm,
            row.mean_gap * 100.0,
            row.runs,
            row.failed
        );
    }
    Ok(())
}
