//! Experiment harness behind the `farectl` binary: pipelines that turn an
//! instance into a solved strategy, budget-sweep drivers with warm starts,
//! and the CSV record/aggregation layer.
//!
//! The binary stays a thin flag parser; everything testable lives here.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use farekit::instance::{InspectionStrategy, Instance};
use farekit::leader::{
    gap_ratio, grid_search, local_search, multicut_edges, multicut_start, round_relaxation,
    solve_relaxation_with, support_set, AcceptanceRule, FareScheme, LeaderSolution,
    LocalSearchConfig, Provenance, RelaxationConfig, RelaxationError, StartPoint, ValueCap,
    VariantId,
};

// ---------------------------------------------------------------------------
// Failures and exit codes

/// Input problems exit with 1, solver breakdowns with 2.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Solver(String),
}

impl Failure {
    pub fn input(err: impl fmt::Display) -> Self {
        Failure::Input(err.to_string())
    }

    pub fn solver(err: impl fmt::Display) -> Self {
        Failure::Solver(err.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Solver(m) => m,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for Failure {}

// ---------------------------------------------------------------------------
// Algorithms

/// Solver pipelines the benchmark compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Relaxation ascent, probabilities read off directly.
    Lp,
    /// `Lp` start refined by local search.
    LpLs,
    /// Budget spread uniformly over a multicut.
    Mc,
    /// `Mc` start refined by local search.
    McLs,
    /// Exhaustive grid search over the multicut support; only run when
    /// that support is tiny.
    OracleGrid,
}

impl Algorithm {
    pub fn all() -> [Algorithm; 5] {
        [
            Algorithm::Lp,
            Algorithm::LpLs,
            Algorithm::Mc,
            Algorithm::McLs,
            Algorithm::OracleGrid,
        ]
    }

    pub fn code(&self) -> &'static str {
        match self {
            Algorithm::Lp => "lp",
            Algorithm::LpLs => "lp+ls",
            Algorithm::Mc => "mc",
            Algorithm::McLs => "mc+ls",
            Algorithm::OracleGrid => "oracle-grid",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lp" => Ok(Algorithm::Lp),
            "lp+ls" => Ok(Algorithm::LpLs),
            "mc" => Ok(Algorithm::Mc),
            "mc+ls" => Ok(Algorithm::McLs),
            "oracle-grid" => Ok(Algorithm::OracleGrid),
            other => Err(format!(
                "unknown algorithm '{other}', expected lp, lp+ls, mc, mc+ls or oracle-grid"
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline settings

/// Everything a pipeline run may tune. The local-search settings double as
/// the file format of `--ls-config`.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub budgets: Vec<f64>,
    pub ls: LocalSearchConfig,
    /// Grid step of the `oracle-grid` pipeline.
    pub grid_step: f64,
    /// `oracle-grid` is skipped when the multicut support exceeds this,
    /// since grid size grows as `levels^support`.
    pub grid_max_support: usize,
    pub relaxation: RelaxationConfig,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            budgets: farekit::generate::default_budget_sweep(),
            ls: LocalSearchConfig::default(),
            grid_step: 0.05,
            grid_max_support: 4,
            relaxation: RelaxationConfig::default(),
        }
    }
}

/// On-disk form of [`LocalSearchConfig`]; every field optional so partial
/// files stay valid.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsConfigFile {
    pub k: Option<usize>,
    pub delta0: Option<f64>,
    pub decay: Option<f64>,
    pub max_iterations: Option<usize>,
    pub stall_threshold: Option<f64>,
    pub stall_patience: Option<usize>,
    pub seed: Option<u64>,
    /// "best" or "first".
    pub rule: Option<String>,
    pub move_budget: Option<usize>,
}

impl LsConfigFile {
    pub fn apply(&self, base: &LocalSearchConfig) -> Result<LocalSearchConfig, Failure> {
        let mut cfg = base.clone();
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(d) = self.delta0 {
            cfg.delta0 = d;
        }
        if let Some(d) = self.decay {
            cfg.decay = d;
        }
        if let Some(m) = self.max_iterations {
            cfg.max_iterations = m;
        }
        if let Some(s) = self.stall_threshold {
            cfg.stall_threshold = s;
        }
        if let Some(s) = self.stall_patience {
            cfg.stall_patience = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(rule) = &self.rule {
            cfg.rule = match rule.as_str() {
                "best" => AcceptanceRule::BestImprovement,
                "first" => AcceptanceRule::FirstImprovement,
                other => {
                    return Err(Failure::Input(format!(
                        "unknown acceptance rule '{other}', expected 'best' or 'first'"
                    )))
                }
            };
        }
        if let Some(m) = self.move_budget {
            cfg.move_budget = Some(m);
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Single-budget pipeline

/// Result of one pipeline run at one budget.
pub struct AlgoOutcome {
    /// `None` when the pipeline was skipped (reason in `skip_reason`).
    pub solution: Option<LeaderSolution>,
    pub skip_reason: Option<String>,
    /// Relaxation probabilities, kept to warm-start the next budget.
    pub relax_strategy: InspectionStrategy,
    /// Relaxation objective at this budget.
    pub upper: f64,
}

/// Runs one pipeline. `warm` carries the previous (smaller) budget's
/// relaxation point; `ls_seed` the previous final strategy, which local
/// search may prefer as its start.
pub fn run_algorithm(
    instance: &Instance,
    variant: VariantId,
    algorithm: Algorithm,
    settings: &SweepSettings,
    warm: Option<&InspectionStrategy>,
    ls_seed: Option<&LeaderSolution>,
) -> Result<AlgoOutcome, Failure> {
    let mut relax_config = settings.relaxation.clone();
    relax_config.initial = warm.cloned();
    // Fixed fares collect at most the ticket price per passenger, so their
    // bound (and with it the rounded start) caps each commodity there.
    relax_config.cap = match variant.fares {
        FareScheme::Fixed => ValueCap::Ticket,
        FareScheme::Flexible => ValueCap::Fine,
    };
    let relax = match solve_relaxation_with(instance, &relax_config) {
        Ok(sol) => sol,
        Err(RelaxationError::NonConvergence { iterations, certificate_gap, .. }) => {
            return Err(Failure::Solver(format!(
                "relaxation did not converge in {iterations} iterations (certificate gap {certificate_gap:.3e})"
            )))
        }
    };
    let upper = relax.objective;
    let relax_strategy = relax.strategy.clone();

    let solution = match algorithm {
        Algorithm::Lp => Some(round_relaxation(instance, &relax, variant).map_err(Failure::solver)?),
        Algorithm::Mc => {
            let strategy = multicut_start(instance);
            Some(evaluate_as_solution(
                instance, variant, strategy, upper, Provenance::Multicut,
            )?)
        }
        Algorithm::LpLs | Algorithm::McLs => {
            let (fresh, origin) = match algorithm {
                Algorithm::LpLs => (
                    round_relaxation(instance, &relax, variant).map_err(Failure::solver)?,
                    StartPoint::LpRound,
                ),
                _ => {
                    let strategy = multicut_start(instance);
                    let sol = evaluate_as_solution(
                        instance, variant, strategy, upper, Provenance::Multicut,
                    )?;
                    (sol, StartPoint::Multicut)
                }
            };
            // The previous budget's refined strategy stays feasible and
            // often beats a cold start, so local search may resume from it.
            let start = match ls_seed {
                Some(prev) if prev.profit() > fresh.profit() => prev,
                _ => &fresh,
            };
            let mut support = support_set(&start.strategy);
            support.extend(multicut_edges(instance));
            support.sort_unstable();
            support.dedup();
            Some(
                local_search(
                    instance,
                    variant,
                    &start.strategy,
                    &support,
                    &settings.ls,
                    upper,
                    origin,
                )
                .map_err(Failure::solver)?,
            )
        }
        Algorithm::OracleGrid => {
            let support = multicut_edges(instance);
            if support.len() > settings.grid_max_support {
                return Ok(AlgoOutcome {
                    solution: None,
                    skip_reason: Some(format!(
                        "grid support {} exceeds cap {}",
                        support.len(),
                        settings.grid_max_support
                    )),
                    relax_strategy,
                    upper,
                });
            }
            let (strategy, _) = grid_search(instance, variant, &support, settings.grid_step)
                .map_err(Failure::solver)?;
            Some(evaluate_as_solution(
                instance, variant, strategy, upper, Provenance::GridSearch,
            )?)
        }
    };

    Ok(AlgoOutcome { solution, skip_reason: None, relax_strategy, upper })
}

/// Wraps a bare strategy into a [`LeaderSolution`] by evaluating its true
/// revenue against the given bound.
pub fn evaluate_as_solution(
    instance: &Instance,
    variant: VariantId,
    strategy: InspectionStrategy,
    upper: f64,
    provenance: Provenance,
) -> Result<LeaderSolution, Failure> {
    let breakdown = farekit::leader::ProfitEvaluator::new(instance, variant)
        .breakdown(&strategy)
        .map_err(Failure::solver)?;
    let gap = gap_ratio(breakdown.total_profit, upper);
    Ok(LeaderSolution {
        strategy,
        variant,
        breakdown,
        upper_bound: upper,
        gap,
        provenance,
        iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Run records

/// One CSV row of the benchmark output. Column order is the schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub variant: String,
    pub algorithm: String,
    pub budget: f64,
    pub profit: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub wall_time_ms: f64,
    pub seed: u64,
    pub status: String,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// The gap of a successful run must be a ratio; tiny overshoot is the
    /// ascent's certificate tolerance.
    pub fn gap_in_bounds(&self) -> bool {
        !self.is_ok() || (0.0..=1.0 + 1e-6).contains(&self.gap)
    }
}

/// Instance identity inside a suite: display tag, aggregation class and
/// generator seed, all read off the file name. A trailing `_s<digits>`
/// segment is the seed; the class is the tag without it.
pub fn parse_tag(path: &Path) -> (String, String, u64) {
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned());
    let mut class = tag.clone();
    let mut seed = 0u64;
    let parts: Vec<&str> = tag.split('_').collect();
    if let Some(last) = parts.last() {
        if let Some(rest) = last.strip_prefix('s') {
            if let Ok(parsed) = rest.parse::<u64>() {
                seed = parsed;
                class = parts[..parts.len() - 1].join("_");
            }
        }
    }
    (tag, class, seed)
}

// ---------------------------------------------------------------------------
// Budget sweeps

/// Runs one (instance, variant, algorithm) cell across the whole budget
/// sweep, from the smallest budget up.
///
/// Each budget warm-starts the relaxation from the previous point, and the
/// recorded solution never falls below the previous budget's: a feasible
/// strategy stays feasible when the budget grows, so the sweep keeps the
/// best strategy seen so far and the profit curve is nondecreasing by
/// construction. Failed budgets record their error and the sweep moves on.
pub fn run_cell(
    base: &Instance,
    tag: &str,
    seed: u64,
    variant: VariantId,
    algorithm: Algorithm,
    settings: &SweepSettings,
    freeze_times: bool,
) -> Vec<RunRecord> {
    let mut records = Vec::with_capacity(settings.budgets.len());
    let mut warm: Option<InspectionStrategy> = None;
    let mut carried: Option<LeaderSolution> = None;
    let mut prev_upper = 0.0f64;

    for &budget in &settings.budgets {
        let instance = base.with_budget(budget);
        let started = Instant::now();
        let outcome = run_algorithm(&instance, variant, algorithm, settings, warm.as_ref(), carried.as_ref());
        let elapsed_ms = if freeze_times {
            0.0
        } else {
            started.elapsed().as_secs_f64() * 1e3
        };

        let mut record = RunRecord {
            instance: tag.to_string(),
            variant: variant.code().to_string(),
            algorithm: algorithm.code().to_string(),
            budget,
            profit: 0.0,
            upper_bound: 0.0,
            gap: 1.0,
            wall_time_ms: elapsed_ms,
            seed,
            status: "ok".to_string(),
        };

        match outcome {
            Ok(out) => {
                warm = Some(out.relax_strategy);
                // The reported relaxation value is an ascent's best point,
                // so the true optimum only grows with the budget; carrying
                // the running maximum keeps the bound curve monotone too.
                let upper = out.upper.max(prev_upper);
                prev_upper = upper;
                match out.solution {
                    Some(sol) => {
                        let better_carried =
                            carried.as_ref().is_some_and(|c| c.profit() > sol.profit());
                        if !better_carried {
                            carried = Some(sol);
                        }
                        let current = carried.as_ref().expect("just set");
                        record.profit = current.profit();
                        record.upper_bound = upper;
                        record.gap = gap_ratio(current.profit(), upper);
                    }
                    None => {
                        record.upper_bound = upper;
                        record.gap = gap_ratio(0.0, upper);
                        record.status = format!(
                            "skipped: {}",
                            out.skip_reason.unwrap_or_else(|| "unspecified".into())
                        );
                    }
                }
            }
            Err(failure) => {
                record.status = format!("error: {}", failure.message());
            }
        }
        records.push(record);
    }
    records
}

/// Runs every (instance, variant, algorithm) cell of a suite. Cells run in
/// parallel on the ambient rayon pool; records come back grouped by cell in
/// deterministic (instance, variant, algorithm, budget) order regardless of
/// worker count.
pub fn run_suite(
    instances: &[(String, u64, Instance)],
    variants: &[VariantId],
    algorithms: &[Algorithm],
    settings: &SweepSettings,
    freeze_times: bool,
) -> Vec<RunRecord> {
    let mut cells = Vec::new();
    for (tag, seed, instance) in instances {
        for &variant in variants {
            for &algorithm in algorithms {
                cells.push((tag, *seed, instance, variant, algorithm));
            }
        }
    }
    cells
        .par_iter()
        .map(|(tag, seed, instance, variant, algorithm)| {
            run_cell(instance, tag, *seed, *variant, *algorithm, settings, freeze_times)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

// ---------------------------------------------------------------------------
// Aggregation

/// Mean gap per (class, variant, algorithm) over successful runs; the shape
/// of the headline comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub class: String,
    pub variant: String,
    pub algorithm: String,
    pub mean_gap: f64,
    pub runs: usize,
    pub failed: usize,
}

pub fn aggregate(records: &[RunRecord], class_of: &BTreeMap<String, String>) -> Vec<AggregateRow> {
    let mut buckets: BTreeMap<(String, String, String), (f64, usize, usize)> = BTreeMap::new();
    for r in records {
        let class = class_of.get(&r.instance).cloned().unwrap_or_else(|| r.instance.clone());
        let entry = buckets.entry((class, r.variant.clone(), r.algorithm.clone())).or_default();
        if r.is_ok() {
            entry.0 += r.gap;
            entry.1 += 1;
        } else {
            entry.2 += 1;
        }
    }
    buckets
        .into_iter()
        .map(|((class, variant, algorithm), (sum, ok, failed))| AggregateRow {
            class,
            variant,
            algorithm,
            mean_gap: if ok > 0 { sum / ok as f64 } else { 0.0 },
            runs: ok,
            failed,
        })
        .collect()
}

/// Mean gap and profit per budget point: the budget-curve panels.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub class: String,
    pub variant: String,
    pub algorithm: String,
    pub budget: f64,
    pub mean_gap: f64,
    pub mean_profit: f64,
    pub runs: usize,
}

pub fn budget_curves(
    records: &[RunRecord],
    class_of: &BTreeMap<String, String>,
) -> Vec<CurvePoint> {
    // Budgets index a BTreeMap through their bit pattern; all sweep values
    // are finite positives, for which the float order and the bit order
    // agree.
    let mut buckets: BTreeMap<(String, String, String, u64), (f64, f64, f64, usize)> =
        BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let class = class_of.get(&r.instance).cloned().unwrap_or_else(|| r.instance.clone());
        let key = (class, r.variant.clone(), r.algorithm.clone(), r.budget.to_bits());
        let entry = buckets.entry(key).or_default();
        entry.0 += r.gap;
        entry.1 += r.profit;
        entry.2 = r.budget;
        entry.3 += 1;
    }
    buckets
        .into_iter()
        .map(|((class, variant, algorithm, _), (gap_sum, profit_sum, budget, n))| CurvePoint {
            class,
            variant,
            algorithm,
            budget,
            mean_gap: gap_sum / n as f64,
            mean_profit: profit_sum / n as f64,
            runs: n,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV output

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Generation manifests

/// One generated instance file, as listed in `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub nodes: usize,
    pub commodities: usize,
    /// Undirected links; the network has twice as many arcs.
    pub links: usize,
    pub budget: f64,
    pub fine: f64,
}
