//! Benchmark harness: runs every (instance, solver, run) cell of a plan and
//! summarises the results.
//!
//! Raw results go to `results.csv` with the columns
//! `instance_id, solver, model, run, seed, best_objective, time_ms, evals, is_optimal`
//! (`is_optimal` is empty when no oracle ran for the instance). Failed cells go
//! to `failures.csv`. The per-(instance, solver) summary in `summary.csv` holds
//! AOV, Gap against the reference solver, Optimal Rate, mean time and evaluations,
//! and a paired Wilcoxon signed-rank test against the reference; rows with
//! `instance_id = ALL` aggregate over instances.
//!
//! Everything except `time_ms` is a function of the plan and its base seed.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eamls::{run_eamls_observed, EamlsConfig};
use crate::error::{Error, Result};
use crate::evolve::{run_ga_on, GaConfig};
use crate::instgen::{generate_instance, read_instance, GenParams};
use crate::model::{AllocationRule, Instance, ModelConfig, Problem};
use crate::oracle::{self, brute_force_on, ExactResult};
use crate::report::{RunReport, Timing};
use crate::seed;
use crate::stats::{gap_percent, mean, wilcoxon_signed_rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Ga,
    Eamls,
    Oracle,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ga => "ga",
            SolverKind::Eamls => "eamls",
            SolverKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ga" => Ok(SolverKind::Ga),
            "eamls" => Ok(SolverKind::Eamls),
            "oracle" => Ok(SolverKind::Oracle),
            other => Err(Error::usage(format!(
                "unknown solver {other:?} (expected ga, eamls or oracle)"
            ))),
        }
    }
}

/// Short model name used in CLI flags and CSV files.
pub fn model_name(config: &ModelConfig) -> String {
    match config.allocation {
        AllocationRule::FixedM(2) => "m2".into(),
        AllocationRule::FixedM(k) => format!("m{k}"),
        AllocationRule::SelectedCount => "msum".into(),
    }
}

pub fn parse_model(name: &str, alpha: f64) -> Result<ModelConfig> {
    let allocation = match name {
        "msum" => AllocationRule::SelectedCount,
        other => match other.strip_prefix('m').and_then(|k| k.parse::<usize>().ok()) {
            Some(k) => AllocationRule::FixedM(k),
            None => {
                return Err(Error::usage(format!(
                    "unknown model {other:?} (expected m2 or msum)"
                )))
            }
        },
    };
    ModelConfig::new(alpha, allocation)
}

/// Generation counts and population sizes by instance scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScaleDefaults {
    pub scale: usize,
    pub ga_generations: usize,
    pub ga_pop_size: usize,
    pub eamls_generations: usize,
    pub eamls_pop_size: usize,
}

const SCALES: [ScaleDefaults; 4] = [
    ScaleDefaults { scale: 10, ga_generations: 60, ga_pop_size: 30, eamls_generations: 10, eamls_pop_size: 20 },
    ScaleDefaults { scale: 50, ga_generations: 200, ga_pop_size: 200, eamls_generations: 20, eamls_pop_size: 20 },
    ScaleDefaults { scale: 100, ga_generations: 400, ga_pop_size: 200, eamls_generations: 50, eamls_pop_size: 100 },
    ScaleDefaults { scale: 600, ga_generations: 4600, ga_pop_size: 200, eamls_generations: 250, eamls_pop_size: 200 },
];

/// Row for the smallest tabulated scale that is at least `n` (the largest
/// row beyond 600 nodes).
pub fn scale_defaults(n: usize) -> ScaleDefaults {
    SCALES
        .iter()
        .copied()
        .find(|s| s.scale >= n)
        .unwrap_or(SCALES[SCALES.len() - 1])
}

/// One solver entry of a plan. Unset parameters take the scale defaults and
/// the standard rates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub kind: Option<SolverKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l3_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop_step: Option<usize>,
}

impl SolverSpec {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    pub fn kind(&self) -> Result<SolverKind> {
        self.kind
            .ok_or_else(|| Error::usage("solver entry without `kind`"))
    }

    pub fn ga_config(&self, n: usize, model: ModelConfig, seed: u64) -> GaConfig {
        let d = scale_defaults(n);
        let mut cfg = GaConfig::new(
            self.generations.unwrap_or(d.ga_generations),
            self.pop_size.unwrap_or(d.ga_pop_size),
            model,
            seed,
        );
        if let Some(c) = self.crossover_rate {
            cfg.crossover_rate = c;
        }
        if let Some(m) = self.mutation_rate {
            cfg.mutation_rate = m;
        }
        cfg
    }

    pub fn eamls_config(&self, n: usize, model: ModelConfig, seed: u64) -> EamlsConfig {
        let d = scale_defaults(n);
        let mut cfg = EamlsConfig::new(
            self.generations.unwrap_or(d.eamls_generations),
            self.pop_size.unwrap_or(d.eamls_pop_size),
            model,
            seed,
        );
        if let Some(m) = self.mutation_rate {
            cfg.mutation_rate = m;
        }
        if let Some(k) = self.ls_count {
            cfg.ls_count = k;
        }
        if let Some(b) = self.l3_threshold {
            cfg.l3_threshold = b;
        }
        if let Some(p) = self.pop_step {
            cfg.pop_step = p;
        }
        cfg
    }

    /// Runs this solver once. The oracle ignores `seed` beyond echoing it.
    pub fn run(&self, problem: &Problem, seed: u64, oracle_limit: usize) -> Result<RunReport> {
        let n = problem.n();
        let model = *problem.config();
        match self.kind()? {
            SolverKind::Ga => run_ga_on(problem, &self.ga_config(n, model, seed)),
            SolverKind::Eamls => {
                run_eamls_observed(problem, &self.eamls_config(n, model, seed), &mut |_| {})
            }
            SolverKind::Oracle => {
                if n > oracle_limit {
                    return Err(Error::OracleLimit { n, limit: oracle_limit });
                }
                let start = Instant::now();
                let exact = brute_force_on(problem)?;
                Ok(oracle_report(problem, &exact, seed, oracle_limit, start))
            }
        }
    }
}

fn oracle_report(
    problem: &Problem,
    exact: &ExactResult,
    seed: u64,
    limit: usize,
    start: Instant,
) -> RunReport {
    RunReport {
        solver: "oracle".into(),
        seed,
        best_genotype: exact.optimum_genotype.clone(),
        best_objective: exact.optimum_objective,
        m: problem
            .config()
            .levels(exact.optimum_genotype.count_ones()),
        evaluations: exact.num_enumerated,
        trace: Vec::new(),
        config: serde_json::json!({ "model": problem.config(), "limit": limit }),
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            generation_ms: Vec::new(),
        },
    }
}

/// Where a plan's instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path { path: PathBuf },
    Generate { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanInstance {
    pub id: String,
    pub instance: Instance,
}

impl PlanInstance {
    pub fn load(source: &InstanceSource) -> Result<Self> {
        match source {
            InstanceSource::Path { path } => Ok(Self {
                id: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                instance: read_instance(path)?,
            }),
            InstanceSource::Generate { n, seed } => Ok(Self {
                id: format!("gen-n{n}-s{seed}"),
                instance: generate_instance(&GenParams::new(*n, *seed))?,
            }),
        }
    }
}

fn default_runs() -> usize {
    30
}

fn default_alpha() -> f64 {
    1.0
}

fn default_oracle_limit() -> usize {
    oracle::DEFAULT_LIMIT
}

/// Plan file (JSON). Only `instances` and `solvers` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub instances: Vec<InstanceSource>,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_oracle_limit")]
    pub oracle_limit: usize,
    #[serde(default)]
    pub reference: Option<String>,
}

fn default_model() -> String {
    "msum".into()
}

#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    pub instances: Vec<PlanInstance>,
    pub solvers: Vec<SolverSpec>,
    pub model: ModelConfig,
    pub runs: usize,
    pub base_seed: u64,
    pub oracle_limit: usize,
    /// Label of the Gap / Wilcoxon reference; `eamls` when present, else the
    /// first solver.
    pub reference: Option<String>,
}

impl BenchmarkPlan {
    pub fn from_file(file: &PlanFile) -> Result<Self> {
        let instances = file
            .instances
            .iter()
            .map(PlanInstance::load)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            instances,
            solvers: file.solvers.clone(),
            model: parse_model(&file.model, file.alpha)?,
            runs: file.runs,
            base_seed: file.seed,
            oracle_limit: file.oracle_limit,
            reference: file.reference.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::usage("benchmark plan lists no instances"));
        }
        if self.solvers.is_empty() {
            return Err(Error::usage("benchmark plan lists no solvers"));
        }
        if self.runs == 0 {
            return Err(Error::usage("runs must be at least 1"));
        }
        for s in &self.solvers {
            s.kind()?;
        }
        let mut ids = std::collections::HashSet::new();
        for inst in &self.instances {
            if !ids.insert(&inst.id) {
                return Err(Error::usage(format!("duplicate instance id {:?}", inst.id)));
            }
        }
        self.model.validate()
    }

    /// Unique display label per solver entry: its own label, else the kind
    /// name, with `#2`, `#3`, ... appended to repeats.
    pub fn labels(&self) -> Vec<String> {
        let mut seen: HashMap<String, usize> = HashMap::new();
        self.solvers
            .iter()
            .map(|s| {
                let base = s
                    .label
                    .clone()
                    .unwrap_or_else(|| s.kind.map_or("?", SolverKind::name).to_string());
                let k = seen.entry(base.clone()).or_insert(0);
                *k += 1;
                if *k == 1 {
                    base
                } else {
                    format!("{base}#{k}")
                }
            })
            .collect()
    }

    pub fn reference_label(&self) -> String {
        let labels = self.labels();
        if let Some(r) = &self.reference {
            return r.clone();
        }
        labels
            .iter()
            .zip(&self.solvers)
            .find(|(_, s)| s.kind == Some(SolverKind::Eamls))
            .map(|(l, _)| l.clone())
            .unwrap_or_else(|| labels[0].clone())
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub solver: String,
    pub model: String,
    pub run: usize,
    pub seed: u64,
    pub best_objective: f64,
    pub time_ms: f64,
    pub evals: u64,
    pub is_optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub instance_id: String,
    pub solver: String,
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance_id: String,
    pub solver: String,
    pub model: String,
    pub runs: usize,
    pub missing: usize,
    pub aov: Option<f64>,
    pub best: Option<f64>,
    pub worst: Option<f64>,
    pub gap_pct: Option<f64>,
    pub optimal_rate: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub mean_evals: Option<f64>,
    pub wilcoxon_w: Option<f64>,
    pub wilcoxon_p: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub instance_id: String,
    pub label: String,
    pub run: usize,
    pub seed: u64,
    pub report: Result<RunReport, String>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub results: Vec<ResultRow>,
    pub failures: Vec<FailureRow>,
    pub summary: Vec<SummaryRow>,
    pub cells: Vec<CellOutcome>,
    /// Oracle optimum per instance id, when the oracle was part of the plan.
    pub optima: BTreeMap<String, f64>,
}

/// Executes every cell of the plan. Cells run in parallel; each cell's seed
/// depends only on the base seed, the instance position, the run index and
/// the solver kind.
pub fn run_plan(plan: &BenchmarkPlan) -> Result<BenchOutcome> {
    plan.validate()?;
    let labels = plan.labels();
    let model = model_name(&plan.model);

    let problems: Vec<Result<Problem, String>> = plan
        .instances
        .iter()
        .map(|pi| Problem::new(pi.instance.clone(), plan.model).map_err(|e| e.to_string()))
        .collect();

    struct Cell {
        inst: usize,
        solver: usize,
        run: usize,
        seed: u64,
    }
    let mut cells = Vec::new();
    for inst in 0..plan.instances.len() {
        for (solver, spec) in plan.solvers.iter().enumerate() {
            let kind = spec.kind()?;
            let runs = if kind == SolverKind::Oracle { 1 } else { plan.runs };
            for run in 0..runs {
                let seed = seed::cell_seed(plan.base_seed, inst, run, kind.name());
                cells.push(Cell { inst, solver, run, seed });
            }
        }
    }

    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|c| {
            let report = match &problems[c.inst] {
                Ok(problem) => plan.solvers[c.solver]
                    .run(problem, c.seed, plan.oracle_limit)
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            CellOutcome {
                instance_id: plan.instances[c.inst].id.clone(),
                label: labels[c.solver].clone(),
                run: c.run,
                seed: c.seed,
                report,
            }
        })
        .collect();

    let mut optima = BTreeMap::new();
    for (c, cell) in cells.iter().zip(&outcomes) {
        if plan.solvers[c.solver].kind == Some(SolverKind::Oracle) {
            if let Ok(r) = &cell.report {
                optima.insert(cell.instance_id.clone(), r.best_objective);
            }
        }
    }

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for cell in &outcomes {
        match &cell.report {
            Ok(r) => results.push(ResultRow {
                instance_id: cell.instance_id.clone(),
                solver: cell.label.clone(),
                model: model.clone(),
                run: cell.run,
                seed: cell.seed,
                best_objective: r.best_objective,
                time_ms: (r.timing.total_ms * 1e3).round() / 1e3,
                evals: r.evaluations,
                is_optimal: optima
                    .get(&cell.instance_id)
                    .map(|&opt| oracle::is_optimal(r.best_objective, opt)),
            }),
            Err(e) => failures.push(FailureRow {
                instance_id: cell.instance_id.clone(),
                solver: cell.label.clone(),
                run: cell.run,
                seed: cell.seed,
                error: e.clone(),
            }),
        }
    }

    let expected = expected_cells(plan, &labels);
    let summary = summarize(&results, &expected, &plan.reference_label());
    Ok(BenchOutcome {
        results,
        failures,
        summary,
        cells: outcomes,
        optima,
    })
}

/// Expected run count per (instance id, solver label), in plan order.
pub type ExpectedCells = Vec<(String, String, usize)>;

fn expected_cells(plan: &BenchmarkPlan, labels: &[String]) -> ExpectedCells {
    let mut out = Vec::new();
    for inst in &plan.instances {
        for (spec, label) in plan.solvers.iter().zip(labels) {
            let runs = if spec.kind == Some(SolverKind::Oracle) { 1 } else { plan.runs };
            out.push((inst.id.clone(), label.clone(), runs));
        }
    }
    out
}

/// Expected cells reconstructed from the rows themselves (used by `stats`,
/// where the plan is not available): every (instance, solver) pair seen, with
/// the largest run index seen plus one.
pub fn expected_from_rows(rows: &[ResultRow]) -> ExpectedCells {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(i, s, _)| *i == r.instance_id && *s == r.solver)
        {
            Some(e) => e.2 = e.2.max(r.run + 1),
            None => out.push((r.instance_id.clone(), r.solver.clone(), r.run + 1)),
        }
    }
    out
}

/// Per-(instance, solver) statistics plus one `ALL` row per solver.
pub fn summarize(rows: &[ResultRow], expected: &ExpectedCells, reference: &str) -> Vec<SummaryRow> {
    let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
    let runs_of = |inst: &str, solver: &str| -> Vec<&ResultRow> {
        let mut v: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.instance_id == inst && r.solver == solver)
            .collect();
        v.sort_by_key(|r| r.run);
        v
    };

    let mut summary = Vec::new();
    let mut solver_order: Vec<String> = Vec::new();
    let mut instance_order: Vec<String> = Vec::new();
    for (inst, solver, _) in expected {
        if !solver_order.contains(solver) {
            solver_order.push(solver.clone());
        }
        if !instance_order.contains(inst) {
            instance_order.push(inst.clone());
        }
    }

    // Per-instance AOVs, for the aggregate rows.
    let mut aovs: HashMap<(String, String), f64> = HashMap::new();

    for (inst, solver, expected_runs) in expected {
        let mine = runs_of(inst, solver);
        let refs = runs_of(inst, reference);
        let objectives: Vec<f64> = mine.iter().map(|r| r.best_objective).collect();
        let aov = mean(&objectives);
        let ref_aov = mean(&refs.iter().map(|r| r.best_objective).collect::<Vec<_>>());
        if let Some(a) = aov {
            aovs.insert((inst.clone(), solver.clone()), a);
        }
        let flags: Vec<bool> = mine.iter().filter_map(|r| r.is_optimal).collect();
        let optimal_rate = if !mine.is_empty() && flags.len() == mine.len() {
            Some(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
        } else {
            None
        };
        let same_runs = !mine.is_empty()
            && mine.len() == refs.len()
            && mine.iter().zip(&refs).all(|(a, b)| a.run == b.run);
        let test = if same_runs {
            let x: Vec<f64> = mine.iter().map(|r| r.best_objective).collect();
            let y: Vec<f64> = refs.iter().map(|r| r.best_objective).collect();
            wilcoxon_signed_rank(&x, &y).ok()
        } else {
            None
        };
        summary.push(SummaryRow {
            instance_id: inst.clone(),
            solver: solver.clone(),
            model: model.clone(),
            runs: mine.len(),
            missing: expected_runs.saturating_sub(mine.len()),
            aov,
            best: objectives.iter().copied().reduce(f64::min),
            worst: objectives.iter().copied().reduce(f64::max),
            gap_pct: aov.zip(ref_aov).map(|(a, r)| gap_percent(a, r)),
            optimal_rate,
            mean_time_s: mean(&mine.iter().map(|r| r.time_ms / 1e3).collect::<Vec<_>>()),
            mean_evals: mean(&mine.iter().map(|r| r.evals as f64).collect::<Vec<_>>()),
            wilcoxon_w: test.as_ref().map(|t| t.statistic),
            wilcoxon_p: test.as_ref().map(|t| t.p_value),
            significant: test.as_ref().map(|t| t.significant()),
        });
    }

    for solver in &solver_order {
        let mine: Vec<&SummaryRow> = summary
            .iter()
            .filter(|s| &s.solver == solver)
            .collect();
        let runs: usize = mine.iter().map(|s| s.runs).sum();
        let missing: usize = mine.iter().map(|s| s.missing).sum();
        // Pair per-instance AOVs over instances where both solvers have results.
        let paired: Vec<(f64, f64)> = instance_order
            .iter()
            .filter_map(|i| {
                let a = aovs.get(&(i.clone(), solver.clone()))?;
                let r = aovs.get(&(i.clone(), reference.to_string()))?;
                Some((*a, *r))
            })
            .collect();
        let aov = mean(&paired.iter().map(|p| p.0).collect::<Vec<_>>());
        let ref_aov = mean(&paired.iter().map(|p| p.1).collect::<Vec<_>>());
        let test = if paired.is_empty() {
            None
        } else {
            let (x, y): (Vec<f64>, Vec<f64>) = paired.iter().copied().unzip();
            wilcoxon_signed_rank(&x, &y).ok()
        };
        let rated: Vec<&&SummaryRow> = mine.iter().filter(|s| s.optimal_rate.is_some()).collect();
        let optimal_rate = if !rated.is_empty() && rated.len() == mine.iter().filter(|s| s.runs > 0).count() {
            let hits: f64 = rated
                .iter()
                .map(|s| s.optimal_rate.unwrap() * s.runs as f64)
                .sum();
            let total: usize = rated.iter().map(|s| s.runs).sum();
            Some(hits / total as f64)
        } else {
            None
        };
        let weighted = |f: fn(&SummaryRow) -> Option<f64>| -> Option<f64> {
            let parts: Vec<(f64, usize)> = mine
                .iter()
                .filter_map(|s| f(s).map(|v| (v, s.runs)))
                .collect();
            let total: usize = parts.iter().map(|p| p.1).sum();
            (total > 0).then(|| parts.iter().map(|(v, k)| v * *k as f64).sum::<f64>() / total as f64)
        };
        summary.push(SummaryRow {
            instance_id: "ALL".into(),
            solver: solver.clone(),
            model: model.clone(),
            runs,
            missing,
            aov,
            best: mine.iter().filter_map(|s| s.best).reduce(f64::min),
            worst: mine.iter().filter_map(|s| s.worst).reduce(f64::max),
            gap_pct: aov.zip(ref_aov).map(|(a, r)| gap_percent(a, r)),
            optimal_rate,
            mean_time_s: weighted(|s| s.mean_time_s),
            mean_evals: weighted(|s| s.mean_evals),
            wilcoxon_w: test.as_ref().map(|t| t.statistic),
            wilcoxon_p: test.as_ref().map(|t| t.p_value),
            significant: test.as_ref().map(|t| t.significant()),
        });
    }
    summary
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], headers: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(headers)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const RESULT_COLUMNS: [&str; 9] = [
    "instance_id",
    "solver",
    "model",
    "run",
    "seed",
    "best_objective",
    "time_ms",
    "evals",
    "is_optimal",
];

const FAILURE_COLUMNS: [&str; 5] = ["instance_id", "solver", "run", "seed", "error"];

const SUMMARY_COLUMNS: [&str; 15] = [
    "instance_id",
    "solver",
    "model",
    "runs",
    "missing",
    "aov",
    "best",
    "worst",
    "gap_pct",
    "optimal_rate",
    "mean_time_s",
    "mean_evals",
    "wilcoxon_w",
    "wilcoxon_p",
    "significant",
];

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_csv(path, rows, &RESULT_COLUMNS)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(path, rows, &SUMMARY_COLUMNS)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

/// Writes `results.csv`, `summary.csv`, `failures.csv`, `plan.json` and, with
/// `emit_trace`, one JSON run report per cell under `traces/`.
pub fn write_outcome(
    out_dir: &Path,
    plan: &BenchmarkPlan,
    outcome: &BenchOutcome,
    emit_trace: bool,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_results(&out_dir.join("results.csv"), &outcome.results)?;
    write_summary(&out_dir.join("summary.csv"), &outcome.summary)?;
    write_csv(&out_dir.join("failures.csv"), &outcome.failures, &FAILURE_COLUMNS)?;

    let echo = serde_json::json!({
        "instances": plan.instances.iter().map(|i| &i.id).collect::<Vec<_>>(),
        "solvers": plan.solvers,
        "labels": plan.labels(),
        "model": plan.model,
        "runs": plan.runs,
        "base_seed": plan.base_seed,
        "oracle_limit": plan.oracle_limit,
        "reference": plan.reference_label(),
    });
    let plan_path = out_dir.join("plan.json");
    fs::write(&plan_path, serde_json::to_string_pretty(&echo)? + "\n")
        .map_err(|e| Error::io(&plan_path, e))?;

    if emit_trace {
        let dir = out_dir.join("traces");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for cell in &outcome.cells {
            if let Ok(report) = &cell.report {
                let name = format!(
                    "{}__{}__run{}.json",
                    cell.instance_id,
                    cell.label.replace('#', "_"),
                    cell.run
                );
                let path = dir.join(name);
                fs::write(&path, serde_json::to_string_pretty(report)? + "\n")
                    .map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}
