use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rflp::bench::{
    self, parse_model, BenchmarkPlan, PlanFile, PlanInstance, SolverKind, SolverSpec,
};
use rflp::error::{Error, Result};
use rflp::instgen::{self, GenParams, Metadata};
use rflp::oracle;
use rflp::report::RunReport;
use rflp::seed;
use rflp::Problem;

#[derive(Debug, Parser)]
#[command(name = "rflp", version, about = "Reliable facility location solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate seeded random instances.
    Gen(GenArgs),
    /// Solve one instance and emit a JSON run report.
    Solve(SolveArgs),
    /// Run every (instance, solver, run) cell and write CSV results.
    Bench(BenchArgs),
    /// Recompute the summary table from a results CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    failure_prob: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// `m2` (two levels per customer) or `msum` (all opened sites).
    #[arg(long, default_value = "msum")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct SolverParamArgs {
    /// Override the scale-based generation count.
    #[arg(long)]
    generations: Option<usize>,
    /// Override the scale-based (initial) population size.
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    crossover_rate: Option<f64>,
    #[arg(long)]
    ls_count: Option<usize>,
    #[arg(long)]
    l3_threshold: Option<f64>,
    #[arg(long)]
    pop_step: Option<usize>,
}

impl SolverParamArgs {
    fn spec(&self, kind: SolverKind) -> SolverSpec {
        SolverSpec {
            kind: Some(kind),
            label: None,
            generations: self.generations,
            pop_size: self.pop_size,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            ls_count: self.ls_count,
            l3_threshold: self.l3_threshold,
            pop_step: self.pop_step,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance file (`-` for standard input).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solver: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = oracle::DEFAULT_LIMIT)]
    oracle_limit: usize,
    #[command(flatten)]
    params: SolverParamArgs,
    /// Report file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print one progress line per generation to standard error.
    #[arg(long)]
    emit_trace: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSON plan file; replaces --instance/--solver/--model/--runs/--seed.
    #[arg(long, conflicts_with_all = ["instance", "solver"])]
    plan: Option<PathBuf>,
    /// Instance file; repeatable.
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Solver (ga, eamls, oracle); repeatable.
    #[arg(long)]
    solver: Vec<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = oracle::DEFAULT_LIMIT)]
    oracle_limit: usize,
    /// Solver label used as the Gap / Wilcoxon reference.
    #[arg(long)]
    reference: Option<String>,
    #[command(flatten)]
    params: SolverParamArgs,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Write one JSON run report per cell under <out>/traces.
    #[arg(long)]
    emit_trace: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// A results.csv produced by `bench`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "eamls")]
    reference: String,
    /// Summary file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::Usage("--count must be at least 1".into()));
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let width = args.count.to_string().len();
    for k in 0..args.count {
        let mut params = GenParams::new(args.n, seed::instance_seed(args.seed, k));
        params.failure_prob = args.failure_prob;
        let instance = instgen::generate_instance(&params)?;
        let name = format!("n{}-{:0width$}", args.n, k + 1);
        let meta = Metadata {
            name: Some(name.clone()),
            seed: Some(params.seed),
            generator: Some(params.clone()),
        };
        let path = args.out.join(format!("{name}.json"));
        instgen::write_instance(&instance, Some(&meta), &path)?;
        println!("{}\t{}", path.display(), params.seed);
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: String,
    model: String,
    #[serde(flatten)]
    report: &'a RunReport,
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let kind: SolverKind = args.solver.parse()?;
    let model = parse_model(&args.model.model, args.model.alpha)?;
    let instance = instgen::read_instance(&args.instance)?;
    let problem = Problem::new(instance, model)?;
    let report = args
        .params
        .spec(kind)
        .run(&problem, args.seed, args.oracle_limit)?;

    if args.emit_trace {
        for t in &report.trace {
            eprintln!(
                "gen {:>5}  best {:.6}  mean {:.6}  pop {:>5}  mu {:>5}  evals {:>9}  l3 {}",
                t.generation,
                t.best_objective,
                t.mean_objective,
                t.pop_size,
                t.mu,
                t.evaluations,
                t.l3_value.map_or("-".to_string(), |v| format!("{v:.4}")),
            );
        }
    }

    let out = SolveOutput {
        instance: args.instance.display().to_string(),
        model: bench::model_name(&model),
        report: &report,
    };
    let text = serde_json::to_string_pretty(&out)? + "\n";
    write_or_print(args.out.as_deref(), &text)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let plan = match &args.plan {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let file: PlanFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
                source_name: path.display().to_string(),
                message: e.to_string(),
            })?;
            BenchmarkPlan::from_file(&file)?
        }
        None => {
            let instances = args
                .instance
                .iter()
                .map(|p| PlanInstance::load(&bench::InstanceSource::Path { path: p.clone() }))
                .collect::<Result<Vec<_>>>()?;
            let solvers = args
                .solver
                .iter()
                .map(|s| s.parse().map(|k| args.params.spec(k)))
                .collect::<Result<Vec<_>>>()?;
            BenchmarkPlan {
                instances,
                solvers,
                model: parse_model(&args.model.model, args.model.alpha)?,
                runs: args.runs,
                base_seed: args.seed,
                oracle_limit: args.oracle_limit,
                reference: args.reference.clone(),
            }
        }
    };
    let outcome = bench::run_plan(&plan)?;
    bench::write_outcome(&args.out, &plan, &outcome, args.emit_trace)?;
    eprintln!(
        "{} cells ok, {} failed; results in {}",
        outcome.results.len(),
        outcome.failures.len(),
        args.out.display()
    );
    for s in outcome.summary.iter().filter(|s| s.instance_id == "ALL") {
        eprintln!(
            "{:<10} AOV {}  Gap {}  OR {}",
            s.solver,
            s.aov.map_or("-".into(), |v| format!("{v:.2}")),
            s.gap_pct.map_or("-".into(), |v| format!("{v:.2}%")),
            s.optimal_rate.map_or("-".into(), |v| format!("{v:.2}")),
        );
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let rows = bench::read_results(&args.results)?;
    let expected = bench::expected_from_rows(&rows);
    let summary = bench::summarize(&rows, &expected, &args.reference);
    match &args.out {
        Some(path) => bench::write_summary(path, &summary),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for s in &summary {
                w.serialize(s)?;
            }
            w.flush().map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
