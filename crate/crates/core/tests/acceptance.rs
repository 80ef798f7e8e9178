//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rflp::bench::{self, BenchOutcome, BenchmarkPlan, PlanInstance, SolverKind, SolverSpec};
use rflp::eamls::{run_eamls_observed, EamlsConfig};
use rflp::instgen::{generate_instance, GenParams};
use rflp::model::{allocation_objective, AllocationTable};
use rflp::oracle::{brute_force_optimum, independent_evaluate};
use rflp::report::RunReport;
use rflp::stats::{wilcoxon_signed_rank, PValueMethod};
use rflp::{seed, Genotype, Instance, ModelConfig, Problem};

const REL_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    generate_instance(&GenParams::new(n, rng.gen())).unwrap()
}

fn random_feasible(rng: &mut ChaCha8Rng, n: usize, min_open: usize, max_open: usize) -> Genotype {
    loop {
        let k = rng.gen_range(min_open..=max_open.min(n));
        let mut sites: Vec<usize> = (0..n).collect();
        for a in 0..k {
            let b = rng.gen_range(a..n);
            sites.swap(a, b);
        }
        let mut g = Genotype::zeros(n);
        for &j in &sites[..k] {
            g.set(j, true);
        }
        if g.count_ones() >= min_open {
            return g;
        }
    }
}

fn tiny3() -> Instance {
    Instance::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![100, 0, 200],
        vec![500, 600, 700],
        0.05,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------

fn c1_evaluation_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(3..=12);
        let inst = random_instance(&mut rng, n);
        let model = if case % 2 == 0 {
            ModelConfig::selected_count()
        } else {
            ModelConfig::fixed_m(2)
        }
        .with_alpha(rng.gen_range(0.0..3.0));
        let g = random_feasible(&mut rng, n, 2, n);
        let fast = Problem::new(inst.clone(), model).unwrap().objective(&g).unwrap();
        let slow = independent_evaluate(&g, &inst, &model).unwrap();
        let dev = (fast - slow).abs() / slow.abs();
        worst = worst.max(dev);
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < REL_TOL, format!("max relative deviation {worst:e}"))?;
    check(secs < 10.0, format!("took {secs:.2}s"))?;
    Ok(format!("1000 pairs, max rel deviation {worst:.2e}, {secs:.2}s"))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn c2_allocation_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared = 0u64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=10);
        let inst = random_instance(&mut rng, n);
        let alpha = rng.gen_range(0.1..3.0);
        let model = ModelConfig::selected_count().with_alpha(alpha);
        let problem = Problem::new(inst.clone(), model).unwrap();
        let g = random_feasible(&mut rng, n, 2, 6);
        let sorted = problem.objective(&g).unwrap();
        let base = problem.decode(&g).unwrap();
        let open: Vec<usize> = g.ones().collect();
        let perms = permutations(&open);
        for i in 0..n {
            for perm in &perms {
                let mut alloc: AllocationTable = base.clone();
                alloc.assign[i] = perm.clone();
                let other = allocation_objective(&inst, &g, &alloc, alpha);
                compared += 1;
                if sorted > other + REL_TOL * other {
                    return Err(format!(
                        "genotype {g}: sorted {sorted} > permuted {other} for customer {i}"
                    ));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("took {secs:.2}s"))?;
    Ok(format!("200 genotypes, {compared} permuted allocations, {secs:.2}s"))
}

fn c3_oracle_regression() -> Outcome {
    let r = brute_force_optimum(&tiny3(), &ModelConfig::selected_count(), 20).unwrap();
    check(
        r.optimum_genotype.to_string() == "101",
        format!("optimum {}", r.optimum_genotype),
    )?;
    check(
        (r.optimum_objective - 1214.25).abs() <= 1e-9,
        format!("objective {}", r.optimum_objective),
    )?;
    Ok(format!("X={} objective {}", r.optimum_genotype, r.optimum_objective))
}

// Shared benchmark runs for criteria 4-7 and 11.

struct Runs {
    ten_m2: BenchOutcome,
    ten_msum: BenchOutcome,
    fifty_msum: BenchOutcome,
}

fn instances(n: usize, base: u64) -> Vec<PlanInstance> {
    (0..8)
        .map(|k| PlanInstance {
            id: format!("{n}-{}", k + 1),
            instance: generate_instance(&GenParams::new(n, seed::instance_seed(base, k))).unwrap(),
        })
        .collect()
}

fn plan(
    insts: Vec<PlanInstance>,
    kinds: &[SolverKind],
    model: ModelConfig,
    runs: usize,
) -> BenchmarkPlan {
    BenchmarkPlan {
        instances: insts,
        solvers: kinds.iter().map(|&k| SolverSpec::new(k)).collect(),
        model,
        runs,
        base_seed: 1,
        oracle_limit: 20,
        reference: None,
    }
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        use SolverKind::*;
        let all = [Ga, Eamls, Oracle];
        Runs {
            ten_m2: bench::run_plan(&plan(instances(10, 10), &all, ModelConfig::fixed_m(2), 30))
                .unwrap(),
            ten_msum: bench::run_plan(&plan(
                instances(10, 10),
                &all,
                ModelConfig::selected_count(),
                30,
            ))
            .unwrap(),
            fifty_msum: bench::run_plan(&plan(
                instances(50, 50),
                &[Ga, Eamls],
                ModelConfig::selected_count(),
                10,
            ))
            .unwrap(),
        }
    })
}

fn aggregate_or(outcome: &BenchOutcome, solver: &str) -> Result<f64, String> {
    let rows: Vec<_> = outcome.results.iter().filter(|r| r.solver == solver).collect();
    check(outcome.failures.is_empty(), format!("{} failed cells", outcome.failures.len()))?;
    check(rows.len() == 240, format!("{} runs of {solver}", rows.len()))?;
    let hits = rows
        .iter()
        .map(|r| r.is_optimal.ok_or("missing oracle flag".to_string()))
        .collect::<Result<Vec<bool>, _>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(hits as f64 / rows.len() as f64)
}

fn c4_optimal_rate_m2() -> Outcome {
    let r = &runs().ten_m2;
    let ea = aggregate_or(r, "eamls")?;
    let ga = aggregate_or(r, "ga")?;
    check(ea >= 0.95, format!("EAMLS OR {ea:.3} < 0.95"))?;
    check(ga >= 0.90, format!("GA OR {ga:.3} < 0.90"))?;
    Ok(format!("8x30 runs: EAMLS OR {ea:.3}, GA OR {ga:.3}"))
}

fn c5_optimal_rate_msum() -> Outcome {
    let r = &runs().ten_msum;
    let ea = aggregate_or(r, "eamls")?;
    check(ea >= 0.95, format!("EAMLS OR {ea:.3} < 0.95"))?;
    let ga = aggregate_or(r, "ga")?;
    Ok(format!("8x30 runs: EAMLS OR {ea:.3} (GA {ga:.3})"))
}

fn aov_by_instance(outcome: &BenchOutcome, solver: &str) -> BTreeMap<String, f64> {
    outcome
        .summary
        .iter()
        .filter(|s| s.solver == solver && s.instance_id != "ALL")
        .map(|s| (s.instance_id.clone(), s.aov.unwrap()))
        .collect()
}

fn c6_eamls_vs_ga_50() -> Outcome {
    let r = &runs().fifty_msum;
    check(r.failures.is_empty(), "failed cells")?;
    let ea = aov_by_instance(r, "eamls");
    let ga = aov_by_instance(r, "ga");
    check(ea.len() == 8 && ga.len() == 8, "missing instances")?;
    let mut lower = 0;
    let mut gaps = Vec::new();
    for (id, &e) in &ea {
        let g = ga[id];
        check(e <= g * 1.01, format!("{id}: EAMLS {e:.2} more than 1% above GA {g:.2}"))?;
        if e < g {
            lower += 1;
        }
        gaps.push(format!("{:+.2}%", (g - e) / e * 100.0));
    }
    check(lower >= 5, format!("EAMLS strictly lower on {lower}/8"))?;
    Ok(format!("EAMLS lower on {lower}/8; GA gaps {}", gaps.join(" ")))
}

fn eamls_reports() -> Vec<&'static RunReport> {
    let r = runs();
    [&r.ten_m2, &r.ten_msum, &r.fifty_msum]
        .into_iter()
        .flat_map(|o| o.cells.iter())
        .filter(|c| c.label == "eamls")
        .map(|c| c.report.as_ref().unwrap())
        .collect()
}

fn c7_algorithm_mechanics() -> Outcome {
    let reports = eamls_reports();
    let mut growths = 0;
    for rep in &reports {
        let step = rep.config["pop_step"].as_u64().unwrap() as usize;
        let beta = rep.config["l3_threshold"].as_f64().unwrap();
        for t in &rep.trace {
            let l3 = t.l3_value.ok_or("trace entry without l3")?;
            check((0.0..=1.0).contains(&l3), format!("l3 {l3} out of range"))?;
        }
        for w in rep.trace.windows(2) {
            let grew = w[0].l3_value.unwrap() > beta;
            let want = w[0].mu + if grew { step } else { 0 };
            check(
                w[1].mu == want,
                format!("seed {}: mu {} -> {} (l3 {:?})", rep.seed, w[0].mu, w[1].mu, w[0].l3_value),
            )?;
            if grew {
                growths += 1;
            }
            check(
                w[1].best_objective <= w[0].best_objective,
                format!("seed {}: best objective increased", rep.seed),
            )?;
        }
    }
    Ok(format!("{} EAMLS traces, {growths} population growths", reports.len()))
}

fn c8_mls_memory() -> Outcome {
    let mut expansions = 0usize;
    let mut outputs = 0usize;
    for (k, n) in [8usize, 12, 16, 20].into_iter().enumerate() {
        for model in [ModelConfig::selected_count(), ModelConfig::fixed_m(2)] {
            let inst = generate_instance(&GenParams::new(n, 100 + k as u64)).unwrap();
            let problem = Problem::new(inst, model).unwrap();
            let cfg = EamlsConfig::new(15, 10, model, 7 + k as u64);
            let mut sources = HashSet::new();
            let mut failure: Option<String> = None;
            run_eamls_observed(&problem, &cfg, &mut |e| {
                expansions += 1;
                if !sources.insert(e.source.clone()) {
                    failure.get_or_insert(format!("{} expanded twice", e.source));
                }
                if e.flips.len() != e.source.len()
                    || e.flips.iter().any(|f| f.hamming(e.source) != 1)
                {
                    failure.get_or_insert(format!("bad raw neighbourhood of {}", e.source));
                }
                for nb in e.neighbors {
                    outputs += 1;
                    let ok = e
                        .flips
                        .iter()
                        .any(|f| f.is_subset_of(nb) && problem.repair(f) == *nb);
                    if !ok {
                        failure.get_or_insert(format!("{nb} is not a repaired flip of {}", e.source));
                    }
                }
            })
            .unwrap();
            if let Some(f) = failure {
                return Err(f);
            }
        }
    }
    Ok(format!("{expansions} expansions, {outputs} neighbours checked"))
}

fn rflp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rflp"))
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{cmd:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn strip_timing(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn csv_without(path: &Path, column: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let skip = headers.iter().position(|h| h == column);
    let mut rows = vec![headers.iter().map(String::from).collect::<Vec<_>>()];
    for rec in r.records() {
        rows.push(
            rec.unwrap()
                .iter()
                .enumerate()
                .filter(|(k, _)| Some(*k) != skip)
                .map(|(_, s)| s.to_string())
                .collect(),
        );
    }
    rows
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let d = |p: &str| d.join(p);
    run_ok(rflp().args(["gen", "--n", "12", "--count", "2", "--seed", "3", "--out"]).arg(d("i")))?;
    run_ok(rflp().args(["gen", "--n", "12", "--count", "2", "--seed", "3", "--out"]).arg(d("j")))?;
    for f in ["n12-1.json", "n12-2.json"] {
        let a = std::fs::read(d("i").join(f)).unwrap();
        let b = std::fs::read(d("j").join(f)).unwrap();
        check(a == b, format!("gen output {f} differs"))?;
    }

    let inst = d("i").join("n12-1.json");
    for (solver, model) in [("eamls", "msum"), ("ga", "m2"), ("oracle", "msum")] {
        let solve = || {
            run_ok(
                rflp()
                    .args(["solve", "--solver", solver, "--model", model, "--seed", "11", "--instance"])
                    .arg(&inst),
            )
        };
        let (a, b) = (solve()?, solve()?);
        check(
            strip_timing(&a) == strip_timing(&b),
            format!("solve {solver}/{model} differs between runs"),
        )?;
    }

    for out in ["b1", "b2"] {
        run_ok(
            rflp()
                .args(["bench", "--solver", "ga", "--solver", "eamls", "--solver", "oracle"])
                .args(["--model", "msum", "--runs", "3", "--seed", "5", "--emit-trace", "--instance"])
                .arg(d("i").join("n12-1.json"))
                .arg("--instance")
                .arg(d("i").join("n12-2.json"))
                .arg("--out")
                .arg(d(out)),
        )?;
    }
    check(
        csv_without(&d("b1").join("results.csv"), "time_ms")
            == csv_without(&d("b2").join("results.csv"), "time_ms"),
        "bench results differ",
    )?;
    let mut traces = 0;
    for entry in std::fs::read_dir(d("b1").join("traces")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read_to_string(d("b1").join("traces").join(&name)).unwrap();
        let b = std::fs::read_to_string(d("b2").join("traces").join(&name)).unwrap();
        check(strip_timing(&a) == strip_timing(&b), format!("trace {name:?} differs"))?;
        traces += 1;
    }
    Ok(format!("gen, 3 solve configs, bench with {traces} traces reproduced"))
}

fn brute_force_p(x: &[f64], y: &[f64]) -> Option<f64> {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return None;
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let less = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let total: f64 = ranks.iter().sum();
    let w = w_plus.min(total - w_plus);
    let mut at_most = 0u64;
    for mask in 0u64..1 << n {
        let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if s <= w + 1e-9 {
            at_most += 1;
        }
    }
    Some((2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0))
}

fn c10_wilcoxon() -> Outcome {
    let fixture = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    check(
        (fixture.p_value - 0.25).abs() < 1e-12 && fixture.statistic == 0.0,
        format!("fixture p {} W {}", fixture.p_value, fixture.statistic),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=10);
        // Small integer values force zero differences and ties.
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
        let got = wilcoxon_signed_rank(&x, &y).unwrap();
        match brute_force_p(&x, &y) {
            None => check(got.p_value == 1.0, "all-zero case p != 1")?,
            Some(p) => {
                check(got.method == PValueMethod::Exact, "exact method not used")?;
                worst = worst.max((got.p_value - p).abs());
            }
        }
    }
    check(worst < 1e-12, format!("max |p - brute force| = {worst:e}"))?;
    Ok(format!("fixture p = 0.25; 500 random cases, max deviation {worst:.1e}"))
}

fn c11_fe_parity() -> Outcome {
    let r = &runs().fifty_msum;
    let evals = |solver: &str| -> Vec<u64> {
        r.results.iter().filter(|x| x.solver == solver).map(|x| x.evals).collect()
    };
    let ga = evals("ga");
    let ea = evals("eamls");
    check(!ga.is_empty() && !ea.is_empty(), "no FE records")?;
    let ga_min = *ga.iter().min().unwrap();
    let ea_max = *ea.iter().max().unwrap();
    check(ga_min >= ea_max, format!("GA min FEs {ga_min} < EAMLS max FEs {ea_max}"))?;
    Ok(format!("GA FEs >= {ga_min}, EAMLS FEs <= {ea_max}"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 evaluation correctness", c1_evaluation_correctness),
        ("2 allocation optimality", c2_allocation_optimality),
        ("3 oracle regression", c3_oracle_regression),
        ("4 optimal rate, m=2, 10-node", c4_optimal_rate_m2),
        ("5 optimal rate, m=sum, 10-node", c5_optimal_rate_msum),
        ("6 EAMLS vs GA, m=sum, 50-node", c6_eamls_vs_ga_50),
        ("7 EAMLS trace mechanics", c7_algorithm_mechanics),
        ("8 MLS memory", c8_mls_memory),
        ("9 determinism", c9_determinism),
        ("10 Wilcoxon exact p-values", c10_wilcoxon),
        ("11 FE budget parity, 50-node", c11_fe_parity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
