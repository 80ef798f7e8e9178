//! Variation and selection operators on binary genotypes, and the genetic
//! algorithm baseline built from them.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Genotype, Instance, ModelConfig, Problem};
use crate::report::{RunReport, TraceEntry, Timing};

pub type SolverRng = ChaCha8Rng;

/// An evaluated genotype. Fitness is the reciprocal of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub objective: f64,
}

impl Individual {
    pub fn fitness(&self) -> f64 {
        1.0 / self.objective
    }
}

const PAR_THRESHOLD: usize = 32;

/// Evaluates a batch, preserving input order. Large batches run on the rayon
/// pool; no random draws happen here.
pub(crate) fn evaluate_all(problem: &Problem, genotypes: Vec<Genotype>) -> Result<Vec<Individual>> {
    let eval = |genotype: Genotype| -> Result<Individual> {
        let objective = problem.objective(&genotype)?;
        Ok(Individual { genotype, objective })
    };
    if genotypes.len() >= PAR_THRESHOLD {
        genotypes.into_par_iter().map(eval).collect()
    } else {
        genotypes.into_iter().map(eval).collect()
    }
}

/// `mu` random genotypes with every bit an independent fair coin. Not repaired.
pub fn init_population(mu: usize, length: usize, rng: &mut impl Rng) -> Vec<Genotype> {
    (0..mu)
        .map(|_| {
            let bits: Vec<bool> = (0..length).map(|_| rng.gen::<bool>()).collect();
            Genotype::from_bools(&bits)
        })
        .collect()
}

/// Flips every bit independently with probability `rate`. Not repaired.
pub fn bitflip_mutation(genotype: &Genotype, rate: f64, rng: &mut impl Rng) -> Genotype {
    let mut child = genotype.clone();
    for j in 0..child.len() {
        if rng.gen_bool(rate) {
            child.flip(j);
        }
    }
    child
}

/// Children `a[..cut] + b[cut..]` and `b[..cut] + a[cut..]`.
pub fn splice(a: &Genotype, b: &Genotype, cut: usize) -> Result<(Genotype, Genotype)> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "crossover parents differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if cut > a.len() {
        return Err(Error::usage(format!("cut {cut} beyond length {}", a.len())));
    }
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for j in cut..a.len() {
        c1.set(j, b.get(j));
        c2.set(j, a.get(j));
    }
    Ok((c1, c2))
}

/// One-point crossover with the cut drawn uniformly from `1..len`.
pub fn one_point_crossover(
    a: &Genotype,
    b: &Genotype,
    rng: &mut impl Rng,
) -> Result<(Genotype, Genotype)> {
    if a.len() != b.len() {
        return splice(a, b, 0);
    }
    if a.len() < 2 {
        return Err(Error::usage("one-point crossover needs length >= 2"));
    }
    let cut = rng.gen_range(1..a.len());
    splice(a, b, cut)
}

/// Fitness-proportional selection; returns the chosen index.
pub fn roulette_select(population: &[Individual], rng: &mut impl Rng) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::usage("roulette selection on an empty population"));
    }
    let total: f64 = population.iter().map(Individual::fitness).sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, ind) in population.iter().enumerate() {
        acc += ind.fitness();
        if target < acc {
            return Ok(k);
        }
    }
    Ok(population.len() - 1)
}

/// Keeps the `mu` lowest-objective individuals across all pools. Ties go to
/// the earlier pool, then the earlier index. Output is best first.
pub fn mu_plus_lambda_survival(pools: &[&[Individual]], mu: usize) -> Result<Vec<Individual>> {
    let total: usize = pools.iter().map(|p| p.len()).sum();
    if total < mu {
        return Err(Error::usage(format!(
            "survival needs {mu} individuals, pools hold {total}"
        )));
    }
    let mut all: Vec<&Individual> = pools.iter().flat_map(|p| p.iter()).collect();
    all.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    Ok(all.into_iter().take(mu).cloned().collect())
}

pub(crate) fn trace_entry(
    generation: usize,
    pop: &[Individual],
    mu: usize,
    evaluations: u64,
    l3_value: Option<f64>,
) -> TraceEntry {
    let best = pop
        .iter()
        .map(|i| i.objective)
        .fold(f64::INFINITY, f64::min);
    let mean = pop.iter().map(|i| i.objective).sum::<f64>() / pop.len() as f64;
    TraceEntry {
        generation,
        best_objective: best,
        mean_objective: mean,
        pop_size: pop.len(),
        mu,
        evaluations,
        l3_value,
    }
}

pub(crate) fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("population is never empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub generations: usize,
    pub pop_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl GaConfig {
    /// Crossover rate 0.9 and mutation rate 0.1.
    pub fn new(generations: usize, pop_size: usize, model: ModelConfig, seed: u64) -> Self {
        Self {
            generations,
            pop_size,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            seed,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.generations < 1 {
            return Err(Error::usage("GA needs at least one generation"));
        }
        if self.pop_size < 2 {
            return Err(Error::usage("GA population size must be at least 2"));
        }
        for (name, rate) in [
            ("crossover", self.crossover_rate),
            ("mutation", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::usage(format!("{name} rate {rate} outside [0, 1]")));
            }
        }
        self.model.validate()
    }
}

/// Generational GA: roulette parents, one-point crossover, bit-flip mutation,
/// repair, and (mu + lambda) survival with lambda = mu.
pub fn run_ga(instance: &Instance, config: &GaConfig) -> Result<RunReport> {
    config.validate()?;
    let problem = Problem::new(instance.clone(), config.model)?;
    run_ga_on(&problem, config)
}

pub fn run_ga_on(problem: &Problem, config: &GaConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = SolverRng::seed_from_u64(config.seed);
    let mu = config.pop_size;
    let lambda = mu;
    let n = problem.n();

    let mut initial = init_population(mu, n, &mut rng);
    initial.iter_mut().for_each(|g| problem.repair_in_place(g));
    let mut pop = evaluate_all(problem, initial)?;
    pop.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    let mut evaluations = mu as u64;

    let mut trace = Vec::with_capacity(config.generations);
    let mut generation_ms = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        let gen_start = Instant::now();
        let mut children = Vec::with_capacity(lambda + 1);
        while children.len() < lambda {
            let a = &pop[roulette_select(&pop, &mut rng)?].genotype;
            let b = &pop[roulette_select(&pop, &mut rng)?].genotype;
            let (c1, c2) = if rng.gen_bool(config.crossover_rate) {
                one_point_crossover(a, b, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            for child in [c1, c2] {
                let mut child = bitflip_mutation(&child, config.mutation_rate, &mut rng);
                problem.repair_in_place(&mut child);
                children.push(child);
            }
        }
        children.truncate(lambda);
        let offspring = evaluate_all(problem, children)?;
        evaluations += lambda as u64;

        pop = mu_plus_lambda_survival(&[&pop, &offspring], mu)?;
        trace.push(trace_entry(generation, &pop, mu, evaluations, None));
        generation_ms.push(gen_start.elapsed().as_secs_f64() * 1e3);
    }

    let best = best_of(&pop);
    Ok(RunReport {
        solver: "ga".into(),
        seed: config.seed,
        best_genotype: best.genotype.clone(),
        best_objective: best.objective,
        m: problem.config().levels(best.genotype.count_ones()),
        evaluations,
        trace,
        config: serde_json::to_value(config)?,
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            generation_ms,
        },
    })
}
