//! Evolutionary algorithm with memorable local search (EAMLS).
//!
//! Each generation mutates the whole population, expands the Hamming-1
//! neighbourhood of the best not-yet-searched individuals, and keeps the best
//! `mu` of parents, offspring and neighbours. The searcher remembers every
//! individual it has expanded, so no neighbourhood is generated twice in a
//! run. The l3-value, the share of the surviving population that some earlier
//! local search already produced, drives the population size: when it exceeds
//! the threshold, `mu` grows by a fixed step.

use std::collections::HashSet;
use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{
    best_of, bitflip_mutation, evaluate_all, init_population, mu_plus_lambda_survival,
    trace_entry, Individual, SolverRng,
};
use crate::model::{Genotype, Instance, ModelConfig, Problem};
use crate::report::{RunReport, Timing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EamlsConfig {
    pub generations: usize,
    pub initial_pop_size: usize,
    pub mutation_rate: f64,
    /// Number of not-yet-searched individuals expanded per generation.
    pub ls_count: usize,
    /// Population grows when the l3-value is strictly above this.
    pub l3_threshold: f64,
    pub pop_step: usize,
    pub seed: u64,
    pub model: ModelConfig,
}

impl EamlsConfig {
    /// Mutation rate 0.1, 10 local-search individuals, threshold 0.8, step 100.
    pub fn new(generations: usize, initial_pop_size: usize, model: ModelConfig, seed: u64) -> Self {
        Self {
            generations,
            initial_pop_size,
            mutation_rate: 0.1,
            ls_count: 10,
            l3_threshold: 0.8,
            pop_step: 100,
            seed,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.generations < 1 {
            return Err(Error::usage("EAMLS needs at least one generation"));
        }
        if self.initial_pop_size < 1 {
            return Err(Error::usage("EAMLS population size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::usage(format!(
                "mutation rate {} outside [0, 1]",
                self.mutation_rate
            )));
        }
        if self.ls_count < 1 {
            return Err(Error::usage("ls_count must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.l3_threshold) {
            return Err(Error::usage(format!(
                "l3 threshold {} outside [0, 1]",
                self.l3_threshold
            )));
        }
        self.model.validate()
    }
}

/// Cross-generation memory of the local search.
#[derive(Debug, Clone, Default)]
pub struct SearchMemory {
    searched: HashSet<Genotype>,
    all_neighbor_inds: HashSet<Genotype>,
}

impl SearchMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Genotypes whose neighbourhood has already been generated.
    pub fn searched(&self) -> &HashSet<Genotype> {
        &self.searched
    }

    /// Every genotype produced by local search in completed generations.
    pub fn all_neighbor_inds(&self) -> &HashSet<Genotype> {
        &self.all_neighbor_inds
    }

    pub fn remember_neighbors<'a>(&mut self, neighbors: impl IntoIterator<Item = &'a Genotype>) {
        self.all_neighbor_inds.extend(neighbors.into_iter().cloned());
    }
}

/// One neighbourhood expansion, as seen by an observer.
#[derive(Debug)]
pub struct Expansion<'a> {
    pub source: &'a Genotype,
    /// `source` with bit `k` flipped, for every `k`, before repair.
    pub flips: &'a [Genotype],
    /// Repaired flips with duplicates removed (first occurrence kept).
    pub neighbors: &'a [Genotype],
}

fn neighborhood_parts(genotype: &Genotype, problem: &Problem) -> (Vec<Genotype>, Vec<Genotype>) {
    let flips: Vec<Genotype> = (0..genotype.len()).map(|k| genotype.flipped(k)).collect();
    let mut seen = HashSet::with_capacity(flips.len());
    let neighbors = flips
        .iter()
        .map(|f| problem.repair(f))
        .filter(|g| seen.insert(g.clone()))
        .collect();
    (flips, neighbors)
}

/// Hamming-1 neighbourhood: every single-bit flip, repaired, deduplicated.
pub fn hamming_neighborhood(genotype: &Genotype, problem: &Problem) -> Vec<Genotype> {
    neighborhood_parts(genotype, problem).1
}

/// Expands up to `ls_count` individuals of `pop ∪ offspring` that have never
/// been searched, best objective first, and returns their evaluated
/// neighbourhoods (deduplicated across the call). Expanded genotypes are
/// recorded in `memory` immediately.
pub fn memorable_local_search(
    pop: &[Individual],
    offspring: &[Individual],
    memory: &mut SearchMemory,
    ls_count: usize,
    problem: &Problem,
    observer: &mut dyn FnMut(&Expansion<'_>),
) -> Result<Vec<Individual>> {
    let mut candidates: Vec<&Individual> = pop.iter().chain(offspring).collect();
    candidates.sort_by(|a, b| a.objective.total_cmp(&b.objective));

    let mut produced = HashSet::new();
    let mut batch = Vec::new();
    let mut expanded = 0;
    for ind in candidates {
        if expanded == ls_count {
            break;
        }
        if memory.searched.contains(&ind.genotype) {
            continue;
        }
        let (flips, neighbors) = neighborhood_parts(&ind.genotype, problem);
        observer(&Expansion {
            source: &ind.genotype,
            flips: &flips,
            neighbors: &neighbors,
        });
        memory.searched.insert(ind.genotype.clone());
        expanded += 1;
        for nb in neighbors {
            if produced.insert(nb.clone()) {
                batch.push(nb);
            }
        }
    }
    evaluate_all(problem, batch)
}

/// Fraction of population slots whose genotype is in `all_neighbor_inds`.
pub fn l3_value(pop: &[Individual], all_neighbor_inds: &HashSet<Genotype>) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::usage("l3-value of an empty population"));
    }
    let hits = pop
        .iter()
        .filter(|i| all_neighbor_inds.contains(&i.genotype))
        .count();
    Ok(hits as f64 / pop.len() as f64)
}

pub fn run_eamls(instance: &Instance, config: &EamlsConfig) -> Result<RunReport> {
    config.validate()?;
    let problem = Problem::new(instance.clone(), config.model)?;
    run_eamls_observed(&problem, config, &mut |_| {})
}

/// EAMLS on a prepared problem; `observer` sees every neighbourhood expansion.
pub fn run_eamls_observed(
    problem: &Problem,
    config: &EamlsConfig,
    observer: &mut dyn FnMut(&Expansion<'_>),
) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = SolverRng::seed_from_u64(config.seed);
    let n = problem.n();
    let mut mu = config.initial_pop_size;

    let mut initial = init_population(mu, n, &mut rng);
    initial.iter_mut().for_each(|g| problem.repair_in_place(g));
    let mut pop = evaluate_all(problem, initial)?;
    pop.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    let mut evaluations = pop.len() as u64;
    let mut memory = SearchMemory::new();

    let mut trace = Vec::with_capacity(config.generations);
    let mut generation_ms = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        let gen_start = Instant::now();
        let mutated: Vec<Genotype> = pop
            .iter()
            .map(|ind| {
                let mut child = bitflip_mutation(&ind.genotype, config.mutation_rate, &mut rng);
                problem.repair_in_place(&mut child);
                child
            })
            .collect();
        let offspring = evaluate_all(problem, mutated)?;
        evaluations += offspring.len() as u64;

        let neighbors =
            memorable_local_search(&pop, &offspring, &mut memory, config.ls_count, problem, observer)?;
        evaluations += neighbors.len() as u64;

        // A freshly grown mu can exceed the pooled count; keep everything then.
        let pooled = pop.len() + offspring.len() + neighbors.len();
        pop = mu_plus_lambda_survival(&[&pop, &offspring, &neighbors], mu.min(pooled))?;

        let l3 = l3_value(&pop, &memory.all_neighbor_inds)?;
        trace.push(trace_entry(generation, &pop, mu, evaluations, Some(l3)));
        if l3 > config.l3_threshold {
            mu += config.pop_step;
        }
        memory.remember_neighbors(neighbors.iter().map(|i| &i.genotype));
        generation_ms.push(gen_start.elapsed().as_secs_f64() * 1e3);
    }

    let best = best_of(&pop);
    Ok(RunReport {
        solver: "eamls".into(),
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
