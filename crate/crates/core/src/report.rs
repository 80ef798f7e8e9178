//! Per-run results shared by all solvers.

use serde::{Deserialize, Serialize};

use crate::model::Genotype;

/// State of the population at the end of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub generation: usize,
    /// Best objective in the population after survival.
    pub best_objective: f64,
    pub mean_objective: f64,
    /// Number of individuals after survival.
    pub pop_size: usize,
    /// Target population size used by this generation's survival.
    pub mu: usize,
    /// Cumulative fitness evaluations, including the initial population.
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l3_value: Option<f64>,
}

/// Wall-clock measurements, kept apart from the seed-determined outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub generation_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub solver: String,
    pub seed: u64,
    pub best_genotype: Genotype,
    pub best_objective: f64,
    /// Allocation levels of the best solution.
    pub m: usize,
    pub evaluations: u64,
    pub trace: Vec<TraceEntry>,
    /// Echo of every parameter that determined the run.
    pub config: serde_json::Value,
    pub timing: Timing,
}

impl RunReport {
    /// True when everything except the timing matches.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        self.solver == other.solver
            && self.seed == other.seed
            && self.best_genotype == other.best_genotype
            && self.best_objective.to_bits() == other.best_objective.to_bits()
            && self.m == other.m
            && self.evaluations == other.evaluations
            && self.trace == other.trace
            && self.config == other.config
    }

    pub fn best_trace(&self) -> impl Iterator<Item = f64> + '_ {
        self.trace.iter().map(|t| t.best_objective)
    }
}
