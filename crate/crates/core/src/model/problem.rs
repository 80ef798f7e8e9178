use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Genotype, Instance};
use crate::error::{Error, Result};

/// How many facilities each customer is allocated to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationRule {
    /// Every customer gets exactly `k` levels (`k >= 2`); the classical
    /// "m = 2" model is `FixedM(2)`.
    FixedM(usize),
    /// Every customer is allocated to all opened sites (`m = popcount(X)`).
    SelectedCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Weight of the expected transportation term.
    pub alpha: f64,
    pub allocation: AllocationRule,
}

impl ModelConfig {
    pub fn new(alpha: f64, allocation: AllocationRule) -> Result<Self> {
        let cfg = Self { alpha, allocation };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fixed_m(k: usize) -> Self {
        Self {
            alpha: 1.0,
            allocation: AllocationRule::FixedM(k),
        }
    }

    pub fn selected_count() -> Self {
        Self {
            alpha: 1.0,
            allocation: AllocationRule::SelectedCount,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::usage(format!(
                "alpha must be a non-negative finite number, got {}",
                self.alpha
            )));
        }
        if let AllocationRule::FixedM(k) = self.allocation {
            if k < 2 {
                return Err(Error::usage(format!("FixedM requires k >= 2, got {k}")));
            }
        }
        Ok(())
    }

    /// Fewest open sites a genotype needs to be decodable under this rule.
    pub fn min_open(&self) -> usize {
        match self.allocation {
            AllocationRule::FixedM(k) => k.max(2),
            AllocationRule::SelectedCount => 2,
        }
    }

    /// Number of allocation levels for a genotype with `open` sites.
    pub fn levels(&self, open: usize) -> usize {
        match self.allocation {
            AllocationRule::FixedM(k) => k,
            AllocationRule::SelectedCount => open,
        }
    }

    fn check_feasible(&self, genotype: &Genotype) -> Result<usize> {
        let open = genotype.count_ones();
        let required = self.min_open();
        if open < required {
            return Err(Error::Infeasible { open, required });
        }
        Ok(open)
    }
}

/// For every customer, all site indices sorted by ascending distance
/// (ties by ascending site index), with the matching distances.
#[derive(Debug, Clone)]
pub struct NearestOrder {
    n: usize,
    sites: Vec<u32>,
    dists: Vec<f64>,
}

impl NearestOrder {
    pub fn new(instance: &Instance) -> Self {
        let n = instance.n();
        let mut sites = Vec::with_capacity(n * n);
        let mut dists = Vec::with_capacity(n * n);
        let mut row: Vec<(f64, u32)> = Vec::with_capacity(n);
        for i in 0..n {
            row.clear();
            row.extend((0..n).map(|j| (instance.dist(i, j), j as u32)));
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(d, j) in &row {
                sites.push(j);
                dists.push(d);
            }
        }
        Self { n, sites, dists }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Site permutation for customer `i`, nearest first.
    pub fn order(&self, i: usize) -> &[u32] {
        &self.sites[i * self.n..(i + 1) * self.n]
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = i * self.n..(i + 1) * self.n;
        self.sites[r.clone()]
            .iter()
            .zip(&self.dists[r])
            .map(|(&j, &d)| (j as usize, d))
    }
}

pub fn nearest_order(instance: &Instance) -> NearestOrder {
    NearestOrder::new(instance)
}

/// Decoded allocation: `assign[i][r]` is the level-`r` facility of customer `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationTable {
    pub m: usize,
    pub assign: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSolution {
    pub genotype: Genotype,
    pub objective: f64,
    pub m: usize,
}

pub fn is_feasible(genotype: &Genotype) -> bool {
    genotype.count_ones() >= 2
}

/// Assigns each customer its `m` nearest open sites, nearest first.
pub fn decode_allocation(
    genotype: &Genotype,
    order: &NearestOrder,
    config: &ModelConfig,
) -> Result<AllocationTable> {
    if genotype.len() != order.n() {
        return Err(Error::LengthMismatch {
            expected: order.n(),
            got: genotype.len(),
        });
    }
    let open = config.check_feasible(genotype)?;
    let m = config.levels(open);
    let assign = (0..order.n())
        .map(|i| {
            order
                .row(i)
                .map(|(j, _)| j)
                .filter(|&j| genotype.get(j))
                .take(m)
                .collect()
        })
        .collect();
    Ok(AllocationTable { m, assign })
}

/// Checks an allocation against the model constraints for `genotype`: one
/// site per level, only open sites, no repeats, nearest-first ordering.
pub fn verify_allocation(
    allocation: &AllocationTable,
    genotype: &Genotype,
    instance: &Instance,
) -> bool {
    let n = instance.n();
    if genotype.len() != n || allocation.assign.len() != n || allocation.m == 0 {
        return false;
    }
    allocation.assign.iter().enumerate().all(|(i, sites)| {
        sites.len() == allocation.m
            && sites.iter().all(|&j| j < n && genotype.get(j))
            && sites
                .iter()
                .enumerate()
                .all(|(a, j)| !sites[..a].contains(j))
            && sites
                .windows(2)
                .all(|w| instance.dist(i, w[0]) <= instance.dist(i, w[1]))
    })
}

/// Objective of an arbitrary allocation (not necessarily nearest-first).
/// Sites are charged for every open bit of `genotype`.
pub fn allocation_objective(
    instance: &Instance,
    genotype: &Genotype,
    allocation: &AllocationTable,
    alpha: f64,
) -> f64 {
    let p = instance.failure_prob();
    let fixed: f64 = genotype
        .ones()
        .map(|j| instance.fixed_costs()[j] as f64)
        .sum();
    let transport: f64 = allocation
        .assign
        .iter()
        .enumerate()
        .map(|(i, sites)| {
            let h = instance.demands()[i] as f64;
            let mut weight = 1.0 - p;
            let mut expected = 0.0;
            for &j in sites {
                expected += instance.dist(i, j) * weight;
                weight *= p;
            }
            h * expected
        })
        .sum();
    fixed + alpha * transport
}

/// Immutable evaluation context: an instance, its nearest-site order and a
/// model configuration. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Problem {
    instance: Arc<Instance>,
    order: Arc<NearestOrder>,
    config: ModelConfig,
    by_fixed_cost: Vec<usize>,
    level_weights: Vec<f64>,
}

impl Problem {
    pub fn new(instance: Instance, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let n = instance.n();
        if let AllocationRule::FixedM(k) = config.allocation {
            if k > n {
                return Err(Error::usage(format!(
                    "FixedM({k}) needs at least {k} candidate sites, instance has {n}"
                )));
            }
        }
        if n < 2 {
            return Err(Error::usage("instance needs at least two candidate sites"));
        }
        let order = NearestOrder::new(&instance);
        let mut by_fixed_cost: Vec<usize> = (0..n).collect();
        by_fixed_cost.sort_by_key(|&j| (instance.fixed_costs()[j], j));
        let p = instance.failure_prob();
        let mut level_weights = Vec::with_capacity(n);
        let mut pr = 1.0;
        for _ in 0..n {
            level_weights.push(pr * (1.0 - p));
            pr *= p;
        }
        Ok(Self {
            instance: Arc::new(instance),
            order: Arc::new(order),
            config,
            by_fixed_cost,
            level_weights,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn order(&self) -> &NearestOrder {
        &self.order
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn decode(&self, genotype: &Genotype) -> Result<AllocationTable> {
        decode_allocation(genotype, &self.order, &self.config)
    }

    /// Total cost: fixed costs of open sites plus `alpha` times the expected
    /// transportation cost over the nearest-first allocation.
    pub fn objective(&self, genotype: &Genotype) -> Result<f64> {
        let n = self.n();
        if genotype.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: genotype.len(),
            });
        }
        let open = self.config.check_feasible(genotype)?;
        let m = self.config.levels(open);
        let inst = &*self.instance;

        let fixed: f64 = genotype
            .ones()
            .map(|j| inst.fixed_costs()[j] as f64)
            .sum();
        let mut transport = 0.0;
        for (i, &h) in inst.demands().iter().enumerate() {
            if h == 0 {
                continue;
            }
            let mut expected = 0.0;
            let mut level = 0;
            for (j, d) in self.order.row(i) {
                if genotype.get(j) {
                    expected += d * self.level_weights[level];
                    level += 1;
                    if level == m {
                        break;
                    }
                }
            }
            transport += h as f64 * expected;
        }
        Ok(fixed + self.config.alpha * transport)
    }

    pub fn evaluate(&self, genotype: &Genotype) -> Result<EvaluatedSolution> {
        let objective = self.objective(genotype)?;
        let open = genotype.count_ones();
        Ok(EvaluatedSolution {
            genotype: genotype.clone(),
            objective,
            m: self.config.levels(open),
        })
    }

    /// Opens the cheapest closed sites (ascending fixed cost, then index)
    /// until the genotype has `min_open` sites. Never closes a site.
    pub fn repair(&self, genotype: &Genotype) -> Genotype {
        repair_to(genotype, &self.by_fixed_cost, self.config.min_open())
    }

    pub fn repair_in_place(&self, genotype: &mut Genotype) {
        repair_in_place(genotype, &self.by_fixed_cost, self.config.min_open());
    }
}

fn repair_in_place(genotype: &mut Genotype, by_fixed_cost: &[usize], min_open: usize) {
    let mut open = genotype.count_ones();
    for &j in by_fixed_cost {
        if open >= min_open {
            break;
        }
        if !genotype.get(j) {
            genotype.set(j, true);
            open += 1;
        }
    }
}

fn repair_to(genotype: &Genotype, by_fixed_cost: &[usize], min_open: usize) -> Genotype {
    let mut g = genotype.clone();
    repair_in_place(&mut g, by_fixed_cost, min_open);
    g
}

/// Repair to the base feasibility rule (at least two open sites).
pub fn repair(genotype: &Genotype, instance: &Instance) -> Genotype {
    let mut by_fixed_cost: Vec<usize> = (0..instance.n()).collect();
    by_fixed_cost.sort_by_key(|&j| (instance.fixed_costs()[j], j));
    repair_to(genotype, &by_fixed_cost, 2)
}

/// One-shot evaluation; builds the nearest-site order on every call. Use
/// [`Problem`] when evaluating more than a handful of genotypes.
pub fn evaluate(
    genotype: &Genotype,
    instance: &Instance,
    config: &ModelConfig,
) -> Result<EvaluatedSolution> {
    Problem::new(instance.clone(), *config)?.evaluate(genotype)
}
