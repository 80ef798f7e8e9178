//! Exhaustive exact solver for small instances, and a naive re-implementation
//! of the objective used to cross-check the fast evaluator.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Genotype, Instance, ModelConfig, Problem};

pub const DEFAULT_LIMIT: usize = 20;

/// Relative tolerance under which a run counts as having found the optimum.
pub const OPTIMAL_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub optimum_genotype: Genotype,
    pub optimum_objective: f64,
    /// Feasible genotypes examined.
    pub num_enumerated: u64,
}

impl ExactResult {
    pub fn is_optimal(&self, objective: f64) -> bool {
        is_optimal(objective, self.optimum_objective)
    }
}

pub fn is_optimal(objective: f64, optimum: f64) -> bool {
    objective <= optimum + OPTIMAL_RTOL * optimum.abs()
}

fn better(a: &(f64, Genotype), b: &(f64, Genotype)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1.lex_cmp(&b.1) == Ordering::Less,
    }
}

/// Enumerates every genotype with enough open sites and returns the minimum.
/// Ties go to the lexicographically smallest genotype (site 0 first).
pub fn brute_force_optimum(
    instance: &Instance,
    config: &ModelConfig,
    limit: usize,
) -> Result<ExactResult> {
    let n = instance.n();
    if n > limit.min(63) {
        return Err(Error::OracleLimit { n, limit });
    }
    let problem = Problem::new(instance.clone(), *config)?;
    brute_force_on(&problem)
}

pub fn brute_force_on(problem: &Problem) -> Result<ExactResult> {
    let n = problem.n();
    if n > 63 {
        return Err(Error::OracleLimit { n, limit: 63 });
    }
    let min_open = problem.config().min_open() as u32;
    let total = 1u64 << n;
    let chunk = (total / 256).max(1 << 10);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();

    let partials: Vec<(Option<(f64, Genotype)>, u64)> = starts
        .into_par_iter()
        .map(|lo| -> Result<_> {
            let hi = (lo + chunk).min(total);
            let mut best: Option<(f64, Genotype)> = None;
            let mut count = 0u64;
            for mask in lo..hi {
                if mask.count_ones() < min_open {
                    continue;
                }
                let g = Genotype::from_mask(n, mask);
                let cand = (problem.objective(&g)?, g);
                count += 1;
                if best.as_ref().map_or(true, |b| better(&cand, b)) {
                    best = Some(cand);
                }
            }
            Ok((best, count))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, Genotype)> = None;
    let mut num_enumerated = 0;
    for (cand, count) in partials {
        num_enumerated += count;
        if let Some(cand) = cand {
            if best.as_ref().map_or(true, |b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }
    let (optimum_objective, optimum_genotype) = best.ok_or_else(|| {
        Error::usage(format!(
            "no genotype of length {n} opens {min_open} sites"
        ))
    })?;
    Ok(ExactResult {
        optimum_genotype,
        optimum_objective,
        num_enumerated,
    })
}

/// Recomputes the objective without the precomputed nearest-site order:
/// per customer a selection sort of the open sites, then the expected
/// transport summed level by level.
pub fn independent_evaluate(
    genotype: &Genotype,
    instance: &Instance,
    config: &ModelConfig,
) -> Result<f64> {
    let n = instance.n();
    if genotype.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: genotype.len(),
        });
    }
    let open: Vec<usize> = (0..n).filter(|&j| genotype.get(j)).collect();
    let required = config.min_open();
    if open.len() < required {
        return Err(Error::Infeasible {
            open: open.len(),
            required,
        });
    }
    let m = config.levels(open.len());
    let coords = instance.coords();
    let dist = |i: usize, j: usize| {
        let dx = coords[i][0] - coords[j][0];
        let dy = coords[i][1] - coords[j][1];
        (dx * dx + dy * dy).sqrt()
    };

    let mut ranked: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut sites = open.clone();
        for a in 0..sites.len() {
            let mut pick = a;
            for b in a + 1..sites.len() {
                let (db, dp) = (dist(i, sites[b]), dist(i, sites[pick]));
                if db < dp || (db == dp && sites[b] < sites[pick]) {
                    pick = b;
                }
            }
            sites.swap(a, pick);
        }
        sites.truncate(m);
        ranked.push(sites);
    }

    let p = instance.failure_prob();
    let mut transport = 0.0;
    for r in (0..m).rev() {
        let weight = p.powi(r as i32) * (1.0 - p);
        for i in (0..n).rev() {
            transport += instance.demands()[i] as f64 * dist(i, ranked[i][r]) * weight;
        }
    }
    let fixed: f64 = open
        .iter()
        .rev()
        .map(|&j| instance.fixed_costs()[j] as f64)
        .sum();
    Ok(config.alpha * transport + fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instgen::{generate_instance, GenParams};
    use crate::model::evaluate;

    fn tiny3() -> Instance {
        Instance::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![100, 0, 200],
            vec![500, 600, 700],
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn tiny3_optimum() {
        let r = brute_force_optimum(&tiny3(), &ModelConfig::selected_count(), DEFAULT_LIMIT).unwrap();
        assert_eq!(r.optimum_genotype.to_string(), "101");
        assert!((r.optimum_objective - 1214.25).abs() < 1e-9);
        assert_eq!(r.num_enumerated, 4);
    }

    #[test]
    fn tiny3_candidates() {
        let inst = tiny3();
        let cfg = ModelConfig::selected_count();
        let values: Vec<f64> = ["110", "101", "011", "111"]
            .iter()
            .map(|s| independent_evaluate(&s.parse().unwrap(), &inst, &cfg).unwrap())
            .collect();
        let want = [1308.185_028_87, 1214.25, 1413.185_028_87, 1815.159_5];
        for (v, w) in values.iter().zip(want) {
            assert!((v - w).abs() < 1e-3, "{v} vs {w}");
        }
    }

    #[test]
    fn enumeration_count() {
        for n in 2..=8 {
            let inst = generate_instance(&GenParams::new(n, n as u64)).unwrap();
            let r = brute_force_optimum(&inst, &ModelConfig::selected_count(), 20).unwrap();
            assert_eq!(r.num_enumerated, (1u64 << n) - n as u64 - 1);
        }
    }

    #[test]
    fn two_nodes_single_feasible() {
        let inst = generate_instance(&GenParams::new(2, 1)).unwrap();
        let r = brute_force_optimum(&inst, &ModelConfig::fixed_m(2), 20).unwrap();
        assert_eq!(r.optimum_genotype.to_string(), "11");
        assert_eq!(r.num_enumerated, 1);
    }

    #[test]
    fn only_fixed_costs_matter_when_alpha_and_p_vanish() {
        let inst = generate_instance(&GenParams::new(9, 12))
            .unwrap()
            .with_failure_prob(0.0)
            .unwrap();
        let cfg = ModelConfig::selected_count().with_alpha(0.0);
        let r = brute_force_optimum(&inst, &cfg, 20).unwrap();
        let mut sites: Vec<usize> = (0..9).collect();
        sites.sort_by_key(|&j| (inst.fixed_costs()[j], j));
        let mut want = Genotype::zeros(9);
        want.set(sites[0], true);
        want.set(sites[1], true);
        let f = inst.fixed_costs();
        assert_eq!(r.optimum_objective, (f[sites[0]] + f[sites[1]]) as f64);
        if f[sites[1]] != f[sites[2]] {
            assert_eq!(r.optimum_genotype, want);
        }
    }

    #[test]
    fn refuses_above_limit() {
        let inst = generate_instance(&GenParams::new(12, 1)).unwrap();
        let err = brute_force_optimum(&inst, &ModelConfig::selected_count(), 10).unwrap_err();
        assert!(matches!(err, Error::OracleLimit { n: 12, limit: 10 }));
    }

    #[test]
    fn agrees_with_fast_evaluator() {
        let inst = generate_instance(&GenParams::new(11, 5)).unwrap();
        for cfg in [ModelConfig::selected_count(), ModelConfig::fixed_m(2), ModelConfig::fixed_m(3)] {
            for mask in (0..1u64 << 11).step_by(7) {
                let g = Genotype::from_mask(11, mask);
                let slow = independent_evaluate(&g, &inst, &cfg);
                let fast = evaluate(&g, &inst, &cfg);
                match (slow, fast) {
                    (Ok(a), Ok(b)) => assert!((a - b.objective).abs() <= 1e-9 * b.objective),
                    (Err(_), Err(_)) => {}
                    other => panic!("disagreement on {g}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn p_zero_nearest_site_closed_form() {
        let inst = generate_instance(&GenParams::new(7, 3))
            .unwrap()
            .with_failure_prob(0.0)
            .unwrap();
        let g: Genotype = "0100110".parse().unwrap();
        let cfg = ModelConfig::selected_count().with_alpha(2.0);
        let mut want: f64 = g.ones().map(|j| inst.fixed_costs()[j] as f64).sum();
        for i in 0..7 {
            let nearest = g
                .ones()
                .map(|j| inst.distance(i, j).unwrap())
                .fold(f64::INFINITY, f64::min);
            want += 2.0 * inst.demands()[i] as f64 * nearest;
        }
        let got = independent_evaluate(&g, &inst, &cfg).unwrap();
        assert!((got - want).abs() <= 1e-9 * want);
    }
}
