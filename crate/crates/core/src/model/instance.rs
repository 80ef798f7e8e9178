use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem data for one reliable facility location instance.
///
/// Customers and candidate sites share the same `n` nodes: node `i` is both
/// customer `i` (with demand `demands[i]`) and candidate site `i` (with fixed
/// cost `fixed_costs[i]`). Every facility fails independently with the same
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    coords: Vec<[f64; 2]>,
    demands: Vec<u64>,
    fixed_costs: Vec<u64>,
    failure_prob: f64,
}

impl Instance {
    pub fn new(
        coords: Vec<[f64; 2]>,
        demands: Vec<u64>,
        fixed_costs: Vec<u64>,
        failure_prob: f64,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidInstance("instance has no nodes".into()));
        }
        if demands.len() != n {
            return Err(Error::InvalidInstance(format!(
                "demands has {} entries, expected {n}",
                demands.len()
            )));
        }
        if fixed_costs.len() != n {
            return Err(Error::InvalidInstance(format!(
                "fixed_costs has {} entries, expected {n}",
                fixed_costs.len()
            )));
        }
        for (i, &[x, y]) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidInstance(format!(
                    "coordinate {i} = ({x}, {y}) lies outside the unit square"
                )));
            }
        }
        if let Some(j) = fixed_costs.iter().position(|&f| f == 0) {
            return Err(Error::InvalidInstance(format!(
                "fixed cost of site {j} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&failure_prob) {
            return Err(Error::InvalidInstance(format!(
                "failure probability {failure_prob} outside [0, 1)"
            )));
        }
        Ok(Self {
            coords,
            demands,
            fixed_costs,
            failure_prob,
        })
    }

    /// Number of nodes (customers = candidate sites).
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn fixed_costs(&self) -> &[u64] {
        &self.fixed_costs
    }

    pub fn failure_prob(&self) -> f64 {
        self.failure_prob
    }

    /// Per-unit shipping cost between customer `i` and site `j`: the Euclidean
    /// distance between their coordinates.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        Ok(self.dist(i, j))
    }

    #[inline]
    pub(crate) fn dist(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.coords[i];
        let [xj, yj] = self.coords[j];
        (xi - xj).hypot(yi - yj)
    }

    /// Same instance with a different failure probability.
    pub fn with_failure_prob(&self, failure_prob: f64) -> Result<Self> {
        Self::new(
            self.coords.clone(),
            self.demands.clone(),
            self.fixed_costs.clone(),
            failure_prob,
        )
    }
}
