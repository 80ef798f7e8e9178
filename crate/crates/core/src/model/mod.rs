//! Problem data, location decisions and the total-cost objective.

mod genotype;
mod instance;
mod problem;

pub use genotype::Genotype;
pub use instance::Instance;
pub use problem::{
    allocation_objective, decode_allocation, evaluate, is_feasible, nearest_order, repair,
    verify_allocation, AllocationRule, AllocationTable, EvaluatedSolution, ModelConfig,
    NearestOrder, Problem,
};
