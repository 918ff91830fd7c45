//! Joint beam-hopping and carrier-aggregation (BH-CA) planning for
//! multi-beam high-throughput satellites.
//!
//! The crate is organised as a pipeline:
//!
//! * [`scenario`] synthesizes seeded multi-beam scenarios (beams, clusters,
//!   carriers, users, demands) and evaluates the per-(user, carrier) link
//!   budget into a [`scenario::RateTable`].
//! * [`model`] assembles the single-objective max-min MILP (constraint
//!   families C1 to C9), validates candidate assignments and decodes solver
//!   output into an [`model::AllocationPlan`].
//! * [`solver`] is a self-contained MILP solver: bounded two-phase simplex,
//!   branch-and-bound, a brute-force oracle and a CPLEX-LP reader/writer.
//! * [`baseline`] is the conventional beam hopping comparator without
//!   carrier aggregation.
//! * [`metrics`] turns any plan into supply/demand ratios, unused capacity
//!   and Jain fairness indices.

pub mod baseline;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod solver;

pub use baseline::{solve_bh, BhPlan};
pub use metrics::{build_report, jain_index, MetricsReport, SupplyPlan};
pub use model::{build_model, decode_plan, validate_solution, AllocationPlan, ModelInstance};
pub use scenario::{
    adjacency_pairs, compute_rate_table, generate_scenario, ModcodTable, RateTable, Scenario,
    SystemConfig,
};
pub use solver::{brute_force, export_lp, solve_lp, solve_milp, MilpSolution, SolverOptions};
