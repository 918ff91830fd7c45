//! LP and MILP solving: a bounded dense simplex, branch-and-bound over the
//! binary columns, an exhaustive oracle for tiny models, and CPLEX-LP export.

mod bnb;
mod brute;
mod lp_format;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MilpProblem, ModelInstance};

pub use bnb::solve_milp;
pub use brute::{brute_force, MAX_BRUTE_FORCE_BINARIES};
pub use lp_format::{export_lp, parse_lp, LpDocument, LpParseError};
pub use simplex::{LpStatus, MAX_TABLEAU_ENTRIES};

use simplex::LpEngine;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("model too large for the dense simplex ({rows} rows x {columns} columns); write it with `bhca export-lp` and use an external solver")]
    TooLarge { rows: usize, columns: usize },
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(u64),
    #[error("model is infeasible: {0}")]
    Infeasible(&'static str),
    #[error("LP relaxation is unbounded; the model is malformed")]
    Unbounded,
    #[error("{binaries} binaries exceed the brute-force cap of {cap}")]
    TooManyBinaries { binaries: usize, cap: usize },
    #[error("search stopped by its {limit} limit after {nodes} nodes without a feasible solution")]
    NoIncumbent { limit: &'static str, nodes: u64 },
    #[error("fixing refers to column {column}, but the model has {columns} columns")]
    BadFixing { column: usize, columns: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    #[default]
    MostFractional,
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    BestBound,
    #[default]
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub integrality_tol: f64,
    pub feas_tol: f64,
    pub node_limit: u64,
    /// Seconds.
    pub time_limit: f64,
    pub branch_rule: BranchRule,
    pub node_order: NodeOrder,
    pub worker_count: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            integrality_tol: 1e-6,
            feas_tol: 1e-9,
            node_limit: 1_000_000,
            time_limit: 3600.0,
            branch_rule: BranchRule::default(),
            node_order: NodeOrder::default(),
            worker_count: 1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let tol_ok = |t: f64| t > 0.0 && t <= 1e-3;
        if !tol_ok(self.integrality_tol) {
            return Err(SolverError::InvalidOptions(format!(
                "integrality_tol must be in (0, 1e-3], got {}",
                self.integrality_tol
            )));
        }
        if !tol_ok(self.feas_tol) {
            return Err(SolverError::InvalidOptions(format!(
                "feas_tol must be in (0, 1e-3], got {}",
                self.feas_tol
            )));
        }
        if self.node_limit < 1 {
            return Err(SolverError::InvalidOptions("node_limit must be >= 1".into()));
        }
        if !(self.time_limit >= 1.0) {
            return Err(SolverError::InvalidOptions(format!(
                "time_limit must be >= 1 second, got {}",
                self.time_limit
            )));
        }
        if self.worker_count < 1 {
            return Err(SolverError::InvalidOptions("worker_count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Feasible { gap: f64 },
    Infeasible,
}

impl std::fmt::Display for MilpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MilpStatus::Optimal => f.write_str("optimal"),
            MilpStatus::Feasible { gap } => write!(f, "feasible(gap={gap:.6})"),
            MilpStatus::Infeasible => f.write_str("infeasible"),
        }
    }
}

/// One line of the search log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLogEntry {
    pub node: u64,
    pub bound: f64,
    pub incumbent: Option<f64>,
    pub gap: Option<f64>,
}

impl std::fmt::Display for SearchLogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node={} bound={:.9}", self.node, self.bound)?;
        match self.incumbent {
            Some(v) => write!(f, " incumbent={v:.9}")?,
            None => f.write_str(" incumbent=none")?,
        }
        match self.gap {
            Some(g) => write!(f, " gap={g:.6}"),
            None => f.write_str(" gap=inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: MilpStatus,
    pub nodes_explored: u64,
    /// Simplex pivots over the whole search.
    pub lp_iterations: u64,
    /// Excluded from serialization so that artifacts stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
    pub gap: f64,
    /// LP relaxation objective at the root node.
    pub root_bound: f64,
    pub log: Vec<SearchLogEntry>,
}

impl MilpSolution {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

/// Restricts a column to `[lower, upper]` (intersected with its own bounds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixing {
    pub column: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Fixing {
    pub fn to(column: usize, value: f64) -> Self {
        Self {
            column,
            lower: value,
            upper: value,
        }
    }
}

impl AsRef<MilpProblem> for ModelInstance {
    fn as_ref(&self) -> &MilpProblem {
        &self.problem
    }
}

impl AsRef<MilpProblem> for MilpProblem {
    fn as_ref(&self) -> &MilpProblem {
        self
    }
}

/// Solves the continuous relaxation with the given bound restrictions.
pub fn solve_lp<P: AsRef<MilpProblem> + ?Sized>(
    model: &P,
    fixings: &[Fixing],
) -> Result<LpSolution, SolverError> {
    let problem = model.as_ref();
    let (mut lower, mut upper) = column_bounds(problem);
    for f in fixings {
        if f.column >= lower.len() {
            return Err(SolverError::BadFixing {
                column: f.column,
                columns: lower.len(),
            });
        }
        lower[f.column] = lower[f.column].max(f.lower);
        upper[f.column] = upper[f.column].min(f.upper);
    }
    let mut engine = LpEngine::new(problem)?;
    let status = engine.solve(&lower, &upper)?;
    Ok(match status {
        LpStatus::Optimal => LpSolution {
            values: engine.solution(),
            objective: engine.objective(),
            status,
        },
        _ => LpSolution {
            values: Vec::new(),
            objective: f64::NAN,
            status,
        },
    })
}

fn column_bounds(problem: &MilpProblem) -> (Vec<f64>, Vec<f64>) {
    problem
        .columns
        .iter()
        .map(|c| (c.lower, c.upper))
        .unzip()
}
