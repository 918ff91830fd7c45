//! The single-objective BH-CA MILP.
//!
//! Decision variables per cluster `l`: carrier-user assignment
//! `a[l][c][u]`, fill-rate `beta[l][c][u]`, illumination `z[l][t]`, the
//! linearized product `q[l][c][u][t] = beta * z`, per-cluster worst user ratio
//! `tU[l]`, worst cluster ratio `tL` and the max-min epigraph variable
//! `theta`. The objective is `theta + eps_obj * (sum tU + tL)`.

mod catalog;
mod problem;

use std::collections::BTreeSet;

use serde::Serialize;

pub use catalog::{VarRef, VariableCatalog};
pub use problem::{Column, LinearConstraint, MilpProblem, Sense};

use crate::scenario::{RateTable, Scenario};
use crate::solver::MilpSolution;

/// Tie-break weight on `sum tU + tL`.
pub const DEFAULT_EPSILON_OBJ: f64 = 1e-4;
/// Minimum fill-rate of an assigned carrier.
pub const DEFAULT_EPSILON_FILL: f64 = 1e-6;
/// Tolerance used when auditing assignments. Row violations are measured
/// against the row scaled to unit largest coefficient.
pub const VALIDATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub epsilon_obj: f64,
    pub epsilon_fill: f64,
    /// Attach the per-(carrier, slot) capacity cuts.
    pub slot_cuts: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            epsilon_obj: DEFAULT_EPSILON_OBJ,
            epsilon_fill: DEFAULT_EPSILON_FILL,
            slot_cuts: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInstance {
    pub catalog: VariableCatalog,
    pub problem: MilpProblem,
    pub epsilon_obj: f64,
    pub epsilon_fill: f64,
    /// Big-M of the conditional constraints; the fill-rate is at most one.
    pub big_m: f64,
}

impl ModelInstance {
    pub fn constraints_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a LinearConstraint> {
        self.problem.constraints.iter().filter(move |c| c.tag == tag)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("scenario and rate table disagree: {0}")]
    Shape(String),
    #[error("assignment has {got} values but the model has {expected} columns")]
    MissingColumns { expected: usize, got: usize },
    #[error("solution is infeasible ({} violations, first: {})", .0.violations.len(), .0.violations[0])]
    Infeasible(ViolationReport),
}

pub fn build_model(
    scenario: &Scenario,
    rates: &RateTable,
    pairs: &BTreeSet<(usize, usize)>,
) -> Result<ModelInstance, ModelError> {
    build_model_with(scenario, rates, pairs, ModelParams::default())
}

fn check_shape(
    scenario: &Scenario,
    rates: &RateTable,
    pairs: &BTreeSet<(usize, usize)>,
) -> Result<(), ModelError> {
    let nl = scenario.clusters.len();
    if rates.clusters.len() != nl {
        return Err(ModelError::Shape(format!(
            "{} clusters in scenario, {} in rate table",
            nl,
            rates.clusters.len()
        )));
    }
    for (l, (cl, r)) in scenario.clusters.iter().zip(&rates.clusters).enumerate() {
        if cl.carrier_ids.len() != r.carriers || cl.user_ids.len() != r.users {
            return Err(ModelError::Shape(format!(
                "cluster {l}: scenario has {}x{} carriers x users, rate table {}x{}",
                cl.carrier_ids.len(),
                cl.user_ids.len(),
                r.carriers,
                r.users
            )));
        }
        if r.rate_per_slot.len() != r.carriers * r.users {
            return Err(ModelError::Shape(format!("cluster {l}: rate matrix size")));
        }
    }
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= b || b >= nl) {
        return Err(ModelError::Shape(format!(
            "adjacency pair ({a}, {b}) is not canonical or out of range"
        )));
    }
    Ok(())
}

/// Assembles constraint families C1 to C9 in fixed order; inside a family
/// rows are lexicographic in their index tuple.
pub fn build_model_with(
    scenario: &Scenario,
    rates: &RateTable,
    pairs: &BTreeSet<(usize, usize)>,
    params: ModelParams,
) -> Result<ModelInstance, ModelError> {
    check_shape(scenario, rates, pairs)?;
    let nl = scenario.clusters.len();
    let nt = scenario.num_slots();
    let cat = VariableCatalog::new(
        scenario.clusters.iter().map(|c| c.carrier_ids.len()).collect(),
        scenario.clusters.iter().map(|c| c.user_ids.len()).collect(),
        nt,
    );

    let mut columns = Vec::with_capacity(cat.len());
    for col in 0..cat.len() {
        let name = cat.name(col);
        columns.push(match cat.describe(col).unwrap() {
            VarRef::Assign { .. } | VarRef::Illuminate { .. } => Column::binary(name),
            VarRef::Fill { .. } | VarRef::Product { .. } => Column::continuous(name, 0.0, 1.0),
            VarRef::UserRatio { .. } | VarRef::ClusterRatio => {
                Column::continuous(name, 0.0, f64::INFINITY)
            }
            VarRef::Theta => Column::continuous(name, f64::NEG_INFINITY, f64::INFINITY),
        });
    }

    let cfg = &scenario.config;
    let eps = params.epsilon_fill;
    let mut rows = Vec::new();
    let idx = |parts: &[usize]| -> String {
        parts
            .iter()
            .map(|p| (p + 1).to_string())
            .collect::<Vec<_>>()
            .join("_")
    };

    // C1: at most delta_max carriers per user.
    for l in 0..nl {
        for u in 0..cat.users(l) {
            rows.push(LinearConstraint::new(
                format!("C1_{}", idx(&[l, u])),
                "C1",
                (0..cat.carriers(l)).map(|c| (cat.a(l, c, u), 1.0)),
                Sense::Le,
                cfg.delta_max as f64,
            ));
        }
    }
    // C2: fill-rates of a carrier sum to at most one.
    for l in 0..nl {
        for c in 0..cat.carriers(l) {
            rows.push(LinearConstraint::new(
                format!("C2_{}", idx(&[l, c])),
                "C2",
                (0..cat.users(l)).map(|u| (cat.beta(l, c, u), 1.0)),
                Sense::Le,
                1.0,
            ));
        }
    }
    // C3: at most N_T clusters lit per slot.
    for t in 0..nt {
        rows.push(LinearConstraint::new(
            format!("C3_{}", idx(&[t])),
            "C3",
            (0..nl).map(|l| (cat.z(l, t), 1.0)),
            Sense::Le,
            cfg.active_clusters_per_slot as f64,
        ));
    }
    // C4: s_{u,l} - tU[l] d_{u,l} >= 0 with s from the linearized products.
    for l in 0..nl {
        for u in 0..cat.users(l) {
            let mut terms = supply_terms(&cat, rates, l, u);
            terms.push((cat.t_user(l), -scenario.demand(l, u)));
            rows.push(LinearConstraint::new(
                format!("C4_{}", idx(&[l, u])),
                "C4",
                terms,
                Sense::Ge,
                0.0,
            ));
        }
    }
    // C5: s_l - tL d_l >= 0.
    for l in 0..nl {
        let mut terms: Vec<(usize, f64)> = (0..cat.users(l))
            .flat_map(|u| supply_terms(&cat, rates, l, u))
            .collect();
        terms.push((cat.t_cluster(), -scenario.cluster_demand(l)));
        rows.push(LinearConstraint::new(
            format!("C5_{}", idx(&[l])),
            "C5",
            terms,
            Sense::Ge,
            0.0,
        ));
    }
    // C6: adjacent clusters are never lit together.
    for &(n1, n2) in pairs {
        for t in 0..nt {
            rows.push(LinearConstraint::new(
                format!("C6_{}", idx(&[n1, n2, t])),
                "C6",
                [(cat.z(n1, t), 1.0), (cat.z(n2, t), 1.0)],
                Sense::Le,
                1.0,
            ));
        }
    }
    // C7: beta <= M a and beta >= eps - (1 - a), with M = 1.
    for l in 0..nl {
        for c in 0..cat.carriers(l) {
            for u in 0..cat.users(l) {
                rows.push(LinearConstraint::new(
                    format!("C7a_{}", idx(&[l, c, u])),
                    "C7-a",
                    [(cat.beta(l, c, u), 1.0), (cat.a(l, c, u), -1.0)],
                    Sense::Le,
                    0.0,
                ));
            }
        }
    }
    for l in 0..nl {
        for c in 0..cat.carriers(l) {
            for u in 0..cat.users(l) {
                rows.push(LinearConstraint::new(
                    format!("C7b_{}", idx(&[l, c, u])),
                    "C7-b",
                    [(cat.beta(l, c, u), 1.0), (cat.a(l, c, u), -1.0)],
                    Sense::Ge,
                    eps - 1.0,
                ));
            }
        }
    }
    // C8: theta below every ratio objective.
    for l in 0..nl {
        rows.push(LinearConstraint::new(
            format!("C8a_{}", idx(&[l])),
            "C8-a",
            [(cat.theta(), 1.0), (cat.t_user(l), -1.0)],
            Sense::Le,
            0.0,
        ));
    }
    rows.push(LinearConstraint::new(
        "C8b",
        "C8-b",
        [(cat.theta(), 1.0), (cat.t_cluster(), -1.0)],
        Sense::Le,
        0.0,
    ));
    // C9: McCormick envelope of q = beta * z.
    for l in 0..nl {
        for c in 0..cat.carriers(l) {
            for u in 0..cat.users(l) {
                for t in 0..nt {
                    let (q, b, z) = (cat.q(l, c, u, t), cat.beta(l, c, u), cat.z(l, t));
                    let name = idx(&[l, c, u, t]);
                    rows.push(LinearConstraint::new(
                        format!("C9a_{name}"),
                        "C9-a",
                        [(q, 1.0)],
                        Sense::Ge,
                        0.0,
                    ));
                    rows.push(LinearConstraint::new(
                        format!("C9b_{name}"),
                        "C9-b",
                        [(q, 1.0), (z, -1.0)],
                        Sense::Le,
                        0.0,
                    ));
                    rows.push(LinearConstraint::new(
                        format!("C9c_{name}"),
                        "C9-c",
                        [(q, 1.0), (b, -1.0)],
                        Sense::Le,
                        0.0,
                    ));
                    rows.push(LinearConstraint::new(
                        format!("C9d_{name}"),
                        "C9-d",
                        [(q, 1.0), (b, -1.0), (z, -1.0)],
                        Sense::Ge,
                        -1.0,
                    ));
                }
            }
        }
    }

    // A carrier can carry at most one full slot of traffic while its cluster
    // is lit: sum_u q[l][c][u][t] <= z[l][t]. Implied by C2 and q = beta * z,
    // but not by the linearization on its own.
    let mut cuts = Vec::new();
    if params.slot_cuts {
        for l in 0..nl {
            for c in 0..cat.carriers(l) {
                for t in 0..nt {
                    let terms = (0..cat.users(l))
                        .map(|u| (cat.q(l, c, u, t), 1.0))
                        .chain([(cat.z(l, t), -1.0)]);
                    cuts.push(LinearConstraint::new(
                        format!("Cap_{}", idx(&[l, c, t])),
                        "Cap",
                        terms,
                        Sense::Le,
                        0.0,
                    ));
                }
            }
        }
    }

    let mut objective = vec![(cat.theta(), 1.0)];
    objective.extend((0..nl).map(|l| (cat.t_user(l), params.epsilon_obj)));
    objective.push((cat.t_cluster(), params.epsilon_obj));
    objective.sort_by_key(|t| t.0);

    Ok(ModelInstance {
        problem: MilpProblem {
            name: "bhca".to_string(),
            columns,
            constraints: rows,
            objective,
            cuts,
        },
        catalog: cat,
        epsilon_obj: params.epsilon_obj,
        epsilon_fill: params.epsilon_fill,
        big_m: 1.0,
    })
}

/// `sum_t sum_c R[l][c][u] q[l][c][u][t]`, zero rates dropped.
fn supply_terms(cat: &VariableCatalog, rates: &RateTable, l: usize, u: usize) -> Vec<(usize, f64)> {
    let mut terms = Vec::with_capacity(cat.carriers(l) * cat.slots());
    for t in 0..cat.slots() {
        for c in 0..cat.carriers(l) {
            let r = rates.rate_per_slot(l, c, u);
            if r != 0.0 {
                terms.push((cat.q(l, c, u, t), r));
            }
        }
    }
    terms
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    Row { name: String, tag: String },
    Bound { column: String },
    Integrality { column: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub amount: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ViolationKind::Row { name, .. } => write!(f, "row {name}")?,
            ViolationKind::Bound { column } => write!(f, "bound of {column}")?,
            ViolationKind::Integrality { column } => write!(f, "integrality of {column}")?,
        }
        write!(f, " by {:.3e}", self.amount)
    }
}

/// Every constraint, bound and integrality violation above
/// [`VALIDATION_TOL`]. Empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tags(&self) -> BTreeSet<String> {
        self.violations
            .iter()
            .filter_map(|v| match &v.kind {
                ViolationKind::Row { tag, .. } => Some(tag.clone()),
                _ => None,
            })
            .collect()
    }
}

pub fn validate_solution(problem: &MilpProblem, x: &[f64]) -> Result<ViolationReport, ModelError> {
    if x.len() != problem.num_columns() {
        return Err(ModelError::MissingColumns {
            expected: problem.num_columns(),
            got: x.len(),
        });
    }
    let mut report = ViolationReport::default();
    for row in &problem.constraints {
        let v = row.violation(x);
        if !(v <= VALIDATION_TOL * row.scale()) {
            report.violations.push(Violation {
                kind: ViolationKind::Row {
                    name: row.name.clone(),
                    tag: row.tag.clone(),
                },
                amount: v,
            });
        }
    }
    for (col, &v) in problem.columns.iter().zip(x) {
        let out = (col.lower - v).max(v - col.upper).max(0.0);
        if !(out <= VALIDATION_TOL) {
            report.violations.push(Violation {
                kind: ViolationKind::Bound {
                    column: col.name.clone(),
                },
                amount: if out.is_nan() { f64::INFINITY } else { out },
            });
        }
        if col.binary {
            let frac = (v - v.round()).abs();
            if !(frac <= VALIDATION_TOL) {
                report.violations.push(Violation {
                    kind: ViolationKind::Integrality {
                        column: col.name.clone(),
                    },
                    amount: frac,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserAllocation {
    pub user: usize,
    /// Global ids of the carriers assigned to the user.
    pub carriers: Vec<usize>,
    /// Fill-rate on each carrier of the cluster, local carrier order.
    pub fill_rates: Vec<f64>,
    pub demand: f64,
    /// bits per hopping window
    pub supply: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAllocation {
    pub cluster: usize,
    /// Slots in which the cluster is illuminated.
    pub slots: Vec<usize>,
    pub demand: f64,
    pub supply: f64,
    pub users: Vec<UserAllocation>,
}

/// Decoded BH-CA plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationPlan {
    pub clusters: Vec<ClusterAllocation>,
    pub total_supply: f64,
    pub objective: f64,
    pub theta: f64,
}

impl AllocationPlan {
    /// Supplies indexed by global user id.
    pub fn user_supplies(&self, num_users: usize) -> Vec<f64> {
        let mut s = vec![0.0; num_users];
        for cl in &self.clusters {
            for u in &cl.users {
                s[u.user] = u.supply;
            }
        }
        s
    }
}

/// Turns a feasible solution into a human-meaningful plan. Supplies are
/// recomputed from `q` and the rate table: `s_u = sum_t sum_c q R`.
pub fn decode_plan(
    model: &ModelInstance,
    solution: &MilpSolution,
    scenario: &Scenario,
    rates: &RateTable,
) -> Result<AllocationPlan, ModelError> {
    let x = &solution.values;
    let report = validate_solution(&model.problem, x)?;
    if !report.is_empty() {
        return Err(ModelError::Infeasible(report));
    }
    let cat = &model.catalog;
    let mut clusters = Vec::with_capacity(cat.num_clusters());
    let mut total = 0.0;
    for (l, cluster) in scenario.clusters.iter().enumerate() {
        let slots: Vec<usize> = (0..cat.slots()).filter(|&t| x[cat.z(l, t)] > 0.5).collect();
        let mut users = Vec::with_capacity(cat.users(l));
        let mut cluster_supply = 0.0;
        for u in 0..cat.users(l) {
            let mut supply = 0.0;
            for t in 0..cat.slots() {
                for c in 0..cat.carriers(l) {
                    supply += x[cat.q(l, c, u, t)] * rates.rate_per_slot(l, c, u);
                }
            }
            cluster_supply += supply;
            users.push(UserAllocation {
                user: cluster.user_ids[u],
                carriers: (0..cat.carriers(l))
                    .filter(|&c| x[cat.a(l, c, u)] > 0.5)
                    .map(|c| cluster.carrier_ids[c])
                    .collect(),
                fill_rates: (0..cat.carriers(l)).map(|c| x[cat.beta(l, c, u)]).collect(),
                demand: scenario.demand(l, u),
                supply,
            });
        }
        total += cluster_supply;
        clusters.push(ClusterAllocation {
            cluster: l,
            slots,
            demand: scenario.cluster_demand(l),
            supply: cluster_supply,
            users,
        });
    }
    Ok(AllocationPlan {
        clusters,
        total_supply: total,
        objective: solution.objective,
        theta: x[cat.theta()],
    })
}
