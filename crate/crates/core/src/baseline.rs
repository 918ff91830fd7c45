//! Conventional beam hopping without carrier aggregation.
//!
//! Stage 1 schedules cluster illumination with a z-only max-min MILP in which
//! every carrier serves its own beam at full capacity. Unscheduled capacity
//! left over after the max-min optimum is then filled greedily (which never
//! lowers the minimum). Stage 2 splits each beam's slots among the beam's
//! users; a slot is never shared, so capacity a low-demand user cannot use is
//! lost rather than passed to a neighbour.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{Column, LinearConstraint, MilpProblem, Sense};
use crate::scenario::{RateTable, Scenario};
use crate::solver::{solve_milp, MilpSolution, MilpStatus, SolverError, SolverOptions};

#[derive(Debug, Clone, Serialize)]
pub struct BhUser {
    pub user: usize,
    pub beam: usize,
    /// Global id of the single carrier serving the user.
    pub carrier: usize,
    pub slots: usize,
    pub demand: f64,
    /// bits per hopping window
    pub supply: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BhCluster {
    pub cluster: usize,
    pub slots: Vec<usize>,
    /// Per-slot capacity used by the scheduling stage.
    pub capacity_per_slot: f64,
    pub demand: f64,
    pub supply: f64,
    pub users: Vec<BhUser>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BhPlan {
    pub clusters: Vec<BhCluster>,
    pub total_supply: f64,
    /// Max-min cluster ratio reached by the scheduling stage.
    pub min_cluster_ratio: f64,
    pub status: MilpStatus,
    pub nodes_explored: u64,
    #[serde(skip)]
    pub schedule: MilpSolution,
}

impl BhPlan {
    pub fn slots_per_cluster(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.slots.clone()).collect()
    }
}

/// The scheduling MILP: columns `z_l_t` (binary, cluster-major) then `theta`.
pub struct ScheduleModel {
    pub problem: MilpProblem,
    pub slots: usize,
    /// Per-slot capacity `R_l` of each cluster.
    pub capacity: Vec<f64>,
}

impl ScheduleModel {
    pub fn z(&self, l: usize, t: usize) -> usize {
        l * self.slots + t
    }

    pub fn theta(&self) -> usize {
        self.capacity.len() * self.slots
    }
}

/// Per-slot capacity of cluster `l` when each carrier serves its own beam:
/// the mean rate of that beam's users on the carrier. A beam without users
/// contributes nothing.
pub fn cluster_capacity(scenario: &Scenario, rates: &RateTable, l: usize) -> f64 {
    let cluster = &scenario.clusters[l];
    cluster
        .carrier_ids
        .iter()
        .enumerate()
        .map(|(c, &cid)| {
            let beam = scenario.carriers[cid].beam_id;
            let on_beam: Vec<usize> = (0..cluster.user_ids.len())
                .filter(|&u| scenario.users[cluster.user_ids[u]].beam_id == beam)
                .collect();
            if on_beam.is_empty() {
                0.0
            } else {
                on_beam.iter().map(|&u| rates.rate_per_slot(l, c, u)).sum::<f64>() / on_beam.len() as f64
            }
        })
        .sum()
}

pub fn schedule_model(
    scenario: &Scenario,
    rates: &RateTable,
    pairs: &BTreeSet<(usize, usize)>,
) -> ScheduleModel {
    let num_l = scenario.num_clusters();
    let slots = scenario.num_slots();
    let capacity: Vec<f64> = (0..num_l).map(|l| cluster_capacity(scenario, rates, l)).collect();
    let mut columns = Vec::with_capacity(num_l * slots + 1);
    for l in 0..num_l {
        for t in 0..slots {
            columns.push(Column::binary(format!("z_{}_{}", l + 1, t + 1)));
        }
    }
    let theta = columns.len();
    columns.push(Column::continuous("theta", f64::NEG_INFINITY, f64::INFINITY));
    let z = |l: usize, t: usize| l * slots + t;
    let mut constraints = Vec::new();
    for l in 0..num_l {
        // sum_t (R_l / d_l) z_lt - theta >= 0
        let per_slot = capacity[l] / scenario.cluster_demand(l);
        let terms = (0..slots).map(|t| (z(l, t), per_slot)).chain([(theta, -1.0)]);
        constraints.push(LinearConstraint::new(format!("ratio_{}", l + 1), "ratio", terms, Sense::Ge, 0.0));
    }
    let n_t = scenario.config.active_clusters_per_slot as f64;
    for t in 0..slots {
        let terms = (0..num_l).map(|l| (z(l, t), 1.0));
        constraints.push(LinearConstraint::new(format!("C3_{}", t + 1), "C3", terms, Sense::Le, n_t));
    }
    for &(n1, n2) in pairs {
        for t in 0..slots {
            constraints.push(LinearConstraint::new(
                format!("C6_{}_{}_{}", n1 + 1, n2 + 1, t + 1),
                "C6",
                [(z(n1, t), 1.0), (z(n2, t), 1.0)],
                Sense::Le,
                1.0,
            ));
        }
    }
    ScheduleModel {
        problem: MilpProblem {
            name: "bh_schedule".into(),
            columns,
            constraints,
            objective: vec![(theta, 1.0)],
            cuts: Vec::new(),
        },
        slots,
        capacity,
    }
}

/// Splits `budget` slots among users with the given demands.
///
/// With more slots than users the split is proportional to demand using the
/// largest-remainder method (ties to the lower index). Otherwise the
/// `budget` highest-demand users get one slot each (ties to the lower index).
pub fn distribute_slots(budget: usize, demands: &[f64]) -> Vec<usize> {
    let n = demands.len();
    let mut out = vec![0; n];
    if n == 0 || budget == 0 {
        return out;
    }
    let mut order: Vec<usize> = (0..n).collect();
    if budget <= n {
        order.sort_by(|&a, &b| demands[b].total_cmp(&demands[a]).then(a.cmp(&b)));
        for &u in order.iter().take(budget) {
            out[u] = 1;
        }
        return out;
    }
    let total: f64 = demands.iter().sum();
    let quotas: Vec<f64> = if total > 0.0 {
        demands.iter().map(|d| budget as f64 * d / total).collect()
    } else {
        vec![budget as f64 / n as f64; n]
    };
    let mut given = 0;
    for u in 0..n {
        out[u] = quotas[u].floor() as usize;
        given += out[u];
    }
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &u in order.iter().take(budget - given) {
        out[u] += 1;
    }
    out
}

/// Adds illumination wherever C3 and C6 still allow it, visiting slots in
/// order and, within a slot, clusters by increasing current ratio.
fn fill_idle_slots(model: &ScheduleModel, demand: &[f64], z: &mut [Vec<bool>], pairs: &BTreeSet<(usize, usize)>, n_t: usize) {
    let num_l = z.len();
    for t in 0..model.slots {
        let mut order: Vec<usize> = (0..num_l).collect();
        let ratio = |l: usize, z: &[Vec<bool>]| {
            z[l].iter().filter(|&&on| on).count() as f64 * model.capacity[l] / demand[l]
        };
        order.sort_by(|&a, &b| ratio(a, z).total_cmp(&ratio(b, z)).then(a.cmp(&b)));
        for l in order {
            if z[l][t] || model.capacity[l] <= 0.0 {
                continue;
            }
            let active = (0..num_l).filter(|&k| z[k][t]).count();
            let blocked = pairs
                .iter()
                .any(|&(a, b)| (a == l && z[b][t]) || (b == l && z[a][t]));
            if active < n_t && !blocked {
                z[l][t] = true;
            }
        }
    }
}

pub fn solve_bh(
    scenario: &Scenario,
    rates: &RateTable,
    pairs: &BTreeSet<(usize, usize)>,
    opts: &SolverOptions,
) -> Result<BhPlan, SolverError> {
    let model = schedule_model(scenario, rates, pairs);
    let solution = solve_milp(&model.problem, opts)?;
    let num_l = scenario.num_clusters();
    if matches!(solution.status, MilpStatus::Infeasible) {
        // All-dark is always feasible, so this cannot happen on a valid scenario.
        return Err(SolverError::Infeasible("beam-hopping schedule"));
    }
    let demand: Vec<f64> = (0..num_l).map(|l| scenario.cluster_demand(l)).collect();
    let mut z: Vec<Vec<bool>> = (0..num_l)
        .map(|l| (0..model.slots).map(|t| solution.values[model.z(l, t)] > 0.5).collect())
        .collect();
    fill_idle_slots(&model, &demand, &mut z, pairs, scenario.config.active_clusters_per_slot);

    let mut clusters = Vec::with_capacity(num_l);
    let mut total = 0.0;
    for (l, cluster) in scenario.clusters.iter().enumerate() {
        let slots: Vec<usize> = (0..model.slots).filter(|&t| z[l][t]).collect();
        let mut users: Vec<Option<BhUser>> = vec![None; cluster.user_ids.len()];
        for &beam in &cluster.beam_ids {
            let beam_carriers: Vec<usize> = (0..cluster.carrier_ids.len())
                .filter(|&c| scenario.carriers[cluster.carrier_ids[c]].beam_id == beam)
                .collect();
            let members: Vec<usize> = (0..cluster.user_ids.len())
                .filter(|&u| scenario.users[cluster.user_ids[u]].beam_id == beam)
                .collect();
            let demands: Vec<f64> = members.iter().map(|&u| scenario.demand(l, u)).collect();
            let budget = slots.len() * beam_carriers.len();
            let shares = distribute_slots(budget, &demands);
            for (k, &u) in members.iter().enumerate() {
                // The user's best carrier on its beam; none if the beam is unserved.
                let best = beam_carriers
                    .iter()
                    .copied()
                    .max_by(|&a, &b| rates.rate_per_slot(l, a, u).total_cmp(&rates.rate_per_slot(l, b, u)).then(b.cmp(&a)));
                let (carrier, rate) = match best {
                    Some(c) => (cluster.carrier_ids[c], rates.rate_per_slot(l, c, u)),
                    None => (usize::MAX, 0.0),
                };
                users[u] = Some(BhUser {
                    user: cluster.user_ids[u],
                    beam,
                    carrier,
                    slots: shares[k],
                    demand: demands[k],
                    supply: shares[k] as f64 * rate,
                });
            }
        }
        let users: Vec<BhUser> = users.into_iter().map(|u| u.expect("every user sits in a cluster beam")).collect();
        let supply = users.iter().map(|u| u.supply).sum::<f64>();
        total += supply;
        clusters.push(BhCluster {
            cluster: l,
            slots,
            capacity_per_slot: model.capacity[l],
            demand: demand[l],
            supply,
            users,
        });
    }
    let min_cluster_ratio = clusters
        .iter()
        .map(|c| c.slots.len() as f64 * c.capacity_per_slot / c.demand)
        .fold(f64::INFINITY, f64::min);
    Ok(BhPlan {
        clusters,
        total_supply: total,
        min_cluster_ratio,
        status: solution.status,
        nodes_explored: solution.nodes_explored,
        schedule: solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_split() {
        assert_eq!(distribute_slots(8, &[1.0, 1.0, 1.0, 1.0]), vec![2, 2, 2, 2]);
        // quotas 5.0, 2.5, 2.5 -> the tie goes to the lower index
        assert_eq!(distribute_slots(10, &[2.0, 1.0, 1.0]), vec![5, 3, 2]);
        assert_eq!(distribute_slots(7, &[3.0, 1.0]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn fewer_slots_than_users() {
        assert_eq!(distribute_slots(2, &[0.5, 2.0, 1.0]), vec![0, 1, 1]);
        assert_eq!(distribute_slots(3, &[1.0, 1.0, 1.0]), vec![1, 1, 1]);
        assert_eq!(distribute_slots(0, &[1.0]), vec![0]);
    }
}
