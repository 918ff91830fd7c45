//! Demand matching and fairness metrics for any supply plan.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::baseline::BhPlan;
use crate::model::AllocationPlan;
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("Jain index of an empty vector")]
    Empty,
    #[error("ratio {0} is negative or not finite")]
    InvalidRatio(f64),
    #[error("Jain index is undefined when every ratio is zero")]
    AllZero,
    #[error("user {0} has zero demand; ratios are undefined")]
    ZeroDemand(usize),
    #[error("plan covers {got} users, scenario has {expected}")]
    Shape { expected: usize, got: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Jain's fairness index `(sum x)^2 / (N sum x^2)` with `N = x.len()`.
pub fn jain_index(ratios: &[f64]) -> Result<f64, MetricsError> {
    if ratios.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = ratios.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(MetricsError::InvalidRatio(bad));
    }
    // Normalizing by the largest entry keeps the squares in range.
    let max = ratios.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MetricsError::AllZero);
    }
    let (sum, sq) = ratios
        .iter()
        .map(|r| r / max)
        .fold((0.0, 0.0), |(s, q), r| (s + r, q + r * r));
    Ok((sum * sum / (ratios.len() as f64 * sq)).min(1.0))
}

/// Anything that assigns a supply (bits per hopping window) to every user.
pub trait SupplyPlan {
    fn scheme(&self) -> &'static str;
    /// Supply per global user id.
    fn supply_by_user(&self, num_users: usize) -> Vec<f64>;
    /// Illuminated slots of every cluster.
    fn illumination(&self) -> Vec<Vec<usize>>;
}

impl SupplyPlan for AllocationPlan {
    fn scheme(&self) -> &'static str {
        "bhca"
    }

    fn supply_by_user(&self, num_users: usize) -> Vec<f64> {
        self.user_supplies(num_users)
    }

    fn illumination(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.slots.clone()).collect()
    }
}

impl SupplyPlan for BhPlan {
    fn scheme(&self) -> &'static str {
        "bh"
    }

    fn supply_by_user(&self, num_users: usize) -> Vec<f64> {
        let mut s = vec![0.0; num_users];
        for c in &self.clusters {
            for u in &c.users {
                s[u.user] = u.supply;
            }
        }
        s
    }

    fn illumination(&self) -> Vec<Vec<usize>> {
        self.slots_per_cluster()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserMetrics {
    pub user: usize,
    pub cluster: usize,
    pub demand: f64,
    pub supply: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterMetrics {
    pub cluster: usize,
    pub demand: f64,
    pub supply: f64,
    pub ratio: f64,
    /// Jain index over the cluster's user ratios; `None` when all are zero.
    pub jain: Option<f64>,
    pub min_user_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemMetrics {
    pub total_demand: f64,
    pub total_supply: f64,
    pub total_demand_mbps: f64,
    pub total_supply_mbps: f64,
    /// Supply beyond demand summed over users.
    pub unused_capacity: f64,
    pub unused_capacity_mbps: f64,
    /// Supply beyond demand summed over clusters.
    pub beam_overshoot: f64,
    /// Jain index over all user ratios pooled.
    pub user_jain: Option<f64>,
    /// Jain index over the cluster ratios.
    pub beam_jain: Option<f64>,
    pub min_user_ratio: f64,
    pub min_cluster_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scheme: String,
    pub hopping_window: f64,
    pub users: Vec<UserMetrics>,
    pub clusters: Vec<ClusterMetrics>,
    pub system: SystemMetrics,
}

fn mbps(bits: f64, window: f64) -> f64 {
    bits / window / 1e6
}

pub fn build_report<P: SupplyPlan + ?Sized>(plan: &P, scenario: &Scenario) -> Result<MetricsReport, MetricsError> {
    let supply = plan.supply_by_user(scenario.users.len());
    if supply.len() != scenario.users.len() {
        return Err(MetricsError::Shape {
            expected: scenario.users.len(),
            got: supply.len(),
        });
    }
    if let Some(u) = scenario.users.iter().find(|u| !(u.demand > 0.0)) {
        return Err(MetricsError::ZeroDemand(u.id));
    }
    let window = scenario.config.hopping_window();
    let mut users = Vec::with_capacity(scenario.users.len());
    let mut clusters = Vec::with_capacity(scenario.clusters.len());
    let mut unused = 0.0;
    let mut overshoot = 0.0;
    let (mut total_demand, mut total_supply) = (0.0, 0.0);
    for cluster in &scenario.clusters {
        let (mut d_l, mut s_l) = (0.0, 0.0);
        let mut ratios = Vec::with_capacity(cluster.user_ids.len());
        for &u in &cluster.user_ids {
            let d = scenario.users[u].demand;
            let s = supply[u];
            d_l += d;
            s_l += s;
            unused += (s - d).max(0.0);
            ratios.push(s / d);
            users.push(UserMetrics {
                user: u,
                cluster: cluster.id,
                demand: d,
                supply: s,
                ratio: s / d,
            });
        }
        overshoot += (s_l - d_l).max(0.0);
        total_demand += d_l;
        total_supply += s_l;
        clusters.push(ClusterMetrics {
            cluster: cluster.id,
            demand: d_l,
            supply: s_l,
            ratio: s_l / d_l,
            jain: jain_index(&ratios).ok(),
            min_user_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let user_ratios: Vec<f64> = users.iter().map(|u| u.ratio).collect();
    let cluster_ratios: Vec<f64> = clusters.iter().map(|c| c.ratio).collect();
    let system = SystemMetrics {
        total_demand,
        total_supply,
        total_demand_mbps: mbps(total_demand, window),
        total_supply_mbps: mbps(total_supply, window),
        unused_capacity: unused,
        unused_capacity_mbps: mbps(unused, window),
        beam_overshoot: overshoot,
        user_jain: jain_index(&user_ratios).ok(),
        beam_jain: jain_index(&cluster_ratios).ok(),
        min_user_ratio: user_ratios.iter().copied().fold(f64::INFINITY, f64::min),
        min_cluster_ratio: cluster_ratios.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(MetricsReport {
        scheme: plan.scheme().to_string(),
        hopping_window: window,
        users,
        clusters,
        system,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scope: &'a str,
    id: String,
    demand_bphw: f64,
    supply_bphw: f64,
    ratio: f64,
    jain: Option<f64>,
}

impl MetricsReport {
    /// One row per user, one per cluster and a final system row.
    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for u in &self.users {
            w.serialize(CsvRow {
                scope: "user",
                id: u.user.to_string(),
                demand_bphw: u.demand,
                supply_bphw: u.supply,
                ratio: u.ratio,
                jain: None,
            })?;
        }
        for c in &self.clusters {
            w.serialize(CsvRow {
                scope: "cluster",
                id: c.cluster.to_string(),
                demand_bphw: c.demand,
                supply_bphw: c.supply,
                ratio: c.ratio,
                jain: c.jain,
            })?;
        }
        let s = &self.system;
        w.serialize(CsvRow {
            scope: "system",
            id: "all".into(),
            demand_bphw: s.total_demand,
            supply_bphw: s.total_supply,
            ratio: s.total_supply / s.total_demand,
            jain: s.user_jain,
        })?;
        let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Side-by-side summary of the two schemes on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub bhca_user_jain: Option<f64>,
    pub bh_user_jain: Option<f64>,
    pub bhca_beam_jain: Option<f64>,
    pub bh_beam_jain: Option<f64>,
    pub bhca_min_user_ratio: f64,
    pub bh_min_user_ratio: f64,
    pub bhca_unused_capacity_mbps: f64,
    pub bh_unused_capacity_mbps: f64,
    pub total_demand_mbps: f64,
    pub bhca_supply_mbps: f64,
    pub bh_supply_mbps: f64,
}

pub fn compare(bhca: &MetricsReport, bh: &MetricsReport) -> Comparison {
    Comparison {
        bhca_user_jain: bhca.system.user_jain,
        bh_user_jain: bh.system.user_jain,
        bhca_beam_jain: bhca.system.beam_jain,
        bh_beam_jain: bh.system.beam_jain,
        bhca_min_user_ratio: bhca.system.min_user_ratio,
        bh_min_user_ratio: bh.system.min_user_ratio,
        bhca_unused_capacity_mbps: bhca.system.unused_capacity_mbps,
        bh_unused_capacity_mbps: bh.system.unused_capacity_mbps,
        total_demand_mbps: bhca.system.total_demand_mbps,
        bhca_supply_mbps: bhca.system.total_supply_mbps,
        bh_supply_mbps: bh.system.total_supply_mbps,
    }
}

/// Illumination rule breaches of a schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScheduleAudit {
    /// Slots with more than `N_T` lit clusters.
    pub over_capacity: Vec<usize>,
    /// Adjacent cluster pairs lit in the same slot, as `(l1, l2, t)`.
    pub adjacent: Vec<(usize, usize, usize)>,
}

impl ScheduleAudit {
    pub fn is_clean(&self) -> bool {
        self.over_capacity.is_empty() && self.adjacent.is_empty()
    }
}

/// Checks the per-slot cluster budget and the non-adjacency rule.
pub fn audit_schedule(
    illumination: &[Vec<usize>],
    pairs: &BTreeSet<(usize, usize)>,
    active_per_slot: usize,
    slots: usize,
) -> ScheduleAudit {
    let lit = |l: usize, t: usize| illumination[l].contains(&t);
    let mut audit = ScheduleAudit::default();
    for t in 0..slots {
        if (0..illumination.len()).filter(|&l| lit(l, t)).count() > active_per_slot {
            audit.over_capacity.push(t);
        }
        for &(a, b) in pairs {
            if lit(a, t) && lit(b, t) {
                audit.adjacent.push((a, b, t));
            }
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(jain_index(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((jain_index(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((jain_index(&[1.0, 0.5]).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn audit_flags_both_rules() {
        let pairs = BTreeSet::from([(0, 1)]);
        let schedule = vec![vec![0, 1], vec![1], vec![1]];
        let audit = audit_schedule(&schedule, &pairs, 2, 2);
        assert_eq!(audit.over_capacity, vec![1]);
        assert_eq!(audit.adjacent, vec![(0, 1, 1)]);
        assert!(audit_schedule(&[vec![0], vec![1]], &pairs, 1, 2).is_clean());
    }

    #[test]
    fn undefined_inputs() {
        assert!(matches!(jain_index(&[0.0, 0.0]), Err(MetricsError::AllZero)));
        assert!(matches!(jain_index(&[]), Err(MetricsError::Empty)));
        assert!(matches!(jain_index(&[1.0, -1.0]), Err(MetricsError::InvalidRatio(_))));
    }
}
