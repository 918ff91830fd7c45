mod common;

use bhca::baseline::{schedule_model, solve_bh};
use bhca::metrics::{audit_schedule, SupplyPlan};
use bhca::solver::{brute_force, MilpStatus, SolverOptions};
use bhca::SystemConfig;

use common::fixture;

fn eight_cluster_short_window(seed: u64) -> SystemConfig {
    SystemConfig {
        slots_per_window: 2,
        users_per_beam: 3,
        rng_seed: seed,
        ..SystemConfig::reference()
    }
}

#[test]
fn min_cluster_ratio_matches_enumeration_over_schedules() {
    for seed in [7, 21] {
        let f = fixture(&eight_cluster_short_window(seed));
        let model = schedule_model(&f.scenario, &f.rates, &f.pairs);
        assert_eq!(model.problem.binary_columns().len(), 16);
        let oracle = brute_force(&model.problem).unwrap();
        let plan = solve_bh(&f.scenario, &f.rates, &f.pairs, &SolverOptions::default()).unwrap();
        assert_eq!(plan.status, MilpStatus::Optimal);
        assert!(
            (plan.min_cluster_ratio - oracle.objective).abs() <= 1e-6,
            "seed {seed}: {} vs {}",
            plan.min_cluster_ratio,
            oracle.objective
        );
    }
}

#[test]
fn plans_respect_the_illumination_rules() {
    for cfg in [eight_cluster_short_window(3), SystemConfig::desk()] {
        let f = fixture(&cfg);
        let plan = solve_bh(&f.scenario, &f.rates, &f.pairs, &SolverOptions { node_limit: 200, ..Default::default() }).unwrap();
        let audit = audit_schedule(
            &plan.illumination(),
            &f.pairs,
            cfg.active_clusters_per_slot,
            cfg.slots_per_window,
        );
        assert!(audit.is_clean(), "{audit:?}");
    }
}

#[test]
fn users_are_served_by_one_carrier_of_their_own_beam() {
    let f = fixture(&SystemConfig::desk());
    let plan = solve_bh(&f.scenario, &f.rates, &f.pairs, &SolverOptions { node_limit: 200, ..Default::default() }).unwrap();
    for (l, cluster) in plan.clusters.iter().enumerate() {
        for (u, bu) in cluster.users.iter().enumerate() {
            let user = &f.scenario.users[bu.user];
            assert_eq!(bu.beam, user.beam_id);
            let carrier = &f.scenario.carriers[bu.carrier];
            assert_eq!(carrier.beam_id, user.beam_id);
            // Supply is the user's own per-slot rate times its slots, nothing borrowed.
            let c = f.scenario.clusters[l].carrier_ids.iter().position(|&id| id == bu.carrier).unwrap();
            assert_eq!(bu.supply, bu.slots as f64 * f.rates.rate_per_slot(l, c, u));
        }
    }
}

#[test]
fn slot_shares_add_up_to_each_beam_budget() {
    let f = fixture(&SystemConfig::desk());
    let plan = solve_bh(&f.scenario, &f.rates, &f.pairs, &SolverOptions { node_limit: 200, ..Default::default() }).unwrap();
    for (l, cluster) in plan.clusters.iter().enumerate() {
        for &beam in &f.scenario.clusters[l].beam_ids {
            let carriers = f.scenario.clusters[l]
                .carrier_ids
                .iter()
                .filter(|&&c| f.scenario.carriers[c].beam_id == beam)
                .count();
            let shares: Vec<usize> = cluster.users.iter().filter(|u| u.beam == beam).map(|u| u.slots).collect();
            if !shares.is_empty() {
                assert_eq!(shares.iter().sum::<usize>(), cluster.slots.len() * carriers);
            }
        }
    }
}
