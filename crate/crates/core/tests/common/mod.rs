#![allow(dead_code)]

use std::collections::BTreeSet;

use bhca::model::build_model;
use bhca::scenario::{adjacency_pairs, compute_rate_table, generate_scenario, ModcodTable, RateTable, Scenario, SystemConfig};
use bhca::ModelInstance;

/// 2 clusters x 2 beams, one user per beam, 2 carriers, 2 slots, one active
/// cluster per slot: 12 binaries.
pub fn tiny_config(seed: u64) -> SystemConfig {
    SystemConfig {
        num_beams: 4,
        num_clusters: 2,
        users_per_beam: 1,
        slots_per_window: 2,
        active_clusters_per_slot: 1,
        rng_seed: seed,
        ..SystemConfig::reference()
    }
}

pub struct Fixture {
    pub scenario: Scenario,
    pub rates: RateTable,
    pub pairs: BTreeSet<(usize, usize)>,
    pub model: ModelInstance,
}

pub fn fixture(config: &SystemConfig) -> Fixture {
    let scenario = generate_scenario(config).expect("valid config");
    let rates = compute_rate_table(&scenario, &ModcodTable::dvbs2x());
    let pairs = adjacency_pairs(&scenario);
    let model = build_model(&scenario, &rates, &pairs).expect("model builds");
    Fixture {
        scenario,
        rates,
        pairs,
        model,
    }
}

/// Wraps a hand-made assignment as a solver result.
pub fn as_solution(problem: &bhca::model::MilpProblem, values: Vec<f64>) -> bhca::MilpSolution {
    bhca::MilpSolution {
        objective: problem.objective_value(&values),
        values,
        status: bhca::solver::MilpStatus::Optimal,
        nodes_explored: 0,
        lp_iterations: 0,
        wall_time: 0.0,
        gap: 0.0,
        root_bound: f64::NAN,
        log: Vec::new(),
    }
}
