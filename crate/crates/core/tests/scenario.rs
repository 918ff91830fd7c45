use std::collections::BTreeSet;

use bhca::scenario::{adjacency_pairs, compute_rate_table, generate_scenario, ModcodTable, SystemConfig};
use proptest::prelude::*;

#[test]
fn same_seed_gives_identical_bytes() {
    let cfg = SystemConfig::reference();
    let a = generate_scenario(&cfg).unwrap();
    let b = generate_scenario(&cfg).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    let ra = compute_rate_table(&a, &ModcodTable::dvbs2x());
    let rb = compute_rate_table(&b, &ModcodTable::dvbs2x());
    assert_eq!(serde_json::to_vec(&ra).unwrap(), serde_json::to_vec(&rb).unwrap());

    let other = generate_scenario(&SystemConfig { rng_seed: 8, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn sixteen_beams_form_eight_clusters() {
    let s = generate_scenario(&SystemConfig::reference()).unwrap();
    assert_eq!(s.clusters.len(), 8);
    assert_eq!(s.users.len(), 16 * 12);
    assert_eq!(s.carriers.len(), 16);
}

// Beams on a 4x4 hexagonal lattice, odd rows shifted half a pitch, paired
// left-to-right within each row: clusters are {0,1},{2,3},...,{14,15}.
// Two clusters are adjacent when any of their beams are lattice neighbours,
// which gives the list below (enumerated by hand from the lattice).
#[test]
fn reference_adjacency_matches_hand_enumeration() {
    let s = generate_scenario(&SystemConfig::reference()).unwrap();
    let groups: Vec<Vec<usize>> = s.clusters.iter().map(|c| c.beam_ids.clone()).collect();
    let expected_groups: Vec<Vec<usize>> = (0..8).map(|l| vec![2 * l, 2 * l + 1]).collect();
    assert_eq!(groups, expected_groups);

    let expected: BTreeSet<(usize, usize)> = [
        (0, 1),
        (0, 2),
        (1, 2),
        (1, 3),
        (2, 3),
        (2, 4),
        (2, 5),
        (3, 5),
        (4, 5),
        (4, 6),
        (5, 6),
        (5, 7),
        (6, 7),
    ]
    .into_iter()
    .collect();
    assert_eq!(adjacency_pairs(&s), expected);
}

#[test]
fn two_clusters_sharing_a_border() {
    let cfg = SystemConfig {
        num_beams: 4,
        num_clusters: 2,
        active_clusters_per_slot: 1,
        ..SystemConfig::reference()
    };
    let s = generate_scenario(&cfg).unwrap();
    assert_eq!(adjacency_pairs(&s), [(0, 1)].into_iter().collect());
}

#[test]
fn rate_falls_from_beam_centre_to_edge() {
    let cfg = SystemConfig::reference();
    let modcod = ModcodTable::dvbs2x();
    let spacing = cfg.geometry.beam_spacing_km;
    let mut last = f64::INFINITY;
    for step in 0..=20 {
        let offset = spacing * step as f64 / 40.0;
        let sinr = bhca::scenario::link::sinr_db(&cfg, offset);
        let rate = bhca::scenario::link::achievable_rate(cfg.carrier_bandwidth, cfg.roll_off, sinr, &modcod);
        assert!(rate <= last, "rate rose at offset {offset} km");
        last = rate;
    }
    let centre = bhca::scenario::link::sinr_db(&cfg, 0.0);
    let edge = bhca::scenario::link::sinr_db(&cfg, spacing / 2.0);
    assert!(centre > edge);
}

#[test]
fn per_slot_rates_are_per_second_rates_times_slot() {
    let s = generate_scenario(&SystemConfig::desk()).unwrap();
    let r = compute_rate_table(&s, &ModcodTable::dvbs2x());
    for (l, cluster) in s.clusters.iter().enumerate() {
        for c in 0..cluster.carrier_ids.len() {
            for u in 0..cluster.user_ids.len() {
                let per_slot = r.rate_per_slot(l, c, u);
                let expected = r.rate_bps(l, c, u) * s.config.slot_duration;
                assert!(per_slot >= 0.0);
                assert!((per_slot - expected).abs() <= 4.0 * f64::EPSILON * expected.max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_scenarios_are_well_formed(seed in 0u64..10_000, desk in any::<bool>()) {
        let base = if desk { SystemConfig::desk() } else { SystemConfig::reference() };
        let s = generate_scenario(&SystemConfig { rng_seed: seed, ..base }).unwrap();
        let mut owner = vec![usize::MAX; s.beams.len()];
        for c in &s.clusters {
            for &b in &c.beam_ids {
                prop_assert_eq!(owner[b], usize::MAX);
                owner[b] = c.id;
            }
        }
        prop_assert!(owner.iter().all(|&o| o != usize::MAX));

        let pairs = adjacency_pairs(&s);
        for &(a, b) in &pairs {
            prop_assert!(a < b && b < s.clusters.len());
        }
        let high = s.users.iter().filter(|u| u.high_demand).count();
        let expected = (s.config.high_demand_fraction * s.users.len() as f64).round() as usize;
        prop_assert_eq!(high, expected);
        prop_assert!(s.users.iter().all(|u| u.demand > 0.0));
    }
}
