mod common;

use std::collections::BTreeMap;

use bhca::model::{Column, LinearConstraint, MilpProblem, Sense};
use bhca::solver::{export_lp, parse_lp};
use bhca::SystemConfig;

use common::{fixture, tiny_config};

fn fixture_configs() -> Vec<SystemConfig> {
    vec![
        tiny_config(1),
        tiny_config(2),
        tiny_config(3),
        SystemConfig::desk(),
        SystemConfig {
            rng_seed: 19,
            ..SystemConfig::desk()
        },
    ]
}

/// Rows keyed by name, with coefficients keyed by column name.
fn row_set(p: &MilpProblem, rows: &[LinearConstraint]) -> BTreeMap<String, (String, Vec<(String, u64)>, String, u64)> {
    rows.iter()
        .map(|r| {
            let mut coeffs: Vec<(String, u64)> = r
                .coefficients
                .iter()
                .map(|&(j, a)| (p.columns[j].name.clone(), a.to_bits()))
                .collect();
            coeffs.sort();
            (r.name.clone(), (r.tag.clone(), coeffs, format!("{:?}", r.sense), r.rhs.to_bits()))
        })
        .collect()
}

#[test]
fn export_parse_rebuild_round_trip() {
    for cfg in fixture_configs() {
        let f = fixture(&cfg);
        let original = &f.model.problem;
        let text = export_lp(original);
        let rebuilt = parse_lp(&text).unwrap().into_problem();
        assert_eq!(rebuilt.name, original.name);
        assert_eq!(row_set(&rebuilt, &rebuilt.constraints), row_set(original, &original.constraints));
        assert_eq!(row_set(&rebuilt, &rebuilt.cuts), row_set(original, &original.cuts));
        let cols = |p: &MilpProblem| -> BTreeMap<String, (u64, u64, bool)> {
            p.columns
                .iter()
                .map(|c| (c.name.clone(), (c.lower.to_bits(), c.upper.to_bits(), c.binary)))
                .collect()
        };
        assert_eq!(cols(&rebuilt), cols(original));
        // Same text again from the rebuilt model.
        assert_eq!(export_lp(&rebuilt), text);
    }
}

#[test]
fn repeated_export_is_byte_identical() {
    let f = fixture(&SystemConfig::desk());
    assert_eq!(export_lp(&f.model), export_lp(&f.model));
    let again = fixture(&SystemConfig::desk());
    assert_eq!(export_lp(&f.model), export_lp(&again.model));
}

#[test]
fn single_binary_is_listed_alone() {
    let p = MilpProblem {
        name: "one".into(),
        columns: vec![Column::binary("pick"), Column::continuous("level", 0.0, 4.0)],
        constraints: vec![LinearConstraint::new("link", "R", [(1, 1.0), (0, -4.0)], Sense::Le, 0.0)],
        objective: vec![(1, 1.0)],
        cuts: Vec::new(),
    };
    let text = export_lp(&p);
    let section: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "Binaries")
        .skip(1)
        .take_while(|l| *l != "End")
        .map(str::trim)
        .collect();
    assert_eq!(section, vec!["pick"]);
    assert!(!text.contains("User Cuts"));
}

#[test]
fn reference_scenario_round_trips() {
    let f = fixture(&SystemConfig::reference());
    let text = export_lp(&f.model);
    let rebuilt = parse_lp(&text).unwrap().into_problem();
    assert_eq!(rebuilt.num_columns(), f.model.problem.num_columns());
    assert_eq!(rebuilt.constraints.len(), f.model.problem.constraints.len());
    assert_eq!(export_lp(&rebuilt), text);
}
