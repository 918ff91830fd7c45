//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bhca::model::{build_model_with, ModelInstance, ModelParams};
use bhca::scenario::{adjacency_pairs, compute_rate_table, generate_scenario, ModcodTable};
use bhca::solver::{brute_force, export_lp, parse_lp, solve_milp, MilpSolution, SolverOptions};
use bhca::{build_model, jain_index, validate_solution, SystemConfig};
use bhca_cli::{evaluate, Evaluation, Scheme};

const DESK_SCENARIOS: u64 = 30;
const DESK_NODE_LIMIT: u64 = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tiny_config(seed: u64) -> SystemConfig {
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

fn model_for(config: &SystemConfig, params: ModelParams) -> ModelInstance {
    let s = generate_scenario(config).expect("valid config");
    let r = compute_rate_table(&s, &ModcodTable::dvbs2x());
    let p = adjacency_pairs(&s);
    build_model_with(&s, &r, &p, params).expect("model builds")
}

/// Largest breach of the linearization and mapping contracts, or a
/// description of the first structural failure.
fn linearization_breach(model: &ModelInstance, x: &[f64]) -> Result<f64, String> {
    let cat = &model.catalog;
    let mut worst: f64 = 0.0;
    for l in 0..cat.num_clusters() {
        for c in 0..cat.carriers(l) {
            for u in 0..cat.users(l) {
                let (a, beta) = (x[cat.a(l, c, u)], x[cat.beta(l, c, u)]);
                if a < 0.5 {
                    worst = worst.max(beta.abs());
                } else if beta < model.epsilon_fill - 1e-9 {
                    return Err(format!("assigned carrier ({l},{c},{u}) has beta {beta:e}"));
                }
                for t in 0..cat.slots() {
                    worst = worst.max((x[cat.q(l, c, u, t)] - beta * x[cat.z(l, t)]).abs());
                }
            }
        }
    }
    let report = validate_solution(&model.problem, x).map_err(|e| e.to_string())?;
    if !report.is_empty() {
        return Err(format!("{} violations, first {}", report.violations.len(), report.violations[0]));
    }
    Ok(worst)
}

fn max_min_gap(model: &ModelInstance, x: &[f64]) -> f64 {
    let cat = &model.catalog;
    let floor = (0..cat.num_clusters())
        .map(|l| x[cat.t_user(l)])
        .fold(x[cat.t_cluster()], f64::min);
    (x[cat.theta()] - floor).abs()
}

struct TinyRun {
    model: ModelInstance,
    solution: MilpSolution,
    oracle: f64,
}

fn criterion_1(runs: &[TinyRun], elapsed: f64) -> Outcome {
    let worst = runs
        .iter()
        .map(|r| (r.solution.objective - r.oracle).abs())
        .fold(0.0, f64::max);
    let binaries = runs.iter().map(|r| r.model.problem.binary_columns().len()).max().unwrap_or(0);
    outcome(
        worst <= 1e-6 && elapsed < 60.0 && binaries <= 20,
        format!("{} instances, max |obj - oracle| = {worst:.2e}, {binaries} binaries, {elapsed:.2}s", runs.len()),
    )
}

fn criterion_2(solved: &[(&ModelInstance, &MilpSolution)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (model, sol) in solved {
        match linearization_breach(model, &sol.values) {
            Ok(w) => worst = worst.max(w),
            Err(e) => return outcome(false, format!("{}: {e}", model.problem.name)),
        }
    }
    outcome(worst <= 1e-9, format!("{} solutions, max |q - beta*z| or stray beta = {worst:.2e}", solved.len()))
}

fn criterion_3(solved: &[(&ModelInstance, &MilpSolution)], tiny: &[TinyRun]) -> Outcome {
    let worst = solved.iter().map(|(m, s)| max_min_gap(m, &s.values)).fold(0.0, f64::max);
    let mut lowered = Vec::new();
    for (seed, run) in (1u64..).zip(tiny) {
        let heavy = model_for(
            &tiny_config(seed),
            ModelParams {
                epsilon_obj: 1e-3,
                ..ModelParams::default()
            },
        );
        let sol = solve_milp(&heavy, &SolverOptions::default()).expect("tiny model solves");
        let before = run.solution.values[run.model.catalog.theta()];
        let after = sol.values[heavy.catalog.theta()];
        if after < before - 1e-8 {
            lowered.push(seed);
        }
    }
    outcome(
        worst <= 1e-8 && lowered.is_empty(),
        format!("max |theta - min ratio| = {worst:.2e}; seeds where eps_obj=1e-3 lowers theta: {lowered:?}"),
    )
}

fn criterion_4() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut failures = Vec::new();
    let j = |v: &[f64]| jain_index(v).unwrap();
    if (j(&[1.0, 1.0, 1.0, 1.0]) - 1.0).abs() > 1e-12 {
        failures.push("(1,1,1,1)");
    }
    if (j(&[1.0, 0.0]) - 0.5).abs() > 1e-12 {
        failures.push("(1,0)");
    }
    if (j(&[1.0, 0.5]) - 0.9).abs() > 1e-12 {
        failures.push("(1,0.5)");
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
    let (mut scale_bad, mut bound_bad) = (0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..50);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let base = j(&v);
        if !(base >= 1.0 / n as f64 - 1e-12 && base <= 1.0) {
            bound_bad += 1;
        }
        for k in [1e-3, 1.0, 1e6] {
            let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
            if (j(&scaled) - base).abs() > 1e-12 {
                scale_bad += 1;
            }
        }
    }
    outcome(
        failures.is_empty() && scale_bad == 0 && bound_bad == 0,
        format!("reference failures {failures:?}, scale breaches {scale_bad}, bound breaches {bound_bad} over 1000 vectors"),
    )
}

fn criterion_5(evals: &[Evaluation], elapsed: f64) -> Outcome {
    let n = evals.len();
    let (mut jain_wins, mut ratio_wins) = (0, 0);
    for e in evals {
        let c = e.comparison().expect("both schemes");
        if c.bhca_user_jain.unwrap_or(0.0) >= c.bh_user_jain.unwrap_or(0.0) {
            jain_wins += 1;
        }
        if c.bhca_min_user_ratio >= c.bh_min_user_ratio {
            ratio_wins += 1;
        }
    }
    let share = |k: usize| k as f64 / n as f64;
    outcome(
        share(jain_wins) >= 0.9 && share(ratio_wins) >= 0.9 && elapsed < 600.0,
        format!("user Jain BH-CA >= BH in {jain_wins}/{n}, min user ratio in {ratio_wins}/{n}, {elapsed:.1}s"),
    )
}

fn criterion_6(evals: &[Evaluation]) -> Outcome {
    let n = evals.len() as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for e in evals {
        let c = e.comparison().expect("both schemes");
        a += c.bhca_unused_capacity_mbps / n;
        b += c.bh_unused_capacity_mbps / n;
    }
    outcome(a <= b, format!("mean unused capacity BH-CA {a:.2} Mbps vs BH {b:.2} Mbps"))
}

fn criterion_7(evals: &[Evaluation]) -> Outcome {
    let mut over = 0;
    let mut adjacent = 0;
    let mut plans = 0;
    for e in evals {
        for audit in [&e.bhca.as_ref().expect("bhca ran").audit, &e.bh.as_ref().expect("bh ran").audit] {
            plans += 1;
            over += audit.over_capacity.len();
            adjacent += audit.adjacent.len();
        }
    }
    outcome(
        over == 0 && adjacent == 0,
        format!("{plans} plans, {over} over-capacity slots, {adjacent} adjacent co-illuminations"),
    )
}

fn criterion_8() -> Outcome {
    let configs = [
        tiny_config(1),
        tiny_config(2),
        tiny_config(3),
        SystemConfig::desk(),
        SystemConfig {
            rng_seed: 19,
            ..SystemConfig::desk()
        },
    ];
    for (i, cfg) in configs.iter().enumerate() {
        let s = generate_scenario(cfg).expect("valid config");
        let r = compute_rate_table(&s, &ModcodTable::dvbs2x());
        let model = build_model(&s, &r, &adjacency_pairs(&s)).expect("model builds");
        let text = export_lp(&model);
        if export_lp(&model) != text {
            return outcome(false, format!("fixture {i}: repeated export differs"));
        }
        let rebuilt = match parse_lp(&text) {
            Ok(doc) => doc.into_problem(),
            Err(e) => return outcome(false, format!("fixture {i}: {e}")),
        };
        let rows = |p: &bhca::model::MilpProblem| -> BTreeMap<String, String> {
            p.all_rows()
                .map(|row| {
                    let mut terms: Vec<String> = row
                        .coefficients
                        .iter()
                        .map(|&(j, a)| format!("{}:{:x}", p.columns[j].name, a.to_bits()))
                        .collect();
                    terms.sort();
                    (row.name.clone(), format!("{} {:?} {:x} {}", row.tag, row.sense, row.rhs.to_bits(), terms.join(" ")))
                })
                .collect()
        };
        if rows(&rebuilt) != rows(&model.problem) || export_lp(&rebuilt) != text {
            return outcome(false, format!("fixture {i}: round trip changed the constraint set"));
        }
    }
    outcome(true, format!("{} fixture models round-trip; exports are byte-identical", configs.len()))
}

fn artifact_digests(dir: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(v["artifacts"].clone())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut digests = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_bhca"))
            .args(["run", "--scheme", "both", "--seed", "7", "--workers", "1", "--out"])
            .arg(&out)
            .status()
            .expect("binary runs");
        if !matches!(status.code(), Some(0) | Some(2)) {
            return outcome(false, format!("run {k} exited with {status}"));
        }
        match artifact_digests(&out) {
            Ok(d) => digests.push(d),
            Err(e) => return outcome(false, e),
        }
    }
    let count = digests[0].as_object().map_or(0, |m| m.len());
    outcome(
        count > 0 && digests[0] == digests[1],
        format!("{count} artifacts, checksums identical: {}", digests[0] == digests[1]),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    let start = Instant::now();
    let tiny: Vec<TinyRun> = (1..=20)
        .map(|seed| {
            let model = model_for(&tiny_config(seed), ModelParams::default());
            let oracle = brute_force(&model).expect("oracle solves").objective;
            let solution = solve_milp(&model, &SolverOptions::default()).expect("tiny model solves");
            TinyRun {
                model,
                solution,
                oracle,
            }
        })
        .collect();
    let tiny_time = start.elapsed().as_secs_f64();

    let opts = SolverOptions {
        node_limit: DESK_NODE_LIMIT,
        ..SolverOptions::default()
    };
    let start = Instant::now();
    let desk: Vec<Evaluation> = (1..=DESK_SCENARIOS)
        .map(|seed| {
            let cfg = SystemConfig {
                rng_seed: seed,
                ..SystemConfig::desk()
            };
            evaluate(&cfg, Scheme::Both, &opts).expect("desk scenario evaluates")
        })
        .collect();
    let desk_time = start.elapsed().as_secs_f64();

    let solved: Vec<(&ModelInstance, &MilpSolution)> = tiny
        .iter()
        .map(|r| (&r.model, &r.solution))
        .chain(desk.iter().map(|e| {
            let b = e.bhca.as_ref().expect("bhca ran");
            (&b.model, &b.solution)
        }))
        .collect();

    report(1, "oracle equivalence", criterion_1(&tiny, tiny_time));
    report(2, "linearization suite", criterion_2(&solved));
    report(3, "max-min realization", criterion_3(&solved, &tiny));
    report(4, "Jain index", criterion_4());
    report(5, "fairness trend", criterion_5(&desk, desk_time));
    report(6, "unused capacity trend", criterion_6(&desk));
    report(7, "illumination audits", criterion_7(&desk));
    report(8, "LP export round trip", criterion_8());
    report(9, "determinism", criterion_9());

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
