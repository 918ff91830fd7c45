//! End-to-end experiment driver behind the `bhca` binary.
//!
//! A run is computed entirely in memory and only then written out, so a
//! failing run leaves no partial artifact set behind.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use bhca::baseline::{solve_bh, BhPlan};
use bhca::metrics::{audit_schedule, build_report, compare, Comparison, MetricsError, MetricsReport, ScheduleAudit, SupplyPlan};
use bhca::model::{build_model, decode_plan, AllocationPlan, ModelError, ModelInstance};
use bhca::scenario::{
    adjacency_pairs, compute_rate_table, generate_scenario, ConfigError, Diagnostic, ModcodTable, RateTable,
    Scenario, ScenarioSnapshot, SystemConfig,
};
use bhca::solver::{export_lp, solve_milp, MilpSolution, MilpStatus, SolverError, SolverOptions};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bhca,
    Bh,
    Both,
}

impl Scheme {
    pub fn runs_bhca(self) -> bool {
        matches!(self, Scheme::Bhca | Scheme::Both)
    }

    pub fn runs_bh(self) -> bool {
        matches!(self, Scheme::Bh | Scheme::Both)
    }
}

/// Where a configuration came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigSource {
    File(PathBuf),
    /// One of the built-in profiles, `desk` or `reference`.
    Builtin(String),
}

impl ConfigSource {
    pub fn load(&self) -> Result<SystemConfig, RunError> {
        match self {
            ConfigSource::File(path) => {
                let text = fs::read_to_string(path).map_err(io_err(path))?;
                Ok(SystemConfig::from_json(&text)?)
            }
            ConfigSource::Builtin(name) if name == "reference" => Ok(SystemConfig::reference()),
            ConfigSource::Builtin(_) => Ok(SystemConfig::desk()),
        }
    }
}

/// Everything that determines a run, plus the checksums of what it wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ConfigSource,
    pub seed: u64,
    pub scheme: Scheme,
    pub out_dir: PathBuf,
    pub solver: SolverOptions,
    pub export_lp: bool,
    /// File name to hex SHA-256, for every artifact except the manifest.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config: ConfigSource, seed: u64, scheme: Scheme, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            seed,
            scheme,
            out_dir: out_dir.into(),
            solver: SolverOptions::default(),
            export_lp: false,
            artifacts: BTreeMap::new(),
        }
    }
}

pub struct BhcaResult {
    pub model: ModelInstance,
    pub solution: MilpSolution,
    pub plan: AllocationPlan,
    pub report: MetricsReport,
    pub audit: ScheduleAudit,
}

pub struct BhResult {
    pub plan: BhPlan,
    pub report: MetricsReport,
    pub audit: ScheduleAudit,
}

/// In-memory outcome of one scenario under the selected schemes.
pub struct Evaluation {
    pub scenario: Scenario,
    pub rates: RateTable,
    pub pairs: BTreeSet<(usize, usize)>,
    pub bhca: Option<BhcaResult>,
    pub bh: Option<BhResult>,
}

impl Evaluation {
    pub fn comparison(&self) -> Option<Comparison> {
        match (&self.bhca, &self.bh) {
            (Some(a), Some(b)) => Some(compare(&a.report, &b.report)),
            _ => None,
        }
    }

    /// True when a search stopped on a limit rather than by proving
    /// optimality.
    pub fn limit_hit(&self) -> bool {
        let gap = |s: MilpStatus| matches!(s, MilpStatus::Feasible { .. });
        self.bhca.as_ref().is_some_and(|r| gap(r.solution.status))
            || self.bh.as_ref().is_some_and(|r| gap(r.plan.status))
    }
}

fn audit<P: SupplyPlan>(plan: &P, scenario: &Scenario, pairs: &BTreeSet<(usize, usize)>) -> ScheduleAudit {
    audit_schedule(
        &plan.illumination(),
        pairs,
        scenario.config.active_clusters_per_slot,
        scenario.num_slots(),
    )
}

/// Generates the scenario and runs the selected schemes on it.
pub fn evaluate(config: &SystemConfig, scheme: Scheme, opts: &SolverOptions) -> Result<Evaluation, RunError> {
    let scenario = generate_scenario(config)?;
    let rates = compute_rate_table(&scenario, &ModcodTable::dvbs2x());
    let pairs = adjacency_pairs(&scenario);
    let bhca = if scheme.runs_bhca() {
        let model = build_model(&scenario, &rates, &pairs)?;
        let solution = solve_milp(&model, opts)?;
        let plan = decode_plan(&model, &solution, &scenario, &rates)?;
        let report = build_report(&plan, &scenario)?;
        let audit = audit(&plan, &scenario, &pairs);
        info!("bhca: {} objective {:.6} after {} nodes", solution.status, solution.objective, solution.nodes_explored);
        Some(BhcaResult {
            model,
            solution,
            plan,
            report,
            audit,
        })
    } else {
        None
    };
    let bh = if scheme.runs_bh() {
        let plan = solve_bh(&scenario, &rates, &pairs, opts)?;
        let report = build_report(&plan, &scenario)?;
        let audit = audit(&plan, &scenario, &pairs);
        info!("bh: {} min cluster ratio {:.6}", plan.status, plan.min_cluster_ratio);
        Some(BhResult { plan, report, audit })
    } else {
        None
    };
    Ok(Evaluation {
        scenario,
        rates,
        pairs,
        bhca,
        bh,
    })
}

#[derive(Serialize)]
struct PlanArtifact<'a, P: Serialize> {
    scheme: &'a str,
    status: MilpStatus,
    nodes_explored: u64,
    gap: f64,
    plan: &'a P,
}

#[derive(Serialize)]
struct MetricsArtifact<'a> {
    report: &'a MetricsReport,
    schedule_audit: &'a ScheduleAudit,
}

fn json<T: Serialize>(value: &T) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &str, rows: &[String]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// Plot-ready tables: per-cluster supply vs demand, per-user supply vs
/// demand, and per-cluster Jain indices, one block of rows per scheme.
fn plot_files(reports: &[&MetricsReport]) -> Vec<(String, String)> {
    let mut beams = Vec::new();
    let mut users = Vec::new();
    let mut jain = Vec::new();
    for r in reports {
        let mbps = |bits: f64| bits / r.hopping_window / 1e6;
        for c in &r.clusters {
            beams.push(format!("{},{},{},{}", r.scheme, c.cluster, mbps(c.demand), mbps(c.supply)));
            let j = c.jain.map(|j| j.to_string()).unwrap_or_default();
            jain.push(format!("{},cluster,{},{}", r.scheme, c.cluster, j));
        }
        for u in &r.users {
            users.push(format!("{},{},{},{},{},{}", r.scheme, u.user, u.cluster, mbps(u.demand), mbps(u.supply), u.ratio));
        }
        let j = r.system.user_jain.map(|j| j.to_string()).unwrap_or_default();
        jain.push(format!("{},system,all,{}", r.scheme, j));
    }
    vec![
        ("plot_beam_supply.csv".into(), csv_text("scheme,cluster,demand_mbps,supply_mbps", &beams)),
        (
            "plot_user_supply.csv".into(),
            csv_text("scheme,user,cluster,demand_mbps,supply_mbps,ratio", &users),
        ),
        ("plot_jain.csv".into(), csv_text("scheme,scope,id,jain", &jain)),
    ]
}

/// Renders every artifact of an evaluation as (file name, contents).
pub fn render_artifacts(eval: &Evaluation, export: bool) -> Result<Vec<(String, String)>, RunError> {
    let mut files = Vec::new();
    let snapshot = ScenarioSnapshot {
        scenario: eval.scenario.clone(),
        rates: eval.rates.clone(),
        pairs: eval.pairs.iter().copied().collect(),
    };
    files.push(("scenario.json".to_string(), json(&snapshot)?));
    let mut reports = Vec::new();
    if let Some(r) = &eval.bhca {
        if export {
            files.push(("model.lp".into(), export_lp(&r.model)));
        }
        files.push(("bhca_solver.log".into(), r.solution.log_text()));
        files.push((
            "bhca_plan.json".into(),
            json(&PlanArtifact {
                scheme: "bhca",
                status: r.solution.status,
                nodes_explored: r.solution.nodes_explored,
                gap: r.solution.gap,
                plan: &r.plan,
            })?,
        ));
        files.push(("bhca_metrics.csv".into(), r.report.to_csv()?));
        files.push((
            "bhca_metrics.json".into(),
            json(&MetricsArtifact {
                report: &r.report,
                schedule_audit: &r.audit,
            })?,
        ));
        reports.push(&r.report);
    }
    if let Some(r) = &eval.bh {
        files.push(("bh_solver.log".into(), r.plan.schedule.log_text()));
        files.push((
            "bh_plan.json".into(),
            json(&PlanArtifact {
                scheme: "bh",
                status: r.plan.status,
                nodes_explored: r.plan.nodes_explored,
                gap: r.plan.schedule.gap,
                plan: &r.plan,
            })?,
        ));
        files.push(("bh_metrics.csv".into(), r.report.to_csv()?));
        files.push((
            "bh_metrics.json".into(),
            json(&MetricsArtifact {
                report: &r.report,
                schedule_audit: &r.audit,
            })?,
        ));
        reports.push(&r.report);
    }
    if let Some(c) = eval.comparison() {
        files.push(("comparison.json".into(), json(&c)?));
        files.push(("comparison.csv".into(), comparison_csv(&c)));
    }
    files.extend(plot_files(&reports));
    Ok(files)
}

fn comparison_csv(c: &Comparison) -> String {
    let rows = [
        ("user_jain", opt(c.bhca_user_jain), opt(c.bh_user_jain)),
        ("beam_jain", opt(c.bhca_beam_jain), opt(c.bh_beam_jain)),
        ("min_user_ratio", c.bhca_min_user_ratio.to_string(), c.bh_min_user_ratio.to_string()),
        (
            "unused_capacity_mbps",
            c.bhca_unused_capacity_mbps.to_string(),
            c.bh_unused_capacity_mbps.to_string(),
        ),
        ("supply_mbps", c.bhca_supply_mbps.to_string(), c.bh_supply_mbps.to_string()),
        ("demand_mbps", c.total_demand_mbps.to_string(), c.total_demand_mbps.to_string()),
    ];
    let lines: Vec<String> = rows.iter().map(|(m, a, b)| format!("{m},{a},{b}")).collect();
    csv_text("metric,bhca,bh", &lines)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Result of [`run`]: the manifest with checksums filled in.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub limit_hit: bool,
    pub evaluation: Evaluation,
}

/// Runs one experiment and writes its artifacts plus `manifest.json` into
/// `manifest.out_dir`. Nothing is written unless every stage succeeds.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome, RunError> {
    let mut config = manifest.config.load()?;
    config.rng_seed = manifest.seed;
    let evaluation = evaluate(&config, manifest.scheme, &manifest.solver)?;
    let files = render_artifacts(&evaluation, manifest.export_lp)?;

    let mut manifest = manifest.clone();
    manifest.artifacts = files
        .iter()
        .map(|(name, body)| (name.clone(), sha256_hex(body.as_bytes())))
        .collect();
    let manifest_text = json(&manifest)?;
    let dir = &manifest.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, body) in files.iter().chain([&("manifest.json".to_string(), manifest_text)]) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(RunOutcome {
        limit_hit: evaluation.limit_hit(),
        manifest,
        evaluation,
    })
}

/// Parses a configuration file and lists every violated invariant. Read and
/// JSON syntax errors (which carry line and column) are returned as errors.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let config: SystemConfig = serde_json::from_str(&text).map_err(ConfigError::Parse)?;
    Ok(config.diagnostics())
}

/// One scenario of a batch.
#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub comparison: Comparison,
    pub bhca_status: MilpStatus,
    pub bh_status: MilpStatus,
    pub bhca_schedule_clean: bool,
    pub bh_schedule_clean: bool,
}

/// Runs both schemes on `config` for every seed.
pub fn batch(config: &SystemConfig, seeds: &[u64], opts: &SolverOptions) -> Result<Vec<BatchRow>, RunError> {
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = SystemConfig {
            rng_seed: seed,
            ..config.clone()
        };
        let eval = evaluate(&cfg, Scheme::Both, opts)?;
        let (a, b) = (eval.bhca.as_ref().expect("both"), eval.bh.as_ref().expect("both"));
        rows.push(BatchRow {
            seed,
            comparison: eval.comparison().expect("both schemes ran"),
            bhca_status: a.solution.status,
            bh_status: b.plan.status,
            bhca_schedule_clean: a.audit.is_clean(),
            bh_schedule_clean: b.audit.is_clean(),
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Batch results as CSV, one row per seed.
pub fn batch_csv(rows: &[BatchRow]) -> String {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            let c = &r.comparison;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                opt(c.bhca_user_jain),
                opt(c.bh_user_jain),
                c.bhca_min_user_ratio,
                c.bh_min_user_ratio,
                c.bhca_unused_capacity_mbps,
                c.bh_unused_capacity_mbps,
                c.total_demand_mbps,
                c.bhca_supply_mbps,
                c.bh_supply_mbps,
                r.bhca_status,
                r.bh_status,
                r.bhca_schedule_clean && r.bh_schedule_clean,
            )
        })
        .collect();
    csv_text(
        "seed,bhca_user_jain,bh_user_jain,bhca_min_user_ratio,bh_min_user_ratio,bhca_unused_mbps,bh_unused_mbps,demand_mbps,bhca_supply_mbps,bh_supply_mbps,bhca_status,bh_status,schedules_clean",
        &lines,
    )
}
