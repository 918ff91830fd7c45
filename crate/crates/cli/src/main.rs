use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bhca::scenario::SystemConfig;
use bhca::solver::{export_lp, SolverOptions};
use bhca_cli::{batch, batch_csv, run, validate_config, ConfigSource, RunManifest, Scheme};

/// Joint beam-hopping / carrier-aggregation planning experiments.
#[derive(Parser)]
#[command(name = "bhca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario, solve the selected schemes and write all artifacts.
    Run(RunArgs),
    /// Check a configuration file and list every violated invariant.
    ValidateConfig {
        path: PathBuf,
    },
    /// Run both schemes on a range of seeds and print a comparison table.
    Batch(BatchArgs),
    /// Write the BH-CA model of a scenario in LP format without solving it.
    ExportLp {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in configuration, used when no file is given.
    #[arg(long, value_enum, default_value_t = Profile::Desk)]
    profile: Profile,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Reference,
}

impl ConfigArgs {
    fn source(&self) -> ConfigSource {
        match (&self.config, self.profile) {
            (Some(p), _) => ConfigSource::File(p.clone()),
            (None, Profile::Desk) => ConfigSource::Builtin("desk".into()),
            (None, Profile::Reference) => ConfigSource::Builtin("reference".into()),
        }
    }

    fn load(&self) -> Result<SystemConfig> {
        let mut config = self.source().load()?;
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Seconds per search.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 200)]
    node_limit: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            worker_count: self.workers,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Bhca,
    Bh,
    Both,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Both)]
    scheme: SchemeArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write the BH-CA model as model.lp.
    #[arg(long)]
    export_lp: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of consecutive seeds, starting at the configured one.
    #[arg(long, default_value_t = 30)]
    count: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let scheme = match args.scheme {
                SchemeArg::Bhca => Scheme::Bhca,
                SchemeArg::Bh => Scheme::Bh,
                SchemeArg::Both => Scheme::Both,
            };
            let seed = match args.config.seed {
                Some(s) => s,
                None => args.config.load()?.rng_seed,
            };
            let mut manifest = RunManifest::new(args.config.source(), seed, scheme, &args.out);
            manifest.solver = args.solver.options();
            manifest.export_lp = args.export_lp;
            let outcome = run(&manifest)?;
            println!("wrote {} artifacts to {}", outcome.manifest.artifacts.len() + 1, args.out.display());
            if outcome.limit_hit {
                eprintln!("search limit reached; plans are feasible but not proven optimal");
                return Ok(ExitCode::from(2));
            }
        }
        Command::ValidateConfig { path } => {
            let diagnostics = validate_config(&path)?;
            for d in &diagnostics {
                println!("{d}");
            }
            if !diagnostics.is_empty() {
                return Ok(ExitCode::from(1));
            }
            println!("{}: ok", path.display());
        }
        Command::Batch(args) => {
            let config = args.config.load()?;
            let seeds: Vec<u64> = (0..args.count).map(|i| config.rng_seed + i).collect();
            let rows = batch(&config, &seeds, &args.solver.options())?;
            write_or_print(args.out.as_ref(), &batch_csv(&rows))?;
        }
        Command::ExportLp { config, out } => {
            let cfg = config.load()?;
            let scenario = bhca::generate_scenario(&cfg)?;
            let rates = bhca::compute_rate_table(&scenario, &bhca::ModcodTable::dvbs2x());
            let pairs = bhca::adjacency_pairs(&scenario);
            let model = bhca::build_model(&scenario, &rates, &pairs)?;
            write_or_print(out.as_ref(), &export_lp(&model))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BHCA_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
