use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wavekin::error::Error;
use wavekin::harness::{self, exit, Check, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "wavekin", version, about = "Random-matrix wave kinetics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Second-order expansion against the kinetic prediction.
    Lot(Opts),
    /// Full-ODE ensembles over an N-sweep.
    Theorem(Opts),
    /// Kinetic equation solve and invariants.
    Kwe(Opts),
    /// Exact Weingarten checks.
    WeingartenValidate(Opts),
    /// Semicircle histogram and rigidity residuals.
    Rigidity(Opts),
    /// Run whatever experiment the config names.
    Run(RunOpts),
}

#[derive(Args)]
struct Overrides {
    /// Master seed, replacing ensemble.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, replacing output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Opts {
    /// TOML config; its kind must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct RunOpts {
    /// TOML config.
    #[arg(long, required_unless_present = "path")]
    config: Option<PathBuf>,
    /// TOML config, given positionally.
    #[arg(conflicts_with = "config")]
    path: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn load(kind: Option<ExperimentKind>, path: Option<&PathBuf>) -> Result<ExperimentConfig, Error> {
    match (kind, path) {
        (Some(k), Some(p)) => {
            let cfg = ExperimentConfig::from_file(p)?;
            if cfg.kind != k {
                return Err(Error::Config(format!(
                    "config kind '{}' does not match subcommand '{}'",
                    cfg.kind.name(),
                    k.name()
                )));
            }
            Ok(cfg)
        }
        (None, Some(p)) => ExperimentConfig::from_file(p),
        (Some(k), None) => Ok(ExperimentConfig::new(k)),
        (None, None) => Err(Error::Config("no config given".into())),
    }
}

fn execute(mut cfg: ExperimentConfig, ov: &Overrides) -> Result<i32, Error> {
    if let Some(s) = ov.seed {
        cfg.ensemble.seed = s;
    }
    if let Some(o) = &ov.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    let outcome = match ov.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("--threads {n}: {e}")))?;
            pool.install(|| harness::run_config(&cfg))?
        }
        None => harness::run_config(&cfg)?,
    };
    let r = &outcome.report;
    if ov.json {
        println!("{}", serde_json::to_string_pretty(&r.summary())?);
    } else {
        println!("{} ({:.1} s) {}", r.kind, r.wall_clock_s, r.provenance);
        for m in &r.metrics {
            let tag = match (m.check, m.pass) {
                (Check::Info, _) => "info",
                (_, true) => "PASS",
                (_, false) => "FAIL",
            };
            match m.tolerance {
                Some(t) => println!("  {tag}  {:<36} {:>13.6e}  (tol {t:e})", m.name, m.value),
                None => println!("  {tag}  {:<36} {:>13.6e}", m.name, m.value),
            }
        }
        println!("{} -> {}", if r.passed { "passed" } else { "failed" }, cfg.output.dir.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, path, ov) = match &cli.command {
        Command::Lot(o) => (Some(ExperimentKind::Lot), o.config.as_ref(), &o.overrides),
        Command::Theorem(o) => (Some(ExperimentKind::Theorem), o.config.as_ref(), &o.overrides),
        Command::Kwe(o) => (Some(ExperimentKind::Kwe), o.config.as_ref(), &o.overrides),
        Command::WeingartenValidate(o) => (Some(ExperimentKind::WeingartenValidate), o.config.as_ref(), &o.overrides),
        Command::Rigidity(o) => (Some(ExperimentKind::Rigidity), o.config.as_ref(), &o.overrides),
        Command::Run(o) => (None, o.config.as_ref().or(o.path.as_ref()), &o.overrides),
    };
    let code = match load(kind, path).and_then(|cfg| execute(cfg, ov)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code_for(&e)
        }
    };
    debug_assert!((exit::PASS..=exit::RUNTIME).contains(&code));
    ExitCode::from(code as u8)
}
