use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cutdg::harness::{self, RunConfig, Scenario};
use cutdg::Error;
use log::error;

const OUT_ENV: &str = "CUTDG_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "cutdg", version, about = "Cut-cell DG acoustics with domain-of-dependence stabilization")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set channel.min_alpha=1e-9` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed of the randomized identity suite.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (takes precedence over CUTDG_OUT_DIR and the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error and rate tables on the rotated square (or the periodic torus, or a custom run).
    Convergence,
    /// Long-time energy history in the periodic channel.
    Channel,
    /// Randomized check of the stabilization identities.
    VerifyForms,
    /// Write the cut-cell mesh of the configured scenario as CSV.
    MeshDump,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(dir) = &common.out {
        cfg.output_dir = dir.clone();
    } else if let Some(dir) = std::env::var_os(OUT_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker threads")?;
    }
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Convergence => {
            if !matches!(cfg.scenario, Scenario::PeriodicConvergence | Scenario::Custom) {
                cfg.scenario = Scenario::RotatedSquareConvergence;
            }
            let out = harness::run_convergence(&cfg)?;
            for r in &out.rates {
                if r.norm == "l2" {
                    println!("r={} N {}->{} {} L2 rate {:.3}", r.degree, r.n_coarse, r.n_fine, r.component, r.rate);
                }
            }
            if out.rates.is_empty() {
                for e in &out.reports {
                    println!("r={} N={} L2 p {:.3e} v {:.3e}", e.degree, e.n, e.l2_p, e.l2_v);
                }
            }
        }
        Command::Channel => {
            cfg.scenario = Scenario::ChannelLongTime;
            let o = harness::run_channel(&cfg)?;
            let last = o.series.last().expect("at least one sample");
            println!("{}: E(0) = {:.15e}, E(T) = {:.15e}, max drift {:.3e}", o.label, o.initial_energy(), last.energy, o.max_energy_drift());
        }
        Command::VerifyForms => {
            cfg.scenario = Scenario::VerifyForms;
            let rep = harness::run_verify_forms(&cfg)?;
            for r in &rep.results {
                let ok = if r.max_residual <= rep.tolerance { "ok" } else { "FAIL" };
                println!("{:<24} {:>5} trials  max residual {:.3e}  {ok}", r.name, r.trials, r.max_residual);
            }
            if !rep.passes() {
                let failed: Vec<&str> = rep.results.iter().filter(|r| r.max_residual > rep.tolerance).map(|r| r.name).collect();
                return Err(Error::VerificationFailed(failed.join(", ")).into());
            }
        }
        Command::MeshDump => {
            let mesh = harness::mesh_dump(&cfg)?;
            println!("{} cells, min alpha {:.3e}", mesh.cells.len(), mesh.min_alpha());
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::AssumptionViolated(_) | Error::MultipleBoundaryFaces { .. }) => 2,
        Some(Error::VerificationFailed(_)) => 3,
        Some(Error::NonFinite { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
