//! `cosync`: run scenarios, distance grids, architecture comparisons and
//! profile calibration from the command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 internal consistency error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cosync_core::calibrate::{calibrate, load_targets, CalibrateOptions};
use cosync_core::config::{parse_config, Channel, ScenarioConfig, TransportKind};
use cosync_core::harness::{compare_grid, run_grid, run_single, GridResult};
use cosync_core::orchestrator::CosimState;
use cosync_core::pubsub::Architecture;
use cosync_core::Error;

#[derive(Parser, Debug)]
#[command(name = "cosync", version, about = "Physics/network co-simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario once as configured.
    Run(Common),
    /// Sweep the subscriber over a list of distances.
    Grid(Common),
    /// Masterless with adaptive windows against master relay with a fixed window.
    Compare(Common),
    /// Fit the scenario's link class of a profile to a target table.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario config file.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides the config.
    #[arg(long, env = "COSYNC_SEED")]
    seed: Option<u64>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in profile name or profile file.
    #[arg(long)]
    profile: Option<String>,
    /// Comma-separated distances in metres.
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
    /// `both` runs TCP and UDP and reports them side by side.
    #[arg(long, value_enum)]
    transport: Option<TransportArg>,
    /// `both` sweeps LOS and NLOS.
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Seeds averaged per grid cell.
    #[arg(long)]
    seeds: Option<u32>,
    /// Advance the physics clock by this many ms before `run` starts.
    #[arg(long, hide = true)]
    inject_physics_drift_ms: Option<f64>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV with columns link,distance_m,channel,pd_a_s,l_p_pct.
    #[arg(long)]
    targets: PathBuf,
    /// Profile file to write.
    #[arg(long)]
    out: PathBuf,
    /// Profile whose other link class is kept; defaults to the config's.
    #[arg(long)]
    profile: Option<String>,
    /// Name written into the profile.
    #[arg(long, default_value = "paper-v1")]
    name: String,
    #[arg(long, env = "COSYNC_SEED", default_value_t = 1)]
    seed: u64,
    /// Differential-evolution population.
    #[arg(long, default_value_t = 48)]
    population: u32,
    #[arg(long, default_value_t = 800)]
    generations: u32,
    /// Compass searches from random starts.
    #[arg(long, default_value_t = 2000)]
    restarts: u32,
    /// Seeds averaged per surrogate point.
    #[arg(long)]
    seeds: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArchArg {
    Masterless,
    Master,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransportArg {
    Tcp,
    Udp,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelArg {
    Los,
    Nlos,
    Both,
}

fn load(config: &Path, profile: Option<&str>, seed: Option<u64>, seeds: Option<u32>) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = parse_config(config)?;
    if let Some(p) = profile {
        cfg.profile = p.to_string();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = seeds {
        cfg.seeds_per_cell = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Common {
    fn scenario(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = load(&self.config, self.profile.as_deref(), self.seed, self.seeds)?;
        match self.arch {
            Some(ArchArg::Masterless) => cfg.architecture = Architecture::Masterless,
            Some(ArchArg::Master) => cfg.architecture = Architecture::Master,
            None => {}
        }
        if let Some(TransportArg::Tcp) = self.transport {
            cfg.transport = TransportKind::Tcp;
        }
        if let Some(TransportArg::Udp) = self.transport {
            cfg.transport = TransportKind::Udp;
        }
        match self.channel {
            Some(ChannelArg::Los) => cfg.channel = Channel::Los,
            Some(ChannelArg::Nlos) => cfg.channel = Channel::Nlos,
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn transports(&self, cfg: &ScenarioConfig) -> Vec<TransportKind> {
        match self.transport {
            Some(TransportArg::Both) => vec![TransportKind::Tcp, TransportKind::Udp],
            _ => vec![cfg.transport],
        }
    }

    fn channels(&self) -> Vec<Channel> {
        match self.channel {
            Some(ChannelArg::Los) => vec![Channel::Los],
            Some(ChannelArg::Nlos) => vec![Channel::Nlos],
            _ => vec![Channel::Los, Channel::Nlos],
        }
    }

    fn distances(&self, cfg: &ScenarioConfig) -> Vec<f64> {
        self.distances.clone().unwrap_or_else(|| cfg.distances.clone())
    }

    fn emit(&self, result: &GridResult) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => {
                result.emit_csv(path)?;
                print!("{}", result.to_table());
            }
            None => print!("{}", result.to_csv_string()?),
        }
        Ok(())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.scenario()?;
            let mut parts = Vec::new();
            let cells = match &args.distances {
                Some(ds) => ds
                    .iter()
                    .map(|&d| cfg.with_cell(d, cfg.channel))
                    .collect::<Result<Vec<_>, _>>()?,
                None => vec![cfg.clone()],
            };
            for (t, mut c) in args
                .transports(&cfg)
                .into_iter()
                .flat_map(|t| cells.iter().map(move |c| (t, c.clone())))
            {
                c.transport = t;
                if let Some(ms) = args.inject_physics_drift_ms {
                    let mut state = CosimState::from_config(&c)?;
                    state.inject_physics_drift(ms)?;
                    state.run_to_completion()?;
                }
                let (report, row) = run_single(&c)?;
                eprintln!(
                    "{} / {}: L_p {:.2} %, PD_a {:.4} s (mean per packet {:.6} s), {} windows, {} retransmissions{}",
                    c.architecture.as_str(),
                    t.as_str(),
                    100.0 * report.loss_probability,
                    report.pd_a_sum_s,
                    report.pd_a_mean_s,
                    report.total_windows,
                    report.total_retransmissions,
                    if report.cap_hit { " (window cap hit)" } else { "" }
                );
                parts.push(row);
            }
            args.emit(&GridResult::merge(parts))
        }
        Command::Grid(args) => {
            let cfg = args.scenario()?;
            let mut parts = Vec::new();
            for t in args.transports(&cfg) {
                let mut c = cfg.clone();
                c.transport = t;
                parts.push(run_grid(&c, &args.distances(&cfg), &args.channels())?);
            }
            args.emit(&GridResult::merge(parts))
        }
        Command::Compare(args) => {
            let cfg = args.scenario()?;
            let mut parts = Vec::new();
            for t in args.transports(&cfg) {
                let mut c = cfg.clone();
                c.transport = t;
                let cmp = compare_grid(&c, &args.distances(&cfg), &args.channels())?;
                eprint!("{}: {}", t.as_str(), cmp.summary());
                parts.push(cmp.merged());
            }
            args.emit(&GridResult::merge(parts))
        }
        Command::Calibrate(args) => {
            let cfg = load(&args.config, args.profile.as_deref(), None, args.seeds)?;
            let targets = load_targets(&args.targets)?;
            let options = CalibrateOptions {
                population: args.population,
                generations: args.generations,
                restarts: args.restarts,
                seed: args.seed,
                ..Default::default()
            };
            let fit = calibrate(&cfg, &targets, &args.name, &options)?;
            print!("{}", fit.summary());
            std::fs::write(&args.out, fit.profile.emit()).map_err(|e| Error::Io {
                path: args.out.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config_error() => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
