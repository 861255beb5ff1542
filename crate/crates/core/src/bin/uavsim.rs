use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iab_uav_sim::metrics::{self, RunOptions};
use iab_uav_sim::policies::{SchedulerKind, TrajectoryKind};
use iab_uav_sim::protocol::{self, Endpoint};
use iab_uav_sim::{Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "uavsim", version, about = "IAB UAV network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes under a baseline policy and write metrics.
    Run(RunArgs),
    /// Serve the environment over the JSON-lines protocol.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// stdio, tcp:PORT or tcp:HOST:PORT
        #[arg(long, default_value = "stdio")]
        endpoint: Endpoint,
    },
    /// Mean ± 95% CI over one or more episodes.csv files.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print the resolved configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// roundrobin, random or greedy
    #[arg(long, default_value = "roundrobin")]
    policy: SchedulerKind,
    /// stationary or centroid
    #[arg(long, default_value = "stationary")]
    trajectory: TrajectoryKind,
    #[arg(long, default_value_t = 1)]
    episodes: u64,
    /// Base seed; episode e uses seed + e. Defaults to the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep one deployment (node and user placement) for every episode.
    #[arg(long)]
    layout_seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trace_slots: bool,
    #[arg(long)]
    trace_ledger: bool,
    #[arg(long)]
    dump_rssi: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Serve the protocol on this endpoint instead of running episodes.
    #[arg(long)]
    serve: Option<Endpoint>,
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = load(args.config.as_ref())?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if args.layout_seed.is_some() {
                cfg.layout_seed = args.layout_seed;
            }
            if let Some(endpoint) = args.serve {
                return protocol::serve(cfg, &endpoint);
            }
            let opts = RunOptions {
                scheduler: args.policy,
                trajectory: args.trajectory,
                episodes: args.episodes,
                seed: cfg.seed,
                out: args.out,
                trace_slots: args.trace_slots,
                trace_ledger: args.trace_ledger,
                dump_rssi: args.dump_rssi,
                workers: args.workers,
            };
            metrics::run(&cfg, &opts)?;
            let summary = metrics::summarize(&[opts.out.join("episodes.csv")])?;
            println!("{summary}");
            Ok(())
        }
        Command::Serve { config, endpoint } => protocol::serve(load(config.as_ref())?, &endpoint),
        Command::Summarize { files, json } => {
            let summary = metrics::summarize(&files)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                println!("{summary}");
            }
            Ok(())
        }
        Command::Config { config } => {
            print!("{}", load(config.as_ref())?.to_toml_string());
            Ok(())
        }
    }
}
