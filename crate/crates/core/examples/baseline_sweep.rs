//! Every scheduler and trajectory baseline on the same seeds, written to
//! per-pair metrics directories and summarized with 95% intervals.
//!
//! cargo run --release --example baseline_sweep -- [episodes] [out_dir]

use iab_uav_sim::metrics::{self, RunOptions};
use iab_uav_sim::policies::{SchedulerKind, TrajectoryKind};
use iab_uav_sim::ScenarioConfig;

fn main() -> iab_uav_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().map_or(10, |s| s.parse().expect("integer"));
    let root = args.next().map_or_else(|| std::env::temp_dir().join("uavsim-sweep"), Into::into);
    let cfg = ScenarioConfig::default();

    for scheduler in [SchedulerKind::RoundRobin, SchedulerKind::Random, SchedulerKind::Greedy] {
        for trajectory in [TrajectoryKind::Stationary, TrajectoryKind::Centroid] {
            let mut opts = RunOptions::new(root.join(format!("{scheduler}-{trajectory}")));
            opts.scheduler = scheduler;
            opts.trajectory = trajectory;
            opts.episodes = episodes;
            opts.seed = 500;
            metrics::run(&cfg, &opts)?;
            let s = metrics::summarize(&[opts.out.join("episodes.csv")])?;
            println!(
                "{scheduler:>10} + {trajectory:<10} delivered {:7.1} ± {:5.1} Mbps  dropped {:7.1} ± {:5.1} Mbps",
                s.delivered_total.mean, s.delivered_total.ci95, s.dropped_total.mean, s.dropped_total.ci95
            );
        }
    }
    println!("metrics under {}", root.display());
    Ok(())
}
