//! One episode with round-robin scheduling and stationary nodes.
//!
//! cargo run --example round_robin_episode -- [seed]

use iab_uav_sim::policies::{Controller, RoundRobin, Stationary};
use iab_uav_sim::{Env, ScenarioConfig};

fn main() -> iab_uav_sim::Result<()> {
    let seed = std::env::args().nth(1).map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");
    let cfg = ScenarioConfig::default();
    let mut env = Env::new(cfg.clone())?;
    let mut ctl = Controller::new(RoundRobin::new(), Stationary);

    env.reset(seed)?;
    ctl.reset(seed);
    let mut reward = 0.0;
    while !env.is_done() {
        let input = ctl.decide(&env)?;
        let t = env.step(&input)?;
        reward += t.global_short_reward;
        if t.slot % 50 == 0 {
            println!(
                "slot {:3}  delivered {:?}  relayed {:?}  dropped {:?}",
                t.slot, t.info.delivered, t.info.relayed, t.info.dropped
            );
        }
    }

    let stats = env.stats().expect("episode ran");
    let mbps = stats.totals.delivered as f64 * cfg.packet_bits / (cfg.episode_len as f64 * cfg.slot_len) / 1e6;
    println!("episode reward {reward}");
    println!(
        "arrivals {} = delivered {} + dropped {} + residual {}",
        stats.totals.arrivals, stats.totals.delivered, stats.totals.dropped, stats.residual
    );
    println!("per-UAV delivered {:?}", stats.delivered_per_uav);
    println!("throughput {mbps:.1} Mbps");
    Ok(())
}
