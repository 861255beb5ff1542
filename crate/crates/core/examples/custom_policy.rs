//! Plugging a user-defined scheduler into the env.
//!
//! `LongestQueue` schedules the candidates with the largest backlog and is
//! compared against round robin on the same seeds.
//!
//! cargo run --example custom_policy -- [episodes]

use iab_uav_sim::env::{ShortAction, ShortAgentSpec, ShortObservation};
use iab_uav_sim::metrics::{mean_ci95, run_episode};
use iab_uav_sim::policies::{Controller, RoundRobin, SchedulingPolicy, Stationary};
use iab_uav_sim::ScenarioConfig;

struct LongestQueue;

impl SchedulingPolicy for LongestQueue {
    fn act(&mut self, _agent: &ShortAgentSpec, obs: &ShortObservation) -> ShortAction {
        ShortAction::Scores(obs.buffer.iter().map(|b| b.n_cum as f64).collect())
    }
}

type Contender = (&'static str, fn() -> Controller);

fn main() -> iab_uav_sim::Result<()> {
    let episodes: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("integer"));
    let cfg = ScenarioConfig::default();
    let contenders: [Contender; 2] = [
        ("roundrobin", || Controller::new(RoundRobin::new(), Stationary)),
        ("longest-queue", || Controller::new(LongestQueue, Stationary)),
    ];
    for (name, make) in contenders {
        let mut ctl = make();
        let mut mbps = Vec::new();
        for e in 0..episodes {
            mbps.push(run_episode(&cfg, &mut ctl, e, 100 + e, false)?.record.delivered_mbps);
        }
        let s = mean_ci95(&mbps);
        println!("{name:>14}: {:.1} ± {:.1} Mbps over {} episodes", s.mean, s.ci95, s.n);
    }
    Ok(())
}
