#![allow(dead_code)]

pub mod hp;

use iab_uav_sim::ScenarioConfig;

/// 2 nodes, 12 users; small enough for exhaustive checks.
pub fn desk_config() -> ScenarioConfig {
    ScenarioConfig {
        n_uuav: 2,
        n_gue: 12,
        assoc_t: 4,
        assoc_u: 4,
        sched_t: 3,
        sched_u: 2,
        episode_len: 40,
        long_block: 5,
        ..ScenarioConfig::default()
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
