//! Loading, validating and overriding a scenario file.
//!
//! cargo run --example config_file -- [path.toml]

use iab_uav_sim::{Env, Error, ScenarioConfig};

fn main() -> iab_uav_sim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.toml").to_string());
    let cfg = ScenarioConfig::load(&path)?;
    println!("{path}: {} nodes, {} users, hash {}", cfg.n_uuav, cfg.n_gue, &cfg.hash()[..16]);

    // keys left out of a file take their default values
    let partial = ScenarioConfig::from_toml_str("poisson_rate = 1.0\nepisode_len = 50\n")?;
    println!("partial file: rate {} over {} slots, {} users", partial.poisson_rate, partial.episode_len, partial.n_gue);

    // user count must match the association quotas
    match ScenarioConfig::from_toml_str("n_gue = 61\n") {
        Err(e @ Error::InvalidConfig(_)) => println!("rejected [{}]: {e}", e.code()),
        other => println!("unexpected: {other:?}"),
    }

    let mut env = Env::new(cfg)?;
    let obs = env.reset(3)?;
    for (spec, o) in env.short_agents().iter().zip(&obs.short) {
        println!(
            "UAV {}: {} candidates, limit {}, {} eligible, obs len {}",
            spec.uav,
            spec.candidates.len(),
            spec.sched_limit,
            o.eligible().iter().filter(|&&g| g).count(),
            o.to_flat().len()
        );
    }
    Ok(())
}
