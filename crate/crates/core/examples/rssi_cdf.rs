//! Serving RSSI of the selected users with and without the node UAVs.
//!
//! cargo run --example rssi_cdf -- [n_seeds]

use iab_uav_sim::scenario::init_world;
use iab_uav_sim::ScenarioConfig;

fn deciles(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    (1..10).map(|d| v[(d * v.len() / 10).min(v.len() - 1)]).collect()
}

fn main() -> iab_uav_sim::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).map_or(20, |s| s.parse().expect("integer"));
    let cfg = ScenarioConfig::default();
    let mut with_nodes = Vec::new();
    let mut donor_only = Vec::new();
    for seed in 0..n_seeds {
        let world = init_world(&cfg, seed)?;
        with_nodes.extend(world.serving_rssi(&cfg, true));
        donor_only.extend(world.serving_rssi(&cfg, false));
    }
    println!("{} users over {n_seeds} layouts", with_nodes.len());
    println!("decile  donor+nodes  donor-only  gain_dB");
    for (d, (a, b)) in deciles(with_nodes).into_iter().zip(deciles(donor_only)).enumerate() {
        println!("  {:>3}%  {a:>11.2}  {b:>10.2}  {:>7.2}", (d + 1) * 10, a - b);
    }
    Ok(())
}
