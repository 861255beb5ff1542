//! Donor-to-user link budget as a user walks away from the donor.
//!
//! cargo run --example channel_sweep

use iab_uav_sim::channel::{large_scale_a2g, los_probability, rssi_dbm, sample_a2g_channel, LinkGeometry};
use iab_uav_sim::link::{mrt_precoder, quantized_capacity};
use iab_uav_sim::{rng, ScenarioConfig};

fn main() -> iab_uav_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let params = &cfg.channel;
    let donor = [0.0, 0.0, cfg.tuav_height];
    let power = cfg.power_watts(0);
    let noise = cfg.noise_watts(0);
    let mut fading = rng::substream(7, &[rng::FADING]);

    println!("{:>6} {:>7} {:>6} {:>8} {:>9} {:>9} {:>8}", "x_m", "elev", "p_los", "loss_dB", "rssi_dBm", "snr_dB", "packets");
    for x in [0.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 700.0, 1000.0] {
        let geom = LinkGeometry::between(donor, [x, 0.0, 0.0], cfg.wavelength(0), cfg.antennas(0), 1);
        let loss = large_scale_a2g(&geom, params)?;
        // average the single-user SNR over fading draws
        let draws = 500;
        let mut snr = 0.0;
        for _ in 0..draws {
            let g = sample_a2g_channel(&geom, loss, params, &mut fading);
            let w = mrt_precoder(&g)?;
            snr += power * g.beam_gain(&w) / noise;
        }
        snr /= draws as f64;
        println!(
            "{x:>6.0} {:>7.2} {:>6.3} {:>8.2} {:>9.2} {:>9.2} {:>8}",
            geom.elevation_deg,
            los_probability(geom.elevation_deg, params),
            10.0 * loss.log10(),
            rssi_dbm(cfg.power_dbm(0), loss),
            10.0 * snr.log10(),
            quantized_capacity(cfg.bandwidth(0), snr, cfg.slot_len, cfg.packet_bits),
        );
    }
    Ok(())
}
