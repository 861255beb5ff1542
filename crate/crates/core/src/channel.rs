//! Air-to-ground and air-to-air channel model.
//!
//! Large-scale loss follows the probabilistic-LoS mixture: a Friis core
//! `(4πd/λ)^α` weighted by the expected excess attenuation
//! `μ_LoS·Pr_LoS + μ_NLoS·(1 − Pr_LoS)`, where `Pr_LoS` is a logistic
//! function of the elevation angle. The mixture is used in closed form;
//! the LoS state is never sampled.
//!
//! Small-scale fading is Rician with an elevation-dependent factor
//! `K = A1·exp(A2·Θ)` (Θ in radians inside the exponent). The LoS part is a
//! ULA steering vector (MISO) or an outer product of receive and transmit
//! steering vectors (MIMO); the scattered part is i.i.d. unit-variance CSCG.
//!
//! Losses are linear power ratios ≥ 1 and act as divisors: received power is
//! `P / h`, and a coefficient carries amplitude `sqrt(1/h)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, linear_to_db};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// LoS-probability constant `a`.
    pub los_a: f64,
    /// LoS-probability constant `b`.
    pub los_b: f64,
    pub path_loss_exponent: f64,
    pub mu_los_db: f64,
    pub mu_nlos_db: f64,
    /// Rician factor at zero elevation. `inf` forces pure LoS.
    pub rician_a1: f64,
    /// Rician growth rate per radian of elevation.
    pub rician_a2: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            los_a: 11.95,
            los_b: 0.136,
            path_loss_exponent: 2.0,
            mu_los_db: 1.0,
            mu_nlos_db: 20.0,
            rician_a1: 1.0,
            rician_a2: 30f64.ln() / FRAC_PI_2,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 7.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("channel: {m}")));
        if !(self.los_a > 0.0 && self.los_b > 0.0) {
            return bad("los_a and los_b must be positive");
        }
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return bad("path_loss_exponent must be >= 2");
        }
        if !(self.mu_los_db >= 0.0 && self.mu_nlos_db >= self.mu_los_db) {
            return bad("need mu_nlos_db >= mu_los_db >= 0");
        }
        if !(self.rician_a1 >= 1.0 && self.rician_a2 >= 0.0) {
            return bad("need rician_a1 >= 1 and rician_a2 >= 0");
        }
        if !self.noise_density_dbm_hz.is_finite() || !self.noise_figure_db.is_finite() {
            return bad("noise parameters must be finite");
        }
        Ok(())
    }
}

/// Geometry of one transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    /// Elevation angle in degrees, `[0, 90]`.
    pub elevation_deg: f64,
    pub wavelength: f64,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
}

impl LinkGeometry {
    pub fn between(
        tx: [f64; 3],
        rx: [f64; 3],
        wavelength: f64,
        tx_antennas: usize,
        rx_antennas: usize,
    ) -> Self {
        let dx = tx[0] - rx[0];
        let dy = tx[1] - rx[1];
        let dz = tx[2] - rx[2];
        let distance = (dx * dx + dy * dy + dz * dz).sqrt();
        let elevation_deg = if distance > 0.0 {
            (dz.abs() / distance).min(1.0).asin().to_degrees()
        } else {
            90.0
        };
        Self {
            distance,
            elevation_deg,
            wavelength,
            tx_antennas,
            rx_antennas,
        }
    }

    /// Angle of incidence on the array, `π/2 − Θ`.
    pub fn incidence_angle(&self) -> f64 {
        FRAC_PI_2 - self.elevation_deg.to_radians()
    }
}

pub fn los_probability(elevation_deg: f64, params: &ChannelParams) -> f64 {
    1.0 / (1.0 + params.los_a * (-params.los_b * (elevation_deg - params.los_a)).exp())
}

fn friis_core(distance: f64, wavelength: f64, exponent: f64) -> Result<f64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::Domain("link distance must be positive"));
    }
    Ok((4.0 * PI * distance / wavelength).powf(exponent))
}

/// Expected A2G large-scale loss (linear, ≥ 1).
pub fn large_scale_a2g(geom: &LinkGeometry, params: &ChannelParams) -> Result<f64> {
    let core = friis_core(geom.distance, geom.wavelength, params.path_loss_exponent)?;
    let p = los_probability(geom.elevation_deg, params);
    let atten = db_to_linear(params.mu_los_db) * p + db_to_linear(params.mu_nlos_db) * (1.0 - p);
    Ok(core * atten)
}

/// A2A large-scale loss: pure LoS, no probability mixture.
pub fn large_scale_a2a(geom: &LinkGeometry, params: &ChannelParams) -> Result<f64> {
    let core = friis_core(geom.distance, geom.wavelength, params.path_loss_exponent)?;
    Ok(core * db_to_linear(params.mu_los_db))
}

pub fn rician_factor(elevation_deg: f64, params: &ChannelParams) -> f64 {
    params.rician_a1 * (params.rician_a2 * elevation_deg.to_radians()).exp()
}

/// ULA steering vector, element `i` is `exp(−jπ·i·cos φ)`.
pub fn steering_vector(angle: f64, n_antennas: usize) -> DVector<C64> {
    let c = angle.cos();
    DVector::from_fn(n_antennas, |i, _| C64::from_polar(1.0, -PI * i as f64 * c))
}

/// (LoS weight, NLoS weight) of the Rician mixture.
fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

fn cscg<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel matrix of shape `rx × tx`. MISO links are `1 × A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficient(pub DMatrix<C64>);

impl ChannelCoefficient {
    pub fn rx_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn tx_antennas(&self) -> usize {
        self.0.ncols()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `‖g·w‖²`, the matched-filter received power for unit-power precoder `w`.
    pub fn beam_gain(&self, precoder: &DVector<C64>) -> f64 {
        (&self.0 * precoder).iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Draws a MISO A2G coefficient at large-scale loss `loss`.
pub fn sample_a2g_channel<R: Rng + ?Sized>(
    geom: &LinkGeometry,
    loss: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> ChannelCoefficient {
    debug_assert_eq!(geom.rx_antennas, 1);
    let k = rician_factor(geom.elevation_deg, params);
    let (w_los, w_nlos) = rician_weights(k);
    let phase = C64::from_polar(1.0, -2.0 * PI * geom.distance / geom.wavelength);
    let steer = steering_vector(geom.incidence_angle(), geom.tx_antennas);
    let amp = (1.0 / loss).sqrt();
    let g = DMatrix::from_fn(1, geom.tx_antennas, |_, c| {
        let nlos = cscg(rng);
        (phase * steer[c] * w_los + nlos * w_nlos) * amp
    });
    ChannelCoefficient(g)
}

/// Draws an `A_rx × A_tx` MIMO A2A coefficient at large-scale loss `loss`.
pub fn sample_a2a_channel<R: Rng + ?Sized>(
    geom: &LinkGeometry,
    loss: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> ChannelCoefficient {
    let k = rician_factor(geom.elevation_deg, params);
    let (w_los, w_nlos) = rician_weights(k);
    let phase = C64::from_polar(1.0, -2.0 * PI * geom.distance / geom.wavelength);
    let phi = geom.incidence_angle();
    let e_r = steering_vector(phi, geom.rx_antennas);
    let e_t = steering_vector(phi, geom.tx_antennas);
    let amp = (1.0 / loss).sqrt();
    // row-major draw order
    let mut g = DMatrix::zeros(geom.rx_antennas, geom.tx_antennas);
    for r in 0..geom.rx_antennas {
        for c in 0..geom.tx_antennas {
            let los = phase * e_r[r] * e_t[c].conj();
            g[(r, c)] = (los * w_los + cscg(rng) * w_nlos) * amp;
        }
    }
    ChannelCoefficient(g)
}

/// Large-scale received power in dBm.
pub fn rssi_dbm(tx_power_dbm: f64, loss: f64) -> f64 {
    tx_power_dbm - linear_to_db(loss)
}
