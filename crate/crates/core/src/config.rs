//! Scenario configuration.
//!
//! Defaults reproduce the reference deployment: 1 tethered donor at 200 m,
//! 4 untethered nodes at 100 m, 60 selected ground users in a 500 m disk.
//! Configs load from TOML; every field is optional and falls back to its
//! default, so a file only needs the keys it changes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::units;

/// How the long-timescale reward folds the block's short rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LongRewardMode {
    /// `(1/N_l) * sum`
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeZoneConfig {
    /// Radius of the donor's zone, centred on the origin.
    pub tuav_radius: f64,
    /// Radius of each node's zone.
    pub uuav_radius: f64,
    /// Per-axis offset of the node zones; with 4 nodes the centres are `(±o, ±o)`.
    pub uuav_offset: f64,
}

impl Default for SafeZoneConfig {
    fn default() -> Self {
        Self {
            tuav_radius: 100.0,
            uuav_radius: 50.0,
            uuav_offset: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// When set, UAV/user placement and destinations come from this seed and
    /// only traffic and fading follow the episode seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_seed: Option<u64>,
    /// Disaster-area radius, m.
    pub area_radius: f64,
    /// Number of untethered node UAVs (K₁). Zero means donor-only deployment.
    pub n_uuav: usize,
    /// Selected ground users (M); must equal `assoc_t + n_uuav * assoc_u`.
    pub n_gue: usize,
    /// Candidate users drawn before association and per-UAV sampling.
    pub candidate_pool: usize,
    pub tuav_height: f64,
    pub uuav_height: f64,
    pub carrier_t: f64,
    pub carrier_u: f64,
    pub power_t_dbm: f64,
    pub power_u_dbm: f64,
    pub antennas_t: usize,
    pub antennas_u: usize,
    pub bandwidth_t: f64,
    pub bandwidth_u: f64,
    /// Slot length T, s.
    pub slot_len: f64,
    /// Poisson arrival mean per user per slot.
    pub poisson_rate: f64,
    /// N_con: packets older than this many slots are dropped.
    pub drop_latency: u64,
    pub packet_bits: f64,
    pub assoc_t: usize,
    pub assoc_u: usize,
    pub sched_t: usize,
    pub sched_u: usize,
    /// Per-axis node speed limit, distance units per slot unit.
    pub v_d_max: f64,
    /// Ground-user walking speed, distance units per slot unit.
    pub v_w: f64,
    pub episode_len: u64,
    /// N_l: slots per trajectory block.
    pub long_block: u64,
    /// Slot units elapsed per slot for kinematics.
    pub time_unit: f64,
    pub long_reward_mode: LongRewardMode,
    pub channel: ChannelParams,
    pub safe_zone: SafeZoneConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            layout_seed: None,
            area_radius: 500.0,
            n_uuav: 4,
            n_gue: 60,
            candidate_pool: 1000,
            tuav_height: 200.0,
            uuav_height: 100.0,
            carrier_t: 2.6e9,
            carrier_u: 700e6,
            power_t_dbm: 24.0,
            power_u_dbm: 14.0,
            antennas_t: 32,
            antennas_u: 16,
            bandwidth_t: 100e6,
            bandwidth_u: 20e6,
            slot_len: 0.030,
            poisson_rate: 4.0,
            drop_latency: 10,
            packet_bits: 3e5,
            assoc_t: 20,
            assoc_u: 10,
            sched_t: 8,
            sched_u: 4,
            v_d_max: 10.0,
            v_w: 5.0,
            episode_len: 200,
            long_block: 10,
            time_unit: 1.0,
            long_reward_mode: LongRewardMode::Mean,
            channel: ChannelParams::default(),
            safe_zone: SafeZoneConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area_radius", self.area_radius),
            ("tuav_height", self.tuav_height),
            ("uuav_height", self.uuav_height),
            ("carrier_t", self.carrier_t),
            ("carrier_u", self.carrier_u),
            ("bandwidth_t", self.bandwidth_t),
            ("bandwidth_u", self.bandwidth_u),
            ("slot_len", self.slot_len),
            ("packet_bits", self.packet_bits),
            ("time_unit", self.time_unit),
            ("safe_zone.tuav_radius", self.safe_zone.tuav_radius),
            ("safe_zone.uuav_radius", self.safe_zone.uuav_radius),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [
            ("poisson_rate", self.poisson_rate),
            ("v_d_max", self.v_d_max),
            ("v_w", self.v_w),
            ("safe_zone.uuav_offset", self.safe_zone.uuav_offset),
        ] {
            non_negative(name, v)?;
        }
        if !self.power_t_dbm.is_finite() || !self.power_u_dbm.is_finite() {
            return Err(Error::InvalidConfig("transmit powers must be finite".into()));
        }
        for (name, v) in [
            ("candidate_pool", self.candidate_pool),
            ("antennas_t", self.antennas_t),
            ("antennas_u", self.antennas_u),
            ("assoc_t", self.assoc_t),
            ("assoc_u", self.assoc_u),
            ("sched_t", self.sched_t),
            ("sched_u", self.sched_u),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.sched_t > self.assoc_t + self.n_uuav {
            return Err(Error::InvalidConfig(format!(
                "sched_t ({}) exceeds assoc_t + n_uuav ({})",
                self.sched_t,
                self.assoc_t + self.n_uuav
            )));
        }
        if self.sched_u > self.assoc_u {
            return Err(Error::InvalidConfig(format!(
                "sched_u ({}) exceeds assoc_u ({})",
                self.sched_u, self.assoc_u
            )));
        }
        if self.n_gue != self.assoc_t + self.n_uuav * self.assoc_u {
            return Err(Error::InvalidConfig(format!(
                "n_gue ({}) must equal assoc_t + n_uuav * assoc_u ({})",
                self.n_gue,
                self.assoc_t + self.n_uuav * self.assoc_u
            )));
        }
        if self.drop_latency < 1 {
            return Err(Error::InvalidConfig("drop_latency must be at least 1".into()));
        }
        if self.long_block < 1 || self.episode_len < self.long_block {
            return Err(Error::InvalidConfig(
                "need episode_len >= long_block >= 1".into(),
            ));
        }
        if self.uuav_height >= self.tuav_height {
            return Err(Error::InvalidConfig(
                "uuav_height must be below tuav_height".into(),
            ));
        }
        self.channel.validate()
    }

    pub fn n_uav(&self) -> usize {
        self.n_uuav + 1
    }

    pub fn wavelength_t(&self) -> f64 {
        units::wavelength(self.carrier_t)
    }

    pub fn wavelength_u(&self) -> f64 {
        units::wavelength(self.carrier_u)
    }

    /// Transmit power of UAV `k` (0 = donor) in watts.
    pub fn power_watts(&self, uav: usize) -> f64 {
        if uav == 0 {
            units::dbm_to_watts(self.power_t_dbm)
        } else {
            units::dbm_to_watts(self.power_u_dbm)
        }
    }

    pub fn power_dbm(&self, uav: usize) -> f64 {
        if uav == 0 {
            self.power_t_dbm
        } else {
            self.power_u_dbm
        }
    }

    pub fn bandwidth(&self, uav: usize) -> f64 {
        if uav == 0 {
            self.bandwidth_t
        } else {
            self.bandwidth_u
        }
    }

    pub fn antennas(&self, uav: usize) -> usize {
        if uav == 0 {
            self.antennas_t
        } else {
            self.antennas_u
        }
    }

    pub fn wavelength(&self, uav: usize) -> f64 {
        if uav == 0 {
            self.wavelength_t()
        } else {
            self.wavelength_u()
        }
    }

    pub fn sched_limit(&self, uav: usize) -> usize {
        if uav == 0 {
            self.sched_t
        } else {
            self.sched_u
        }
    }

    pub fn assoc_quota(&self, uav: usize) -> usize {
        if uav == 0 {
            self.assoc_t
        } else {
            self.assoc_u
        }
    }

    /// Noise power at a receiver served by UAV `k`'s band, watts.
    pub fn noise_watts(&self, uav: usize) -> f64 {
        units::thermal_noise_watts(
            self.channel.noise_density_dbm_hz,
            self.bandwidth(uav),
            self.channel.noise_figure_db,
        )
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
