//! Deterministic simulator of an IAB-enabled heterogeneous UAV emergency network.
//!
//! A tethered donor UAV (index 0) serves ground users directly and relays
//! traffic over a wireless backhaul to untethered node UAVs (indices `1..=K`),
//! which serve their own users. Scheduling agents act every slot; node
//! trajectory agents act once per block of `N_l` slots.
//!
//! Start with [`env::Env`] for stepping, [`policies`] for baseline agents,
//! [`metrics::run`] for batch evaluation and [`protocol`] for driving the
//! environment from another process.

pub mod channel;
pub mod config;
pub mod env;
pub mod error;
pub mod link;
pub mod metrics;
pub mod policies;
pub mod protocol;
pub mod rng;
pub mod scenario;
pub mod traffic;
pub mod units;

pub use config::{LongRewardMode, ScenarioConfig};
pub use env::{Env, StepInput, TransitionRecord};
pub use error::{Error, Result};
