//! Baseline decision-makers.
//!
//! Scheduling baselines: [`RoundRobin`], [`RandomScores`], [`GreedyLatency`].
//! Trajectory baselines: [`Stationary`], [`CentroidTracking`].
//! [`Controller`] pairs one of each and turns env observations into a
//! [`StepInput`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::env::{Env, LongAgentSpec, LongObservation, ShortAction, ShortAgentSpec, ShortObservation, StepInput};
use crate::error::{Error, Result};
use crate::rng;

pub trait SchedulingPolicy {
    /// Called at every episode start.
    fn reset(&mut self, _seed: u64) {}
    fn act(&mut self, agent: &ShortAgentSpec, obs: &ShortObservation) -> ShortAction;
}

pub trait TrajectoryPolicy {
    fn reset(&mut self, _seed: u64) {}
    fn act(&mut self, agent: &LongAgentSpec, obs: &LongObservation) -> [f64; 2];
}

/// Rotates over each agent's static candidate list, skipping empty buffers.
///
/// The cursor points at the first candidate to consider next slot; it only
/// moves past candidates that were actually granted.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    cursors: Vec<usize>,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cursor(&self, uav: usize) -> usize {
        self.cursors.get(uav).copied().unwrap_or(0)
    }

    /// Mask selecting the next `limit` eligible candidates from the cursor.
    pub fn select(&mut self, uav: usize, eligible: &[bool], limit: usize) -> Vec<bool> {
        if self.cursors.len() <= uav {
            self.cursors.resize(uav + 1, 0);
        }
        let n = eligible.len();
        let mut mask = vec![false; n];
        if n == 0 {
            return mask;
        }
        let start = self.cursors[uav] % n;
        let mut taken = 0;
        for step in 0..n {
            if taken == limit {
                break;
            }
            let i = (start + step) % n;
            if eligible[i] {
                mask[i] = true;
                taken += 1;
                self.cursors[uav] = (i + 1) % n;
            }
        }
        mask
    }
}

impl SchedulingPolicy for RoundRobin {
    fn reset(&mut self, _seed: u64) {
        self.cursors.clear();
    }

    fn act(&mut self, agent: &ShortAgentSpec, obs: &ShortObservation) -> ShortAction {
        ShortAction::Mask(self.select(agent.uav, &obs.eligible(), agent.sched_limit))
    }
}

/// Uniform random scores; the env's top-k keeps it feasible.
#[derive(Debug, Clone)]
pub struct RandomScores {
    rng: ChaCha8Rng,
}

impl RandomScores {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::substream(seed, &[rng::POLICY]),
        }
    }
}

impl SchedulingPolicy for RandomScores {
    fn reset(&mut self, seed: u64) {
        self.rng = rng::substream(seed, &[rng::POLICY]);
    }

    fn act(&mut self, _agent: &ShortAgentSpec, obs: &ShortObservation) -> ShortAction {
        ShortAction::Scores((0..obs.buffer.len()).map(|_| self.rng.random::<f64>()).collect())
    }
}

/// Oldest head-of-line packet first, then larger backlog, then lower index.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyLatency;

impl GreedyLatency {
    /// Scores whose order is exactly (head latency, backlog) lexicographic.
    pub fn scores(obs: &ShortObservation) -> Vec<f64> {
        let scale = obs.buffer.iter().map(|b| b.n_cum).max().unwrap_or(0) as f64 + 1.0;
        obs.buffer
            .iter()
            .map(|b| b.head_latency * scale + b.n_cum as f64)
            .collect()
    }
}

impl SchedulingPolicy for GreedyLatency {
    fn act(&mut self, _agent: &ShortAgentSpec, obs: &ShortObservation) -> ShortAction {
        ShortAction::Scores(Self::scores(obs))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stationary;

impl TrajectoryPolicy for Stationary {
    fn act(&mut self, _agent: &LongAgentSpec, _obs: &LongObservation) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// Heads toward the mean position of the node's users.
///
/// The velocity that would reach the centroid in one block is scaled down
/// (direction kept) until both components fit within `v_max`.
#[derive(Debug, Clone, Copy)]
pub struct CentroidTracking {
    pub v_max: f64,
    /// Block duration in kinematic time units.
    pub block_time: f64,
}

impl CentroidTracking {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            v_max: cfg.v_d_max,
            block_time: cfg.long_block as f64 * cfg.time_unit,
        }
    }

    pub fn velocity(&self, position: [f64; 2], target: [f64; 2]) -> [f64; 2] {
        let v = [
            (target[0] - position[0]) / self.block_time,
            (target[1] - position[1]) / self.block_time,
        ];
        let peak = v[0].abs().max(v[1].abs());
        if peak <= self.v_max {
            v
        } else {
            let s = self.v_max / peak;
            [(v[0] * s).clamp(-self.v_max, self.v_max), (v[1] * s).clamp(-self.v_max, self.v_max)]
        }
    }
}

impl TrajectoryPolicy for CentroidTracking {
    fn act(&mut self, _agent: &LongAgentSpec, obs: &LongObservation) -> [f64; 2] {
        self.velocity([obs.position[0], obs.position[1]], obs.member_centroid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    RoundRobin,
    Random,
    Greedy,
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roundrobin" | "round-robin" | "rr" => Ok(Self::RoundRobin),
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            other => Err(Error::InvalidConfig(format!(
                "unknown policy `{other}` (expected roundrobin, random or greedy)"
            ))),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::RoundRobin => "roundrobin",
            Self::Random => "random",
            Self::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Stationary,
    Centroid,
}

impl FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" | "static" => Ok(Self::Stationary),
            "centroid" => Ok(Self::Centroid),
            other => Err(Error::InvalidConfig(format!(
                "unknown trajectory `{other}` (expected stationary or centroid)"
            ))),
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Stationary => "stationary",
            Self::Centroid => "centroid",
        })
    }
}

pub struct Controller {
    pub scheduler: Box<dyn SchedulingPolicy + Send>,
    pub trajectory: Box<dyn TrajectoryPolicy + Send>,
}

impl Controller {
    pub fn new(
        scheduler: impl SchedulingPolicy + Send + 'static,
        trajectory: impl TrajectoryPolicy + Send + 'static,
    ) -> Self {
        Self {
            scheduler: Box::new(scheduler),
            trajectory: Box::new(trajectory),
        }
    }

    pub fn from_kinds(cfg: &ScenarioConfig, scheduler: SchedulerKind, trajectory: TrajectoryKind) -> Self {
        let scheduler: Box<dyn SchedulingPolicy + Send> = match scheduler {
            SchedulerKind::RoundRobin => Box::new(RoundRobin::new()),
            SchedulerKind::Random => Box::new(RandomScores::new(cfg.seed)),
            SchedulerKind::Greedy => Box::new(GreedyLatency),
        };
        let trajectory: Box<dyn TrajectoryPolicy + Send> = match trajectory {
            TrajectoryKind::Stationary => Box::new(Stationary),
            TrajectoryKind::Centroid => Box::new(CentroidTracking::new(cfg)),
        };
        Self { scheduler, trajectory }
    }

    pub fn reset(&mut self, seed: u64) {
        self.scheduler.reset(seed);
        self.trajectory.reset(seed);
    }

    /// Joint action for the env's current slot.
    pub fn decide(&mut self, env: &Env) -> Result<StepInput> {
        let obs = env.observations().ok_or(Error::NotReset)?;
        let short = env
            .short_agents()
            .iter()
            .zip(&obs.short)
            .map(|(a, o)| self.scheduler.act(a, o))
            .collect();
        let long = env.expects_long_action().then(|| {
            env.long_agents()
                .iter()
                .zip(&obs.long)
                .map(|(a, o)| self.trajectory.act(a, o))
                .collect()
        });
        Ok(StepInput { short, long })
    }
}
