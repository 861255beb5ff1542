//! Two-timescale environment.
//!
//! Every UAV is a scheduling agent acting each slot; every node is also a
//! trajectory agent acting at slots where `n mod N_l == 0` (including slot 0).
//!
//! One `step` executes slot `n` in this order:
//! 1. schedule and transmit (ground pops, then backhaul relays),
//! 2. drop sweep: remove packets that would be older than `N_con` at slot `n+1`,
//! 3. mobility: users advance; on block-start slots nodes apply the block's velocity,
//! 4. arrivals for slot `n+1`, then the observation snapshot returned to agents.
//!
//! `reset` performs (4) for slot 0. Because packets past their deadline are
//! swept before the next transmission, nothing is ever delivered late.
//!
//! Short rewards count ground deliveries only; backhaul relays are internal
//! moves and earn nothing directly.

mod action;
mod observation;

use serde::{Deserialize, Serialize};

pub use action::{clamp_velocity, sanitize_short_action, ScheduleDecision, ShortAction};
pub use observation::{
    LayoutField, LongAgentSpec, LongObservation, ObservationLayout, ShortAgentSpec,
    ShortObservation,
};

use crate::config::{LongRewardMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::link::{self, LinkRealization};
use crate::scenario::{init_world, WorldState};
use crate::traffic::{Grant, LedgerRow, QueueState, Target, Totals};

/// Joint action for one slot. `long` must be present exactly on block-start slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInput {
    pub short: Vec<ShortAction>,
    #[serde(default)]
    pub long: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub short: Vec<ShortObservation>,
    pub long: Vec<LongObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub tx: usize,
    pub target: Target,
    pub power_w: f64,
    pub sinr: f64,
    pub capacity: u64,
    pub n_tx: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub slot: u64,
    /// Arrivals that were queued for this slot.
    pub arrivals: u64,
    /// Ground deliveries per UAV.
    pub delivered: Vec<u64>,
    /// Backhaul moves per node (index `k − 1`).
    pub relayed: Vec<u64>,
    /// Drops per holding UAV.
    pub dropped: Vec<u64>,
    pub max_delivered_age: Option<u64>,
    pub links: Vec<LinkReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTransition {
    /// Block reward per node.
    pub rewards: Vec<f64>,
    pub global_reward: f64,
    /// Observations for the next block's decision.
    pub observations: Vec<LongObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub slot: u64,
    pub schedule: Vec<ScheduleDecision>,
    /// Applied (clamped) velocities when this slot started a block.
    pub velocities: Option<Vec<[f64; 2]>>,
    pub short_rewards: Vec<f64>,
    pub global_short_reward: f64,
    /// Present on the last slot of each block.
    pub long: Option<LongTransition>,
    pub observations: Vec<ShortObservation>,
    pub done: bool,
    pub info: StepInfo,
}

/// Validated schedule per UAV and clamped velocities, as [`Env::sanitize`] returns them.
pub type SanitizedInput = (Vec<ScheduleDecision>, Option<Vec<[f64; 2]>>);

/// Mean of the block's short rewards (or their sum, per config).
pub fn long_reward(block: &[f64], mode: LongRewardMode) -> f64 {
    let sum: f64 = block.iter().sum();
    match mode {
        LongRewardMode::Sum => sum,
        LongRewardMode::Mean if block.is_empty() => 0.0,
        LongRewardMode::Mean => sum / block.len() as f64,
    }
}

#[derive(Debug, Clone)]
struct Episode {
    seed: u64,
    world: WorldState,
    queues: QueueState,
    slot: u64,
    done: bool,
    last_arrivals: u64,
    prev_sinr: Vec<Vec<f64>>,
    prev_reward: Vec<f64>,
    prev_action: Vec<Vec<bool>>,
    prev_velocity: Vec<[f64; 2]>,
    prev_long_reward: Vec<f64>,
    block: Vec<Vec<f64>>,
    ledger: Vec<LedgerRow>,
    delivered: Vec<u64>,
    dropped: Vec<u64>,
    per_slot_delivered: Vec<u64>,
    per_slot_dropped: Vec<u64>,
    max_delivered_age: Option<u64>,
}

/// Per-episode counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub seed: u64,
    pub slots: u64,
    pub totals: Totals,
    pub residual: u64,
    pub delivered_per_uav: Vec<u64>,
    pub dropped_per_uav: Vec<u64>,
    pub per_slot_delivered: Vec<u64>,
    pub per_slot_dropped: Vec<u64>,
    pub max_delivered_age: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Env {
    cfg: ScenarioConfig,
    short_agents: Vec<ShortAgentSpec>,
    long_agents: Vec<LongAgentSpec>,
    episode: Option<Episode>,
}

impl Env {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        // candidate sets depend only on the quotas, not on the seed
        let short_agents = (0..cfg.n_uav())
            .map(|k| {
                let n = if k == 0 { cfg.n_uuav + cfg.assoc_t } else { cfg.assoc_u };
                ShortAgentSpec {
                    uav: k,
                    candidates: Vec::new(),
                    sched_limit: cfg.sched_limit(k),
                    layout: ObservationLayout::short(n),
                }
            })
            .collect();
        let long_agents = (1..=cfg.n_uuav)
            .map(|k| LongAgentSpec {
                node: k,
                users: Vec::new(),
                layout: ObservationLayout::long(cfg.assoc_u),
            })
            .collect();
        Ok(Self {
            cfg,
            short_agents,
            long_agents,
            episode: None,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Agent descriptors; candidate lists are filled after the first reset.
    pub fn short_agents(&self) -> &[ShortAgentSpec] {
        &self.short_agents
    }

    pub fn long_agents(&self) -> &[LongAgentSpec] {
        &self.long_agents
    }

    pub fn slot(&self) -> Option<u64> {
        self.episode.as_ref().map(|e| e.slot)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.done)
    }

    /// True when the next step must carry long actions.
    pub fn expects_long_action(&self) -> bool {
        self.episode
            .as_ref()
            .is_some_and(|e| !e.done && self.cfg.n_uuav > 0 && e.slot % self.cfg.long_block == 0)
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.episode.as_ref().map(|e| &e.world)
    }

    pub fn queues(&self) -> Option<&QueueState> {
        self.episode.as_ref().map(|e| &e.queues)
    }

    /// Traffic ledger rows accumulated over the current episode.
    pub fn ledger(&self) -> &[LedgerRow] {
        self.episode.as_ref().map_or(&[], |e| &e.ledger)
    }

    pub fn stats(&self) -> Option<EpisodeStats> {
        self.episode.as_ref().map(|e| EpisodeStats {
            seed: e.seed,
            slots: e.slot,
            totals: e.queues.totals(),
            residual: e.queues.residual(),
            delivered_per_uav: e.delivered.clone(),
            dropped_per_uav: e.dropped.clone(),
            per_slot_delivered: e.per_slot_delivered.clone(),
            per_slot_dropped: e.per_slot_dropped.clone(),
            max_delivered_age: e.max_delivered_age,
        })
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observations> {
        let world = init_world(&self.cfg, self.cfg.layout_seed.unwrap_or(seed))?;
        let queues = QueueState::new(world.association.clone(), seed);
        for (k, agent) in self.short_agents.iter_mut().enumerate() {
            agent.candidates = candidates_of(&world, k);
            debug_assert_eq!(agent.layout, ObservationLayout::short(agent.candidates.len()));
        }
        for agent in &mut self.long_agents {
            agent.users = world.association.members(agent.node);
        }
        let n_uav = self.cfg.n_uav();
        let mut ep = Episode {
            seed,
            world,
            queues,
            slot: 0,
            done: false,
            last_arrivals: 0,
            prev_sinr: self.short_agents.iter().map(|a| vec![0.0; a.candidates.len()]).collect(),
            prev_reward: vec![0.0; n_uav],
            prev_action: self.short_agents.iter().map(|a| vec![false; a.candidates.len()]).collect(),
            prev_velocity: vec![[0.0, 0.0]; self.cfg.n_uuav],
            prev_long_reward: vec![0.0; self.cfg.n_uuav],
            block: vec![Vec::with_capacity(self.cfg.long_block as usize); self.cfg.n_uuav],
            ledger: Vec::new(),
            delivered: vec![0; n_uav],
            dropped: vec![0; n_uav],
            per_slot_delivered: Vec::with_capacity(self.cfg.episode_len as usize),
            per_slot_dropped: Vec::with_capacity(self.cfg.episode_len as usize),
            max_delivered_age: None,
        };
        ep.last_arrivals = ep.queues.generate_arrivals(0, self.cfg.poisson_rate).iter().sum();
        self.episode = Some(ep);
        Ok(self.observations().expect("episode just created"))
    }

    /// Current observations for every agent.
    pub fn observations(&self) -> Option<Observations> {
        let ep = self.episode.as_ref()?;
        Some(Observations {
            short: self.short_observations(ep),
            long: self.long_observations(ep),
        })
    }

    fn short_observations(&self, ep: &Episode) -> Vec<ShortObservation> {
        self.short_agents
            .iter()
            .map(|a| ShortObservation {
                uav: a.uav,
                buffer: a
                    .candidates
                    .iter()
                    .map(|&t| ep.queues.buffer_feature(a.uav, t, ep.slot))
                    .collect(),
                sinr_history: ep.prev_sinr[a.uav].clone(),
                prev_reward: ep.prev_reward[a.uav],
                prev_action: ep.prev_action[a.uav].clone(),
            })
            .collect()
    }

    fn long_observations(&self, ep: &Episode) -> Vec<LongObservation> {
        self.long_agents
            .iter()
            .map(|a| LongObservation {
                node: a.node,
                rssi_dbm: a.users.iter().map(|&m| ep.world.rssi(&self.cfg, a.node, m)).collect(),
                prev_reward: ep.prev_long_reward[a.node - 1],
                prev_action: ep.prev_velocity[a.node - 1],
                position: ep.world.uav_pos(a.node),
                member_centroid: ep.world.member_centroid(a.node),
            })
            .collect()
    }

    /// γ per candidate for every agent, from the live queues.
    pub fn eligibility(&self) -> Option<Vec<Vec<bool>>> {
        let ep = self.episode.as_ref()?;
        Some(
            self.short_agents
                .iter()
                .map(|a| a.candidates.iter().map(|&t| ep.queues.gamma(a.uav, t)).collect())
                .collect(),
        )
    }

    /// Validates and sanitizes a joint action without advancing the episode.
    pub fn sanitize(&self, input: &StepInput) -> Result<SanitizedInput> {
        let ep = self.episode.as_ref().ok_or(Error::NotReset)?;
        if ep.done {
            return Err(Error::EpisodeDone);
        }
        let boundary = ep.slot % self.cfg.long_block == 0;
        let long = match &input.long {
            // nothing to move in a donor-only deployment
            Some(v) if v.is_empty() && self.cfg.n_uuav == 0 => &None,
            other => other,
        };
        match (long, boundary) {
            (Some(_), false) => {
                return Err(Error::LongActionPhase {
                    slot: ep.slot,
                    detail: "does not start a block; long actions not accepted",
                })
            }
            (None, true) if self.cfg.n_uuav > 0 => {
                return Err(Error::LongActionPhase {
                    slot: ep.slot,
                    detail: "starts a block; long actions required",
                })
            }
            _ => {}
        }
        if input.short.len() != self.short_agents.len() {
            return Err(Error::InvalidAction {
                agent: input.short.len(),
                constraint: format!(
                    "expected {} short actions, got {}",
                    self.short_agents.len(),
                    input.short.len()
                ),
            });
        }
        let eligible = self.eligibility().expect("episode exists");
        let decisions = self
            .short_agents
            .iter()
            .zip(&input.short)
            .map(|(a, act)| sanitize_short_action(a.uav, act, &eligible[a.uav], a.sched_limit))
            .collect::<Result<Vec<_>>>()?;
        let velocities = match long {
            None => None,
            Some(v) => {
                if v.len() != self.cfg.n_uuav {
                    return Err(Error::InvalidAction {
                        agent: 0,
                        constraint: format!("expected {} velocities, got {}", self.cfg.n_uuav, v.len()),
                    });
                }
                if let Some(i) = v.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(Error::InvalidAction {
                        agent: i + 1,
                        constraint: "velocity is not finite".into(),
                    });
                }
                Some(v.iter().map(|&p| clamp_velocity(p, self.cfg.v_d_max)).collect())
            }
        };
        Ok((decisions, velocities))
    }

    pub fn step(&mut self, input: &StepInput) -> Result<TransitionRecord> {
        let (decisions, velocities) = self.sanitize(input)?;
        let cfg = &self.cfg;
        let ep = self.episode.as_mut().expect("sanitize checked");
        let slot = ep.slot;

        let schedules: Vec<Vec<Target>> = decisions
            .iter()
            .map(|d| d.selected().map(|i| self.short_agents[d.uav].candidates[i]).collect())
            .collect();
        let links = link::realize_slot(cfg, &ep.world, &schedules, ep.seed, slot)?;
        let grants: Vec<Grant> = links
            .iter()
            .map(|l| Grant {
                tx: l.tx,
                target: l.target,
                capacity: l.capacity,
            })
            .collect();
        let report = ep.queues.transmit(slot, &grants);

        let (drop_donor, drop_node) = ep.queues.drop_expired(slot + 1, cfg.drop_latency);
        let mut dropped = vec![0u64; cfg.n_uav()];
        dropped[0] = drop_donor.iter().sum();
        for (m, &d) in drop_node.iter().enumerate() {
            if d > 0 {
                dropped[ep.queues.association().serving(m)] += d;
            }
        }
        ep.ledger.extend(ep.queues.close_slot(slot));

        ep.world.step_gue_mobility(cfg);
        if let Some(v) = &velocities {
            for (i, &vel) in v.iter().enumerate() {
                ep.world.step_uuav_motion(i + 1, vel, cfg);
            }
            ep.prev_velocity.clone_from(v);
        }

        let short_rewards: Vec<f64> = report.delivered.iter().map(|&d| d as f64).collect();
        let global_short_reward: f64 = report.delivered.iter().sum::<u64>() as f64;

        for (k, own) in self.short_agents.iter().enumerate() {
            let sinr = &mut ep.prev_sinr[k];
            sinr.iter_mut().for_each(|s| *s = 0.0);
            for l in links.iter().filter(|l| l.tx == k) {
                let idx = own.candidates.iter().position(|&t| t == l.target).expect("scheduled candidate");
                sinr[idx] = l.sinr;
            }
        }
        ep.prev_reward.clone_from(&short_rewards);
        for d in &decisions {
            ep.prev_action[d.uav].clone_from(&d.mask);
        }

        for (k, d) in ep.delivered.iter_mut().enumerate() {
            *d += report.delivered[k];
        }
        for (k, d) in ep.dropped.iter_mut().enumerate() {
            *d += dropped[k];
        }
        ep.per_slot_delivered.push(report.delivered.iter().sum());
        ep.per_slot_dropped.push(dropped.iter().sum());
        if let Some(a) = report.max_delivered_age {
            ep.max_delivered_age = Some(ep.max_delivered_age.map_or(a, |b| b.max(a)));
        }

        for (k, block) in ep.block.iter_mut().enumerate() {
            block.push(short_rewards[k + 1]);
        }
        let block_closes = (slot + 1).is_multiple_of(cfg.long_block) || slot + 1 == cfg.episode_len;

        let info = StepInfo {
            slot,
            arrivals: ep.last_arrivals,
            delivered: report.delivered.clone(),
            relayed: report.relayed.clone(),
            dropped,
            max_delivered_age: report.max_delivered_age,
            links: link_reports(&links, &report.links),
        };

        ep.slot += 1;
        ep.done = ep.slot >= cfg.episode_len;
        ep.last_arrivals = if ep.done {
            0
        } else {
            ep.queues.generate_arrivals(ep.slot, cfg.poisson_rate).iter().sum()
        };

        let mut long = None;
        if block_closes && cfg.n_uuav > 0 {
            let rewards: Vec<f64> = ep.block.iter().map(|b| long_reward(b, cfg.long_reward_mode)).collect();
            ep.block.iter_mut().for_each(Vec::clear);
            ep.prev_long_reward.clone_from(&rewards);
            let ep = self.episode.as_ref().expect("live");
            long = Some(LongTransition {
                global_reward: rewards.iter().sum(),
                rewards,
                observations: self.long_observations(ep),
            });
        }
        let ep = self.episode.as_ref().expect("live");
        Ok(TransitionRecord {
            slot,
            schedule: decisions,
            velocities,
            short_rewards,
            global_short_reward,
            long,
            observations: self.short_observations(ep),
            done: ep.done,
            info,
        })
    }
}

fn candidates_of(world: &WorldState, k: usize) -> Vec<Target> {
    let users = world.association.members(k).into_iter().map(Target::Gue);
    if k == 0 {
        (1..=world.n_uuav()).map(Target::Node).chain(users).collect()
    } else {
        users.collect()
    }
}

fn link_reports(links: &[LinkRealization], tx: &[crate::traffic::LinkTx]) -> Vec<LinkReport> {
    links
        .iter()
        .map(|l| LinkReport {
            tx: l.tx,
            target: l.target,
            power_w: l.power,
            sinr: l.sinr,
            capacity: l.capacity,
            n_tx: tx
                .iter()
                .find(|t| t.tx == l.tx && t.target == l.target)
                .map_or(0, |t| t.n_tx),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_reward_cases() {
        assert_eq!(long_reward(&[3.0; 10], LongRewardMode::Mean), 3.0);
        assert_eq!(long_reward(&[7.0], LongRewardMode::Mean), 7.0);
        let block: Vec<f64> = (0..10).map(|i| 10.0 * i as f64).collect();
        assert_eq!(long_reward(&block, LongRewardMode::Mean), 45.0);
        assert_eq!(long_reward(&block, LongRewardMode::Sum), 450.0);
    }
}
