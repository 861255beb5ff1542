//! World initialization and mobility.
//!
//! Layout: the donor hovers at `(0, 0, H_t)`; node `k` (1-based) starts on
//! the area boundary at angle `π/4 + 2π(k−1)/K`, which for four nodes puts
//! them at `(±l/√2, ±l/√2, H_u)`. A pool of candidate users is drawn
//! uniformly in the disk, each candidate is associated by strongest RSSI, and
//! the configured quota is sampled from each UAV's associated candidates.
//! Selected users are numbered donor's first, then node 1's, and so on.
//!
//! Users walk in a straight line from their origin toward a destination
//! drawn uniformly in their group's safe zone and stop on arrival. Nodes
//! move once per trajectory block and are held inside the area disk.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{large_scale_a2g, rssi_dbm, LinkGeometry};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::link::{associate, AssociationMap};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeZone {
    pub center: [f64; 2],
    pub radius: f64,
}

impl SafeZone {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        (dx * dx + dy * dy).sqrt() <= self.radius * (1.0 + 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundUser {
    /// Position at slot 0.
    pub origin: [f64; 2],
    pub position: [f64; 2],
    pub destination: [f64; 2],
    /// Heading from origin to destination, radians.
    pub bearing: f64,
    /// Straight-line distance origin → destination.
    pub max_travel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub slot: u64,
    pub tuav_pos: [f64; 3],
    pub uuav_pos: Vec<[f64; 3]>,
    /// Last commanded velocity per node.
    pub uuav_vel: Vec<[f64; 2]>,
    pub gues: Vec<GroundUser>,
    /// Index 0 is the donor's zone, index `k` node `k`'s.
    pub safe_zones: Vec<SafeZone>,
    pub association: AssociationMap,
}

fn node_angle(k: usize, n_uuav: usize) -> f64 {
    FRAC_PI_4 + 2.0 * PI * (k - 1) as f64 / n_uuav as f64
}

/// Node `k`'s (1-based) initial horizontal position.
pub fn initial_node_xy(k: usize, cfg: &ScenarioConfig) -> [f64; 2] {
    let a = node_angle(k, cfg.n_uuav);
    [cfg.area_radius * a.cos(), cfg.area_radius * a.sin()]
}

pub fn safe_zones(cfg: &ScenarioConfig) -> Vec<SafeZone> {
    let mut zones = vec![SafeZone {
        center: [0.0, 0.0],
        radius: cfg.safe_zone.tuav_radius,
    }];
    let r = cfg.safe_zone.uuav_offset * 2f64.sqrt();
    zones.extend((1..=cfg.n_uuav).map(|k| {
        let a = node_angle(k, cfg.n_uuav);
        SafeZone {
            center: [r * a.cos(), r * a.sin()],
            radius: cfg.safe_zone.uuav_radius,
        }
    }));
    zones
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, center: [f64; 2], radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let t = 2.0 * PI * rng.random::<f64>();
    [center[0] + r * t.cos(), center[1] + r * t.sin()]
}

fn uav_positions(cfg: &ScenarioConfig) -> (Vec<[f64; 3]>, [f64; 3]) {
    let nodes = (1..=cfg.n_uuav)
        .map(|k| {
            let [x, y] = initial_node_xy(k, cfg);
            [x, y, cfg.uuav_height]
        })
        .collect();
    (nodes, [0.0, 0.0, cfg.tuav_height])
}

/// Large-scale RSSI (dBm) from UAV `uav` at `uav_pos` to a ground point.
pub fn rssi_to_point(cfg: &ScenarioConfig, uav: usize, uav_pos: [f64; 3], p: [f64; 2]) -> f64 {
    let geom = LinkGeometry::between(uav_pos, [p[0], p[1], 0.0], cfg.wavelength(uav), 1, 1);
    let loss = large_scale_a2g(&geom, &cfg.channel).expect("UAVs fly above ground");
    rssi_dbm(cfg.power_dbm(uav), loss)
}

/// Builds the slot-0 world for `seed`.
pub fn init_world(cfg: &ScenarioConfig, seed: u64) -> Result<WorldState> {
    cfg.validate()?;
    let (uuav_pos, tuav_pos) = uav_positions(cfg);
    let zones = safe_zones(cfg);

    let mut placement = rng::substream(seed, &[rng::PLACEMENT]);
    let candidates: Vec<[f64; 2]> = (0..cfg.candidate_pool)
        .map(|_| uniform_in_disk(&mut placement, [0.0, 0.0], cfg.area_radius))
        .collect();

    let uav_pos = |k: usize| if k == 0 { tuav_pos } else { uuav_pos[k - 1] };
    let table: Vec<Vec<f64>> = (0..cfg.n_uav())
        .map(|k| {
            candidates
                .iter()
                .map(|&p| rssi_to_point(cfg, k, uav_pos(k), p))
                .collect()
        })
        .collect();
    let pool_assoc = associate(&table);

    let mut selected: Vec<(usize, usize)> = Vec::with_capacity(cfg.n_gue);
    for k in 0..cfg.n_uav() {
        let members = pool_assoc.members(k);
        let quota = cfg.assoc_quota(k);
        if members.len() < quota {
            return Err(Error::ScenarioInfeasible {
                uav: k,
                available: members.len(),
                required: quota,
            });
        }
        let mut picks: Vec<usize> = index::sample(&mut placement, members.len(), quota)
            .into_iter()
            .map(|i| members[i])
            .collect();
        picks.sort_unstable();
        selected.extend(picks.into_iter().map(|c| (c, k)));
    }

    let mut dest_rng = rng::substream(seed, &[rng::DESTINATION]);
    let gues = selected
        .iter()
        .map(|&(c, k)| {
            let origin = candidates[c];
            let zone = zones[k];
            let destination = uniform_in_disk(&mut dest_rng, zone.center, zone.radius);
            let dx = destination[0] - origin[0];
            let dy = destination[1] - origin[1];
            GroundUser {
                origin,
                position: origin,
                destination,
                bearing: dy.atan2(dx),
                max_travel: (dx * dx + dy * dy).sqrt(),
            }
        })
        .collect();
    let association =
        AssociationMap::from_serving(selected.iter().map(|&(_, k)| k).collect(), cfg.n_uav());

    Ok(WorldState {
        slot: 0,
        tuav_pos,
        uuav_vel: vec![[0.0, 0.0]; cfg.n_uuav],
        uuav_pos,
        gues,
        safe_zones: zones,
        association,
    })
}

/// Position of `user` at slot `n`: straight-line progress `min(v_w·n·τ, d_max)`.
pub fn gue_position_at(user: &GroundUser, n: u64, cfg: &ScenarioConfig) -> [f64; 2] {
    let travel = cfg.v_w * n as f64 * cfg.time_unit;
    if travel >= user.max_travel {
        return user.destination;
    }
    [
        user.origin[0] + travel * user.bearing.cos(),
        user.origin[1] + travel * user.bearing.sin(),
    ]
}

/// Clamps a horizontal point to the disk of radius `r`.
pub fn clamp_to_disk(p: [f64; 2], r: f64) -> [f64; 2] {
    let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
    if d <= r {
        p
    } else {
        [p[0] * r / d, p[1] * r / d]
    }
}

/// End point of the move `from → to`, stopped where it leaves the disk of
/// radius `r`. Unlike a radial projection this never moves further than
/// `to − from` along either axis.
pub fn clamp_path_to_disk(from: [f64; 2], to: [f64; 2], r: f64) -> [f64; 2] {
    if to[0].hypot(to[1]) <= r {
        return to;
    }
    if from[0].hypot(from[1]) > r {
        return clamp_to_disk(from, r);
    }
    // largest t in [0, 1] with |from + t·d| = r
    let d = [to[0] - from[0], to[1] - from[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let b = 2.0 * (from[0] * d[0] + from[1] * d[1]);
    let c = from[0] * from[0] + from[1] * from[1] - r * r;
    let t = ((-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)).clamp(0.0, 1.0);
    clamp_to_disk([from[0] + t * d[0], from[1] + t * d[1]], r)
}

impl WorldState {
    pub fn n_uuav(&self) -> usize {
        self.uuav_pos.len()
    }

    pub fn n_gue(&self) -> usize {
        self.gues.len()
    }

    /// Position of UAV `k` (0 = donor).
    pub fn uav_pos(&self, k: usize) -> [f64; 3] {
        if k == 0 {
            self.tuav_pos
        } else {
            self.uuav_pos[k - 1]
        }
    }

    pub fn gue_pos3(&self, m: usize) -> [f64; 3] {
        let [x, y] = self.gues[m].position;
        [x, y, 0.0]
    }

    /// Advances to slot `n + 1` and moves every user along its path.
    pub fn step_gue_mobility(&mut self, cfg: &ScenarioConfig) {
        self.slot += 1;
        let n = self.slot;
        for user in &mut self.gues {
            user.position = gue_position_at(user, n, cfg);
        }
    }

    /// Applies one block of node motion `Δ = v·N_l·τ`, stopping at the area
    /// boundary. `velocity` must already satisfy the per-axis limit.
    pub fn step_uuav_motion(&mut self, node: usize, velocity: [f64; 2], cfg: &ScenarioConfig) {
        let span = cfg.long_block as f64 * cfg.time_unit;
        let pos = &mut self.uuav_pos[node - 1];
        let next = clamp_path_to_disk(
            [pos[0], pos[1]],
            [pos[0] + velocity[0] * span, pos[1] + velocity[1] * span],
            cfg.area_radius,
        );
        pos[0] = next[0];
        pos[1] = next[1];
        self.uuav_vel[node - 1] = velocity;
    }

    /// Large-scale RSSI (dBm) from UAV `k` to user `m` at current positions.
    pub fn rssi(&self, cfg: &ScenarioConfig, k: usize, m: usize) -> f64 {
        rssi_to_point(cfg, k, self.uav_pos(k), self.gues[m].position)
    }

    /// Each user's best large-scale RSSI over the donor and, when
    /// `include_nodes`, the nodes as well.
    pub fn serving_rssi(&self, cfg: &ScenarioConfig, include_nodes: bool) -> Vec<f64> {
        let uavs = if include_nodes { self.n_uuav() + 1 } else { 1 };
        (0..self.n_gue())
            .map(|m| {
                (0..uavs)
                    .map(|k| self.rssi(cfg, k, m))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Mean horizontal position of the users served by `k`.
    pub fn member_centroid(&self, k: usize) -> [f64; 2] {
        let members = self.association.members(k);
        if members.is_empty() {
            let p = self.uav_pos(k);
            return [p[0], p[1]];
        }
        let n = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &m| {
            (sx + self.gues[m].position[0], sy + self.gues[m].position[1])
        });
        [sx / n, sy / n]
    }
}
