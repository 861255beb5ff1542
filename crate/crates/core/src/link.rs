//! Association, MRT precoding, SINR for the three downlink regimes, and
//! quantized capacity.
//!
//! Interference sums weight each interfering beam by the *victim's* allocated
//! power inside a cell (donor to user, donor to node, node intra-cell) and by
//! the interferer's own power across node cells. The donor band is
//! out-of-band for node receivers, so it never interferes with node links.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{
    large_scale_a2a, large_scale_a2g, sample_a2a_channel, sample_a2g_channel, ChannelCoefficient,
    LinkGeometry, C64,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::rng;
use crate::scenario::WorldState;
use crate::traffic::Target;

/// Fixed user→server map. UAV 0 is the donor, `1..=K` are nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMap {
    serving: Vec<usize>,
    n_uav: usize,
}

impl AssociationMap {
    pub fn from_serving(serving: Vec<usize>, n_uav: usize) -> Self {
        debug_assert!(serving.iter().all(|&k| k < n_uav));
        Self { serving, n_uav }
    }

    pub fn serving(&self, gue: usize) -> usize {
        self.serving[gue]
    }

    pub fn n_uav(&self) -> usize {
        self.n_uav
    }

    pub fn n_gue(&self) -> usize {
        self.serving.len()
    }

    /// Users served by `uav`, in increasing id order.
    pub fn members(&self, uav: usize) -> Vec<usize> {
        (0..self.serving.len())
            .filter(|&m| self.serving[m] == uav)
            .collect()
    }

    /// `δ_{k,m}`.
    pub fn is_associated(&self, uav: usize, gue: usize) -> bool {
        self.serving[gue] == uav
    }
}

/// Strongest-RSSI association; `rssi[k][m]` in dBm. Ties go to the lowest UAV index.
pub fn associate(rssi: &[Vec<f64>]) -> AssociationMap {
    let n_uav = rssi.len();
    let n_gue = rssi.first().map_or(0, Vec::len);
    let serving = (0..n_gue)
        .map(|m| {
            let mut best = 0;
            for k in 1..n_uav {
                if rssi[k][m] > rssi[best][m] {
                    best = k;
                }
            }
            best
        })
        .collect();
    AssociationMap { serving, n_uav }
}

/// Unit-norm MRT precoder.
///
/// For a `1 × A` channel this is `gᴴ/‖g‖`. For a MIMO channel it is the
/// principal right singular vector, which maximizes `‖g·w‖`; its phase is
/// fixed so the largest-magnitude entry is real positive.
pub fn mrt_precoder(g: &ChannelCoefficient) -> Result<DVector<C64>> {
    let norm = g.norm_sq().sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(Error::DegenerateChannel);
    }
    if g.rx_antennas() == 1 {
        return Ok(g.0.row(0).transpose().map(|z| z.conj()) / C64::new(norm, 0.0));
    }
    let mut w = principal_right_singular_vector(&g.0);
    let pivot = w
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc })
        .0;
    let rot = w[pivot].conj() / w[pivot].norm();
    w *= rot;
    let n = w.norm();
    Ok(w / C64::new(n, 0.0))
}

fn principal_right_singular_vector(g: &DMatrix<C64>) -> DVector<C64> {
    let svd = g.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    v_t.row(best).transpose().map(|z| z.conj())
}

/// An interfering beam seen by a victim through a cross channel.
#[derive(Debug, Clone, Copy)]
pub struct CrossBeam<'a> {
    /// Channel from the interferer's array to the victim.
    pub channel: &'a ChannelCoefficient,
    pub precoder: &'a DVector<C64>,
    pub power: f64,
}

fn intra_power(g: &ChannelCoefficient, victim_power: f64, beams: &[&DVector<C64>]) -> f64 {
    beams.iter().map(|w| victim_power * g.beam_gain(w)).sum()
}

/// Donor → user SINR. `other_users` and `node_beams` are the precoders of
/// the donor's other scheduled users and of its backhaul links.
pub fn sinr_tuav_to_gue(
    g: &ChannelCoefficient,
    power: f64,
    precoder: &DVector<C64>,
    other_users: &[&DVector<C64>],
    node_beams: &[&DVector<C64>],
    noise: f64,
) -> f64 {
    let signal = power * g.beam_gain(precoder);
    let interference = intra_power(g, power, other_users) + intra_power(g, power, node_beams);
    signal / (interference + noise)
}

/// Donor → node SINR over the MIMO backhaul, with the other node beams and
/// the user beams as interference.
pub fn sinr_tuav_to_uuav(
    g: &ChannelCoefficient,
    power: f64,
    precoder: &DVector<C64>,
    other_nodes: &[&DVector<C64>],
    user_beams: &[&DVector<C64>],
    noise: f64,
) -> f64 {
    let signal = power * g.beam_gain(precoder);
    let interference = intra_power(g, power, other_nodes) + intra_power(g, power, user_beams);
    signal / (interference + noise)
}

/// Node → user SINR with intra-cell co-scheduling and inter-cell leakage
/// from every other node's scheduled beams.
pub fn sinr_uuav_to_gue(
    g: &ChannelCoefficient,
    power: f64,
    precoder: &DVector<C64>,
    co_scheduled: &[&DVector<C64>],
    inter_cell: &[CrossBeam<'_>],
    noise: f64,
) -> f64 {
    let signal = power * g.beam_gain(precoder);
    let intra = intra_power(g, power, co_scheduled);
    let inter: f64 = inter_cell
        .iter()
        .map(|b| b.power * b.channel.beam_gain(b.precoder))
        .sum();
    signal / (intra + inter + noise)
}

/// Shannon bits per slot, in packets, before flooring.
pub fn capacity_packets_exact(bandwidth: f64, sinr: f64, slot_len: f64, packet_bits: f64) -> f64 {
    bandwidth * (sinr.ln_1p() / std::f64::consts::LN_2) * slot_len / packet_bits
}

/// `⌊B·log₂(1+SINR)·T / N_p⌋`.
pub fn quantized_capacity(bandwidth: f64, sinr: f64, slot_len: f64, packet_bits: f64) -> u64 {
    let x = capacity_packets_exact(bandwidth, sinr.max(0.0), slot_len, packet_bits);
    if x.is_finite() {
        x.floor() as u64
    } else {
        0
    }
}

/// Equal split of `total` over `n` scheduled targets.
pub fn equal_power(total: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// One scheduled link's realization for a slot.
#[derive(Debug, Clone)]
pub struct LinkRealization {
    pub tx: usize,
    pub target: Target,
    /// Allocated transmit power, W.
    pub power: f64,
    pub sinr: f64,
    /// Quantized capacity, packets.
    pub capacity: u64,
    pub channel: ChannelCoefficient,
    pub precoder: DVector<C64>,
}

fn rx_code(target: Target) -> u64 {
    match target {
        Target::Gue(m) => m as u64,
        Target::Node(k) => (1 << 32) | k as u64,
    }
}

/// Draws the block-fading channel from UAV `tx` to `target` for `slot`.
/// Each (slot, tx, rx) triple has its own substream, so draws do not depend
/// on which other links are evaluated.
pub fn draw_channel(
    cfg: &ScenarioConfig,
    world: &WorldState,
    seed: u64,
    slot: u64,
    tx: usize,
    target: Target,
) -> ChannelCoefficient {
    let mut rng = rng::substream(seed, &[rng::FADING, slot, tx as u64, rx_code(target)]);
    let tx_pos = world.uav_pos(tx);
    match target {
        Target::Gue(m) => {
            let geom = LinkGeometry::between(tx_pos, world.gue_pos3(m), cfg.wavelength(tx), cfg.antennas(tx), 1);
            let loss = large_scale_a2g(&geom, &cfg.channel).expect("UAVs fly above ground");
            sample_a2g_channel(&geom, loss, &cfg.channel, &mut rng)
        }
        Target::Node(k) => {
            debug_assert_eq!(tx, 0);
            let geom = LinkGeometry::between(
                tx_pos,
                world.uav_pos(k),
                cfg.wavelength_t(),
                cfg.antennas_t,
                cfg.antennas_u,
            );
            let loss = large_scale_a2a(&geom, &cfg.channel).expect("distinct altitudes");
            sample_a2a_channel(&geom, loss, &cfg.channel, &mut rng)
        }
    }
}

/// Evaluates every scheduled link of a slot. `schedules[k]` lists UAV `k`'s
/// scheduled targets. Power is split equally across each UAV's targets.
pub fn realize_slot(
    cfg: &ScenarioConfig,
    world: &WorldState,
    schedules: &[Vec<Target>],
    seed: u64,
    slot: u64,
) -> Result<Vec<LinkRealization>> {
    let mut links: Vec<Vec<LinkRealization>> = Vec::with_capacity(schedules.len());
    for (k, targets) in schedules.iter().enumerate() {
        let power = equal_power(cfg.power_watts(k), targets.len());
        let mut own = Vec::with_capacity(targets.len());
        for &target in targets {
            let channel = draw_channel(cfg, world, seed, slot, k, target);
            let precoder = mrt_precoder(&channel)?;
            own.push(LinkRealization {
                tx: k,
                target,
                power,
                sinr: 0.0,
                capacity: 0,
                channel,
                precoder,
            });
        }
        links.push(own);
    }

    // donor cell
    let donor_sinr: Vec<f64> = links
        .first()
        .map(|donor| {
            donor
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (users, nodes): (Vec<_>, Vec<_>) = donor
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .partition(|(_, l)| matches!(l.target, Target::Gue(_)));
                    let users: Vec<&DVector<C64>> = users.iter().map(|(_, l)| &l.precoder).collect();
                    let nodes: Vec<&DVector<C64>> = nodes.iter().map(|(_, l)| &l.precoder).collect();
                    // backhaul receivers also sit in the donor's band
                    let noise = cfg.noise_watts(0);
                    match v.target {
                        Target::Gue(_) => sinr_tuav_to_gue(&v.channel, v.power, &v.precoder, &users, &nodes, noise),
                        Target::Node(_) => sinr_tuav_to_uuav(&v.channel, v.power, &v.precoder, &nodes, &users, noise),
                    }
                })
                .collect()
        })
        .unwrap_or_default();

    // node cells
    let mut node_sinr: Vec<Vec<f64>> = vec![Vec::new(); links.len()];
    for k in 1..links.len() {
        for (i, v) in links[k].iter().enumerate() {
            let Target::Gue(m) = v.target else {
                unreachable!("nodes only serve users")
            };
            let co: Vec<&DVector<C64>> = links[k]
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, l)| &l.precoder)
                .collect();
            let cross: Vec<(ChannelCoefficient, usize)> = (1..links.len())
                .filter(|&o| o != k && !links[o].is_empty())
                .map(|o| (draw_channel(cfg, world, seed, slot, o, Target::Gue(m)), o))
                .collect();
            let inter: Vec<CrossBeam<'_>> = cross
                .iter()
                .flat_map(|(g, o)| {
                    links[*o].iter().map(move |l| CrossBeam {
                        channel: g,
                        precoder: &l.precoder,
                        power: l.power,
                    })
                })
                .collect();
            node_sinr[k].push(sinr_uuav_to_gue(&v.channel, v.power, &v.precoder, &co, &inter, cfg.noise_watts(k)));
        }
    }

    let mut out = Vec::new();
    for (k, own) in links.into_iter().enumerate() {
        for (i, mut l) in own.into_iter().enumerate() {
            l.sinr = if k == 0 { donor_sinr[i] } else { node_sinr[k][i] };
            l.capacity = quantized_capacity(cfg.bandwidth(k), l.sinr, cfg.slot_len, cfg.packet_bits);
            out.push(l);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn miso(entries: &[C64]) -> ChannelCoefficient {
        ChannelCoefficient(DMatrix::from_row_slice(1, entries.len(), entries))
    }

    #[test]
    fn associate_argmax_and_ties() {
        let rssi = vec![vec![-70.0, -60.0, -80.0], vec![-65.0, -90.0, -95.0], vec![-99.0, -99.0, -80.0]];
        let a = associate(&rssi);
        assert_eq!(a.serving(0), 1);
        assert_eq!(a.serving(1), 0);
        // exact tie between UAV 0 and 2
        assert_eq!(a.serving(2), 0);
        assert_eq!(a.members(0), vec![1, 2]);
    }

    #[test]
    fn donor_only_takes_everyone() {
        let a = associate(&[vec![-90.0, -50.0, -70.0]]);
        assert_eq!(a.members(0), vec![0, 1, 2]);
    }

    #[test]
    fn mrt_closed_form() {
        let g = miso(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let w = mrt_precoder(&g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((w[1] - C64::new(0.0, -s)).norm() < 1e-15);
        assert!((g.beam_gain(&w) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mrt_scale_invariant() {
        let g = miso(&[C64::new(0.3, -1.2), C64::new(2.0, 0.5), C64::new(-0.7, 0.1)]);
        let scaled = ChannelCoefficient(g.0.map(|z| z * 7.5));
        let a = mrt_precoder(&g).unwrap();
        let b = mrt_precoder(&scaled).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn mrt_rejects_zero_channel() {
        let g = miso(&[C64::new(0.0, 0.0); 3]);
        assert!(matches!(mrt_precoder(&g), Err(Error::DegenerateChannel)));
    }

    #[test]
    fn mimo_mrt_on_outer_product() {
        let e_r = crate::channel::steering_vector(0.4, 4);
        let e_t = crate::channel::steering_vector(0.4, 8);
        let h: f64 = 2.5e-6;
        let g = ChannelCoefficient(&e_r * e_t.adjoint() * C64::new(h.sqrt(), 0.0));
        let w = mrt_precoder(&g).unwrap();
        let expect = h * 4.0 * 8.0;
        assert!((g.beam_gain(&w) - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn sole_user_is_snr() {
        let g = miso(&[C64::new(1.0, 1.0), C64::new(-0.5, 2.0)]);
        let w = mrt_precoder(&g).unwrap();
        let s = sinr_tuav_to_gue(&g, 0.2, &w, &[], &[], 1e-3);
        assert!((s - 0.2 * g.norm_sq() / 1e-3).abs() / s < 1e-13);
        let s2 = sinr_uuav_to_gue(&g, 0.2, &w, &[], &[], 1e-3);
        assert_eq!(s, s2);
    }

    #[test]
    fn orthogonal_interferer_is_harmless() {
        let g = miso(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let w = mrt_precoder(&g).unwrap();
        let ortho = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let base = sinr_tuav_to_gue(&g, 1.0, &w, &[], &[], 0.1);
        assert_eq!(sinr_tuav_to_gue(&g, 1.0, &w, &[&ortho], &[], 0.1), base);
        assert_eq!(sinr_tuav_to_gue(&g, 1.0, &w, &[], &[&ortho], 0.1), base);
        assert_eq!(sinr_tuav_to_uuav(&g, 1.0, &w, &[&ortho], &[&ortho], 0.1), base);
    }

    #[test]
    fn silent_neighbour_adds_nothing() {
        let g = miso(&[C64::new(0.2, 0.1), C64::new(0.4, -0.3)]);
        let w = mrt_precoder(&g).unwrap();
        let alone = sinr_uuav_to_gue(&g, 0.5, &w, &[], &[], 1e-2);
        let cross = ChannelCoefficient(g.0.clone());
        let beam = CrossBeam { channel: &cross, precoder: &w, power: 0.0 };
        assert_eq!(sinr_uuav_to_gue(&g, 0.5, &w, &[], &[beam], 1e-2), alone);
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(quantized_capacity(100e6, 1.0, 0.03, 3e5), 10);
        assert_eq!(quantized_capacity(20e6, 3.0, 0.03, 3e5), 4);
        assert_eq!(quantized_capacity(20e6, 0.0, 0.03, 3e5), 0);
    }

    #[test]
    fn equal_split_sums_to_total() {
        let p = 0.251_188_643_150_958;
        for n in 1..=8 {
            let share = equal_power(p, n);
            assert!((share * n as f64 - p).abs() <= p * 1e-15);
        }
        assert_eq!(equal_power(p, 0), 0.0);
    }

    proptest! {
        #[test]
        fn interference_never_helps(
            re in prop::collection::vec(-1.0f64..1.0, 6),
            im in prop::collection::vec(-1.0f64..1.0, 6),
            ire in prop::collection::vec(-1.0f64..1.0, 3),
            iim in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let g = miso(&(0..3).map(|i| C64::new(re[i] + 1.5, im[i])).collect::<Vec<_>>());
            let w = mrt_precoder(&g).unwrap();
            let other = DVector::from_fn(3, |i, _| C64::new(ire[i], iim[i]));
            let before = sinr_tuav_to_gue(&g, 1.0, &w, &[], &[], 0.05);
            let after = sinr_tuav_to_gue(&g, 1.0, &w, &[&other], &[], 0.05);
            prop_assert!(after <= before);
            let cross = miso(&(3..6).map(|i| C64::new(re[i], im[i])).collect::<Vec<_>>());
            let beam = CrossBeam { channel: &cross, precoder: &other, power: 0.3 };
            prop_assert!(sinr_uuav_to_gue(&g, 1.0, &w, &[], &[beam], 0.05) <= before);
        }

        #[test]
        fn capacity_floor_brackets(b in 1e5f64..2e8, s in 0.0f64..1e4, t in 1e-3f64..0.1, np in 1e3f64..1e6) {
            let c = quantized_capacity(b, s, t, np) as f64;
            let x = capacity_packets_exact(b, s, t, np);
            prop_assert!(c <= x && x < c + 1.0);
        }

        #[test]
        fn association_invariant_under_monotone_rescale(
            table in prop::collection::vec(prop::collection::vec(-120.0f64..-30.0, 7), 1..5)
        ) {
            let a = associate(&table);
            let rescaled: Vec<Vec<f64>> = table
                .iter()
                .map(|row| row.iter().map(|v| 3.0 * v + 10.0).collect())
                .collect();
            prop_assert_eq!(a, associate(&rescaled));
        }

        #[test]
        fn miso_numerator_is_norm(re in prop::collection::vec(-2.0f64..2.0, 8), im in prop::collection::vec(-2.0f64..2.0, 8)) {
            let g = miso(&(0..8).map(|i| C64::new(re[i], im[i] + 0.01)).collect::<Vec<_>>());
            let w = mrt_precoder(&g).unwrap();
            prop_assert!((g.beam_gain(&w) - g.norm_sq()).abs() <= 1e-12 * g.norm_sq());
        }
    }
}
