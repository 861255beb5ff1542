//! Two-hop FIFO traffic.
//!
//! Every packet enters at the donor (it is wired to the core network) in the
//! queue of its destination user. The donor serves its own users directly;
//! packets for a node's users are relayed over the backhaul into that node's
//! per-user queues and delivered from there. The donor's per-node queue is
//! the union of the donor queues of that node's users.
//!
//! Packet age is end to end: `birth_slot` is set on arrival at the donor and
//! survives the relay hop, so the latency deadline bounds delivery time.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::link::AssociationMap;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub target_gue: usize,
    pub birth_slot: u64,
}

/// Receiver of a downlink: a ground user or a node's backhaul.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Target {
    Gue(usize),
    Node(usize),
}

/// `(N_cum, mean queueing delay, head-of-line latency)`; all zero when empty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BufferFeature {
    pub n_cum: u64,
    pub mean_delay: f64,
    pub head_latency: f64,
}

/// One user's share of the backhaul relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelayCandidate {
    pub gue: usize,
    pub available: u64,
    pub head_age: u64,
}

/// Splits a backhaul budget over the node's users.
///
/// Users are ordered by descending head-of-line age (ties by lower id) and
/// granted one packet each per round, skipping exhausted users, until the
/// budget is met or every queue is empty. Returns `(gue, packets)` in the
/// service order, omitting users that got nothing.
pub fn distribute_a2a(candidates: &[RelayCandidate], budget: u64) -> Vec<(usize, u64)> {
    let mut order: Vec<RelayCandidate> =
        candidates.iter().copied().filter(|c| c.available > 0).collect();
    order.sort_by(|a, b| b.head_age.cmp(&a.head_age).then(a.gue.cmp(&b.gue)));
    let mut grants = vec![0u64; order.len()];
    let mut left = budget;
    let mut progressed = true;
    while left > 0 && progressed {
        progressed = false;
        for (i, c) in order.iter().enumerate() {
            if left == 0 {
                break;
            }
            if grants[i] < c.available {
                grants[i] += 1;
                left -= 1;
                progressed = true;
            }
        }
    }
    order
        .iter()
        .zip(grants)
        .filter(|(_, g)| *g > 0)
        .map(|(c, g)| (c.gue, g))
        .collect()
}

/// Feature triple of a set of packets observed at `slot`.
pub fn features_of<'a>(packets: impl IntoIterator<Item = &'a Packet>, slot: u64) -> BufferFeature {
    let mut n = 0u64;
    let mut sum = 0u64;
    let mut head = 0u64;
    for p in packets {
        let age = slot - p.birth_slot;
        n += 1;
        sum += age;
        head = head.max(age);
    }
    if n == 0 {
        return BufferFeature::default();
    }
    BufferFeature {
        n_cum: n,
        mean_delay: sum as f64 / n as f64,
        head_latency: head as f64,
    }
}

/// A scheduled link with its quantized capacity for this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub tx: usize,
    pub target: Target,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkTx {
    pub tx: usize,
    pub target: Target,
    pub n_tx: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmitReport {
    pub links: Vec<LinkTx>,
    /// Ground deliveries per UAV (A2G pops only).
    pub delivered: Vec<u64>,
    /// Packets moved over each node's backhaul, index `k − 1`.
    pub relayed: Vec<u64>,
    /// Oldest age among packets delivered this slot.
    pub max_delivered_age: Option<u64>,
}

/// One row of the per-slot traffic ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub slot: u64,
    pub tx: usize,
    pub target: Target,
    /// Packets that entered this queue since the previous transmission.
    pub n_new: u64,
    /// Backlog at transmission time, `n_new + n_str(previous)`.
    pub n_cum: u64,
    pub n_tx: u64,
    pub dropped: u64,
    /// Backlog carried into the next slot, excluding packets relayed in this slot.
    pub n_str: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub arrivals: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone)]
pub struct QueueState {
    association: AssociationMap,
    node_members: Vec<Vec<usize>>,
    /// Donor queue per user.
    donor: Vec<VecDeque<Packet>>,
    /// Serving node's queue per user; empty for donor-served users.
    node: Vec<VecDeque<Packet>>,
    arrival_rngs: Vec<ChaCha8Rng>,
    // per-slot bookkeeping, indexed by user
    new_donor: Vec<u64>,
    new_node: Vec<u64>,
    relayed_now: Vec<u64>,
    cum_donor: Vec<u64>,
    cum_node: Vec<u64>,
    tx_donor: Vec<u64>,
    tx_node: Vec<u64>,
    drop_donor: Vec<u64>,
    drop_node: Vec<u64>,
    totals: Totals,
}

impl QueueState {
    pub fn new(association: AssociationMap, seed: u64) -> Self {
        let n = association.n_gue();
        let node_members = (1..association.n_uav()).map(|k| association.members(k)).collect();
        let arrival_rngs = (0..n)
            .map(|m| rng::substream(seed, &[rng::TRAFFIC, m as u64]))
            .collect();
        Self {
            association,
            node_members,
            donor: vec![VecDeque::new(); n],
            node: vec![VecDeque::new(); n],
            arrival_rngs,
            new_donor: vec![0; n],
            new_node: vec![0; n],
            relayed_now: vec![0; n],
            cum_donor: vec![0; n],
            cum_node: vec![0; n],
            tx_donor: vec![0; n],
            tx_node: vec![0; n],
            drop_donor: vec![0; n],
            drop_node: vec![0; n],
            totals: Totals::default(),
        }
    }

    pub fn association(&self) -> &AssociationMap {
        &self.association
    }

    pub fn n_gue(&self) -> usize {
        self.donor.len()
    }

    pub fn totals(&self) -> Totals {
        self.totals
    }

    pub fn residual(&self) -> u64 {
        self.donor.iter().chain(&self.node).map(|q| q.len() as u64).sum()
    }

    /// Users served by node `k` (1-based).
    pub fn node_members(&self, k: usize) -> &[usize] {
        &self.node_members[k - 1]
    }

    fn queue(&self, tx: usize, gue: usize) -> &VecDeque<Packet> {
        if tx == 0 {
            &self.donor[gue]
        } else {
            &self.node[gue]
        }
    }

    /// Packets in transmitter `tx`'s queue for `target`.
    pub fn packets(&self, tx: usize, target: Target) -> Box<dyn Iterator<Item = &Packet> + '_> {
        match target {
            Target::Gue(m) => Box::new(self.queue(tx, m).iter()),
            Target::Node(k) => {
                debug_assert_eq!(tx, 0);
                Box::new(self.node_members[k - 1].iter().flat_map(move |&m| self.donor[m].iter()))
            }
        }
    }

    /// `N_cum` of transmitter `tx` toward `target`.
    pub fn backlog(&self, tx: usize, target: Target) -> u64 {
        match target {
            Target::Gue(m) => self.queue(tx, m).len() as u64,
            Target::Node(k) => self.node_members[k - 1]
                .iter()
                .map(|&m| self.donor[m].len() as u64)
                .sum(),
        }
    }

    /// Non-empty buffer indicator γ.
    pub fn gamma(&self, tx: usize, target: Target) -> bool {
        self.backlog(tx, target) > 0
    }

    pub fn buffer_feature(&self, tx: usize, target: Target, slot: u64) -> BufferFeature {
        features_of(self.packets(tx, target), slot)
    }

    /// Draws this slot's Poisson arrivals into the donor queues.
    /// Returns the per-user arrival counts.
    pub fn generate_arrivals(&mut self, slot: u64, rate: f64) -> Vec<u64> {
        let dist = (rate > 0.0).then(|| Poisson::new(rate).expect("positive finite rate"));
        let counts: Vec<u64> = self
            .arrival_rngs
            .iter_mut()
            .map(|rng| match &dist {
                Some(d) => d.sample(rng) as u64,
                None => {
                    // keep the stream position independent of the rate
                    let _: f64 = rng.random();
                    0
                }
            })
            .collect();
        self.inject_arrivals(slot, &counts);
        counts
    }

    /// Queues `counts[m]` packets for user `m` at the donor, born at `slot`.
    pub fn inject_arrivals(&mut self, slot: u64, counts: &[u64]) {
        assert_eq!(counts.len(), self.n_gue(), "one count per user");
        for (m, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                self.donor[m].push_back(Packet {
                    target_gue: m,
                    birth_slot: slot,
                });
            }
            self.new_donor[m] += n;
            self.totals.arrivals += n;
        }
    }

    /// Pops up to each grant's capacity, FIFO. Ground links deliver; backhaul
    /// links move packets into the node's per-user queues via
    /// [`distribute_a2a`]. Ground pops run before relays, so relayed packets
    /// are first deliverable next slot.
    ///
    /// Panics if a grant targets an empty queue; the environment gates on γ.
    pub fn transmit(&mut self, slot: u64, grants: &[Grant]) -> TransmitReport {
        let n_uav = self.association.n_uav();
        for m in 0..self.n_gue() {
            self.cum_donor[m] = self.donor[m].len() as u64;
            self.cum_node[m] = self.node[m].len() as u64;
            self.tx_donor[m] = 0;
            self.tx_node[m] = 0;
            self.relayed_now[m] = 0;
        }
        let mut report = TransmitReport {
            links: Vec::with_capacity(grants.len()),
            delivered: vec![0; n_uav],
            relayed: vec![0; n_uav.saturating_sub(1)],
            max_delivered_age: None,
        };

        for g in grants.iter().filter(|g| matches!(g.target, Target::Gue(_))) {
            let Target::Gue(m) = g.target else { unreachable!() };
            assert!(
                self.association.is_associated(g.tx, m),
                "UAV {} scheduled unassociated user {m}",
                g.tx
            );
            let queue = if g.tx == 0 { &mut self.donor[m] } else { &mut self.node[m] };
            assert!(!queue.is_empty(), "UAV {} scheduled empty queue for user {m}", g.tx);
            let n_tx = g.capacity.min(queue.len() as u64);
            for _ in 0..n_tx {
                let p = queue.pop_front().expect("length checked");
                let age = slot - p.birth_slot;
                report.max_delivered_age = Some(report.max_delivered_age.map_or(age, |a| a.max(age)));
            }
            if g.tx == 0 {
                self.tx_donor[m] = n_tx;
            } else {
                self.tx_node[m] = n_tx;
            }
            report.delivered[g.tx] += n_tx;
            self.totals.delivered += n_tx;
            report.links.push(LinkTx { tx: g.tx, target: g.target, n_tx });
        }

        for g in grants.iter().filter(|g| matches!(g.target, Target::Node(_))) {
            let Target::Node(k) = g.target else { unreachable!() };
            assert_eq!(g.tx, 0, "only the donor feeds backhaul links");
            let candidates: Vec<RelayCandidate> = self.node_members[k - 1]
                .iter()
                .map(|&m| RelayCandidate {
                    gue: m,
                    available: self.donor[m].len() as u64,
                    head_age: self.donor[m].front().map_or(0, |p| slot - p.birth_slot),
                })
                .collect();
            assert!(
                candidates.iter().any(|c| c.available > 0),
                "donor scheduled empty backhaul to node {k}"
            );
            let mut moved = 0;
            for (m, n) in distribute_a2a(&candidates, g.capacity) {
                for _ in 0..n {
                    let p = self.donor[m].pop_front().expect("allocation within backlog");
                    self.node[m].push_back(p);
                }
                self.tx_donor[m] += n;
                self.relayed_now[m] += n;
                moved += n;
            }
            report.relayed[k - 1] += moved;
            report.links.push(LinkTx { tx: 0, target: g.target, n_tx: moved });
        }
        report
    }

    /// Removes every packet whose age at `slot` exceeds `max_age`.
    /// Returns per-user drop counts as `(donor, node)` vectors.
    pub fn drop_expired(&mut self, slot: u64, max_age: u64) -> (Vec<u64>, Vec<u64>) {
        let n = self.n_gue();
        let mut dropped_donor = vec![0; n];
        let mut dropped_node = vec![0; n];
        for m in 0..n {
            for (queue, out) in [
                (&mut self.donor[m], &mut dropped_donor[m]),
                (&mut self.node[m], &mut dropped_node[m]),
            ] {
                let before = queue.len();
                queue.retain(|p| slot - p.birth_slot.min(slot) <= max_age);
                *out = (before - queue.len()) as u64;
            }
        }
        self.totals.dropped += dropped_donor.iter().chain(&dropped_node).sum::<u64>();
        self.drop_donor.clone_from(&dropped_donor);
        self.drop_node.clone_from(&dropped_node);
        (dropped_donor, dropped_node)
    }

    /// Closes the slot's books and emits ledger rows: donor→own users,
    /// donor→node aggregates, node→users. Call after transmit and drop.
    pub fn close_slot(&mut self, slot: u64) -> Vec<LedgerRow> {
        let mut rows = Vec::new();
        let mut carried_new = vec![0u64; self.n_gue()];
        for (m, carried) in carried_new.iter_mut().enumerate() {
            let k = self.association.serving(m);
            if k == 0 {
                rows.push(LedgerRow {
                    slot,
                    tx: 0,
                    target: Target::Gue(m),
                    n_new: self.new_donor[m],
                    n_cum: self.cum_donor[m],
                    n_tx: self.tx_donor[m],
                    dropped: self.drop_donor[m],
                    n_str: self.donor[m].len() as u64,
                });
            } else {
                // relayed packets sit at the back, drops take from the front
                let survivors = self.relayed_now[m].min(self.node[m].len() as u64);
                *carried = survivors;
            }
        }
        for k in 1..self.association.n_uav() {
            let members = &self.node_members[k - 1];
            let sum = |v: &Vec<u64>| members.iter().map(|&m| v[m]).sum::<u64>();
            rows.push(LedgerRow {
                slot,
                tx: 0,
                target: Target::Node(k),
                n_new: sum(&self.new_donor),
                n_cum: sum(&self.cum_donor),
                n_tx: sum(&self.tx_donor),
                dropped: sum(&self.drop_donor),
                n_str: members.iter().map(|&m| self.donor[m].len() as u64).sum(),
            });
        }
        for k in 1..self.association.n_uav() {
            for &m in &self.node_members[k - 1] {
                rows.push(LedgerRow {
                    slot,
                    tx: k,
                    target: Target::Gue(m),
                    n_new: self.new_node[m],
                    n_cum: self.cum_node[m],
                    n_tx: self.tx_node[m],
                    dropped: self.drop_node[m],
                    n_str: self.node[m].len() as u64 - carried_new[m],
                });
            }
        }
        self.new_node = carried_new;
        self.new_donor.fill(0);
        self.drop_donor.fill(0);
        self.drop_node.fill(0);
        rows
    }

    /// Every queued packet, donor queues first.
    pub fn all_packets(&self) -> impl Iterator<Item = (usize, &Packet)> {
        self.donor
            .iter()
            .flat_map(|q| q.iter().map(|p| (0usize, p)))
            .chain(
                self.node
                    .iter()
                    .enumerate()
                    .flat_map(move |(m, q)| {
                        let k = self.association.serving(m);
                        q.iter().map(move |p| (k, p))
                    }),
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Users 0,1 on the donor; 2,3 on node 1; 4 on node 2.
    fn assoc() -> AssociationMap {
        AssociationMap::from_serving(vec![0, 0, 1, 1, 2], 3)
    }

    fn push(q: &mut QueueState, m: usize, births: &[u64]) {
        for &b in births {
            q.donor[m].push_back(Packet { target_gue: m, birth_slot: b });
        }
    }

    #[test]
    fn relay_worked_example() {
        let grants = distribute_a2a(
            &[
                RelayCandidate { gue: 0, available: 3, head_age: 5 },
                RelayCandidate { gue: 1, available: 2, head_age: 3 },
            ],
            4,
        );
        assert_eq!(grants, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn relay_single_grant_goes_to_oldest_head() {
        let grants = distribute_a2a(
            &[
                RelayCandidate { gue: 0, available: 3, head_age: 2 },
                RelayCandidate { gue: 1, available: 1, head_age: 9 },
                RelayCandidate { gue: 2, available: 4, head_age: 4 },
            ],
            1,
        );
        assert_eq!(grants, vec![(1, 1)]);
    }

    #[test]
    fn relay_exhaustion() {
        let grants = distribute_a2a(
            &[
                RelayCandidate { gue: 0, available: 3, head_age: 1 },
                RelayCandidate { gue: 1, available: 2, head_age: 1 },
            ],
            10,
        );
        assert_eq!(grants.iter().map(|g| g.1).sum::<u64>(), 5);
        assert_eq!(grants, vec![(0, 3), (1, 2)]);
    }

    #[test]
    fn zero_rate_no_arrivals() {
        let mut q = QueueState::new(assoc(), 1);
        for s in 0..50 {
            assert!(q.generate_arrivals(s, 0.0).iter().all(|&n| n == 0));
        }
        assert_eq!(q.totals().arrivals, 0);
    }

    #[test]
    fn node_aggregate_is_sum_of_members() {
        let mut q = QueueState::new(assoc(), 2);
        let counts = q.generate_arrivals(0, 4.0);
        assert_eq!(q.backlog(0, Target::Node(1)), counts[2] + counts[3]);
        assert_eq!(q.backlog(0, Target::Node(2)), counts[4]);
    }

    #[test]
    fn saturation_and_zero_capacity() {
        let mut q = QueueState::new(assoc(), 3);
        push(&mut q, 0, &[0, 0]);
        let r = q.transmit(1, &[Grant { tx: 0, target: Target::Gue(0), capacity: 4 }]);
        assert_eq!(r.links[0].n_tx, 2);
        assert!(q.donor[0].is_empty());
        push(&mut q, 1, &[1, 1, 1]);
        let r = q.transmit(1, &[Grant { tx: 0, target: Target::Gue(1), capacity: 0 }]);
        assert_eq!(r.links[0].n_tx, 0);
        assert_eq!(q.backlog(0, Target::Gue(1)), 3);
    }

    #[test]
    #[should_panic(expected = "empty queue")]
    fn empty_grant_panics() {
        let mut q = QueueState::new(assoc(), 3);
        q.transmit(0, &[Grant { tx: 0, target: Target::Gue(0), capacity: 1 }]);
    }

    #[test]
    fn relay_preserves_ages_and_counts() {
        let mut q = QueueState::new(assoc(), 4);
        push(&mut q, 2, &[1, 2, 3]);
        push(&mut q, 3, &[4]);
        let r = q.transmit(6, &[Grant { tx: 0, target: Target::Node(1), capacity: 3 }]);
        assert_eq!(r.relayed[0], 3);
        assert_eq!(q.node[2].iter().map(|p| p.birth_slot).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(q.node[3].iter().map(|p| p.birth_slot).collect::<Vec<_>>(), vec![4]);
        assert_eq!(q.donor[2].len(), 1);
        assert_eq!(r.delivered.iter().sum::<u64>(), 0);
    }

    #[test]
    fn drop_boundary_is_strict() {
        let mut q = QueueState::new(assoc(), 5);
        push(&mut q, 0, &[0, 1]);
        let (d, _) = q.drop_expired(11, 10);
        assert_eq!(d[0], 1);
        assert_eq!(q.donor[0].front().unwrap().birth_slot, 1);
        let (d, _) = q.drop_expired(11, 10);
        assert_eq!(d[0], 0);
    }

    #[test]
    fn drop_matches_filter() {
        let mut q = QueueState::new(assoc(), 6);
        let births = [0, 2, 3, 3, 7, 9, 12, 15];
        push(&mut q, 1, &births);
        let slot = 16;
        let keep: Vec<u64> = births.iter().copied().filter(|b| slot - b <= 10).collect();
        let (d, _) = q.drop_expired(slot, 10);
        assert_eq!(d[1] as usize, births.len() - keep.len());
        assert_eq!(q.donor[1].iter().map(|p| p.birth_slot).collect::<Vec<_>>(), keep);
    }

    #[test]
    fn buffer_feature_cases() {
        assert_eq!(features_of(&[], 5), BufferFeature::default());
        let one = [Packet { target_gue: 0, birth_slot: 6 }];
        assert_eq!(
            features_of(&one, 10),
            BufferFeature { n_cum: 1, mean_delay: 4.0, head_latency: 4.0 }
        );
        let three: Vec<Packet> =
            [8, 5, 2].iter().map(|&b| Packet { target_gue: 0, birth_slot: b }).collect();
        assert_eq!(
            features_of(&three, 10),
            BufferFeature { n_cum: 3, mean_delay: 5.0, head_latency: 8.0 }
        );
    }

    #[test]
    fn ledger_satisfies_accumulation_identity() {
        let mut q = QueueState::new(assoc(), 7);
        let mut prev_str: std::collections::HashMap<(usize, Target), u64> = Default::default();
        for slot in 0..40 {
            q.generate_arrivals(slot, 3.0);
            let mut grants = vec![];
            if q.gamma(0, Target::Gue(0)) {
                grants.push(Grant { tx: 0, target: Target::Gue(0), capacity: 2 });
            }
            if q.gamma(0, Target::Node(1)) {
                grants.push(Grant { tx: 0, target: Target::Node(1), capacity: 5 });
            }
            if q.gamma(1, Target::Gue(2)) {
                grants.push(Grant { tx: 1, target: Target::Gue(2), capacity: 1 });
            }
            q.transmit(slot, &grants);
            q.drop_expired(slot + 1, 4);
            for row in q.close_slot(slot) {
                let key = (row.tx, row.target);
                assert_eq!(row.n_cum, row.n_new + prev_str.get(&key).copied().unwrap_or(0), "{row:?}");
                prev_str.insert(key, row.n_str);
            }
            let t = q.totals();
            assert_eq!(t.arrivals, t.delivered + t.dropped + q.residual());
        }
    }
}
