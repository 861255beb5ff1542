//! Queue mechanics on a hand-built two-hop network.
//!
//! User 0 hangs off the donor, users 1 and 2 off node 1. Packets for node
//! users wait at the donor, cross the backhaul oldest-first, and are then
//! delivered by the node. The ledger rows are printed slot by slot.
//!
//! cargo run --example relay_trace

use iab_uav_sim::link::AssociationMap;
use iab_uav_sim::traffic::{Grant, QueueState, Target};

fn show(q: &mut QueueState, slot: u64) {
    for row in q.close_slot(slot) {
        if row.n_cum > 0 || row.n_str > 0 {
            println!(
                "  slot {slot}  tx {}  {:?}  new {} cum {} tx {} drop {} stay {}",
                row.tx, row.target, row.n_new, row.n_cum, row.n_tx, row.dropped, row.n_str
            );
        }
    }
}

fn main() {
    let max_age = 3;
    let mut q = QueueState::new(AssociationMap::from_serving(vec![0, 1, 1], 2), 0);

    q.inject_arrivals(0, &[2, 3, 1]);
    let r = q.transmit(0, &[Grant { tx: 0, target: Target::Node(1), capacity: 2 }, Grant { tx: 0, target: Target::Gue(0), capacity: 1 }]);
    println!("slot 0: delivered {:?}, relayed {:?}", r.delivered, r.relayed);
    q.drop_expired(1, max_age);
    show(&mut q, 0);

    q.inject_arrivals(1, &[0, 1, 0]);
    let r = q.transmit(1, &[Grant { tx: 1, target: Target::Gue(1), capacity: 1 }, Grant { tx: 0, target: Target::Node(1), capacity: 4 }]);
    println!("slot 1: delivered {:?}, relayed {:?}", r.delivered, r.relayed);
    q.drop_expired(2, max_age);
    show(&mut q, 1);

    for slot in 2..6 {
        // the node serves one packet per user with anything queued
        let grants: Vec<Grant> = [1, 2]
            .into_iter()
            .filter(|&m| q.gamma(1, Target::Gue(m)))
            .map(|m| Grant { tx: 1, target: Target::Gue(m), capacity: 1 })
            .collect();
        let r = q.transmit(slot, &grants);
        let (donor, node) = q.drop_expired(slot + 1, max_age);
        println!("slot {slot}: delivered {:?}, dropped donor {donor:?} node {node:?}", r.delivered);
        show(&mut q, slot);
    }

    let t = q.totals();
    println!("arrivals {} = delivered {} + dropped {} + residual {}", t.arrivals, t.delivered, t.dropped, q.residual());
}
