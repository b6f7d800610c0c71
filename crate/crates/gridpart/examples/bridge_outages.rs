//! Bridge outages: islanding, balance rules, and the extended factors.
//!
//! Tripping a bridge splits the network in two, so the plain distribution
//! factor does not exist: each island must first re-absorb the power that
//! used to cross the bridge. A balance rule assigns that imbalance to
//! participating buses; the extended factor is then the observed flow
//! change per unit of pre-outage bridge flow. The factor depends on the
//! rule — this example computes it under two different rules on a chain
//! of three triangles, checks the rule assessment (island-free injections,
//! participating cells), and shows the failure mode when a bridge carries
//! no flow.
//!
//! ```bash
//! cargo run -p gridpart --example bridge_outages
//! ```

use std::collections::BTreeMap;

use gridpart::balance::{assess_rule, BalanceRule};
use gridpart::lodf::{extended_lodf, LodfError};
use gridpart::networks::{three_triangle_chain, two_triangles_with_bridge};
use gridpart::partition::{cell_decomposition, irreducible_tree_partition};
use gridpart::{BusId, LineId};

fn main() {
    let net = three_triangle_chain();
    // One unit flows end to end: generated at bus 1, consumed at bus 9,
    // so both bridges (lines 10 and 11) carry it.
    let mut injections: BTreeMap<BusId, f64> =
        net.buses().iter().map(|b| (b.id, 0.0)).collect();
    injections.insert(BusId(1), 1.0);
    injections.insert(BusId(9), -1.0);

    let tp = irreducible_tree_partition(&net);
    let cells = cell_decomposition(&net, &tp);

    let uniform = BalanceRule::uniform_all(&net).expect("buses exist");
    // A lopsided rule: bus 2 takes 3/4 of any imbalance, bus 8 the rest.
    let lopsided =
        BalanceRule::new([(BusId(2), 0.75), (BusId(8), 0.25)].into_iter().collect(), &net)
            .expect("valid weights");

    for (name, rule) in [("uniform-all", &uniform), ("lopsided", &lopsided)] {
        let assessment = assess_rule(&net, &injections, &cells, rule).expect("solvable");
        println!(
            "rule {name}: island-free = {}, participating = {}",
            assessment.island_free.ok, assessment.participation.participating
        );
    }

    let bridge = LineId(10);
    println!("\nextended factors for tripping bridge {bridge}:");
    let under_uniform = extended_lodf(&net, &injections, &uniform, bridge).expect("defined");
    let under_lopsided =
        extended_lodf(&net, &injections, &lopsided, bridge).expect("defined");
    println!("  line   uniform-all   lopsided");
    for line in net.lines() {
        if line.id == bridge {
            continue;
        }
        println!(
            "  {:>4}   {:+.6}     {:+.6}",
            line.id, under_uniform[&line.id], under_lopsided[&line.id]
        );
    }
    println!("  (the extended factor is rule-dependent, unlike the non-bridge one)");

    // A bridge with zero flow cannot define a factor: with each triangle
    // balanced internally, nothing crosses the bridge and tripping it
    // changes nothing — reported as an islanding error, not a number.
    let idle = two_triangles_with_bridge();
    let mut balanced: BTreeMap<BusId, f64> =
        idle.buses().iter().map(|b| (b.id, 0.0)).collect();
    balanced.insert(BusId(1), 0.5);
    balanced.insert(BusId(2), -0.5);
    let rule = BalanceRule::uniform_all(&idle).expect("buses exist");
    match extended_lodf(&idle, &balanced, &rule, LineId(4)) {
        Err(LodfError::IslandedAtBridge { line, flow }) => {
            println!("\nself-balanced halves: bridge {line} carries {flow:.1e} -> no factor")
        }
        other => panic!("expected an islanding error, got {other:?}"),
    }
}
