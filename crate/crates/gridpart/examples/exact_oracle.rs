//! The exact rational route to distribution factors.
//!
//! At desk scale the factors have a closed combinatorial form: sums of
//! susceptance products over spanning trees and spanning 2-forests. This
//! example enumerates them in exact rational arithmetic on a weighted
//! square with a chord, prints the factors as fractions, and confirms the
//! float matrix route agrees to machine precision — the verification that
//! backs the `gridpart verify` subcommand.
//!
//! ```bash
//! cargo run -p gridpart --example exact_oracle
//! ```

use std::collections::BTreeSet;

use gridpart::forest::{lodf_forest, spanning_tree_weight, ForestEnsemble};
use gridpart::lodf::lodf_nonbridge;
use gridpart::network::{Bus, Line, Network};
use gridpart::partition::find_bridges;
use gridpart::{BusId, LineId};
use num_traits::ToPrimitive;

fn main() {
    // Square 1-2-3-4 with chord 1-3, susceptances 1..=5.
    let buses = (1..=4).map(|i| Bus::new(i, 0.0)).collect();
    let lines = vec![
        Line::new(1, 1, 2, 1.0),
        Line::new(2, 2, 3, 2.0),
        Line::new(3, 3, 4, 3.0),
        Line::new(4, 4, 1, 4.0),
        Line::new(5, 1, 3, 5.0),
    ];
    let net = Network::new(buses, lines, BusId(1)).expect("valid");

    let all: BTreeSet<LineId> = net.lines().iter().map(|l| l.id).collect();
    let total = spanning_tree_weight(&net, &all).expect("small enough");
    println!("sum of susceptance products over all spanning trees: {total}");

    let ensemble = ForestEnsemble::new(&net).expect("small enough");
    let bridges = find_bridges(&net);
    println!("\nfactors as exact fractions (tripped -> observed):");
    let mut worst = 0.0_f64;
    for e in net.lines() {
        if bridges.contains(&e.id) {
            continue;
        }
        let column = lodf_nonbridge(&net, e.id).expect("not a bridge");
        for ehat in net.lines() {
            if ehat.id == e.id {
                continue;
            }
            let exact = ensemble.lodf(&net, e.id, ehat.id).expect("in range");
            let single = lodf_forest(&net, e.id, ehat.id).expect("in range");
            assert_eq!(exact, single, "both enumeration routes agree exactly");
            let float = column[&ehat.id];
            worst = worst.max((exact.to_f64().unwrap() - float).abs());
            println!("  K[{}, {}] = {exact} ({float:+.9})", e.id, ehat.id);
        }
    }
    println!("\nworst |exact - float matrix| over all pairs: {worst:.2e}");
}
