//! Coincidental zeros and why perturbation removes them.
//!
//! Inside one cell the factor K[e, e'] is generically nonzero — but
//! symmetric susceptances can make it vanish by coincidence. On the
//! complete five-bus graph with unit susceptances, vertex-disjoint line
//! pairs have exactly zero factor (the spanning-forest families cancel
//! term by term). A tiny random perturbation of the susceptances breaks
//! the tie in every draw, which is the sense in which same-cell influence
//! is "almost surely" nonzero.
//!
//! ```bash
//! cargo run -p gridpart --example perturbed_zeros
//! ```

use gridpart::forest::lodf_forest;
use gridpart::lodf::lodf_nonbridge;
use gridpart::networks::complete;
use gridpart::perturb::{perturb, PerturbationSpec};
use gridpart::LineId;
use num_traits::Zero;

fn main() {
    let net = complete(5);
    // Lines (1,2) and (3,4) share no bus.
    let e = LineId(1);
    let ehat = net
        .lines()
        .iter()
        .find(|l| l.from.0 >= 3 && l.to.0 >= 3)
        .map(|l| l.id)
        .expect("a vertex-disjoint line exists");

    let exact = lodf_forest(&net, e, ehat).expect("small enough");
    println!(
        "complete graph on 5 buses, unit susceptances: K[{e}, {ehat}] = {exact} \
         (exactly {})",
        if exact.is_zero() { "zero" } else { "nonzero" }
    );

    println!("\nperturbing every susceptance by a relative 1e-3:");
    for seed in 0..5 {
        let spec = PerturbationSpec::default().with_seed(seed);
        let shaken = perturb(&net, &spec);
        let column = lodf_nonbridge(&shaken, e).expect("not a bridge");
        println!("  seed {seed}: K[{e}, {ehat}] = {:+.3e}", column[&ehat]);
    }
    println!("\nevery draw is nonzero; only the measure-zero symmetric point vanishes");
}
