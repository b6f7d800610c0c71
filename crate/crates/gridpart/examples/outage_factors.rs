//! Line outage distribution factors and where they vanish.
//!
//! For a non-bridge line e, the factor K[e, e'] scales the pre-outage flow
//! P_e into the flow change on every surviving line e'. This example
//! computes the full factor matrix for two triangles joined by a bridge,
//! checks one column against a from-scratch re-solve, and shows the
//! structural zeros: tripping a line in one triangle never moves flow in
//! the other, because the two triangles are different cells.
//!
//! ```bash
//! cargo run -p gridpart --example outage_factors
//! ```

use gridpart::flow::solve_dc_with;
use gridpart::lodf::{lodf_matrix_lenient, lodf_nonbridge};
use gridpart::networks::{two_triangles_with_bridge, TWO_TRIANGLES_BRIDGE};
use gridpart::partition::{cell_decomposition, irreducible_tree_partition};
use gridpart::{BusId, LineId};
use std::collections::BTreeMap;

fn main() {
    let net = two_triangles_with_bridge();

    // Injections: 1 p.u. generated at bus 1, consumed at bus 5.
    let mut injections: BTreeMap<BusId, f64> =
        net.buses().iter().map(|b| (b.id, 0.0)).collect();
    injections.insert(BusId(1), 1.0);
    injections.insert(BusId(5), -1.0);

    // Factor matrix without a balance rule: the bridge column is skipped
    // and reported, every other column comes from the matrix route.
    let (matrix, skipped) = lodf_matrix_lenient(&net, None).expect("connected");
    println!("factor matrix (rows = observed line, columns = tripped line):");
    print!("{}", matrix.to_csv());
    for (line, reason) in &skipped {
        println!("column {line} skipped: {reason}");
    }

    // The matrix predicts post-outage flows: P'[e'] = P[e'] + K[e,e'] P[e].
    let tripped = LineId(1);
    let before = solve_dc_with(&net, &injections).expect("balanced");
    let after_net = net.without_lines(&[tripped]).expect("still connected");
    let after = solve_dc_with(&after_net, &injections).expect("balanced");
    let column = lodf_nonbridge(&net, tripped).expect("not a bridge");
    println!("\ntripping line {tripped}: predicted vs re-solved flow");
    let p_e = before.flow(tripped).unwrap();
    let mut worst = 0.0_f64;
    for line in after_net.lines() {
        let predicted = before.flow(line.id).unwrap() + column[&line.id] * p_e;
        let resolved = after.flow(line.id).unwrap();
        worst = worst.max((predicted - resolved).abs());
        println!("  line {:>2}: {predicted:+.9} vs {resolved:+.9}", line.id);
    }
    println!("worst disagreement: {worst:.2e}");

    // Structural zeros: pairs in different cells have exactly zero factor.
    let tp = irreducible_tree_partition(&net);
    let cells = cell_decomposition(&net, &tp);
    println!(
        "\ncells: {:?} / bridge: {}",
        cells.cells(),
        TWO_TRIANGLES_BRIDGE
    );
    let far_max = net
        .lines()
        .iter()
        .filter(|l| cells.cell_of(l.id) == Some(1))
        .map(|l| column[&l.id].abs())
        .fold(0.0_f64, f64::max);
    println!(
        "largest |K| from tripping line {tripped} onto the far triangle: {far_max:.2e}"
    );
}
