//! Switching study on the IEEE 118-bus test case.
//!
//! Loads the Matpower case, partitions it (the stock case is one big
//! 109-bus region with a handful of leaf buses on bridges), then switches
//! off a three-line cut that splits the core into two regions of
//! comparable size. Before and after, the factor matrix over non-bridge
//! columns is thresholded into an influence graph: afterwards no edge
//! crosses the new region boundary, the graph is strictly sparser, and
//! most line flows barely move.
//!
//! ```bash
//! cargo run --release -p gridpart --example ieee118_study
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use gridpart::localize::{cross_region_edges, influence_graph};
use gridpart::lodf::lodf_matrix_lenient;
use gridpart::flow::solve_dc_with;
use gridpart::network::matpower::load_matpower;
use gridpart::partition::irreducible_tree_partition;
use gridpart::tolerance::{DEFAULT_TOLERANCE, INFLUENCE_THRESHOLD};
use gridpart::LineId;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/case118.m");
    let case = load_matpower(&path).expect("bundled case parses");
    let net = case.network;
    println!(
        "IEEE 118: {} buses, {} lines after merging {} parallel groups",
        net.bus_count(),
        net.line_count(),
        case.report.merged_parallel.len()
    );

    let tp = irreducible_tree_partition(&net);
    println!(
        "stock partition: {} regions (sizes {:?}), {} bridges",
        tp.region_count(),
        tp.summary().region_sizes,
        tp.bridges().len()
    );

    // A three-line cut found by `gridpart switch-search ... --k 3`; it
    // splits the 109-bus core into regions of 65 and 42 buses.
    let cut = [LineId(29), LineId(55), LineId(62)];
    let after_net = net.without_lines(&cut).expect("cut preserves connectivity");
    let tp_after = irreducible_tree_partition(&after_net);
    println!(
        "\nswitching off {cut:?}: {} regions (sizes {:?})",
        tp_after.region_count(),
        tp_after.summary().region_sizes
    );

    // Influence graphs over the injection-independent columns.
    let (matrix_before, _) = lodf_matrix_lenient(&net, None).expect("connected");
    let (matrix_after, _) = lodf_matrix_lenient(&after_net, None).expect("connected");
    let graph_before = influence_graph(&matrix_before, INFLUENCE_THRESHOLD);
    let graph_after = influence_graph(&matrix_after, INFLUENCE_THRESHOLD);
    let crossing = cross_region_edges(&graph_after, &after_net, &tp_after);
    println!(
        "influence edges at threshold {INFLUENCE_THRESHOLD}: {} -> {} \
         ({} crossing the new boundary)",
        graph_before.edge_count(),
        graph_after.edge_count(),
        crossing.len()
    );

    // How far do individual flows move?
    let injections = net.injections();
    let before = solve_dc_with(&net, &injections).expect("case is balanced");
    let after = solve_dc_with(&after_net, &injections).expect("case is balanced");
    let mut changes: BTreeMap<LineId, f64> = BTreeMap::new();
    let mut undefined = 0usize;
    for line in after_net.lines() {
        let p0 = before.flow(line.id).unwrap();
        let p1 = after.flow(line.id).unwrap();
        if p0.abs() <= DEFAULT_TOLERANCE {
            undefined += 1;
        } else {
            changes.insert(line.id, (p1 - p0).abs() / p0.abs());
        }
    }
    let small = changes.values().filter(|c| **c < 0.25).count();
    println!(
        "normalized |flow change|: {}/{} lines below 0.25 ({:.1}%), {} undefined",
        small,
        changes.len(),
        100.0 * small as f64 / changes.len() as f64,
        undefined
    );
    println!(
        "total |flow|: {:.3} -> {:.3}",
        before.total_absolute_flow(),
        after.total_absolute_flow()
    );
}
