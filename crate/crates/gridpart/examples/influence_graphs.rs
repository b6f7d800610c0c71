//! Classifying line pairs and drawing the influence graph.
//!
//! The butterfly — two triangles sharing a cut vertex — is one region
//! with two cells. Pairs of lines in the same cell interact; pairs in
//! different cells of the same region have exactly zero factor, the cut
//! vertex blocks them. This example tabulates the factor magnitudes by
//! pair class, checks the soundness claim (nonzero only where predicted),
//! and emits the influence graph as DOT, ready for `dot -Tpng`.
//!
//! ```bash
//! cargo run -p gridpart --example influence_graphs
//! ```

use gridpart::localize::{classify_pair, influence_graph, sparsity_report, PairClass};
use gridpart::lodf::lodf_matrix_lenient;
use gridpart::networks::butterfly;
use gridpart::partition::{cell_decomposition, irreducible_tree_partition};
use gridpart::tolerance::INFLUENCE_THRESHOLD;

fn main() {
    let net = butterfly();
    let tp = irreducible_tree_partition(&net);
    let cells = cell_decomposition(&net, &tp);
    println!(
        "butterfly: {} region, cells {:?}, cut vertex {:?}",
        tp.region_count(),
        cells.cells(),
        cells.cut_vertices()
    );

    let (matrix, _) = lodf_matrix_lenient(&net, None).expect("connected");

    println!("\npair classes and factors (tripped e, observed e'):");
    for e in net.lines() {
        for ehat in net.lines() {
            let class = classify_pair(&net, &tp, &cells, e.id, ehat.id).expect("known");
            if class == PairClass::Diagonal {
                continue;
            }
            let value = matrix
                .get(e.id, ehat.id)
                .map_or("   -    ".to_string(), |v| format!("{v:+.5}"));
            println!("  K[{}, {}] = {value}   {class:?}", e.id, ehat.id);
        }
    }

    let report = sparsity_report(&net, &tp, &cells, &matrix);
    println!("\nmagnitudes by class (tolerance {:.0e}):", report.tolerance);
    for (class, stats) in &report.by_class {
        println!(
            "  {class:?}: {} pairs, {} defined, {} nonzero, max |K| = {:.3e}",
            stats.pairs, stats.defined, stats.nonzero, stats.max_abs
        );
    }
    println!("nonzero only in predicted classes: {}", report.sound);

    let graph = influence_graph(&matrix, INFLUENCE_THRESHOLD);
    println!("\ninfluence graph as DOT:\n{}", graph.to_dot(&net));
}
