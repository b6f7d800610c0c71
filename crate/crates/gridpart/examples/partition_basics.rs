//! Tree partitions and cell decompositions.
//!
//! A chain of three triangles joined by two bridge lines falls apart into
//! three regions once the bridges are removed; inside each region the
//! 2-connected blocks are the cells. This example prints the whole
//! decomposition and then demonstrates the partial order on tree
//! partitions: the computed partition refines every coarser one obtained
//! by merging regions across a bridge.
//!
//! ```bash
//! cargo run -p gridpart --example partition_basics
//! ```

use std::collections::BTreeSet;

use gridpart::networks::three_triangle_chain;
use gridpart::partition::{cell_decomposition, irreducible_tree_partition, is_finer};
use gridpart::BusId;

fn main() {
    let net = three_triangle_chain();
    println!(
        "network: {} buses, {} lines (three triangles joined by two bridges)\n",
        net.bus_count(),
        net.line_count()
    );

    let tp = irreducible_tree_partition(&net);
    println!("regions ({}):", tp.region_count());
    for (i, region) in tp.regions().iter().enumerate() {
        println!("  region {i}: buses {region:?}");
    }
    println!("bridges: {:?}", tp.bridges());
    println!("reduced tree edges (region -- region via line):");
    for (a, b, line) in tp.reduced_edges(&net) {
        println!("  {a} -- {b}  via line {line}");
    }

    let cells = cell_decomposition(&net, &tp);
    println!("\ncells ({}):", cells.cells().len());
    for (i, cell) in cells.cells().iter().enumerate() {
        println!(
            "  cell {i} (region {}): lines {cell:?} over buses {:?}",
            cells.cell_region(i),
            cells.cell_buses(&net, i)
        );
    }
    println!("cut vertices: {:?}", cells.cut_vertices());

    // Merging two regions joined by a bridge yields a coarser tree
    // partition; the computed one must refine it (and not vice versa).
    let mut merged: Vec<BTreeSet<BusId>> = tp.regions().to_vec();
    let tail = merged.pop().expect("at least two regions");
    merged.last_mut().expect("nonempty").extend(tail);
    let finer = is_finer(tp.regions(), &merged);
    let coarser = is_finer(&merged, tp.regions());
    println!("\ncomputed partition refines the 2-region merge: {}", finer.finer);
    println!("the merge refines the computed partition: {}", coarser.finer);
}
