//! Tree partitions and cell decompositions.
//!
//! Removing every bridge from a connected graph leaves its 2-edge-connected
//! pieces; taking those pieces as vertex groups yields the finest partition
//! whose reduced graph (one node per group, one edge per line between
//! groups) is a tree. We call the groups *regions*. The partial order
//! [`is_finer`] compares this partition against coarser alternatives: every
//! other partition with a tree reduced graph is a coarsening of it.
//!
//! Inside a region, the biconnected components of the induced subgraph split
//! the region's lines into *cells*; the vertices gluing cells together (or
//! holding bridges) are the cut vertices. Cells are where line outages
//! propagate, which is what the rest of the crate is about.
//!
//! Everything here is ordered deterministically: regions by their smallest
//! bus id, cells by their smallest line id.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::network::{BusId, LineId, Network};

/// Bridge lines: removing one disconnects the network.
pub fn find_bridges(net: &Network) -> BTreeSet<LineId> {
    low_link(net).bridges.iter().map(|&k| net.lines()[k].id).collect()
}

/// Buses whose removal disconnects the network.
pub fn articulation_points(net: &Network) -> BTreeSet<BusId> {
    low_link(net).articulation_points.iter().map(|&i| net.buses()[i].id).collect()
}

/// Partition of the buses into regions joined by bridges.
#[derive(Clone, Debug)]
pub struct TreePartition {
    regions: Vec<BTreeSet<BusId>>,
    bridges: BTreeSet<LineId>,
    region_of: HashMap<BusId, usize>,
}

/// Compact description of a partition, for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionSummary {
    pub region_count: usize,
    pub region_sizes: Vec<usize>,
    pub bridge_count: usize,
}

impl TreePartition {
    pub fn regions(&self) -> &[BTreeSet<BusId>] {
        &self.regions
    }

    pub fn bridges(&self) -> &BTreeSet<LineId> {
        &self.bridges
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn region_of(&self, bus: BusId) -> Option<usize> {
        self.region_of.get(&bus).copied()
    }

    /// Region containing a line, or None if the line is a bridge (bridges
    /// run between regions) or unknown.
    pub fn region_of_line(&self, net: &Network, line: LineId) -> Option<usize> {
        if self.bridges.contains(&line) {
            return None;
        }
        net.line(line).and_then(|l| self.region_of(l.from))
    }

    /// Edges of the reduced graph: for each bridge, the pair of region
    /// indices it joins. For this partition the reduced graph is a tree.
    pub fn reduced_edges(&self, net: &Network) -> Vec<(usize, usize, LineId)> {
        self.bridges
            .iter()
            .map(|&id| {
                let l = net.line(id).expect("bridge is a known line");
                let a = self.region_of[&l.from];
                let b = self.region_of[&l.to];
                (a.min(b), a.max(b), id)
            })
            .collect()
    }

    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            region_count: self.regions.len(),
            region_sizes: self.regions.iter().map(|r| r.len()).collect(),
            bridge_count: self.bridges.len(),
        }
    }
}

/// The finest tree partition: regions are the connected components left
/// after removing all bridges.
pub fn irreducible_tree_partition(net: &Network) -> TreePartition {
    let ll = low_link(net);
    let bridge_idx: Vec<bool> = {
        let mut v = vec![false; net.line_count()];
        for &k in &ll.bridges {
            v[k] = true;
        }
        v
    };
    let groups = net.components_over(|l| !bridge_idx[net.line_index(l.id).unwrap()]);
    let mut regions: Vec<BTreeSet<BusId>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| net.buses()[i].id).collect())
        .collect();
    regions.sort_by_key(|r| *r.first().expect("regions are non-empty"));
    let mut region_of = HashMap::with_capacity(net.bus_count());
    for (idx, region) in regions.iter().enumerate() {
        for &b in region {
            region_of.insert(b, idx);
        }
    }
    let bridges = ll.bridges.iter().map(|&k| net.lines()[k].id).collect();
    TreePartition { regions, bridges, region_of }
}

/// Cells of every region, plus the cut vertices separating them.
#[derive(Clone, Debug)]
pub struct CellDecomposition {
    cells: Vec<BTreeSet<LineId>>,
    cell_region: Vec<usize>,
    cell_of: HashMap<LineId, usize>,
    cut_vertices: BTreeSet<BusId>,
}

impl CellDecomposition {
    pub fn cells(&self) -> &[BTreeSet<LineId>] {
        &self.cells
    }

    /// Region index a cell belongs to.
    pub fn cell_region(&self, cell: usize) -> usize {
        self.cell_region[cell]
    }

    /// Cell containing a line. None for bridges: they belong to no cell.
    pub fn cell_of(&self, line: LineId) -> Option<usize> {
        self.cell_of.get(&line).copied()
    }

    pub fn cut_vertices(&self) -> &BTreeSet<BusId> {
        &self.cut_vertices
    }

    pub fn cells_in_region(&self, region: usize) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.cell_region[c] == region).collect()
    }

    /// Buses spanned by a cell.
    pub fn cell_buses(&self, net: &Network, cell: usize) -> BTreeSet<BusId> {
        let mut buses = BTreeSet::new();
        for &id in &self.cells[cell] {
            let l = net.line(id).expect("cell lines are known");
            buses.insert(l.from);
            buses.insert(l.to);
        }
        buses
    }
}

/// Splits each region's lines into biconnected blocks (cells).
pub fn cell_decomposition(net: &Network, partition: &TreePartition) -> CellDecomposition {
    let ll = low_link(net);
    let bridge_set: BTreeSet<usize> = ll.bridges.iter().copied().collect();
    let mut cells: Vec<BTreeSet<LineId>> = ll
        .blocks
        .iter()
        .filter(|block| !(block.len() == 1 && bridge_set.contains(&block[0])))
        .map(|block| block.iter().map(|&k| net.lines()[k].id).collect())
        .collect();
    cells.sort_by_key(|c| *c.first().expect("blocks are non-empty"));

    let mut cell_of = HashMap::new();
    let mut cell_region = Vec::with_capacity(cells.len());
    for (idx, cell) in cells.iter().enumerate() {
        for &id in cell {
            cell_of.insert(id, idx);
        }
        let any = net.line(*cell.first().unwrap()).unwrap();
        cell_region.push(
            partition.region_of(any.from).expect("cell lines lie inside a region"),
        );
    }

    let cut_vertices = ll.articulation_points.iter().map(|&i| net.buses()[i].id).collect();
    CellDecomposition { cells, cell_region, cell_of, cut_vertices }
}

/// Result of comparing two partitions under refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionOrderResult {
    pub finer: bool,
    /// For each region of the finer partition, the index of the coarser
    /// region containing it. Present only when `finer` holds.
    pub witness: Option<Vec<usize>>,
}

/// Checks whether every region of `fine` is contained in some region of
/// `coarse`.
pub fn is_finer(fine: &[BTreeSet<BusId>], coarse: &[BTreeSet<BusId>]) -> PartitionOrderResult {
    let mut owner: HashMap<BusId, usize> = HashMap::new();
    for (j, region) in coarse.iter().enumerate() {
        for &b in region {
            owner.insert(b, j);
        }
    }
    let mut witness = Vec::with_capacity(fine.len());
    for region in fine {
        let first = match region.first() {
            Some(&b) => b,
            None => return PartitionOrderResult { finer: false, witness: None },
        };
        match owner.get(&first) {
            Some(&j) if region.iter().all(|b| coarse[j].contains(b)) => witness.push(j),
            _ => return PartitionOrderResult { finer: false, witness: None },
        }
    }
    PartitionOrderResult { finer: true, witness: Some(witness) }
}

/// Output of one depth-first sweep: bridges, articulation points, and the
/// biconnected blocks as groups of line indices.
struct LowLink {
    bridges: Vec<usize>,
    articulation_points: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

/// Iterative low-link depth-first search. Recursion depth equals the DFS
/// tree depth, which can reach the bus count, so an explicit stack is used.
fn low_link(net: &Network) -> LowLink {
    const UNSET: usize = usize::MAX;
    let n = net.bus_count();
    let mut tin = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut bridges = Vec::new();
    let mut aps = vec![false; n];
    let mut blocks = Vec::new();
    let mut edge_stack: Vec<usize> = Vec::new();

    struct Frame {
        v: usize,
        parent_edge: usize,
        next: usize,
        children: usize,
    }

    let mut stack: Vec<Frame> = Vec::new();
    for root in 0..n {
        if tin[root] != UNSET {
            continue;
        }
        tin[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push(Frame { v: root, parent_edge: UNSET, next: 0, children: 0 });

        while let Some(top) = stack.last_mut() {
            let v = top.v;
            if top.next < net.adjacency(v).len() {
                let (k, u) = net.adjacency(v)[top.next];
                top.next += 1;
                if k == top.parent_edge {
                    continue;
                }
                if tin[u] == UNSET {
                    top.children += 1;
                    tin[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    edge_stack.push(k);
                    stack.push(Frame { v: u, parent_edge: k, next: 0, children: 0 });
                } else if tin[u] < tin[v] {
                    // Back edge, seen from the descendant side.
                    edge_stack.push(k);
                    low[v] = low[v].min(tin[u]);
                }
            } else {
                let frame = stack.pop().expect("frame present");
                if let Some(parent) = stack.last_mut() {
                    let pv = parent.v;
                    low[pv] = low[pv].min(low[v]);
                    if low[v] > tin[pv] {
                        bridges.push(frame.parent_edge);
                    }
                    if low[v] >= tin[pv] {
                        if parent.parent_edge != UNSET {
                            aps[pv] = true;
                        }
                        // Everything pushed at or after this tree edge is one block.
                        let at = edge_stack
                            .iter()
                            .rposition(|&k| k == frame.parent_edge)
                            .expect("tree edge is on the stack");
                        blocks.push(edge_stack.split_off(at));
                    }
                } else if frame.children >= 2 {
                    aps[frame.v] = true;
                }
            }
        }
    }

    let articulation_points = (0..n).filter(|&i| aps[i]).collect();
    LowLink { bridges, articulation_points, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Bus, Line, Network};

    fn net(buses: &[u32], edges: &[(u32, u32)]) -> Network {
        Network::new(
            buses.iter().map(|&b| Bus::new(b, 0.0)).collect(),
            edges
                .iter()
                .enumerate()
                .map(|(k, &(f, t))| Line::new(k as u32 + 1, f, t, 1.0))
                .collect(),
            BusId(buses[0]),
        )
        .unwrap()
    }

    /// Brute force: a line is a bridge iff its removal disconnects.
    fn bridges_by_removal(net: &Network) -> BTreeSet<LineId> {
        net.lines()
            .iter()
            .filter(|l| !net.is_connected_over(|other| other.id != l.id))
            .map(|l| l.id)
            .collect()
    }

    #[test]
    fn cycle_has_no_bridges_single_region() {
        let net = net(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert!(find_bridges(&net).is_empty());
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.region_count(), 1);
        assert!(articulation_points(&net).is_empty());
        let cd = cell_decomposition(&net, &tp);
        assert_eq!(cd.cells().len(), 1);
        assert!(cd.cut_vertices().is_empty());
    }

    #[test]
    fn path_is_all_bridges() {
        let net = net(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4)]);
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.bridges().len(), 3);
        assert_eq!(tp.region_count(), 4);
        assert_eq!(tp.bridges().len(), tp.region_count() - 1);
        let cd = cell_decomposition(&net, &tp);
        assert!(cd.cells().is_empty());
        // Interior path vertices separate the graph.
        assert_eq!(
            articulation_points(&net),
            [BusId(2), BusId(3)].into_iter().collect()
        );
    }

    #[test]
    fn two_triangles_joined_by_bridge() {
        let net = net(
            &[1, 2, 3, 4, 5, 6],
            &[(1, 2), (2, 3), (1, 3), (3, 4), (4, 5), (5, 6), (4, 6)],
        );
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.bridges(), &[LineId(4)].into_iter().collect());
        assert_eq!(tp.region_count(), 2);
        assert_eq!(tp.regions()[0], [1, 2, 3].map(BusId).into_iter().collect());
        assert_eq!(tp.regions()[1], [4, 5, 6].map(BusId).into_iter().collect());
        assert_eq!(tp.region_of_line(&net, LineId(4)), None);
        assert_eq!(tp.region_of_line(&net, LineId(1)), Some(0));
        assert_eq!(tp.reduced_edges(&net), vec![(0, 1, LineId(4))]);

        let cd = cell_decomposition(&net, &tp);
        assert_eq!(cd.cells().len(), 2);
        assert_eq!(cd.cells()[0], [1, 2, 3].map(LineId).into_iter().collect());
        assert_eq!(cd.cells()[1], [5, 6, 7].map(LineId).into_iter().collect());
        assert_eq!(cd.cell_region(0), 0);
        assert_eq!(cd.cell_region(1), 1);
        // Bridge endpoints are the gates into each triangle.
        assert_eq!(cd.cut_vertices(), &[BusId(3), BusId(4)].into_iter().collect());
        assert_eq!(cd.cell_of(LineId(4)), None);
        assert_eq!(cd.cell_of(LineId(2)), Some(0));
    }

    #[test]
    fn butterfly_has_two_cells_around_the_body() {
        // Two triangles sharing bus 3.
        let net = net(
            &[1, 2, 3, 4, 5],
            &[(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)],
        );
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.region_count(), 1);
        assert!(tp.bridges().is_empty());
        let cd = cell_decomposition(&net, &tp);
        assert_eq!(cd.cells().len(), 2);
        assert_eq!(cd.cut_vertices(), &[BusId(3)].into_iter().collect());
        assert_eq!(cd.cell_of(LineId(1)), Some(0));
        assert_eq!(cd.cell_of(LineId(6)), Some(1));
        assert_ne!(cd.cell_of(LineId(2)), cd.cell_of(LineId(4)));
    }

    #[test]
    fn two_squares_sharing_a_vertex() {
        let net = net(
            &[1, 2, 3, 4, 5, 6, 7],
            &[(1, 2), (2, 3), (3, 4), (4, 1), (4, 5), (5, 6), (6, 7), (7, 4)],
        );
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.region_count(), 1);
        let cd = cell_decomposition(&net, &tp);
        assert_eq!(cd.cells().len(), 2);
        assert_eq!(cd.cut_vertices(), &[BusId(4)].into_iter().collect());
    }

    #[test]
    fn matches_removal_oracle_on_a_mixed_graph() {
        // A mesh with pendant chain and two blobs.
        let net = net(
            &[1, 2, 3, 4, 5, 6, 7, 8, 9],
            &[
                (1, 2),
                (2, 3),
                (1, 3),
                (3, 4), // bridge
                (4, 5),
                (5, 6),
                (4, 6),
                (6, 7), // bridge
                (7, 8), // bridge
                (8, 9), // bridge
            ],
        );
        assert_eq!(find_bridges(&net), bridges_by_removal(&net));
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.bridges().len(), tp.region_count() - 1);
        assert_eq!(tp.region_count(), 5);
    }

    #[test]
    fn single_bus_network() {
        let net = Network::new(vec![Bus::new(1, 0.0)], vec![], BusId(1)).unwrap();
        let tp = irreducible_tree_partition(&net);
        assert_eq!(tp.region_count(), 1);
        assert!(tp.bridges().is_empty());
        let cd = cell_decomposition(&net, &tp);
        assert!(cd.cells().is_empty());
        assert!(cd.cut_vertices().is_empty());
    }

    #[test]
    fn regions_are_ordered_by_smallest_bus_id() {
        // Bus list deliberately out of order.
        let net = net(&[9, 5, 1, 7], &[(9, 5), (5, 1), (1, 7)]);
        let tp = irreducible_tree_partition(&net);
        let firsts: Vec<BusId> = tp.regions().iter().map(|r| *r.first().unwrap()).collect();
        assert_eq!(firsts, [1, 5, 7, 9].map(BusId).to_vec());
    }

    #[test]
    fn finer_than_accepts_merges_and_rejects_overlaps() {
        let fine: Vec<BTreeSet<BusId>> = vec![
            [1, 2].map(BusId).into_iter().collect(),
            [3].map(BusId).into_iter().collect(),
            [4, 5].map(BusId).into_iter().collect(),
            [6].map(BusId).into_iter().collect(),
        ];
        let coarse: Vec<BTreeSet<BusId>> = vec![
            [1, 2, 3].map(BusId).into_iter().collect(),
            [4, 5, 6].map(BusId).into_iter().collect(),
        ];
        let res = is_finer(&fine, &coarse);
        assert!(res.finer);
        assert_eq!(res.witness, Some(vec![0, 0, 1, 1]));
        // Reflexive.
        assert!(is_finer(&fine, &fine).finer);
        // Not symmetric.
        assert!(!is_finer(&coarse, &fine).finer);
        // Crossing groups are not comparable.
        let crossing: Vec<BTreeSet<BusId>> = vec![
            [1, 2, 4].map(BusId).into_iter().collect(),
            [3, 5, 6].map(BusId).into_iter().collect(),
        ];
        assert!(!is_finer(&fine, &crossing).finer);
    }
}
