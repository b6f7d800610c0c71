//! Where can an outage be felt? Classification of line pairs and the
//! influence graph.
//!
//! For a tripped line e and an observed line ê, the partition and cell
//! structure decides whether the factor K[e, ê] can be nonzero:
//!
//! * e and ê in the **same cell**: nonzero for almost every susceptance
//!   assignment (exact zeros are knife-edge coincidences).
//! * e a **bridge**: under an island-free injection and a participating
//!   balance rule, every extended factor is nonzero — bridge outages are
//!   global.
//! * every other combination (different cells, different regions, or ê a
//!   bridge while e is not): K[e, ê] = 0, structurally.
//!
//! [`classify_pair`] returns the class, [`sparsity_report`] tallies a
//! factor matrix against the prediction, and [`influence_graph`]
//! thresholds the matrix into the undirected graph used to visualize how
//! far failures propagate.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::lodf::LodfMatrix;
use crate::network::{LineId, Network};
use crate::partition::{CellDecomposition, TreePartition};
use crate::tolerance::DEFAULT_TOLERANCE;

#[derive(Debug, Error, PartialEq)]
pub enum LocalizeError {
    #[error("line {0} is unknown")]
    UnknownLine(LineId),
}

/// Structural class of an ordered pair (tripped e, observed ê).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    /// e = ê.
    Diagonal,
    /// Both in one cell of one region: predicted nonzero (almost surely).
    SameCell,
    /// Same region, different cells: predicted zero.
    SameRegionDiffCell,
    /// Different regions: predicted zero.
    DiffRegion,
    /// e is a bridge: predicted nonzero everywhere, given an island-free
    /// injection and a participating balance rule.
    SourceIsBridge,
    /// ê is a bridge but e is not: predicted zero (bridge flows are set by
    /// injections alone, which a non-bridge trip leaves unchanged).
    TargetIsBridge,
}

impl PairClass {
    /// Whether the theory predicts a nonzero factor for this class.
    pub fn predicted_nonzero(self) -> bool {
        matches!(self, PairClass::SameCell | PairClass::SourceIsBridge)
    }
}

/// Classifies the ordered pair (e, ê). Exactly one class applies.
pub fn classify_pair(
    net: &Network,
    tp: &TreePartition,
    cd: &CellDecomposition,
    e: LineId,
    ehat: LineId,
) -> Result<PairClass, LocalizeError> {
    for id in [e, ehat] {
        if net.line(id).is_none() {
            return Err(LocalizeError::UnknownLine(id));
        }
    }
    if e == ehat {
        return Ok(PairClass::Diagonal);
    }
    if tp.bridges().contains(&e) {
        return Ok(PairClass::SourceIsBridge);
    }
    if tp.bridges().contains(&ehat) {
        return Ok(PairClass::TargetIsBridge);
    }
    let ce = cd.cell_of(e).expect("non-bridge line lies in a cell");
    let ch = cd.cell_of(ehat).expect("non-bridge line lies in a cell");
    if ce == ch {
        Ok(PairClass::SameCell)
    } else if cd.cell_region(ce) == cd.cell_region(ch) {
        Ok(PairClass::SameRegionDiffCell)
    } else {
        Ok(PairClass::DiffRegion)
    }
}

/// Undirected graph over lines: an edge joins e and ê when tripping either
/// one moves the flow on the other by at least `threshold` (relative to
/// the tripped line's flow).
#[derive(Clone, Debug, Serialize)]
pub struct InfluenceGraph {
    pub threshold: f64,
    pub nodes: Vec<LineId>,
    /// Unordered pairs stored with the smaller id first.
    pub edges: BTreeSet<(LineId, LineId)>,
    /// Whether the source matrix included extended (bridge) columns.
    pub has_bridge_columns: bool,
}

impl InfluenceGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, a: LineId, b: LineId) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    pub fn degree(&self, line: LineId) -> usize {
        self.edges.iter().filter(|(a, b)| *a == line || *b == line).count()
    }

    /// DOT rendering; nodes are labeled "id: from-to".
    pub fn to_dot(&self, net: &Network) -> String {
        let mut out = String::from("graph influence {\n  node [shape=box];\n");
        for &id in &self.nodes {
            let l = net.line(id).expect("graph nodes are network lines");
            out.push_str(&format!("  \"{id}\" [label=\"{id}: {}-{}\"];\n", l.from, l.to));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  \"{a}\" -- \"{b}\";\n"));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("influence graph serializes")
    }
}

/// Thresholds a factor matrix into an [`InfluenceGraph`], keeping an edge
/// when the larger of the two directed factors reaches `threshold`.
/// Entries the matrix does not carry (diagonal) contribute nothing.
pub fn influence_graph(matrix: &LodfMatrix, threshold: f64) -> InfluenceGraph {
    assert!(threshold > 0.0, "influence threshold must be positive");
    let nodes: Vec<LineId> = matrix.line_order().to_vec();
    let mut edges = BTreeSet::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let forward = matrix.get(a, b).map_or(0.0, f64::abs);
            let backward = matrix.get(b, a).map_or(0.0, f64::abs);
            if forward.max(backward) >= threshold {
                edges.insert(if a <= b { (a, b) } else { (b, a) });
            }
        }
    }
    let has_bridge_columns = matrix.context().is_some();
    InfluenceGraph { threshold, nodes, edges, has_bridge_columns }
}

/// Influence edges joining non-bridge lines of two different regions —
/// the edges a localized grid must not have.
pub fn cross_region_edges(
    graph: &InfluenceGraph,
    net: &Network,
    tp: &TreePartition,
) -> Vec<(LineId, LineId)> {
    graph
        .edges
        .iter()
        .filter(|(a, b)| {
            match (tp.region_of_line(net, *a), tp.region_of_line(net, *b)) {
                (Some(ra), Some(rb)) => ra != rb,
                // Pairs touching a bridge are not region-to-region pairs.
                _ => false,
            }
        })
        .copied()
        .collect()
}

/// Tally of one structural class in a factor matrix.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ClassStats {
    /// Ordered pairs in the class.
    pub pairs: usize,
    /// Pairs whose matrix entry is present.
    pub defined: usize,
    /// Defined entries with |K| at or above the tolerance.
    pub nonzero: usize,
    pub max_abs: f64,
}

/// Factor matrix tallied per pair class: the block-sparsity picture.
#[derive(Clone, Debug, Serialize)]
pub struct SparsityReport {
    pub tolerance: f64,
    pub by_class: BTreeMap<PairClass, ClassStats>,
    /// True when no predicted-zero class contains a nonzero entry.
    pub sound: bool,
}

/// Compares a factor matrix against the structural prediction with the
/// default zero tolerance.
pub fn sparsity_report(
    net: &Network,
    tp: &TreePartition,
    cd: &CellDecomposition,
    matrix: &LodfMatrix,
) -> SparsityReport {
    sparsity_report_with_tolerance(net, tp, cd, matrix, DEFAULT_TOLERANCE)
}

pub fn sparsity_report_with_tolerance(
    net: &Network,
    tp: &TreePartition,
    cd: &CellDecomposition,
    matrix: &LodfMatrix,
    tolerance: f64,
) -> SparsityReport {
    let mut by_class: BTreeMap<PairClass, ClassStats> = BTreeMap::new();
    for &e in matrix.line_order() {
        for &ehat in matrix.line_order() {
            let class = classify_pair(net, tp, cd, e, ehat)
                .expect("matrix lines belong to the network");
            let stats = by_class.entry(class).or_default();
            stats.pairs += 1;
            if let Some(value) = matrix.get(e, ehat) {
                stats.defined += 1;
                if value.abs() >= tolerance {
                    stats.nonzero += 1;
                }
                stats.max_abs = stats.max_abs.max(value.abs());
            }
        }
    }
    let sound = by_class
        .iter()
        .filter(|(class, _)| !class.predicted_nonzero() && **class != PairClass::Diagonal)
        .all(|(_, stats)| stats.nonzero == 0);
    SparsityReport { tolerance, by_class, sound }
}
