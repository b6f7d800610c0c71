//! Network model: buses, lines, and the validated [`Network`] container.
//!
//! A network is a connected simple graph. Buses carry real power injections
//! (positive for generation, negative for load) and lines carry a positive
//! susceptance. Line orientation is the `(from, to)` order given at
//! construction; a positive branch flow runs from `from` to `to`.
//!
//! Parallel lines and self-loops are rejected at construction. Inputs that
//! naturally contain parallel circuits (Matpower cases) are merged during
//! ingest, see [`matpower`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod collapse;
pub mod matpower;
pub mod native;

pub use collapse::{collapse_dangling_bridges, CollapseReport, CollapsedBus};

/// External identifier of a bus, as it appears in input files.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

/// External identifier of a line.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A bus with its net real power injection in per-unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Net injection, generation minus load, in per-unit on the system base.
    pub injection: f64,
    /// True if generation is attached to this bus.
    pub is_generator: bool,
}

impl Bus {
    pub fn new(id: u32, injection: f64) -> Self {
        Bus { id: BusId(id), injection, is_generator: false }
    }

    pub fn generator(id: u32, injection: f64) -> Self {
        Bus { id: BusId(id), injection, is_generator: true }
    }
}

/// A transmission line with positive susceptance, oriented from `from` to `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    pub susceptance: f64,
}

impl Line {
    pub fn new(id: u32, from: u32, to: u32, susceptance: f64) -> Self {
        Line { id: LineId(id), from: BusId(from), to: BusId(to), susceptance }
    }

    /// The endpoint opposite to `bus`, if `bus` is an endpoint at all.
    pub fn other(&self, bus: BusId) -> Option<BusId> {
        if bus == self.from {
            Some(self.to)
        } else if bus == self.to {
            Some(self.from)
        } else {
            None
        }
    }
}

/// Structural validation failures.
#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("duplicate bus id {0}")]
    DuplicateBusId(BusId),
    #[error("duplicate line id {0}")]
    DuplicateLineId(LineId),
    #[error("line {line} references unknown bus {bus}")]
    UnknownBus { line: LineId, bus: BusId },
    #[error("line {0} is a self-loop")]
    SelfLoop(LineId),
    #[error("lines {first} and {second} connect the same pair of buses")]
    ParallelLine { first: LineId, second: LineId },
    #[error("line {line} has non-positive susceptance {value}")]
    NonPositiveSusceptance { line: LineId, value: f64 },
    #[error("network is not connected")]
    Disconnected,
    #[error("no slack bus")]
    NoSlackBus,
}

/// Anything that can go wrong while building or reading a network.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// A validated power network: connected, no self-loops, no parallel lines,
/// strictly positive susceptances, and a designated slack bus.
///
/// The struct is immutable after construction. Derived variants (different
/// injections, perturbed susceptances, removed lines) are built through the
/// `with_*` and `without_lines` methods, which re-validate.
#[derive(Clone, Debug)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    slack: BusId,
    base_mva: f64,
    bus_pos: HashMap<BusId, usize>,
    line_pos: HashMap<LineId, usize>,
    /// adj[bus index] = (line index, neighbor bus index)
    adj: Vec<Vec<(usize, usize)>>,
}

impl Network {
    /// Builds and validates a network. The slack must be one of the buses.
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>, slack: BusId) -> Result<Self, ValidationError> {
        let mut bus_pos = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if bus_pos.insert(b.id, i).is_some() {
                return Err(ValidationError::DuplicateBusId(b.id));
            }
        }
        if !bus_pos.contains_key(&slack) {
            return Err(ValidationError::NoSlackBus);
        }

        let mut line_pos = HashMap::with_capacity(lines.len());
        let mut seen_pairs: HashMap<(BusId, BusId), LineId> = HashMap::new();
        let mut adj = vec![Vec::new(); buses.len()];
        for (k, l) in lines.iter().enumerate() {
            if line_pos.insert(l.id, k).is_some() {
                return Err(ValidationError::DuplicateLineId(l.id));
            }
            let (fi, ti) = match (bus_pos.get(&l.from), bus_pos.get(&l.to)) {
                (Some(&f), Some(&t)) => (f, t),
                (None, _) => return Err(ValidationError::UnknownBus { line: l.id, bus: l.from }),
                (_, None) => return Err(ValidationError::UnknownBus { line: l.id, bus: l.to }),
            };
            if l.from == l.to {
                return Err(ValidationError::SelfLoop(l.id));
            }
            let key = if l.from < l.to { (l.from, l.to) } else { (l.to, l.from) };
            if let Some(&first) = seen_pairs.get(&key) {
                return Err(ValidationError::ParallelLine { first, second: l.id });
            }
            seen_pairs.insert(key, l.id);
            if l.susceptance <= 0.0 || !l.susceptance.is_finite() {
                return Err(ValidationError::NonPositiveSusceptance {
                    line: l.id,
                    value: l.susceptance,
                });
            }
            adj[fi].push((k, ti));
            adj[ti].push((k, fi));
        }

        let net = Network { buses, lines, slack, base_mva: 100.0, bus_pos, line_pos, adj };
        if !net.is_connected_over(|_| true) {
            return Err(ValidationError::Disconnected);
        }
        Ok(net)
    }

    pub fn with_base_mva(mut self, base_mva: f64) -> Self {
        self.base_mva = base_mva;
        self
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn slack(&self) -> BusId {
        self.slack
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    /// Number of buses.
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Number of lines.
    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.bus_pos.get(&id).map(|&i| &self.buses[i])
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.line_pos.get(&id).map(|&k| &self.lines[k])
    }

    /// Dense index of a bus in the `buses()` ordering.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_pos.get(&id).copied()
    }

    /// Dense index of a line in the `lines()` ordering.
    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.line_pos.get(&id).copied()
    }

    /// Incident (line index, neighbor bus index) pairs for a bus index.
    pub fn adjacency(&self, bus_index: usize) -> &[(usize, usize)] {
        &self.adj[bus_index]
    }

    pub fn degree(&self, id: BusId) -> Option<usize> {
        self.bus_pos.get(&id).map(|&i| self.adj[i].len())
    }

    /// Injections keyed by bus id.
    pub fn injections(&self) -> BTreeMap<BusId, f64> {
        self.buses.iter().map(|b| (b.id, b.injection)).collect()
    }

    /// Sum of all injections. Zero (up to tolerance) for a balanced network.
    pub fn injection_sum(&self) -> f64 {
        self.buses.iter().map(|b| b.injection).sum()
    }

    /// Copy of this network with injections replaced. Buses missing from the
    /// map keep their current injection.
    pub fn with_injections(&self, injections: &BTreeMap<BusId, f64>) -> Self {
        let mut net = self.clone();
        for b in &mut net.buses {
            if let Some(&p) = injections.get(&b.id) {
                b.injection = p;
            }
        }
        net
    }

    /// Copy of this network with line susceptances replaced. Lines missing
    /// from the map keep their current susceptance. Positivity is re-checked.
    pub fn with_susceptances(
        &self,
        susceptances: &BTreeMap<LineId, f64>,
    ) -> Result<Self, ValidationError> {
        let mut lines = self.lines.clone();
        for l in &mut lines {
            if let Some(&b) = susceptances.get(&l.id) {
                if b <= 0.0 || !b.is_finite() {
                    return Err(ValidationError::NonPositiveSusceptance { line: l.id, value: b });
                }
                l.susceptance = b;
            }
        }
        Network::new(self.buses.clone(), lines, self.slack).map(|n| n.with_base_mva(self.base_mva))
    }

    /// Copy of this network with the given lines removed. Fails with
    /// [`ValidationError::Disconnected`] if the removal splits the network.
    pub fn without_lines(&self, removed: &[LineId]) -> Result<Self, ValidationError> {
        let gone: HashSet<LineId> = removed.iter().copied().collect();
        let lines: Vec<Line> = self.lines.iter().filter(|l| !gone.contains(&l.id)).cloned().collect();
        Network::new(self.buses.clone(), lines, self.slack).map(|n| n.with_base_mva(self.base_mva))
    }

    /// Connectivity of the subgraph keeping only lines for which `keep`
    /// returns true. The check spans all buses.
    pub fn is_connected_over<F: Fn(&Line) -> bool>(&self, keep: F) -> bool {
        if self.buses.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.buses.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(k, j) in &self.adj[i] {
                if !seen[j] && keep(&self.lines[k]) {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.buses.len()
    }

    /// Connected components over a line subset, as bus-index groups sorted by
    /// their smallest member.
    pub fn components_over<F: Fn(&Line) -> bool>(&self, keep: F) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.buses.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.buses.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = groups.len();
            comp[start] = c;
            let mut group = vec![start];
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for &(k, j) in &self.adj[i] {
                    if comp[j] == usize::MAX && keep(&self.lines[k]) {
                        comp[j] = c;
                        group.push(j);
                        stack.push(j);
                    }
                }
            }
            group.sort_unstable();
            groups.push(group);
        }
        groups
    }

    /// Oriented bus-line incidence matrix.
    pub fn incidence(&self) -> IncidenceMatrix {
        let n = self.buses.len();
        let m = self.lines.len();
        let mut mat = DMatrix::zeros(n, m);
        for (k, l) in self.lines.iter().enumerate() {
            mat[(self.bus_pos[&l.from], k)] = 1.0;
            mat[(self.bus_pos[&l.to], k)] = -1.0;
        }
        IncidenceMatrix {
            matrix: mat,
            bus_order: self.buses.iter().map(|b| b.id).collect(),
            line_order: self.lines.iter().map(|l| l.id).collect(),
        }
    }

    /// Weighted graph Laplacian L = C B C^T, with C the oriented incidence
    /// matrix and B the diagonal of susceptances.
    pub fn weighted_laplacian(&self) -> DMatrix<f64> {
        let n = self.buses.len();
        let mut lap = DMatrix::zeros(n, n);
        for l in &self.lines {
            let i = self.bus_pos[&l.from];
            let j = self.bus_pos[&l.to];
            let b = l.susceptance;
            lap[(i, i)] += b;
            lap[(j, j)] += b;
            lap[(i, j)] -= b;
            lap[(j, i)] -= b;
        }
        lap
    }
}

/// Oriented bus-line incidence matrix C: the column of line e holds +1 at its
/// `from` bus and -1 at its `to` bus. Row and column order follow the
/// network's bus and line ordering.
#[derive(Clone, Debug)]
pub struct IncidenceMatrix {
    matrix: DMatrix<f64>,
    bus_order: Vec<BusId>,
    line_order: Vec<LineId>,
}

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn bus_order(&self) -> &[BusId] {
        &self.bus_order
    }

    pub fn line_order(&self) -> &[LineId] {
        &self.line_order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Network {
        Network::new(
            vec![Bus::new(1, 1.0), Bus::new(2, -1.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0), Line::new(3, 1, 3, 1.0)],
            BusId(3),
        )
        .unwrap()
    }

    #[test]
    fn triangle_is_valid() {
        let net = triangle();
        assert_eq!(net.bus_count(), 3);
        assert_eq!(net.line_count(), 3);
        assert_eq!(net.slack(), BusId(3));
        assert_eq!(net.degree(BusId(1)), Some(2));
    }

    #[test]
    fn rejects_self_loop() {
        let err = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 2, 1.0)],
            BusId(1),
        )
        .unwrap_err();
        assert_eq!(err, ValidationError::SelfLoop(LineId(2)));
    }

    #[test]
    fn rejects_parallel_lines_either_orientation() {
        let err = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 1, 2.0)],
            BusId(1),
        )
        .unwrap_err();
        assert_eq!(err, ValidationError::ParallelLine { first: LineId(1), second: LineId(2) });
    }

    #[test]
    fn rejects_non_positive_susceptance() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let err = Network::new(
                vec![Bus::new(1, 0.0), Bus::new(2, 0.0)],
                vec![Line::new(1, 1, 2, bad)],
                BusId(1),
            )
            .unwrap_err();
            match err {
                ValidationError::NonPositiveSusceptance { line, .. } => assert_eq!(line, LineId(1)),
                other => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_disconnected() {
        let err = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0), Bus::new(4, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 3, 4, 1.0)],
            BusId(1),
        )
        .unwrap_err();
        assert_eq!(err, ValidationError::Disconnected);
    }

    #[test]
    fn rejects_duplicate_ids_and_missing_slack() {
        let err = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(1, 0.0)],
            vec![],
            BusId(1),
        )
        .unwrap_err();
        assert_eq!(err, ValidationError::DuplicateBusId(BusId(1)));

        let err = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0)],
            vec![Line::new(1, 1, 2, 1.0)],
            BusId(9),
        )
        .unwrap_err();
        assert_eq!(err, ValidationError::NoSlackBus);
    }

    #[test]
    fn single_bus_network_is_valid() {
        let net = Network::new(vec![Bus::new(7, 0.0)], vec![], BusId(7)).unwrap();
        assert_eq!(net.bus_count(), 1);
        assert_eq!(net.line_count(), 0);
    }

    #[test]
    fn incidence_columns_sum_to_zero_and_match_orientation() {
        let net = triangle();
        let inc = net.incidence();
        let c = inc.matrix();
        for k in 0..3 {
            let col_sum: f64 = (0..3).map(|i| c[(i, k)]).sum();
            assert_eq!(col_sum, 0.0);
        }
        // line 2 runs 2 -> 3
        let i2 = net.bus_index(BusId(2)).unwrap();
        let i3 = net.bus_index(BusId(3)).unwrap();
        let k = net.line_index(LineId(2)).unwrap();
        assert_eq!(c[(i2, k)], 1.0);
        assert_eq!(c[(i3, k)], -1.0);
    }

    #[test]
    fn incidence_rank_is_buses_minus_one() {
        // Rank follows from connectedness; checked numerically here.
        let net = triangle();
        assert_eq!(net.incidence().matrix().rank(1e-9), 2);
    }

    #[test]
    fn laplacian_matches_incidence_product() {
        let net = triangle();
        let inc = net.incidence();
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            net.lines().iter().map(|l| l.susceptance),
        ));
        let explicit = inc.matrix() * b * inc.matrix().transpose();
        let lap = net.weighted_laplacian();
        assert!((explicit - lap).abs().max() < 1e-12);
    }

    #[test]
    fn without_lines_guards_connectivity() {
        let net = triangle();
        let smaller = net.without_lines(&[LineId(1)]).unwrap();
        assert_eq!(smaller.line_count(), 2);
        let err = net.without_lines(&[LineId(1), LineId(2)]).unwrap_err();
        assert_eq!(err, ValidationError::Disconnected);
    }

    #[test]
    fn components_over_partitions_buses() {
        let net = triangle();
        let comps = net.components_over(|l| l.id != LineId(2) && l.id != LineId(3));
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], vec![0, 1]);
        assert_eq!(comps[1], vec![2]);
    }
}
