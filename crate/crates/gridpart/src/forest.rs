//! Exact distribution factors by forest enumeration.
//!
//! Distribution factors have a closed combinatorial form. For a tripped
//! line e = (i, j) and an observed line ê = (w, z),
//!
//! ```text
//!         B_ê * [ W({i,w},{j,z}) - W({i,z},{j,w}) ]
//! K     = -----------------------------------------
//!  e,ê              T(E without e)
//! ```
//!
//! where W(N1, N2) sums, over all spanning forests made of exactly two
//! trees with N1 inside one tree and N2 inside the other, the product of
//! line susceptances in the forest, and T(A) is the same product-sum over
//! spanning trees using only lines in A. The two forest families in the
//! numerator are disjoint, and any forest separating i from j automatically
//! avoids e itself.
//!
//! Everything here runs in exact rational arithmetic over susceptances
//! rounded to nine decimal places, so results can be compared for equality.
//! Enumeration is exponential; inputs are capped at 10 buses and 20 lines.
//! Two independent routes are provided: enumeration (this formula) and
//! elimination ([`lodf_exact_column`]); [`spanning_tree_weight`] is itself
//! cross-checked against a rational Laplacian determinant.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::network::{BusId, LineId, Network};

/// Hard caps on the enumeration input size.
pub const MAX_BUSES: usize = 10;
/// See [`MAX_BUSES`].
pub const MAX_LINES: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("network too large for enumeration: {buses} buses, {lines} lines (caps: {MAX_BUSES}, {MAX_LINES})")]
    TooLarge { buses: usize, lines: usize },
    #[error("line {0} is unknown")]
    UnknownLine(LineId),
    #[error("removing line {0} disconnects the network")]
    DisconnectsGraph(LineId),
}

/// Nearest rational with denominator 10^9. All float susceptances enter the
/// exact computations through this.
pub fn rationalize(x: f64) -> BigRational {
    let denom: i64 = 1_000_000_000;
    let num = (x * denom as f64).round() as i64;
    BigRational::new(BigInt::from(num), BigInt::from(denom))
}

fn check_size(net: &Network) -> Result<(), ForestError> {
    if net.bus_count() > MAX_BUSES || net.line_count() > MAX_LINES {
        return Err(ForestError::TooLarge { buses: net.bus_count(), lines: net.line_count() });
    }
    Ok(())
}

/// Iterates bitmasks of fixed popcount in increasing order (Gosper's hack).
struct FixedPopcount {
    next: Option<u32>,
    bound: u32,
}

impl FixedPopcount {
    fn new(k: usize, m: usize) -> Self {
        assert!(m <= 31);
        let bound = 1u32 << m;
        let next = if k <= m { Some(if k == 0 { 0 } else { (1u32 << k) - 1 }) } else { None };
        FixedPopcount { next, bound }
    }
}

impl Iterator for FixedPopcount {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let current = self.next?;
        if current >= self.bound {
            self.next = None;
            return None;
        }
        self.next = if current == 0 {
            None
        } else {
            let c = current & current.wrapping_neg();
            let r = current + c;
            Some(r | (((current ^ r) >> 2) / c))
        };
        Some(current)
    }
}

/// Union-find over bus indices; returns the component label vector (labels
/// are the smallest member index) and the component count, or None if the
/// edge set contains a cycle.
fn forest_components(n: usize, edges: &[(usize, usize)]) -> Option<(Vec<usize>, usize)> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra == rb {
            return None;
        }
        // Attach the larger root under the smaller so labels end up minimal.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
        components -= 1;
    }
    let labels: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    Some((labels, components))
}

/// Sum over all spanning trees of the subgraph restricted to `allowed`
/// lines of the product of line susceptances. Zero if that subgraph has no
/// spanning tree. The enumerated value is cross-checked against the
/// weighted Laplacian determinant.
pub fn spanning_tree_weight(
    net: &Network,
    allowed: &BTreeSet<LineId>,
) -> Result<BigRational, ForestError> {
    check_size(net)?;
    for &id in allowed {
        if net.line(id).is_none() {
            return Err(ForestError::UnknownLine(id));
        }
    }
    let n = net.bus_count();
    let chi = rational_susceptances(net);
    let ends = endpoint_indices(net);
    let allowed_idx: Vec<usize> = net
        .lines()
        .iter()
        .enumerate()
        .filter(|(_, l)| allowed.contains(&l.id))
        .map(|(k, _)| k)
        .collect();

    let mut total = BigRational::zero();
    if n >= 1 {
        let mut edges = Vec::with_capacity(n - 1);
        for subset in FixedPopcount::new(n - 1, allowed_idx.len()) {
            edges.clear();
            let mut weight = BigRational::one();
            for (pos, &k) in allowed_idx.iter().enumerate() {
                if subset & (1 << pos) != 0 {
                    edges.push(ends[k]);
                    weight *= &chi[k];
                }
            }
            if let Some((_, 1)) = forest_components(n, &edges) {
                total += weight;
            }
        }
    }

    debug_assert_eq!(
        total,
        tree_weight_by_determinant(net, &allowed_idx),
        "enumeration disagrees with the Laplacian determinant"
    );
    Ok(total)
}

/// Matrix-tree value: determinant of the reduced weighted Laplacian over
/// the given line indices, in exact arithmetic.
fn tree_weight_by_determinant(net: &Network, allowed_idx: &[usize]) -> BigRational {
    let n = net.bus_count();
    if n == 1 {
        return BigRational::one();
    }
    let chi = rational_susceptances(net);
    let ends = endpoint_indices(net);
    let mut lap = vec![vec![BigRational::zero(); n]; n];
    for &k in allowed_idx {
        let (i, j) = ends[k];
        let b = &chi[k];
        lap[i][i] += b;
        lap[j][j] += b;
        let v = -b;
        lap[i][j] += &v;
        lap[j][i] += &v;
    }
    // Drop the last row and column, then eliminate.
    let mut a: Vec<Vec<BigRational>> =
        lap[..n - 1].iter().map(|row| row[..n - 1].to_vec()).collect();
    let mut det = BigRational::one();
    for col in 0..n - 1 {
        let pivot_row = match (col..n - 1).find(|&r| !a[r][col].is_zero()) {
            Some(r) => r,
            None => return BigRational::zero(),
        };
        if pivot_row != col {
            a.swap(pivot_row, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_cols = &upper[col][col..];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &pivot;
            for (dst, src) in row[col..].iter_mut().zip(pivot_cols) {
                *dst -= &factor * src;
            }
        }
    }
    det
}

/// Sum over spanning forests of exactly two trees, one containing all of
/// `group1` and the other all of `group2`, of the product of line
/// susceptances. Zero when the groups overlap.
pub fn two_forest_weight(
    net: &Network,
    group1: &BTreeSet<BusId>,
    group2: &BTreeSet<BusId>,
) -> Result<BigRational, ForestError> {
    check_size(net)?;
    if group1.intersection(group2).next().is_some() {
        return Ok(BigRational::zero());
    }
    let g1: Vec<usize> = group1.iter().map(|&b| net.bus_index(b).expect("known bus")).collect();
    let g2: Vec<usize> = group2.iter().map(|&b| net.bus_index(b).expect("known bus")).collect();
    let mut total = BigRational::zero();
    for_each_two_forest(net, |labels, weight| {
        let l1 = labels[g1[0]];
        let l2 = labels[g2[0]];
        if l1 != l2
            && g1.iter().all(|&x| labels[x] == l1)
            && g2.iter().all(|&x| labels[x] == l2)
        {
            total += weight;
        }
    });
    Ok(total)
}

/// Exact distribution factor of tripping `e` observed on `ehat`, by forest
/// enumeration.
pub fn lodf_forest(net: &Network, e: LineId, ehat: LineId) -> Result<BigRational, ForestError> {
    check_size(net)?;
    let le = net.line(e).ok_or(ForestError::UnknownLine(e))?.clone();
    let lh = net.line(ehat).ok_or(ForestError::UnknownLine(ehat))?.clone();
    assert_ne!(e, ehat, "the tripped line has no factor onto itself");

    let allowed: BTreeSet<LineId> =
        net.lines().iter().map(|l| l.id).filter(|&id| id != e).collect();
    let denominator = spanning_tree_weight(net, &allowed)?;
    if denominator.is_zero() {
        return Err(ForestError::DisconnectsGraph(e));
    }

    let (i, j) = (le.from, le.to);
    let (w, z) = (lh.from, lh.to);
    let aligned = two_forest_weight(net, &[i, w].into(), &[j, z].into())?;
    let crossed = two_forest_weight(net, &[i, z].into(), &[j, w].into())?;
    Ok(rationalize(lh.susceptance) * (aligned - crossed) / denominator)
}

/// Exact factors for a whole column (one tripped line, every observed
/// line), by rational Gaussian elimination on the reduced Laplacian. An
/// independent route used to validate [`lodf_forest`].
pub fn lodf_exact_column(
    net: &Network,
    e: LineId,
) -> Result<BTreeMap<LineId, BigRational>, ForestError> {
    check_size(net)?;
    let le = net.line(e).ok_or(ForestError::UnknownLine(e))?.clone();
    let n = net.bus_count();
    let chi = rational_susceptances(net);
    let ends = endpoint_indices(net);

    // Reduced Laplacian (slack row and column dropped) and the incidence
    // column of e as right-hand side.
    let slack = net.bus_index(net.slack()).expect("slack is known");
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let pos_of: BTreeMap<usize, usize> =
        keep.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let dim = n - 1;
    let mut a = vec![vec![BigRational::zero(); dim]; dim];
    for k in 0..net.line_count() {
        let (i, j) = ends[k];
        let b = &chi[k];
        if let Some(&pi) = pos_of.get(&i) {
            a[pi][pi] += b;
        }
        if let Some(&pj) = pos_of.get(&j) {
            a[pj][pj] += b;
        }
        if let (Some(&pi), Some(&pj)) = (pos_of.get(&i), pos_of.get(&j)) {
            let v = -b;
            a[pi][pj] += &v;
            a[pj][pi] += &v;
        }
    }
    let ke = net.line_index(e).expect("line e is known");
    let mut rhs = vec![BigRational::zero(); dim];
    if let Some(&p) = pos_of.get(&ends[ke].0) {
        rhs[p] += BigRational::one();
    }
    if let Some(&p) = pos_of.get(&ends[ke].1) {
        rhs[p] -= BigRational::one();
    }

    // Forward elimination with back substitution; the reduced Laplacian of
    // a connected network is nonsingular over the rationals.
    for col in 0..dim {
        let pivot_row = (col..dim)
            .find(|&r| !a[r][col].is_zero())
            .expect("reduced Laplacian is nonsingular");
        a.swap(pivot_row, col);
        rhs.swap(pivot_row, col);
        let pivot = a[col][col].clone();
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_cols = &upper[col][col..];
        let (rhs_upper, rhs_lower) = rhs.split_at_mut(col + 1);
        let rhs_pivot = &rhs_upper[col];
        for (row, r) in lower.iter_mut().zip(rhs_lower.iter_mut()) {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &pivot;
            for (dst, src) in row[col..].iter_mut().zip(pivot_cols) {
                *dst -= &factor * src;
            }
            *r -= &factor * rhs_pivot;
        }
    }
    let mut x = vec![BigRational::zero(); dim];
    for row in (0..dim).rev() {
        let mut acc = rhs[row].clone();
        for c in row + 1..dim {
            let sub = &a[row][c] * &x[c];
            acc -= sub;
        }
        x[row] = acc / &a[row][row];
    }

    // Lift back to bus dimension with zero at the slack.
    let mut y = vec![BigRational::zero(); n];
    for (p, &i) in keep.iter().enumerate() {
        y[i] = x[p].clone();
    }

    let (i, j) = ends[ke];
    let a_ee = &y[i] - &y[j];
    let denom_factor = BigRational::one() - rationalize(le.susceptance) * a_ee;
    if denom_factor.is_zero() {
        return Err(ForestError::DisconnectsGraph(e));
    }
    let mut out = BTreeMap::new();
    for (k, l) in net.lines().iter().enumerate() {
        if l.id == e {
            continue;
        }
        let (w, z) = ends[k];
        let numer = rationalize(l.susceptance) * (&y[w] - &y[z]);
        out.insert(l.id, numer / &denom_factor);
    }
    Ok(out)
}

/// Precomputed spanning trees and two-tree forests of one network, for
/// evaluating many factor pairs without re-enumerating.
#[derive(Debug)]
pub struct ForestEnsemble {
    chi: Vec<BigRational>,
    ends: Vec<(usize, usize)>,
    /// (line-index bitmask, susceptance product) per spanning tree.
    trees: Vec<(u32, BigRational)>,
    /// (component label per bus, susceptance product) per two-tree forest.
    forests: Vec<(Vec<usize>, BigRational)>,
}

impl ForestEnsemble {
    pub fn new(net: &Network) -> Result<Self, ForestError> {
        check_size(net)?;
        let n = net.bus_count();
        let m = net.line_count();
        let chi = rational_susceptances(net);
        let ends = endpoint_indices(net);

        let mut trees = Vec::new();
        if n >= 1 {
            let mut edges = Vec::with_capacity(n - 1);
            for subset in FixedPopcount::new(n - 1, m) {
                edges.clear();
                let mut weight = BigRational::one();
                for k in 0..m {
                    if subset & (1 << k) != 0 {
                        edges.push(ends[k]);
                        weight *= &chi[k];
                    }
                }
                if let Some((_, 1)) = forest_components(n, &edges) {
                    trees.push((subset, weight));
                }
            }
        }

        let mut forests = Vec::new();
        for_each_two_forest(net, |labels, weight| {
            forests.push((labels.to_vec(), weight.clone()));
        });

        Ok(ForestEnsemble { chi, ends, trees, forests })
    }

    /// Same value as [`lodf_forest`], amortized over the precomputation.
    pub fn lodf(&self, net: &Network, e: LineId, ehat: LineId) -> Result<BigRational, ForestError> {
        let ke = net.line_index(e).ok_or(ForestError::UnknownLine(e))?;
        let kh = net.line_index(ehat).ok_or(ForestError::UnknownLine(ehat))?;
        assert_ne!(e, ehat, "the tripped line has no factor onto itself");
        let mut denominator = BigRational::zero();
        for (mask, weight) in &self.trees {
            if mask & (1 << ke) == 0 {
                denominator += weight;
            }
        }
        if denominator.is_zero() {
            return Err(ForestError::DisconnectsGraph(e));
        }
        let (i, j) = self.ends[ke];
        let (w, z) = self.ends[kh];
        let mut numerator = BigRational::zero();
        for (labels, weight) in &self.forests {
            if labels[i] == labels[j] {
                continue;
            }
            if labels[w] == labels[i] && labels[z] == labels[j] {
                numerator += weight;
            } else if labels[z] == labels[i] && labels[w] == labels[j] {
                numerator -= weight;
            }
        }
        Ok(&self.chi[kh] * numerator / denominator)
    }
}

fn rational_susceptances(net: &Network) -> Vec<BigRational> {
    net.lines().iter().map(|l| rationalize(l.susceptance)).collect()
}

fn endpoint_indices(net: &Network) -> Vec<(usize, usize)> {
    net.lines()
        .iter()
        .map(|l| {
            (
                net.bus_index(l.from).expect("known bus"),
                net.bus_index(l.to).expect("known bus"),
            )
        })
        .collect()
}

/// Calls `f` with the component labels and weight of every spanning forest
/// made of exactly two trees.
fn for_each_two_forest<F: FnMut(&[usize], &BigRational)>(net: &Network, mut f: F) {
    let n = net.bus_count();
    let m = net.line_count();
    if n < 2 {
        return;
    }
    let chi = rational_susceptances(net);
    let ends = endpoint_indices(net);
    let mut edges = Vec::with_capacity(n - 2);
    for subset in FixedPopcount::new(n - 2, m) {
        edges.clear();
        let mut weight = BigRational::one();
        for k in 0..m {
            if subset & (1 << k) != 0 {
                edges.push(ends[k]);
                weight *= &chi[k];
            }
        }
        if let Some((labels, 2)) = forest_components(n, &edges) {
            f(&labels, &weight);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Bus, Line, Network};

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn triangle() -> Network {
        Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0), Line::new(3, 1, 3, 1.0)],
            BusId(3),
        )
        .unwrap()
    }

    #[test]
    fn unit_triangle_has_three_spanning_trees() {
        let net = triangle();
        let all: BTreeSet<LineId> = net.lines().iter().map(|l| l.id).collect();
        assert_eq!(spanning_tree_weight(&net, &all).unwrap(), ratio(3, 1));
    }

    #[test]
    fn weighted_triangle_sums_products() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 2.0), Line::new(2, 2, 3, 3.0), Line::new(3, 1, 3, 5.0)],
            BusId(1),
        )
        .unwrap();
        let all: BTreeSet<LineId> = net.lines().iter().map(|l| l.id).collect();
        // 2*3 + 2*5 + 3*5
        assert_eq!(spanning_tree_weight(&net, &all).unwrap(), ratio(31, 1));
    }

    #[test]
    fn restricted_edge_set_and_disconnection() {
        let net = triangle();
        let two: BTreeSet<LineId> = [LineId(2), LineId(3)].into();
        assert_eq!(spanning_tree_weight(&net, &two).unwrap(), ratio(1, 1));
        let one: BTreeSet<LineId> = [LineId(2)].into();
        assert_eq!(spanning_tree_weight(&net, &one).unwrap(), ratio(0, 1));
    }

    #[test]
    fn path_two_forest_weights() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 2.0), Line::new(2, 2, 3, 3.0)],
            BusId(1),
        )
        .unwrap();
        // Separating the two path ends: drop either line.
        assert_eq!(
            two_forest_weight(&net, &[BusId(1)].into(), &[BusId(3)].into()).unwrap(),
            ratio(5, 1)
        );
        // Separating {1} from {2,3}: only dropping line 1 works.
        assert_eq!(
            two_forest_weight(&net, &[BusId(1)].into(), &[BusId(2), BusId(3)].into()).unwrap(),
            ratio(3, 1)
        );
        // Overlapping groups have no separating forest.
        assert_eq!(
            two_forest_weight(&net, &[BusId(1), BusId(2)].into(), &[BusId(2)].into()).unwrap(),
            ratio(0, 1)
        );
    }

    #[test]
    fn two_bus_empty_forest() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0)],
            vec![Line::new(1, 1, 2, 4.0)],
            BusId(1),
        )
        .unwrap();
        // The empty edge set separates 1 from 2 with weight one (empty product).
        assert_eq!(
            two_forest_weight(&net, &[BusId(1)].into(), &[BusId(2)].into()).unwrap(),
            ratio(1, 1)
        );
    }

    #[test]
    fn triangle_factors_are_plus_minus_one() {
        let net = triangle();
        assert_eq!(lodf_forest(&net, LineId(1), LineId(3)).unwrap(), ratio(1, 1));
        assert_eq!(lodf_forest(&net, LineId(1), LineId(2)).unwrap(), ratio(-1, 1));
    }

    #[test]
    fn bridge_has_no_factor() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0)],
            BusId(1),
        )
        .unwrap();
        assert_eq!(
            lodf_forest(&net, LineId(1), LineId(2)).unwrap_err(),
            ForestError::DisconnectsGraph(LineId(1))
        );
    }

    #[test]
    fn enumeration_matches_elimination_on_weighted_square_with_chord() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0), Bus::new(4, 0.0)],
            vec![
                Line::new(1, 1, 2, 0.5),
                Line::new(2, 2, 3, 1.5),
                Line::new(3, 3, 4, 2.5),
                Line::new(4, 4, 1, 3.5),
                Line::new(5, 1, 3, 4.5),
            ],
            BusId(2),
        )
        .unwrap();
        let ensemble = ForestEnsemble::new(&net).unwrap();
        for e in net.lines() {
            let column = lodf_exact_column(&net, e.id).unwrap();
            for ehat in net.lines() {
                if e.id == ehat.id {
                    continue;
                }
                let by_forest = lodf_forest(&net, e.id, ehat.id).unwrap();
                assert_eq!(by_forest, column[&ehat.id], "pair ({}, {})", e.id, ehat.id);
                assert_eq!(
                    by_forest,
                    ensemble.lodf(&net, e.id, ehat.id).unwrap(),
                    "ensemble pair ({}, {})",
                    e.id,
                    ehat.id
                );
            }
        }
    }

    #[test]
    fn size_guard() {
        let buses: Vec<Bus> = (1..=11).map(|i| Bus::new(i, 0.0)).collect();
        let lines: Vec<Line> = (1..=10).map(|i| Line::new(i, i, i + 1, 1.0)).collect();
        let net = Network::new(buses, lines, BusId(1)).unwrap();
        assert_eq!(
            spanning_tree_weight(&net, &BTreeSet::new()).unwrap_err(),
            ForestError::TooLarge { buses: 11, lines: 10 }
        );
    }

    #[test]
    fn rationalize_rounds_to_ninth_decimal() {
        assert_eq!(rationalize(0.5), ratio(1, 2));
        assert_eq!(rationalize(1.0 / 3.0), ratio(333333333, 1000000000));
    }
}
