//! Ready-made networks: small named topologies that exercise every
//! structural case, plus seeded random generators for property tests.
//!
//! All constructors use unit susceptance and zero injection unless noted;
//! derive variants with [`Network::with_injections`] and
//! [`Network::with_susceptances`].

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::network::{Bus, BusId, Line, LineId, Network};

/// Path on `n >= 2` buses: every line is a bridge, every bus its own region.
pub fn path(n: u32) -> Network {
    assert!(n >= 2);
    let buses = (1..=n).map(|i| Bus::new(i, 0.0)).collect();
    let lines = (1..n).map(|i| Line::new(i, i, i + 1, 1.0)).collect();
    Network::new(buses, lines, BusId(1)).expect("path is valid")
}

/// Cycle on `n >= 3` buses: no bridges, one region, one cell, no cut
/// vertices. Line i joins bus i to bus i+1 (wrapping).
pub fn cycle(n: u32) -> Network {
    assert!(n >= 3);
    let buses = (1..=n).map(|i| Bus::new(i, 0.0)).collect();
    let lines = (1..=n).map(|i| Line::new(i, i, i % n + 1, 1.0)).collect();
    Network::new(buses, lines, BusId(1)).expect("cycle is valid")
}

/// Complete graph on `n >= 2` buses, lines numbered in lexicographic
/// endpoint order.
pub fn complete(n: u32) -> Network {
    assert!(n >= 2);
    let buses = (1..=n).map(|i| Bus::new(i, 0.0)).collect();
    let mut lines = Vec::new();
    let mut id = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            id += 1;
            lines.push(Line::new(id, i, j, 1.0));
        }
    }
    Network::new(buses, lines, BusId(1)).expect("complete graph is valid")
}

/// Two triangles sharing the body bus 3: a single region whose cell
/// decomposition has two cells meeting at the cut vertex 3.
///
/// Lines: 1=(1,2), 2=(1,3), 3=(2,3) in the left wing; 4=(3,4), 5=(3,5),
/// 6=(4,5) in the right wing.
pub fn butterfly() -> Network {
    let buses = (1..=5).map(|i| Bus::new(i, 0.0)).collect();
    let lines = vec![
        Line::new(1, 1, 2, 1.0),
        Line::new(2, 1, 3, 1.0),
        Line::new(3, 2, 3, 1.0),
        Line::new(4, 3, 4, 1.0),
        Line::new(5, 3, 5, 1.0),
        Line::new(6, 4, 5, 1.0),
    ];
    Network::new(buses, lines, BusId(1)).expect("butterfly is valid")
}

/// The body (cut) vertex of [`butterfly`].
pub const BUTTERFLY_BODY: BusId = BusId(3);

/// Two triangles {1,2,3} and {4,5,6} joined by the bridge line 4=(3,4):
/// the smallest two-region network.
pub fn two_triangles_with_bridge() -> Network {
    let buses = (1..=6).map(|i| Bus::new(i, 0.0)).collect();
    let lines = vec![
        Line::new(1, 1, 2, 1.0),
        Line::new(2, 2, 3, 1.0),
        Line::new(3, 1, 3, 1.0),
        Line::new(4, 3, 4, 1.0),
        Line::new(5, 4, 5, 1.0),
        Line::new(6, 5, 6, 1.0),
        Line::new(7, 4, 6, 1.0),
    ];
    Network::new(buses, lines, BusId(1)).expect("two triangles are valid")
}

/// The bridge of [`two_triangles_with_bridge`].
pub const TWO_TRIANGLES_BRIDGE: LineId = LineId(4);

/// Three triangles {1,2,3}, {4,5,6}, {7,8,9} chained by bridges (3,4) and
/// (6,7): three regions in a row.
pub fn three_triangle_chain() -> Network {
    let buses = (1..=9).map(|i| Bus::new(i, 0.0)).collect();
    let mut lines = Vec::new();
    let mut id = 0;
    for t in 0..3u32 {
        let b = 3 * t;
        for (i, j) in [(1, 2), (2, 3), (1, 3)] {
            id += 1;
            lines.push(Line::new(id, b + i, b + j, 1.0));
        }
    }
    lines.push(Line::new(10, 3, 4, 1.0));
    lines.push(Line::new(11, 6, 7, 1.0));
    Network::new(buses, lines, BusId(1)).expect("triangle chain is valid")
}

/// Two hexagonal rings (buses 1-6 and 7-12) joined by two tie-lines, with
/// one unit of power flowing from the generator at bus 4 to the load at
/// bus 7.
///
/// Line ids: 1-6 around the first ring ((1,2)...(6,1)), 7-12 around the
/// second ((7,8)...(12,7)), 13 = lower tie (4,7), 14 = upper tie (3,8).
///
/// Both ties share the transfer, so every ring line carries some flow
/// (total |P| = 21/11). Switching the upper tie off leaves the lower tie
/// as a bridge carrying the whole unit and every ring line idle (total
/// |P| = 1) — the unique minimum over single-line removals.
pub fn double_ring() -> Network {
    let mut buses: Vec<Bus> = (1..=12).map(|i| Bus::new(i, 0.0)).collect();
    buses[3] = Bus::generator(4, 1.0);
    buses[6] = Bus::new(7, -1.0);
    let mut lines = Vec::new();
    for i in 1..=6u32 {
        lines.push(Line::new(i, i, i % 6 + 1, 1.0));
    }
    for i in 1..=6u32 {
        lines.push(Line::new(6 + i, 6 + i, 6 + i % 6 + 1, 1.0));
    }
    lines.push(Line::new(13, 4, 7, 1.0));
    lines.push(Line::new(14, 3, 8, 1.0));
    Network::new(buses, lines, BusId(1)).expect("double ring is valid")
}

/// The lower tie-line (4,7) of [`double_ring`].
pub const DOUBLE_RING_LOWER_TIE: LineId = LineId(13);
/// The upper tie-line (3,8) of [`double_ring`].
pub const DOUBLE_RING_UPPER_TIE: LineId = LineId(14);

/// Random connected simple graph: a uniform random spanning tree plus
/// `extra` distinct chords (as many as fit). Unit susceptances, zero
/// injections, slack at bus 1.
pub fn random_connected<R: Rng>(n: u32, extra: usize, rng: &mut R) -> Network {
    assert!(n >= 2);
    let buses: Vec<Bus> = (1..=n).map(|i| Bus::new(i, 0.0)).collect();
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    // Random recursive tree: attach each bus to a uniformly chosen earlier one.
    for i in 2..=n {
        let parent = rng.random_range(1..i);
        pairs.insert((parent, i));
    }
    let max_extra = (n as usize) * (n as usize - 1) / 2 - pairs.len();
    let mut remaining = extra.min(max_extra);
    while remaining > 0 {
        let i = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a != b && pairs.insert((a, b)) {
            remaining -= 1;
        }
    }
    let lines = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| Line::new(k as u32 + 1, a, b, 1.0))
        .collect();
    Network::new(buses, lines, BusId(1)).expect("tree plus chords is valid")
}

/// Chain of rings joined by single bridges: one region per entry of
/// `region_sizes` (each >= 3), with a few random chords inside each ring.
/// Region boundaries never merge because consecutive regions share only
/// one connecting line.
pub fn random_multi_region<R: Rng>(region_sizes: &[usize], rng: &mut R) -> Network {
    assert!(!region_sizes.is_empty());
    assert!(region_sizes.iter().all(|&s| s >= 3), "regions need >= 3 buses to be cycles");
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut next_line = 1u32;
    let mut start = 1u32;
    let mut prev_range: Option<(u32, u32)> = None;
    for &size in region_sizes {
        let end = start + size as u32 - 1;
        for i in start..=end {
            buses.push(Bus::new(i, 0.0));
        }
        // Ring over [start, end].
        for i in 0..size as u32 {
            let a = start + i;
            let b = start + (i + 1) % size as u32;
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            lines.push(Line::new(next_line, a, b, 1.0));
            next_line += 1;
        }
        // A few chords, skipping pairs already adjacent on the ring.
        let chords = rng.random_range(0..=size / 2);
        let mut placed = 0;
        let mut attempts = 0;
        while placed < chords && attempts < 20 {
            attempts += 1;
            let a = rng.random_range(start..=end);
            let b = rng.random_range(start..=end);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if a == b || lines.iter().any(|l| l.from == BusId(a) && l.to == BusId(b)) {
                continue;
            }
            lines.push(Line::new(next_line, a, b, 1.0));
            next_line += 1;
            placed += 1;
        }
        if let Some((ps, pe)) = prev_range {
            let from = rng.random_range(ps..=pe);
            let to = rng.random_range(start..=end);
            lines.push(Line::new(next_line, from, to, 1.0));
            next_line += 1;
        }
        prev_range = Some((start, end));
        start = end + 1;
    }
    Network::new(buses, lines, BusId(1)).expect("ring chain is valid")
}

/// Replaces every susceptance with a value drawn uniformly from the
/// 1/1000-grid inside [lo, hi]; such values are exactly representable in
/// the rational oracle.
pub fn with_random_susceptances<R: Rng>(net: &Network, lo: f64, hi: f64, rng: &mut R) -> Network {
    assert!(0.0 < lo && lo < hi);
    let grid_lo = (lo * 1000.0).ceil() as i64;
    let grid_hi = (hi * 1000.0).floor() as i64;
    let map: BTreeMap<LineId, f64> = net
        .lines()
        .iter()
        .map(|l| (l.id, rng.random_range(grid_lo..=grid_hi) as f64 / 1000.0))
        .collect();
    net.with_susceptances(&map).expect("positive susceptances stay valid")
}

/// Balanced random injections uniform in [-1, 1] (then mean-centered).
pub fn random_balanced_injections<R: Rng>(
    net: &Network,
    rng: &mut R,
) -> BTreeMap<BusId, f64> {
    let raw: Vec<f64> = (0..net.bus_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    net.buses().iter().zip(raw).map(|(b, x)| (b.id, x - mean)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::irreducible_tree_partition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_shapes() {
        assert_eq!(path(5).line_count(), 4);
        assert_eq!(cycle(6).line_count(), 6);
        assert_eq!(complete(5).line_count(), 10);
        assert_eq!(butterfly().line_count(), 6);
        assert_eq!(double_ring().line_count(), 14);
        assert_eq!(double_ring().injection_sum(), 0.0);
    }

    #[test]
    fn region_counts() {
        assert_eq!(irreducible_tree_partition(&path(5)).region_count(), 5);
        assert_eq!(irreducible_tree_partition(&cycle(6)).region_count(), 1);
        assert_eq!(irreducible_tree_partition(&butterfly()).region_count(), 1);
        assert_eq!(
            irreducible_tree_partition(&two_triangles_with_bridge()).region_count(),
            2
        );
        assert_eq!(irreducible_tree_partition(&three_triangle_chain()).region_count(), 3);
        assert_eq!(irreducible_tree_partition(&double_ring()).region_count(), 1);
    }

    #[test]
    fn random_generators_are_valid_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_connected(12, 6, &mut rng);
        assert_eq!(a.bus_count(), 12);
        assert!(a.line_count() >= 11);

        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let b = random_connected(12, 6, &mut rng2);
        assert_eq!(a.lines(), b.lines());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mr = random_multi_region(&[4, 5, 3], &mut rng);
        let tp = irreducible_tree_partition(&mr);
        assert_eq!(tp.region_count(), 3);
        assert_eq!(tp.bridges().len(), 2);
        assert_eq!(tp.summary().region_sizes, vec![4, 5, 3]);
    }

    #[test]
    fn susceptance_and_injection_randomizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = with_random_susceptances(&cycle(8), 0.5, 5.0, &mut rng);
        for l in net.lines() {
            assert!(l.susceptance >= 0.5 && l.susceptance <= 5.0);
            // Values sit on the 1/1000 grid.
            let scaled = l.susceptance * 1000.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
        let p = random_balanced_injections(&net, &mut rng);
        assert!(p.values().sum::<f64>().abs() < 1e-12);
    }
}
