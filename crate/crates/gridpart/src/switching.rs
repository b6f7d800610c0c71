//! Topology switching: take lines out of service and measure what it does
//! to localization and congestion.
//!
//! Removing well-chosen lines can *create* bridges, splitting the network
//! into more regions, which in turn chops the influence graph into pieces
//! that stop at region boundaries. [`evaluate_switch`] performs one such
//! action and reports partitions, influence graphs, and normalized flow
//! changes before and after; [`enumerate_bridging_cuts`] searches for
//! small line sets whose removal increases the region count without
//! disconnecting anything.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::balance::BalanceRule;
use crate::flow::{solve_dc_with, FlowError, FlowSolution};
use crate::localize::{cross_region_edges, influence_graph};
use crate::lodf::{lodf_matrix_lenient, LodfError};
use crate::network::{BusId, LineId, Network, ValidationError};
use crate::partition::{find_bridges, irreducible_tree_partition, PartitionSummary};
use crate::tolerance::DEFAULT_TOLERANCE;

#[derive(Debug, Error, PartialEq)]
pub enum SwitchError {
    #[error("line {0} is unknown")]
    UnknownLine(LineId),
    #[error("switching off {0:?} disconnects the network")]
    WouldDisconnect(Vec<LineId>),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lodf(#[from] LodfError),
}

/// Everything one switching action changed.
#[derive(Clone, Debug, Serialize)]
pub struct SwitchEvaluation {
    pub switched_off: Vec<LineId>,
    pub partition_before: PartitionSummary,
    pub partition_after: PartitionSummary,
    pub bridges_after: Vec<LineId>,
    /// Influence-graph edge counts at the evaluation threshold.
    pub influence_density_before: usize,
    pub influence_density_after: usize,
    /// Influence edges joining different regions of the new partition.
    pub cross_region_influence_after: usize,
    pub total_abs_flow_before: f64,
    pub total_abs_flow_after: f64,
    /// Per surviving line: (P_after - P_before) / |P_before|, defined
    /// where |P_before| exceeds the zero tolerance.
    pub flow_changes: BTreeMap<LineId, f64>,
    /// Surviving lines with |P_before| below tolerance, whose normalized
    /// change is undefined.
    pub undefined_normalization: Vec<LineId>,
    /// Fractions of surviving lines whose flow magnitude went up, down, or
    /// stayed (tolerance 1e-9). The three sum to one.
    pub fraction_increased: f64,
    pub fraction_decreased: f64,
    pub fraction_unchanged: f64,
    /// Empirical CDF of |normalized change| on a 1%-of-max grid:
    /// points (x, fraction of defined changes with |change| <= x).
    pub cdf_points: Vec<(f64, f64)>,
    /// Bridge columns left out of the factor matrices (line -> reason).
    pub skipped_columns_before: BTreeMap<LineId, String>,
    pub skipped_columns_after: BTreeMap<LineId, String>,
}

/// Switches off `off`, re-solves, re-partitions, rebuilds factor matrices
/// and influence graphs, and reports the change statistics.
pub fn evaluate_switch(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    off: &[LineId],
    rule: &BalanceRule,
    threshold: f64,
) -> Result<SwitchEvaluation, SwitchError> {
    for &id in off {
        if net.line(id).is_none() {
            return Err(SwitchError::UnknownLine(id));
        }
    }
    let off_set: BTreeSet<LineId> = off.iter().copied().collect();
    let after_net = match net.without_lines(off) {
        Ok(n) => n,
        Err(ValidationError::Disconnected) => {
            return Err(SwitchError::WouldDisconnect(off_set.into_iter().collect()))
        }
        Err(e) => unreachable!("line removal can only break connectivity: {e}"),
    };

    let before = solve_dc_with(net, injections)?;
    let after = solve_dc_with(&after_net, injections)?;

    let tp_before = irreducible_tree_partition(net);
    let tp_after = irreducible_tree_partition(&after_net);

    let (matrix_before, skipped_before) =
        lodf_matrix_lenient(net, Some((injections, rule, "switch-eval")))?;
    let (matrix_after, skipped_after) =
        lodf_matrix_lenient(&after_net, Some((injections, rule, "switch-eval")))?;
    let graph_before = influence_graph(&matrix_before, threshold);
    let graph_after = influence_graph(&matrix_after, threshold);
    let cross_after = cross_region_edges(&graph_after, &after_net, &tp_after).len();

    let stats = flow_change_stats(&after_net, &before, &after);

    Ok(SwitchEvaluation {
        switched_off: off_set.into_iter().collect(),
        partition_before: tp_before.summary(),
        partition_after: tp_after.summary(),
        bridges_after: tp_after.bridges().iter().copied().collect(),
        influence_density_before: graph_before.edge_count(),
        influence_density_after: graph_after.edge_count(),
        cross_region_influence_after: cross_after,
        total_abs_flow_before: before.total_absolute_flow(),
        total_abs_flow_after: after.total_absolute_flow(),
        flow_changes: stats.changes,
        undefined_normalization: stats.undefined,
        fraction_increased: stats.increased,
        fraction_decreased: stats.decreased,
        fraction_unchanged: stats.unchanged,
        cdf_points: stats.cdf,
        skipped_columns_before: skipped_before,
        skipped_columns_after: skipped_after,
    })
}

struct FlowChangeStats {
    changes: BTreeMap<LineId, f64>,
    undefined: Vec<LineId>,
    increased: f64,
    decreased: f64,
    unchanged: f64,
    cdf: Vec<(f64, f64)>,
}

fn flow_change_stats(
    after_net: &Network,
    before: &FlowSolution,
    after: &FlowSolution,
) -> FlowChangeStats {
    let mut changes = BTreeMap::new();
    let mut undefined = Vec::new();
    let (mut up, mut down, mut same) = (0usize, 0usize, 0usize);
    for l in after_net.lines() {
        let p0 = before.flow(l.id).expect("surviving line existed before");
        let p1 = after.flow(l.id).expect("surviving line exists after");
        match (p1.abs() - p0.abs()).partial_cmp(&0.0).expect("finite flows") {
            _ if (p1.abs() - p0.abs()).abs() <= DEFAULT_TOLERANCE => same += 1,
            std::cmp::Ordering::Greater => up += 1,
            _ => down += 1,
        }
        if p0.abs() > DEFAULT_TOLERANCE {
            changes.insert(l.id, (p1 - p0) / p0.abs());
        } else {
            undefined.push(l.id);
        }
    }
    let total = after_net.line_count().max(1) as f64;

    // CDF of |change| on a grid of 1% of the maximum observed change.
    let magnitudes: Vec<f64> = changes.values().map(|c| c.abs()).collect();
    let max = magnitudes.iter().cloned().fold(0.0, f64::max);
    let mut cdf = Vec::with_capacity(101);
    if !magnitudes.is_empty() {
        for step in 0..=100 {
            let x = max * step as f64 / 100.0;
            let covered =
                magnitudes.iter().filter(|&&v| v <= x + 1e-15).count() as f64 / magnitudes.len() as f64;
            cdf.push((x, covered));
        }
    }
    FlowChangeStats {
        changes,
        undefined,
        increased: up as f64 / total,
        decreased: down as f64 / total,
        unchanged: same as f64 / total,
        cdf,
    }
}

/// A candidate switching action found by [`enumerate_bridging_cuts`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutCandidate {
    pub lines: Vec<LineId>,
    pub region_count: usize,
    /// Region sizes (bus counts) of the resulting partition, descending.
    pub region_sizes: Vec<usize>,
    /// Second-largest region size over largest: 1.0 means an even split.
    pub balance: f64,
}

/// All line sets of size <= k_max (k_max <= 3) whose removal keeps the
/// network connected and strictly increases the region count, most
/// balanced first.
pub fn enumerate_bridging_cuts(net: &Network, k_max: usize) -> Vec<CutCandidate> {
    assert!((1..=3).contains(&k_max), "the search is bounded to cuts of up to 3 lines");
    let base_regions = irreducible_tree_partition(net).region_count();
    let m = net.line_count();
    let ids: Vec<LineId> = net.lines().iter().map(|l| l.id).collect();

    let evaluate = |subset: &[usize]| -> Option<CutCandidate> {
        let off: BTreeSet<usize> = subset.iter().copied().collect();
        if !net.is_connected_over(|l| {
            !off.contains(&net.line_index(l.id).expect("known line"))
        }) {
            return None;
        }
        let removed: Vec<LineId> = subset.iter().map(|&k| ids[k]).collect();
        let sub = net.without_lines(&removed).expect("connectivity verified");
        let tp = irreducible_tree_partition(&sub);
        if tp.region_count() <= base_regions {
            return None;
        }
        let mut sizes: Vec<usize> = tp.regions().iter().map(|r| r.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let balance = if sizes.len() >= 2 && sizes[0] > 0 {
            sizes[1] as f64 / sizes[0] as f64
        } else {
            1.0
        };
        Some(CutCandidate {
            lines: removed,
            region_count: tp.region_count(),
            region_sizes: sizes,
            balance,
        })
    };

    let mut candidates: Vec<CutCandidate> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let evaluate = &evaluate;
            let mut local = Vec::new();
            if k_max >= 1 {
                local.extend(evaluate(&[a]));
            }
            if k_max >= 2 {
                for b in a + 1..m {
                    local.extend(evaluate(&[a, b]));
                    if k_max >= 3 {
                        for c in b + 1..m {
                            local.extend(evaluate(&[a, b, c]));
                        }
                    }
                }
            }
            local
        })
        .collect();

    candidates.sort_by(|x, y| {
        y.balance
            .partial_cmp(&x.balance)
            .expect("balances are finite")
            .then(x.lines.len().cmp(&y.lines.len()))
            .then(x.lines.cmp(&y.lines))
    });
    candidates
}

/// Convenience for studies: the bridges a cut would create.
pub fn bridges_created_by(net: &Network, off: &[LineId]) -> Result<BTreeSet<LineId>, SwitchError> {
    let sub = match net.without_lines(off) {
        Ok(n) => n,
        Err(ValidationError::Disconnected) => {
            return Err(SwitchError::WouldDisconnect(off.to_vec()))
        }
        Err(e) => unreachable!("line removal can only break connectivity: {e}"),
    };
    let before = find_bridges(net);
    Ok(find_bridges(&sub).difference(&before).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{
        cycle, double_ring, two_triangles_with_bridge, DOUBLE_RING_LOWER_TIE,
        DOUBLE_RING_UPPER_TIE, TWO_TRIANGLES_BRIDGE,
    };
    use approx::assert_relative_eq;

    #[test]
    fn empty_switch_is_a_fixed_point() {
        let net = double_ring();
        let rule = BalanceRule::uniform_all(&net).unwrap();
        let eval = evaluate_switch(&net, &net.injections(), &[], &rule, 0.005).unwrap();
        assert_eq!(eval.partition_before, eval.partition_after);
        assert_eq!(eval.influence_density_before, eval.influence_density_after);
        assert_relative_eq!(eval.total_abs_flow_before, eval.total_abs_flow_after);
        assert!(eval.flow_changes.values().all(|c| c.abs() < 1e-12));
        assert_relative_eq!(eval.fraction_unchanged, 1.0);
        assert_relative_eq!(eval.fraction_increased + eval.fraction_decreased, 0.0);
    }

    #[test]
    fn switching_the_upper_tie_localizes_the_double_ring() {
        let net = double_ring();
        let rule = BalanceRule::uniform_all(&net).unwrap();
        let eval =
            evaluate_switch(&net, &net.injections(), &[DOUBLE_RING_UPPER_TIE], &rule, 0.005)
                .unwrap();

        // One region becomes two, tied by the lower line as a new bridge.
        assert_eq!(eval.partition_before.region_count, 1);
        assert_eq!(eval.partition_after.region_count, 2);
        assert_eq!(eval.bridges_after, vec![DOUBLE_RING_LOWER_TIE]);

        // Congestion drops from 21/11 to exactly 1 (the whole transfer
        // rides the bridge; every ring line goes quiet).
        assert_relative_eq!(eval.total_abs_flow_before, 21.0 / 11.0, epsilon = 1e-9);
        assert_relative_eq!(eval.total_abs_flow_after, 1.0, epsilon = 1e-9);

        // No influence crosses the new region boundary.
        assert_eq!(eval.cross_region_influence_after, 0);
        assert!(eval.influence_density_after < eval.influence_density_before);

        // Every surviving line's magnitude moved down or stayed; the
        // fractions account for all 13 survivors.
        assert_relative_eq!(
            eval.fraction_increased + eval.fraction_decreased + eval.fraction_unchanged,
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(eval.fraction_increased, 1.0 / 13.0, epsilon = 1e-12);

        // The lower tie goes from 8/11 to 1: normalized change (1-8/11)/(8/11) = 3/8.
        assert_relative_eq!(
            eval.flow_changes[&DOUBLE_RING_LOWER_TIE],
            3.0 / 8.0,
            epsilon = 1e-9
        );
        assert!(eval.cdf_points.last().unwrap().1 == 1.0);
    }

    #[test]
    fn disconnection_is_refused() {
        let net = double_ring();
        let rule = BalanceRule::uniform_all(&net).unwrap();
        let err = evaluate_switch(
            &net,
            &net.injections(),
            &[DOUBLE_RING_LOWER_TIE, DOUBLE_RING_UPPER_TIE],
            &rule,
            0.005,
        )
        .unwrap_err();
        assert_eq!(
            err,
            SwitchError::WouldDisconnect(vec![DOUBLE_RING_LOWER_TIE, DOUBLE_RING_UPPER_TIE])
        );
    }

    #[test]
    fn cycle_cuts_every_single_line() {
        let candidates = enumerate_bridging_cuts(&cycle(5), 1);
        assert_eq!(candidates.len(), 5);
        for c in &candidates {
            assert_eq!(c.region_count, 5);
            assert_eq!(c.balance, 1.0);
        }
    }

    #[test]
    fn two_triangle_cuts_are_the_wing_lines() {
        let net = two_triangles_with_bridge();
        let candidates = enumerate_bridging_cuts(&net, 1);
        // All six wing lines qualify; the bridge itself would disconnect.
        assert_eq!(candidates.len(), 6);
        assert!(candidates.iter().all(|c| c.lines != vec![TWO_TRIANGLES_BRIDGE]));
        // A wing-line removal turns its triangle into two bridges: four
        // regions of sizes 3,1,1,1.
        assert_eq!(candidates[0].region_sizes, vec![3, 1, 1, 1]);
        assert_relative_eq!(candidates[0].balance, 1.0 / 3.0);
    }

    #[test]
    fn created_bridges_are_reported() {
        let net = double_ring();
        let created = bridges_created_by(&net, &[DOUBLE_RING_UPPER_TIE]).unwrap();
        assert_eq!(created, [DOUBLE_RING_LOWER_TIE].into());
    }
}
