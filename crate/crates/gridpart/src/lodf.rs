//! Line outage distribution factors.
//!
//! The factor K of a tripped line e onto a surviving line ê rescales the
//! pre-outage flow on e into the flow change on ê:
//!
//! ```text
//! change in flow on ê = K[e, ê] * (flow on e before the trip)
//! ```
//!
//! Two regimes:
//!
//! * e is **not a bridge**: the network stays connected and K follows from
//!   the Laplacian alone — it does not depend on the injections. With
//!   y = L⁺ C_e (slack-reduced Laplacian inverse applied to the incidence
//!   column of e, lifted back to bus dimension),
//!
//!   ```text
//!   K[e, ê] = B_ê (y_w - y_z) / (1 - B_e (y_i - y_j))
//!   ```
//!
//!   for e = (i, j), ê = (w, z). The denominator vanishes exactly when e
//!   is a bridge.
//!
//! * e **is a bridge**: the trip splits the network and each island must
//!   rebalance. A [`BalanceRule`] distributes every island's imbalance
//!   over its participating buses, both islands are re-solved, and
//!   K[e, ê] = (P'_ê - P_ê) / P_e. These extended factors depend on the
//!   injections and the rule, which [`LodfMatrix`] records.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::balance::BalanceRule;
use crate::flow::{solve_dc_components, solve_dc_with, FlowError, FlowSolution, ReducedLaplacian};
use crate::network::{BusId, LineId, Network};
use crate::tolerance::DEFAULT_TOLERANCE;

#[derive(Debug, Error, PartialEq)]
pub enum LodfError {
    #[error("line {0} is unknown")]
    UnknownLine(LineId),
    #[error("line {0} is a bridge; its column needs the extended (balance-rule) route")]
    BridgeColumn(LineId),
    #[error("denominator 1 - B_e a_ee = {value:e} for line {line} is numerically singular")]
    NearSingularDenominator { line: LineId, value: f64 },
    #[error("line {0} is not a bridge; use the matrix route")]
    NotABridge(LineId),
    #[error("bridge {line} carries flow {flow:e}; both sides are already balanced and no factor is defined")]
    IslandedAtBridge { line: LineId, flow: f64 },
    #[error("component {component} after tripping {line} contains no participating bus")]
    NoParticipatingBusInComponent { line: LineId, component: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Factors of one non-bridge outage onto every other line, keyed by the
/// observed line. Independent of injections and of the slack choice.
pub fn lodf_nonbridge(net: &Network, e: LineId) -> Result<BTreeMap<LineId, f64>, LodfError> {
    if net.line(e).is_none() {
        return Err(LodfError::UnknownLine(e));
    }
    if !net.is_connected_over(|l| l.id != e) {
        return Err(LodfError::BridgeColumn(e));
    }
    let factored = ReducedLaplacian::factor(net)?;
    nonbridge_column(net, &factored, e)
}

/// [`lodf_nonbridge`] against a pre-factored Laplacian; bridge status must
/// already have been ruled out.
fn nonbridge_column(
    net: &Network,
    factored: &ReducedLaplacian,
    e: LineId,
) -> Result<BTreeMap<LineId, f64>, LodfError> {
    let le = net.line(e).expect("caller verified e");
    let y = factored.solve_line_column(net, le)?;
    let i = net.bus_index(le.from).expect("known bus");
    let j = net.bus_index(le.to).expect("known bus");
    let a_ee = y[i] - y[j];
    let denominator = 1.0 - le.susceptance * a_ee;
    if denominator.abs() < DEFAULT_TOLERANCE {
        return Err(LodfError::NearSingularDenominator { line: e, value: denominator });
    }
    let mut out = BTreeMap::new();
    for l in net.lines() {
        if l.id == e {
            continue;
        }
        let w = net.bus_index(l.from).expect("known bus");
        let z = net.bus_index(l.to).expect("known bus");
        out.insert(l.id, l.susceptance * (y[w] - y[z]) / denominator);
    }
    Ok(out)
}

/// Factors of one bridge outage onto every surviving line, under explicit
/// injections and a balance rule. The tripped line is not in the output.
pub fn extended_lodf(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    rule: &BalanceRule,
    e: LineId,
) -> Result<BTreeMap<LineId, f64>, LodfError> {
    let base = solve_dc_with(net, injections)?;
    extended_lodf_with_base(net, injections, rule, e, &base)
}

fn extended_lodf_with_base(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    rule: &BalanceRule,
    e: LineId,
    base: &FlowSolution,
) -> Result<BTreeMap<LineId, f64>, LodfError> {
    if net.line(e).is_none() {
        return Err(LodfError::UnknownLine(e));
    }
    if net.is_connected_over(|l| l.id != e) {
        return Err(LodfError::NotABridge(e));
    }
    let p_e = base.flow(e).expect("e is a known line");
    if p_e.abs() <= DEFAULT_TOLERANCE {
        return Err(LodfError::IslandedAtBridge { line: e, flow: p_e });
    }

    // Shift each island's imbalance onto its participants.
    let groups = net.components_over(|l| l.id != e);
    let mut adjusted = injections.clone();
    for (c, group) in groups.iter().enumerate() {
        let members: BTreeSet<BusId> = group.iter().map(|&i| net.buses()[i].id).collect();
        let imbalance: f64 = -members.iter().map(|b| injections[b]).sum::<f64>();
        let adjustments = crate::balance::apply_rule(rule, &members, imbalance)
            .map_err(|_| LodfError::NoParticipatingBusInComponent { line: e, component: c })?;
        for (bus, delta) in adjustments {
            *adjusted.get_mut(&bus).expect("participant is a known bus") += delta;
        }
    }

    let alive: BTreeSet<LineId> =
        net.lines().iter().map(|l| l.id).filter(|&id| id != e).collect();
    let islands = solve_dc_components(net, &alive, &adjusted)?;
    let mut out = BTreeMap::new();
    for island in &islands {
        for (&ehat, &after) in &island.solution.branch_flow {
            let before = base.flow(ehat).expect("surviving line is known");
            out.insert(ehat, (after - before) / p_e);
        }
    }
    Ok(out)
}

/// How a column of the factor matrix was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Injection-independent matrix route.
    NonBridge,
    /// Balance-rule redistribution; meaningful only under the recorded
    /// injections and rule.
    BridgeExtended,
    /// Bridge column left empty (lenient build only): the extended route
    /// was undefined here, e.g. the bridge carries no flow.
    BridgeSkipped,
}

/// Injections and rule under which bridge columns were computed.
#[derive(Clone, Debug, Serialize)]
pub struct BridgeContext {
    pub injections: BTreeMap<BusId, f64>,
    pub rule_name: String,
    pub rule: BalanceRule,
}

/// All pairwise factors of a network: entry at (observed row ê, tripped
/// column e). Diagonal entries carry no value. Bridge columns carry the
/// context they were computed under.
#[derive(Clone, Debug)]
pub struct LodfMatrix {
    line_order: Vec<LineId>,
    index: BTreeMap<LineId, usize>,
    /// entries[row ê][column e]; None exactly on the diagonal.
    entries: Vec<Vec<Option<f64>>>,
    kinds: Vec<ColumnKind>,
    context: Option<BridgeContext>,
}

impl LodfMatrix {
    /// Lines in row/column order (the network's line order).
    pub fn line_order(&self) -> &[LineId] {
        &self.line_order
    }

    /// K for tripping `e` observed on `ehat`; None on the diagonal.
    pub fn get(&self, e: LineId, ehat: LineId) -> Option<f64> {
        let row = *self.index.get(&ehat)?;
        let col = *self.index.get(&e)?;
        self.entries[row][col]
    }

    pub fn kind_of(&self, e: LineId) -> Option<ColumnKind> {
        self.index.get(&e).map(|&c| self.kinds[c])
    }

    pub fn column_kinds(&self) -> BTreeMap<LineId, ColumnKind> {
        self.line_order.iter().enumerate().map(|(c, &id)| (id, self.kinds[c])).collect()
    }

    /// Context of the bridge columns; None when the matrix has none.
    pub fn context(&self) -> Option<&BridgeContext> {
        self.context.as_ref()
    }

    /// CSV with one row per observed line and one column per tripped line;
    /// diagonal cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("line");
        for id in &self.line_order {
            out.push_str(&format!(",{id}"));
        }
        out.push('\n');
        for (row, ehat) in self.line_order.iter().enumerate() {
            out.push_str(&ehat.to_string());
            for col in 0..self.line_order.len() {
                match self.entries[row][col] {
                    Some(v) => out.push_str(&format!(",{v:.12}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the full factor matrix: matrix route for non-bridge columns,
/// balance-rule route for bridge columns. Any column failure aborts.
pub fn lodf_matrix(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    rule: &BalanceRule,
) -> Result<LodfMatrix, LodfError> {
    Ok(build_matrix(net, Some((injections, rule, "custom".to_string())), false)?.0)
}

/// Same as [`lodf_matrix`] with a name recorded for the rule (shown in
/// reports and the column-kind sidecar).
pub fn lodf_matrix_named(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    rule: &BalanceRule,
    rule_name: &str,
) -> Result<LodfMatrix, LodfError> {
    Ok(build_matrix(net, Some((injections, rule, rule_name.to_string())), false)?.0)
}

/// Matrix-route columns only. Errors with [`LodfError::BridgeColumn`] on
/// the first bridge; use [`lodf_matrix`] when the network has bridges.
pub fn lodf_matrix_without_rule(net: &Network) -> Result<LodfMatrix, LodfError> {
    Ok(build_matrix(net, None, false)?.0)
}

/// Like [`lodf_matrix_named`], but a bridge column that cannot be
/// computed — no rule supplied, idle bridge, missing participants — is
/// left empty and reported instead of aborting. Non-bridge failures still
/// abort.
pub fn lodf_matrix_lenient(
    net: &Network,
    bridge_context: Option<(&BTreeMap<BusId, f64>, &BalanceRule, &str)>,
) -> Result<(LodfMatrix, BTreeMap<LineId, String>), LodfError> {
    build_matrix(net, bridge_context.map(|(p, r, name)| (p, r, name.to_string())), true)
}

fn build_matrix(
    net: &Network,
    bridge_route: Option<(&BTreeMap<BusId, f64>, &BalanceRule, String)>,
    lenient: bool,
) -> Result<(LodfMatrix, BTreeMap<LineId, String>), LodfError> {
    let m = net.line_count();
    let line_order: Vec<LineId> = net.lines().iter().map(|l| l.id).collect();
    let index: BTreeMap<LineId, usize> =
        line_order.iter().enumerate().map(|(c, &id)| (id, c)).collect();
    let bridges = crate::partition::find_bridges(net);
    let factored = ReducedLaplacian::factor(net)?;
    let base = match &bridge_route {
        Some((p, _, _)) if !bridges.is_empty() => Some(solve_dc_with(net, p)?),
        _ => None,
    };

    type Column = (ColumnKind, BTreeMap<LineId, f64>, Option<String>);
    let columns: Vec<Column> = line_order
        .par_iter()
        .map(|&e| -> Result<Column, LodfError> {
            if !bridges.contains(&e) {
                return Ok((ColumnKind::NonBridge, nonbridge_column(net, &factored, e)?, None));
            }
            match &bridge_route {
                Some((p, rule, _)) => {
                    let base = base.as_ref().expect("base flow solved for bridge columns");
                    match extended_lodf_with_base(net, p, rule, e, base) {
                        Ok(col) => Ok((ColumnKind::BridgeExtended, col, None)),
                        Err(
                            err @ (LodfError::IslandedAtBridge { .. }
                            | LodfError::NoParticipatingBusInComponent { .. }),
                        ) if lenient => {
                            Ok((ColumnKind::BridgeSkipped, BTreeMap::new(), Some(err.to_string())))
                        }
                        Err(err) => Err(err),
                    }
                }
                None if lenient => Ok((
                    ColumnKind::BridgeSkipped,
                    BTreeMap::new(),
                    Some("no balance rule supplied".to_string()),
                )),
                None => Err(LodfError::BridgeColumn(e)),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut entries = vec![vec![None; m]; m];
    let mut kinds = Vec::with_capacity(m);
    let mut skipped = BTreeMap::new();
    for (col, (kind, values, reason)) in columns.into_iter().enumerate() {
        kinds.push(kind);
        if let Some(reason) = reason {
            skipped.insert(line_order[col], reason);
        }
        for (ehat, k) in values {
            entries[index[&ehat]][col] = Some(k);
        }
    }
    let context = match bridge_route {
        Some((p, rule, rule_name))
            if kinds.iter().any(|k| *k != ColumnKind::NonBridge) =>
        {
            Some(BridgeContext { injections: p.clone(), rule_name, rule: rule.clone() })
        }
        _ => None,
    };
    Ok((LodfMatrix { line_order, index, entries, kinds, context }, skipped))
}
