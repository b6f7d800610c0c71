//! Post-outage balance rules and the structural conditions on them.
//!
//! When an outage splits the network, each island is left with a net
//! surplus or deficit. A [`BalanceRule`] says which buses absorb it and in
//! what proportion: bus j participates with weight alpha_j > 0, the weights
//! summing to one. Within an island the weights of its participants are
//! renormalized and each participant j shifts its injection by alpha_j
//! times the island's imbalance.
//!
//! Two checks qualify a (network, rule) pair for the localization
//! guarantees:
//!
//! * [`check_island_free`]: every bridge carries nonzero flow, so no
//!   bridge outage leaves two islands that were already balanced (for
//!   which the relative flow change is undefined).
//! * [`check_participating`]: every cell of the decomposition contains a
//!   participating bus that is not a cut vertex. A cell whose only
//!   participants sit on cut vertices produces identically zero
//!   post-outage response to bridge failures, defeating any nonzero
//!   influence prediction.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{solve_dc_with, FlowError};
use crate::network::{BusId, LineId, Network};
use crate::partition::CellDecomposition;
use crate::tolerance::{DEFAULT_TOLERANCE, WEIGHT_TOLERANCE};

#[derive(Debug, Error, PartialEq)]
pub enum BalanceError {
    #[error("balance rule has no participants")]
    EmptyRule,
    #[error("network has no generator buses to build a uniform generator rule from")]
    NoGenerators,
    #[error("balance rule names unknown bus {0}")]
    UnknownBus(BusId),
    #[error("weight of bus {bus} is {value}, not positive")]
    NonPositiveWeight { bus: BusId, value: f64 },
    #[error("weights sum to {sum}, not one")]
    WeightSumNotOne { sum: f64 },
    #[error("no participating bus in the component")]
    NoParticipatingBusInComponent,
    #[error("weight file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading weight file: {0}")]
    Io(String),
}

/// Who absorbs an imbalance, and in what proportion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceRule {
    weights: BTreeMap<BusId, f64>,
}

impl BalanceRule {
    /// Validates: at least one participant, every bus known, every weight
    /// positive, weights summing to one.
    pub fn new(weights: BTreeMap<BusId, f64>, net: &Network) -> Result<Self, BalanceError> {
        if weights.is_empty() {
            return Err(BalanceError::EmptyRule);
        }
        for (&bus, &value) in &weights {
            if net.bus(bus).is_none() {
                return Err(BalanceError::UnknownBus(bus));
            }
            if value <= 0.0 || value.is_nan() {
                return Err(BalanceError::NonPositiveWeight { bus, value });
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(BalanceError::WeightSumNotOne { sum });
        }
        Ok(BalanceRule { weights })
    }

    /// Equal weights over the given participants.
    pub fn uniform<I: IntoIterator<Item = BusId>>(
        participants: I,
        net: &Network,
    ) -> Result<Self, BalanceError> {
        let set: BTreeSet<BusId> = participants.into_iter().collect();
        if set.is_empty() {
            return Err(BalanceError::EmptyRule);
        }
        let alpha = 1.0 / set.len() as f64;
        Self::new(set.into_iter().map(|b| (b, alpha)).collect(), net)
    }

    /// Equal weights over the generator buses.
    pub fn uniform_generators(net: &Network) -> Result<Self, BalanceError> {
        let generators: Vec<BusId> =
            net.buses().iter().filter(|b| b.is_generator).map(|b| b.id).collect();
        if generators.is_empty() {
            return Err(BalanceError::NoGenerators);
        }
        Self::uniform(generators, net)
    }

    /// Equal weights over every bus.
    pub fn uniform_all(net: &Network) -> Result<Self, BalanceError> {
        Self::uniform(net.buses().iter().map(|b| b.id), net)
    }

    pub fn weights(&self) -> &BTreeMap<BusId, f64> {
        &self.weights
    }

    pub fn participants(&self) -> impl Iterator<Item = BusId> + '_ {
        self.weights.keys().copied()
    }

    pub fn is_participant(&self, bus: BusId) -> bool {
        self.weights.contains_key(&bus)
    }

    /// Weight of a bus, zero for non-participants.
    pub fn weight(&self, bus: BusId) -> f64 {
        self.weights.get(&bus).copied().unwrap_or(0.0)
    }

    /// Weights of the participants inside `buses`, rescaled to sum to one.
    /// None when no participant lies in `buses`.
    pub fn renormalized_within(&self, buses: &BTreeSet<BusId>) -> Option<BTreeMap<BusId, f64>> {
        let inside: BTreeMap<BusId, f64> = self
            .weights
            .iter()
            .filter(|(b, _)| buses.contains(b))
            .map(|(&b, &w)| (b, w))
            .collect();
        let total: f64 = inside.values().sum();
        if inside.is_empty() {
            return None;
        }
        Some(inside.into_iter().map(|(b, w)| (b, w / total)).collect())
    }
}

/// Distributes an imbalance `m` over the rule's participants inside one
/// island: bus j gets the adjustment `renormalized alpha_j * m`. The
/// adjustments sum to `m` exactly (up to rounding).
pub fn apply_rule(
    rule: &BalanceRule,
    component: &BTreeSet<BusId>,
    m: f64,
) -> Result<BTreeMap<BusId, f64>, BalanceError> {
    let weights = rule
        .renormalized_within(component)
        .ok_or(BalanceError::NoParticipatingBusInComponent)?;
    Ok(weights.into_iter().map(|(bus, alpha)| (bus, alpha * m)).collect())
}

/// Parses `bus,weight` lines (comments with `#`, an optional header row)
/// and rescales the weights to sum to one.
pub fn parse_weights(text: &str, net: &Network) -> Result<BalanceRule, BalanceError> {
    let mut raw: BTreeMap<BusId, f64> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split(',').map(str::trim);
        let bus_field = parts.next().unwrap_or("");
        let weight_field = parts
            .next()
            .ok_or_else(|| BalanceError::Parse { line: lineno, msg: "expected bus,weight".into() })?;
        if parts.next().is_some() {
            return Err(BalanceError::Parse { line: lineno, msg: "expected exactly two fields".into() });
        }
        let bus: u32 = match bus_field.parse() {
            Ok(b) => b,
            // Tolerate a single header row such as "bus,weight".
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(BalanceError::Parse {
                    line: lineno,
                    msg: format!("bad bus id {bus_field:?}"),
                })
            }
        };
        let weight: f64 = weight_field.parse().map_err(|_| BalanceError::Parse {
            line: lineno,
            msg: format!("bad weight {weight_field:?}"),
        })?;
        if raw.insert(BusId(bus), weight).is_some() {
            return Err(BalanceError::Parse {
                line: lineno,
                msg: format!("duplicate bus {bus}"),
            });
        }
    }
    if raw.is_empty() {
        return Err(BalanceError::EmptyRule);
    }
    for (&bus, &value) in &raw {
        if value <= 0.0 || value.is_nan() {
            return Err(BalanceError::NonPositiveWeight { bus, value });
        }
    }
    let total: f64 = raw.values().sum();
    BalanceRule::new(raw.into_iter().map(|(b, w)| (b, w / total)).collect(), net)
}

/// [`parse_weights`] on a file.
pub fn load_weights(path: &Path, net: &Network) -> Result<BalanceRule, BalanceError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| BalanceError::Io(format!("{path:?}: {e}")))?;
    parse_weights(&text, net)
}

/// Outcome of the bridge-flow check.
#[derive(Clone, Debug, Serialize)]
pub struct IslandFreeReport {
    pub ok: bool,
    /// Bridges whose base-case flow is zero within tolerance, with that flow.
    pub zero_flow_bridges: Vec<(LineId, f64)>,
}

/// Checks that every bridge carries nonzero flow under the given
/// injections. Bridge flows are fixed by the injections alone (each bridge
/// carries exactly the net surplus behind it), so this outcome is
/// unaffected by susceptance changes.
pub fn check_island_free(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    tolerance: f64,
) -> Result<IslandFreeReport, FlowError> {
    let solution = solve_dc_with(net, injections)?;
    let zero_flow_bridges: Vec<(LineId, f64)> = crate::partition::find_bridges(net)
        .iter()
        .map(|&e| (e, solution.flow(e).expect("bridge is a known line")))
        .filter(|(_, p)| p.abs() <= tolerance)
        .collect();
    Ok(IslandFreeReport { ok: zero_flow_bridges.is_empty(), zero_flow_bridges })
}

/// Per-cell outcome of the participation check.
#[derive(Clone, Debug, Serialize)]
pub struct CellParticipation {
    pub cell: usize,
    pub region: usize,
    /// Participants in the cell that are not cut vertices.
    pub effective_participants: Vec<BusId>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParticipationReport {
    pub participating: bool,
    pub cells: Vec<CellParticipation>,
}

impl ParticipationReport {
    /// (region, cell) indices of the cells lacking an effective participant.
    pub fn failing_cells(&self) -> Vec<(usize, usize)> {
        self.cells.iter().filter(|c| !c.satisfied).map(|c| (c.region, c.cell)).collect()
    }
}

/// Checks that every cell contains a participant that is not a cut vertex.
/// A participant sitting on a cut vertex adjusts "at the door" of the cell
/// and induces no flow change inside it.
pub fn check_participating(
    net: &Network,
    cells: &CellDecomposition,
    rule: &BalanceRule,
) -> ParticipationReport {
    let cuts = cells.cut_vertices();
    let mut out = Vec::with_capacity(cells.cells().len());
    for c in 0..cells.cells().len() {
        let effective: Vec<BusId> = cells
            .cell_buses(net, c)
            .into_iter()
            .filter(|b| rule.is_participant(*b) && !cuts.contains(b))
            .collect();
        out.push(CellParticipation {
            cell: c,
            region: cells.cell_region(c),
            satisfied: !effective.is_empty(),
            effective_participants: effective,
        });
    }
    ParticipationReport { participating: out.iter().all(|c| c.satisfied), cells: out }
}

/// Convenience wrapper running both checks with the default tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct RuleAssessment {
    pub island_free: IslandFreeReport,
    pub participation: ParticipationReport,
}

impl RuleAssessment {
    pub fn ok(&self) -> bool {
        self.island_free.ok && self.participation.participating
    }
}

pub fn assess_rule(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
    cells: &CellDecomposition,
    rule: &BalanceRule,
) -> Result<RuleAssessment, FlowError> {
    Ok(RuleAssessment {
        island_free: check_island_free(net, injections, DEFAULT_TOLERANCE)?,
        participation: check_participating(net, cells, rule),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Bus, Line, Network};
    use crate::partition::{cell_decomposition, irreducible_tree_partition};
    use approx::assert_relative_eq;

    fn two_triangles_with_bridge(p: [f64; 6]) -> Network {
        Network::new(
            vec![
                Bus::new(1, p[0]),
                Bus::new(2, p[1]),
                Bus::new(3, p[2]),
                Bus::new(4, p[3]),
                Bus::new(5, p[4]),
                Bus::new(6, p[5]),
            ],
            vec![
                Line::new(1, 1, 2, 1.0),
                Line::new(2, 2, 3, 1.0),
                Line::new(3, 1, 3, 1.0),
                Line::new(4, 3, 4, 1.0),
                Line::new(5, 4, 5, 1.0),
                Line::new(6, 5, 6, 1.0),
                Line::new(7, 4, 6, 1.0),
            ],
            BusId(1),
        )
        .unwrap()
    }

    #[test]
    fn uniform_rule_weights() {
        let net = two_triangles_with_bridge([0.0; 6]);
        let rule = BalanceRule::uniform_all(&net).unwrap();
        for b in net.buses() {
            assert_relative_eq!(rule.weight(b.id), 1.0 / 6.0);
        }
        let sub: BTreeSet<BusId> = [BusId(1), BusId(2)].into();
        let renorm = rule.renormalized_within(&sub).unwrap();
        assert_relative_eq!(renorm[&BusId(1)], 0.5);
        assert!(rule.renormalized_within(&BTreeSet::new()).is_none());
    }

    #[test]
    fn rule_validation() {
        let net = two_triangles_with_bridge([0.0; 6]);
        assert_eq!(
            BalanceRule::new(BTreeMap::new(), &net).unwrap_err(),
            BalanceError::EmptyRule
        );
        assert_eq!(
            BalanceRule::new([(BusId(9), 1.0)].into(), &net).unwrap_err(),
            BalanceError::UnknownBus(BusId(9))
        );
        assert_eq!(
            BalanceRule::new([(BusId(1), 0.0), (BusId(2), 1.0)].into(), &net).unwrap_err(),
            BalanceError::NonPositiveWeight { bus: BusId(1), value: 0.0 }
        );
        match BalanceRule::new([(BusId(1), 0.6), (BusId(2), 0.6)].into(), &net) {
            Err(BalanceError::WeightSumNotOne { sum }) => assert_relative_eq!(sum, 1.2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_rule_uses_generator_buses() {
        let mut buses = vec![
            Bus::generator(1, 1.0),
            Bus::new(2, -1.0),
            Bus::new(3, 0.0),
        ];
        buses[2].is_generator = false;
        let net = Network::new(
            buses,
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0), Line::new(3, 1, 3, 1.0)],
            BusId(1),
        )
        .unwrap();
        let rule = BalanceRule::uniform_generators(&net).unwrap();
        assert_eq!(rule.participants().collect::<Vec<_>>(), vec![BusId(1)]);
        assert_relative_eq!(rule.weight(BusId(1)), 1.0);
    }

    #[test]
    fn weight_parsing_normalizes_and_rejects() {
        let net = two_triangles_with_bridge([0.0; 6]);
        let rule = parse_weights("bus,weight\n1,2\n2,2\n# comment\n4,4\n", &net).unwrap();
        assert_relative_eq!(rule.weight(BusId(1)), 0.25);
        assert_relative_eq!(rule.weight(BusId(4)), 0.5);
        assert_relative_eq!(rule.weight(BusId(3)), 0.0);

        assert!(matches!(
            parse_weights("1,1\n1,2\n", &net),
            Err(BalanceError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_weights("1,-3\n", &net),
            Err(BalanceError::NonPositiveWeight { .. })
        ));
        assert!(matches!(parse_weights("", &net), Err(BalanceError::EmptyRule)));
        assert!(matches!(
            parse_weights("7,1\n", &net),
            Err(BalanceError::UnknownBus(BusId(7)))
        ));
    }

    #[test]
    fn island_free_depends_on_bridge_flow() {
        // Net transfer across the bridge: island-free.
        let busy = two_triangles_with_bridge([0.5, -0.25, 0.0, 0.0, -0.25, 0.0]);
        let report = check_island_free(&busy, &busy.injections(), 1e-9).unwrap();
        assert!(report.ok);

        // Each triangle balanced on its own: the bridge idles.
        let idle = two_triangles_with_bridge([0.5, -0.5, 0.0, 0.25, -0.25, 0.0]);
        let report = check_island_free(&idle, &idle.injections(), 1e-9).unwrap();
        assert!(!report.ok);
        assert_eq!(report.zero_flow_bridges.len(), 1);
        assert_eq!(report.zero_flow_bridges[0].0, LineId(4));
    }

    #[test]
    fn apply_rule_conserves_the_imbalance() {
        let net = two_triangles_with_bridge([0.0; 6]);
        let rule = BalanceRule::new(
            [(BusId(1), 0.2), (BusId(2), 0.3), (BusId(5), 0.5)].into(),
            &net,
        )
        .unwrap();
        // Only buses 1 and 2 are in the component: weights renormalize to
        // 0.4 and 0.6.
        let component: BTreeSet<BusId> = [BusId(1), BusId(2), BusId(3)].into();
        let adj = apply_rule(&rule, &component, 0.7).unwrap();
        assert_eq!(adj.len(), 2);
        assert_relative_eq!(adj[&BusId(1)], 0.28, epsilon = 1e-12);
        assert_relative_eq!(adj[&BusId(2)], 0.42, epsilon = 1e-12);
        assert_relative_eq!(adj.values().sum::<f64>(), 0.7, epsilon = 1e-12);

        let empty: BTreeSet<BusId> = [BusId(6)].into();
        assert_eq!(
            apply_rule(&rule, &empty, 1.0).unwrap_err(),
            BalanceError::NoParticipatingBusInComponent
        );
    }

    #[test]
    fn generator_rule_requires_generators() {
        let net = two_triangles_with_bridge([0.0; 6]);
        assert_eq!(
            BalanceRule::uniform_generators(&net).unwrap_err(),
            BalanceError::NoGenerators
        );
    }

    #[test]
    fn participation_requires_a_non_cut_participant() {
        let net = two_triangles_with_bridge([0.5, -0.25, 0.0, 0.0, -0.25, 0.0]);
        let partition = irreducible_tree_partition(&net);
        let cells = cell_decomposition(&net, &partition);
        // Buses 3 and 4 are the bridge endpoints, hence cut vertices.
        let bad = BalanceRule::uniform([BusId(3), BusId(4)], &net).unwrap();
        let report = check_participating(&net, &cells, &bad);
        assert!(!report.participating);
        assert_eq!(report.failing_cells(), vec![(0, 0), (1, 1)]);

        let good = BalanceRule::uniform_all(&net).unwrap();
        let report = check_participating(&net, &cells, &good);
        assert!(report.participating);
        // Cut vertices never count as effective participants.
        for cell in &report.cells {
            assert!(cell
                .effective_participants
                .iter()
                .all(|b| !cells.cut_vertices().contains(b)));
        }
    }
}
