//! DC power flow.
//!
//! The linearized model couples injections p, phase angles theta, and branch
//! flows P through
//!
//! ```text
//! p = C P          (conservation at every bus)
//! P = B C^T theta  (flow proportional to the angle difference)
//! ```
//!
//! with C the oriented incidence matrix and B the diagonal susceptance
//! matrix. Eliminating P gives L theta = p with L = C B C^T the weighted
//! Laplacian. L is singular (constant vectors are in its kernel), so the
//! slack bus angle is pinned to zero and the remaining system is solved by
//! dense LU. A balanced injection (sum zero) makes the solution exact and
//! independent of which bus is pinned.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DVector, Dyn, LU};
use thiserror::Error;

use crate::network::{Bus, BusId, Line, LineId, Network};
use crate::tolerance::DEFAULT_TOLERANCE;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("injections sum to {sum:e}, not zero")]
    ImbalancedInjection { sum: f64 },
    #[error("reduced Laplacian is singular")]
    SingularSystem,
    #[error("component {component} injections sum to {sum:e}, not zero")]
    ImbalancedComponent { component: usize, sum: f64 },
}

/// Angles and branch flows of a solved network.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub theta: BTreeMap<BusId, f64>,
    pub branch_flow: BTreeMap<LineId, f64>,
}

impl FlowSolution {
    pub fn flow(&self, line: LineId) -> Option<f64> {
        self.branch_flow.get(&line).copied()
    }

    pub fn angle(&self, bus: BusId) -> Option<f64> {
        self.theta.get(&bus).copied()
    }

    /// Sum of absolute branch flows, the congestion measure used when
    /// comparing switching actions.
    pub fn total_absolute_flow(&self) -> f64 {
        self.branch_flow.values().map(|p| p.abs()).sum()
    }
}

/// LU factorization of the Laplacian with the slack row and column removed.
///
/// Factor once, then solve for many right-hand sides; the distribution
/// factor matrix does exactly that. Solutions are returned in full bus
/// dimension with the slack entry pinned to zero.
pub struct ReducedLaplacian {
    lu: Option<LU<f64, Dyn, Dyn>>,
    slack_pos: usize,
    n: usize,
}

impl std::fmt::Debug for ReducedLaplacian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedLaplacian")
            .field("slack_pos", &self.slack_pos)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl ReducedLaplacian {
    pub fn factor(net: &Network) -> Result<Self, FlowError> {
        Self::factor_with_slack(net, net.slack())
    }

    /// Same factorization but pinning an arbitrary bus.
    pub fn factor_with_slack(net: &Network, slack: BusId) -> Result<Self, FlowError> {
        let n = net.bus_count();
        let slack_pos = net.bus_index(slack).expect("slack is a known bus");
        if n == 1 {
            return Ok(ReducedLaplacian { lu: None, slack_pos, n });
        }
        let lap = net.weighted_laplacian();
        let reduced = lap.remove_row(slack_pos).remove_column(slack_pos);
        let lu = LU::new(reduced);
        if !lu.is_invertible() {
            return Err(FlowError::SingularSystem);
        }
        Ok(ReducedLaplacian { lu: Some(lu), slack_pos, n })
    }

    /// Solves L x = rhs for the full-dimension rhs, returning x with the
    /// slack entry zero. The rhs slack entry is ignored; for a balanced rhs
    /// it is redundant.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FlowError> {
        assert_eq!(rhs.len(), self.n, "rhs has bus dimension");
        let lu = match &self.lu {
            None => return Ok(vec![0.0]),
            Some(lu) => lu,
        };
        let reduced_rhs = DVector::from_iterator(
            self.n - 1,
            rhs.iter().enumerate().filter(|&(i, _)| i != self.slack_pos).map(|(_, &x)| x),
        );
        let x = lu.solve(&reduced_rhs).ok_or(FlowError::SingularSystem)?;
        let mut full = Vec::with_capacity(self.n);
        let mut it = x.iter();
        for i in 0..self.n {
            if i == self.slack_pos {
                full.push(0.0);
            } else {
                full.push(*it.next().expect("reduced solution has n-1 entries"));
            }
        }
        Ok(full)
    }

    /// The reduced Laplacian inverse applied to the incidence column of a
    /// line: the building block of distribution factors.
    pub fn solve_line_column(&self, net: &Network, line: &Line) -> Result<Vec<f64>, FlowError> {
        let mut rhs = vec![0.0; self.n];
        rhs[net.bus_index(line.from).expect("known bus")] = 1.0;
        rhs[net.bus_index(line.to).expect("known bus")] = -1.0;
        self.solve(&rhs)
    }
}

/// Solves the DC power flow of a balanced network.
pub fn solve_dc(net: &Network) -> Result<FlowSolution, FlowError> {
    solve_dc_with(net, &net.injections())
}

/// Solves with explicit injections instead of the ones stored on the buses.
pub fn solve_dc_with(
    net: &Network,
    injections: &BTreeMap<BusId, f64>,
) -> Result<FlowSolution, FlowError> {
    let sum: f64 = injections.values().sum();
    if sum.abs() > DEFAULT_TOLERANCE {
        return Err(FlowError::ImbalancedInjection { sum });
    }
    let factored = ReducedLaplacian::factor(net)?;
    let rhs: Vec<f64> = net.buses().iter().map(|b| injections[&b.id]).collect();
    let theta = factored.solve(&rhs)?;
    Ok(flows_from_theta(net, &theta))
}

fn flows_from_theta(net: &Network, theta: &[f64]) -> FlowSolution {
    let branch_flow = net
        .lines()
        .iter()
        .map(|l| {
            let ti = theta[net.bus_index(l.from).unwrap()];
            let tj = theta[net.bus_index(l.to).unwrap()];
            (l.id, l.susceptance * (ti - tj))
        })
        .collect();
    let theta_map =
        net.buses().iter().enumerate().map(|(i, b)| (b.id, theta[i])).collect();
    FlowSolution { theta: theta_map, branch_flow }
}

/// One island of a split network, solved on its own.
#[derive(Clone, Debug)]
pub struct ComponentSolution {
    pub buses: BTreeSet<BusId>,
    /// Reference bus of this island: its lowest bus id.
    pub slack: BusId,
    pub solution: FlowSolution,
}

/// Solves each connected component of the subgraph over `alive` lines
/// separately. Every component must be balanced on its own; components are
/// numbered by their smallest bus id.
pub fn solve_dc_components(
    net: &Network,
    alive: &BTreeSet<LineId>,
    injections: &BTreeMap<BusId, f64>,
) -> Result<Vec<ComponentSolution>, FlowError> {
    let groups = net.components_over(|l| alive.contains(&l.id));
    let mut out = Vec::with_capacity(groups.len());
    for (c, group) in groups.iter().enumerate() {
        let buses: Vec<Bus> = group
            .iter()
            .map(|&i| {
                let b = &net.buses()[i];
                Bus { id: b.id, injection: injections[&b.id], is_generator: b.is_generator }
            })
            .collect();
        let member: BTreeSet<BusId> = buses.iter().map(|b| b.id).collect();
        let sum: f64 = buses.iter().map(|b| b.injection).sum();
        if sum.abs() > DEFAULT_TOLERANCE {
            return Err(FlowError::ImbalancedComponent { component: c, sum });
        }
        let lines: Vec<Line> = net
            .lines()
            .iter()
            .filter(|l| alive.contains(&l.id) && member.contains(&l.from))
            .cloned()
            .collect();
        let slack = *member.first().expect("components are non-empty");
        let sub = Network::new(buses, lines, slack)
            .expect("a connected component forms a valid network");
        let solution = solve_dc_with(&sub, &sub.injections())?;
        out.push(ComponentSolution { buses: member, slack, solution });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Bus, Line, Network};
    use approx::assert_relative_eq;

    fn triangle(p: [f64; 3]) -> Network {
        Network::new(
            vec![Bus::new(1, p[0]), Bus::new(2, p[1]), Bus::new(3, p[2])],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0), Line::new(3, 1, 3, 1.0)],
            BusId(3),
        )
        .unwrap()
    }

    #[test]
    fn two_bus_line() {
        let net = Network::new(
            vec![Bus::new(1, 1.0), Bus::new(2, -1.0)],
            vec![Line::new(1, 1, 2, 2.0)],
            BusId(2),
        )
        .unwrap();
        let sol = solve_dc(&net).unwrap();
        assert_relative_eq!(sol.flow(LineId(1)).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.angle(BusId(1)).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(sol.angle(BusId(2)).unwrap(), 0.0);
    }

    #[test]
    fn triangle_splits_two_to_one() {
        // Unit transfer from bus 1 to bus 2: the direct line takes 2/3, the
        // two-hop detour 1/3.
        let sol = solve_dc(&triangle([1.0, -1.0, 0.0])).unwrap();
        assert_relative_eq!(sol.flow(LineId(1)).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(sol.flow(LineId(2)).unwrap(), -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(sol.flow(LineId(3)).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn conservation_at_every_bus() {
        let net = triangle([0.4, 0.35, -0.75]);
        let sol = solve_dc(&net).unwrap();
        for bus in net.buses() {
            let mut net_out = 0.0;
            for l in net.lines() {
                if l.from == bus.id {
                    net_out += sol.flow(l.id).unwrap();
                } else if l.to == bus.id {
                    net_out -= sol.flow(l.id).unwrap();
                }
            }
            assert_relative_eq!(net_out, bus.injection, epsilon = 1e-12);
        }
    }

    #[test]
    fn flows_do_not_depend_on_slack_choice() {
        let p = [0.7, -0.2, -0.5];
        let a = solve_dc(&triangle(p)).unwrap();
        let mut net = triangle(p);
        net = Network::new(net.buses().to_vec(), net.lines().to_vec(), BusId(1)).unwrap();
        let b = solve_dc(&net).unwrap();
        for l in [1, 2, 3] {
            assert_relative_eq!(
                a.flow(LineId(l)).unwrap(),
                b.flow(LineId(l)).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn uniform_susceptance_scaling_leaves_flows_unchanged() {
        let net = triangle([1.0, -1.0, 0.0]);
        let scaled = net
            .with_susceptances(
                &net.lines().iter().map(|l| (l.id, l.susceptance * 7.5)).collect(),
            )
            .unwrap();
        let a = solve_dc(&net).unwrap();
        let b = solve_dc(&scaled).unwrap();
        for l in net.lines() {
            assert_relative_eq!(
                a.flow(l.id).unwrap(),
                b.flow(l.id).unwrap(),
                epsilon = 1e-12
            );
            // Angles shrink by the same factor.
        }
        assert_relative_eq!(
            b.angle(BusId(1)).unwrap(),
            a.angle(BusId(1)).unwrap() / 7.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_identity() {
        // sum of P^2 / B equals p' theta.
        let net = triangle([0.9, -0.3, -0.6]);
        let sol = solve_dc(&net).unwrap();
        let lhs: f64 = net
            .lines()
            .iter()
            .map(|l| sol.flow(l.id).unwrap().powi(2) / l.susceptance)
            .sum();
        let rhs: f64 = net
            .buses()
            .iter()
            .map(|b| b.injection * sol.angle(b.id).unwrap())
            .sum();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn rejects_imbalance() {
        let err = solve_dc(&triangle([1.0, -0.5, 0.0])).unwrap_err();
        match err {
            FlowError::ImbalancedInjection { sum } => assert_relative_eq!(sum, 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn single_bus_solves_trivially() {
        let net = Network::new(vec![Bus::new(4, 0.0)], vec![], BusId(4)).unwrap();
        let sol = solve_dc(&net).unwrap();
        assert_eq!(sol.angle(BusId(4)).unwrap(), 0.0);
        assert!(sol.branch_flow.is_empty());
    }

    #[test]
    fn components_solve_independently() {
        // Two triangles and the bridge between them; drop the bridge and
        // solve both sides.
        let net = Network::new(
            vec![
                Bus::new(1, 0.5),
                Bus::new(2, -0.5),
                Bus::new(3, 0.0),
                Bus::new(4, -0.25),
                Bus::new(5, 0.25),
                Bus::new(6, 0.0),
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
        .unwrap();
        let alive: BTreeSet<LineId> =
            [1, 2, 3, 5, 6, 7].map(LineId).into_iter().collect();
        let comps = solve_dc_components(&net, &alive, &net.injections()).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].slack, BusId(1));
        assert_eq!(comps[1].slack, BusId(4));
        // Injection of 0.5 at bus 1 splits two-to-one between the direct
        // line and the two-line detour.
        assert_relative_eq!(
            comps[0].solution.flow(LineId(1)).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );

        // Unbalanced islands are refused.
        let bad: BTreeMap<BusId, f64> =
            [(1, 0.5), (2, -0.4), (3, 0.0), (4, -0.25), (5, 0.25), (6, -0.1)]
                .into_iter()
                .map(|(b, p)| (BusId(b), p))
                .collect();
        let err = solve_dc_components(&net, &alive, &bad).unwrap_err();
        match err {
            FlowError::ImbalancedComponent { component: 0, .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }
}
