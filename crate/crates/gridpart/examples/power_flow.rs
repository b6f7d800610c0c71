//! DC power flow: solve, check the invariants, split into islands.
//!
//! Solves the twelve-bus double ring (one generator, one load, two tie
//! lines), verifies flow conservation and the energy identity, shows that
//! branch flows do not depend on the slack choice, and finally solves the
//! two rings as separate islands after both ties are removed and the
//! imbalance is re-absorbed by a balance rule.
//!
//! ```bash
//! cargo run -p gridpart --example power_flow
//! ```

use std::collections::BTreeSet;

use gridpart::balance::{apply_rule, BalanceRule};
use gridpart::flow::{solve_dc, solve_dc_components};
use gridpart::networks::{double_ring, DOUBLE_RING_LOWER_TIE, DOUBLE_RING_UPPER_TIE};
use gridpart::{BusId, LineId};

fn main() {
    let net = double_ring();
    let solution = solve_dc(&net).expect("balanced and connected");

    println!("line flows (positive = from -> to):");
    for line in net.lines() {
        println!(
            "  line {:>2} ({} -> {}): {:+.6}",
            line.id,
            line.from,
            line.to,
            solution.flow(line.id).unwrap()
        );
    }
    println!("total |flow| = {:.6}", solution.total_absolute_flow());

    // Conservation: net outgoing flow at each bus equals its injection.
    let worst = net
        .buses()
        .iter()
        .map(|bus| {
            let outgoing: f64 = net
                .lines()
                .iter()
                .map(|l| {
                    let f = solution.flow(l.id).unwrap();
                    if l.from == bus.id {
                        f
                    } else if l.to == bus.id {
                        -f
                    } else {
                        0.0
                    }
                })
                .sum();
            (outgoing - bus.injection).abs()
        })
        .fold(0.0_f64, f64::max);
    println!("\nconservation: worst |net outflow - injection| = {worst:.2e}");

    // Energy identity: sum of P^2/B equals injected power times angles.
    let dissipation: f64 = net
        .lines()
        .iter()
        .map(|l| {
            let f = solution.flow(l.id).unwrap();
            f * f / l.susceptance
        })
        .sum();
    let supplied: f64 = net
        .buses()
        .iter()
        .map(|b| b.injection * solution.angle(b.id).unwrap())
        .sum();
    println!("energy identity: sum P^2/B = {dissipation:.9}, p.theta = {supplied:.9}");

    // Branch flows are slack-invariant (angles are not).
    let alt = gridpart::flow::ReducedLaplacian::factor_with_slack(&net, BusId(9))
        .expect("connected");
    let injections = net.injections();
    let rhs: Vec<f64> = net.buses().iter().map(|b| injections[&b.id]).collect();
    let theta = alt.solve(&rhs).expect("solvable");
    let flow_diff = net
        .lines()
        .iter()
        .map(|l| {
            let i = net.bus_index(l.from).unwrap();
            let j = net.bus_index(l.to).unwrap();
            let f = l.susceptance * (theta[i] - theta[j]);
            (f - solution.flow(l.id).unwrap()).abs()
        })
        .fold(0.0_f64, f64::max);
    println!("slack moved to bus 9: worst flow difference = {flow_diff:.2e}");

    // Remove both ties: the rings become separate islands. Each island
    // must balance on its own, so the generator's and load's power is
    // re-absorbed uniformly before solving per component.
    let alive: BTreeSet<LineId> = net
        .lines()
        .iter()
        .map(|l| l.id)
        .filter(|&id| id != DOUBLE_RING_LOWER_TIE && id != DOUBLE_RING_UPPER_TIE)
        .collect();
    let rule = BalanceRule::uniform_all(&net).expect("buses exist");
    let mut islanded = injections.clone();
    for component in net.components_over(|l| alive.contains(&l.id)) {
        let members: BTreeSet<BusId> =
            component.iter().map(|&i| net.buses()[i].id).collect();
        let imbalance: f64 = -members.iter().map(|b| injections[b]).sum::<f64>();
        let adjustment =
            apply_rule(&rule, &members, imbalance).expect("uniform rule participates");
        for (bus, delta) in adjustment {
            *islanded.get_mut(&bus).unwrap() += delta;
        }
    }
    let islands = solve_dc_components(&net, &alive, &islanded).expect("balanced per island");
    println!("\nafter removing both ties and re-balancing per island:");
    for island in &islands {
        let total: f64 = island
            .solution
            .branch_flow
            .values()
            .map(|f| f.abs())
            .sum();
        println!(
            "  island around bus {:>2} ({} buses): total |flow| = {:.6}",
            island.slack,
            island.buses.len(),
            total
        );
    }
}
