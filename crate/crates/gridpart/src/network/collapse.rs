//! Removal of dangling buses.
//!
//! A degree-1 bus hangs off the rest of the network on a single line; for
//! connectivity analysis it adds nothing, so it can be folded into its
//! neighbor. Folding moves the bus's injection (and its generator flag) to
//! the neighbor and deletes the line. The operation repeats until no degree-1
//! bus remains, so pendant chains collapse all the way down; a tree collapses
//! to a single bus.

use std::collections::BTreeSet;

use super::{Bus, BusId, Line, LineId, Network};

/// One folded bus: `bus` was absorbed into `absorbed_into` via `via_line`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapsedBus {
    pub bus: BusId,
    pub absorbed_into: BusId,
    pub via_line: LineId,
}

/// Record of a collapse run, in removal order.
#[derive(Clone, Debug, Default)]
pub struct CollapseReport {
    pub removed: Vec<CollapsedBus>,
}

impl CollapseReport {
    /// Where a bus ended up: follows absorption chains to a surviving bus.
    /// Buses that were never removed map to themselves.
    pub fn final_absorber(&self, bus: BusId) -> BusId {
        let mut current = bus;
        loop {
            match self.removed.iter().find(|c| c.bus == current) {
                Some(c) => current = c.absorbed_into,
                None => return current,
            }
        }
    }
}

/// Iteratively removes degree-1 buses, lowest bus id first. The slack moves
/// to its absorber if the slack bus itself is removed.
pub fn collapse_dangling_bridges(net: &Network) -> (Network, CollapseReport) {
    let n = net.bus_count();
    let mut alive_bus = vec![true; n];
    let mut alive_line = vec![true; net.line_count()];
    let mut degree: Vec<usize> = (0..n).map(|i| net.adjacency(i).len()).collect();
    let mut injection: Vec<f64> = net.buses().iter().map(|b| b.injection).collect();
    let mut is_gen: Vec<bool> = net.buses().iter().map(|b| b.is_generator).collect();
    let mut report = CollapseReport::default();

    let mut worklist: BTreeSet<BusId> = (0..n)
        .filter(|&i| degree[i] == 1)
        .map(|i| net.buses()[i].id)
        .collect();

    while let Some(&id) = worklist.iter().next() {
        worklist.remove(&id);
        let i = net.bus_index(id).expect("worklist holds known buses");
        if !alive_bus[i] || degree[i] != 1 {
            continue;
        }
        // A single bus may be all that is left (possible only while draining
        // a pure tree); stop rather than remove the last one.
        let (k, j) = match net.adjacency(i).iter().find(|&&(k, _)| alive_line[k]) {
            Some(&(k, j)) => (k, j),
            None => continue,
        };
        alive_bus[i] = false;
        alive_line[k] = false;
        degree[i] = 0;
        degree[j] -= 1;
        injection[j] += injection[i];
        is_gen[j] = is_gen[j] || is_gen[i];
        report.removed.push(CollapsedBus {
            bus: id,
            absorbed_into: net.buses()[j].id,
            via_line: net.lines()[k].id,
        });
        if degree[j] == 1 {
            worklist.insert(net.buses()[j].id);
        }
    }

    let buses: Vec<Bus> = (0..n)
        .filter(|&i| alive_bus[i])
        .map(|i| Bus {
            id: net.buses()[i].id,
            injection: injection[i],
            is_generator: is_gen[i],
        })
        .collect();
    let lines: Vec<Line> = net
        .lines()
        .iter()
        .enumerate()
        .filter(|&(k, _)| alive_line[k])
        .map(|(_, l)| l.clone())
        .collect();
    let slack = report.final_absorber(net.slack());
    let collapsed = Network::new(buses, lines, slack)
        .expect("collapsing dangling buses keeps the network valid")
        .with_base_mva(net.base_mva());
    (collapsed, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_collapses_to_single_bus() {
        let net = Network::new(
            vec![Bus::new(1, 1.0), Bus::new(2, 0.0), Bus::new(3, -1.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0)],
            BusId(1),
        )
        .unwrap();
        let (collapsed, report) = collapse_dangling_bridges(&net);
        assert_eq!(collapsed.bus_count(), 1);
        assert_eq!(collapsed.line_count(), 0);
        let survivor = collapsed.buses()[0].id;
        assert!(collapsed.buses()[0].injection.abs() < 1e-12);
        assert_eq!(report.final_absorber(BusId(1)), survivor);
        assert_eq!(report.final_absorber(BusId(3)), survivor);
        assert_eq!(collapsed.slack(), survivor);
    }

    #[test]
    fn pendant_chain_folds_into_cycle() {
        // 1-2-3 triangle with chain 3-4-5 hanging off it.
        let net = Network::new(
            vec![
                Bus::new(1, 0.5),
                Bus::new(2, -0.5),
                Bus::new(3, 0.0),
                Bus::new(4, 0.25),
                Bus::generator(5, -0.25),
            ],
            vec![
                Line::new(1, 1, 2, 1.0),
                Line::new(2, 2, 3, 1.0),
                Line::new(3, 1, 3, 1.0),
                Line::new(4, 3, 4, 1.0),
                Line::new(5, 4, 5, 1.0),
            ],
            BusId(1),
        )
        .unwrap();
        let (collapsed, report) = collapse_dangling_bridges(&net);
        assert_eq!(collapsed.bus_count(), 3);
        assert_eq!(collapsed.line_count(), 3);
        assert!(collapsed.buses().iter().all(|b| b.id != BusId(4) && b.id != BusId(5)));
        // 5 folds into 4, then 4 into 3; injections and the generator flag ride along.
        assert_eq!(report.final_absorber(BusId(5)), BusId(3));
        let b3 = collapsed.bus(BusId(3)).unwrap();
        assert!(b3.injection.abs() < 1e-12);
        assert!(b3.is_generator);
        // Total injection is conserved.
        assert!((collapsed.injection_sum() - net.injection_sum()).abs() < 1e-12);
    }

    #[test]
    fn mesh_without_dangles_is_untouched() {
        let net = Network::new(
            vec![Bus::new(1, 0.0), Bus::new(2, 0.0), Bus::new(3, 0.0)],
            vec![Line::new(1, 1, 2, 1.0), Line::new(2, 2, 3, 1.0), Line::new(3, 1, 3, 1.0)],
            BusId(1),
        )
        .unwrap();
        let (collapsed, report) = collapse_dangling_bridges(&net);
        assert!(report.removed.is_empty());
        assert_eq!(collapsed.bus_count(), 3);
        assert_eq!(collapsed.line_count(), 3);
    }
}
