//! Reader for Matpower `.m` case files.
//!
//! Only the data needed for DC analysis is taken: bus ids, bus types, loads,
//! generator outputs, branch endpoints, branch reactances, and branch status.
//! Branch susceptance is `1/x`; out-of-service branches are dropped; parallel
//! circuits between the same pair of buses are merged by summing their
//! susceptances. Net injections are `(Pg - Pd) / baseMVA` and any system-wide
//! imbalance is absorbed at the slack bus, as in a conventional DC dispatch.
//!
//! Everything the reader altered on the way in is listed in
//! [`MatpowerReport`].

use std::collections::BTreeMap;
use std::path::Path;

use super::{Bus, BusId, Line, LineId, Network, NetworkError, ValidationError};

/// A group of parallel branch rows merged into one line.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedGroup {
    pub line: LineId,
    pub from: BusId,
    pub to: BusId,
    /// 1-based row numbers in the branch table.
    pub rows: Vec<usize>,
    /// Combined susceptance of the group.
    pub susceptance: f64,
}

/// What the Matpower reader changed or dropped while building the network.
#[derive(Clone, Debug, Default)]
pub struct MatpowerReport {
    /// 1-based branch rows with status 0.
    pub dropped_out_of_service: Vec<usize>,
    /// Parallel circuits merged into single lines.
    pub merged_parallel: Vec<MergedGroup>,
    /// Per-unit injection added at the slack bus to balance the case.
    pub slack_mismatch: f64,
    /// Line id assigned to each kept branch row (1-based row, line id).
    pub row_lines: Vec<(usize, LineId)>,
}

/// A parsed Matpower case: the validated network plus the ingest report.
#[derive(Clone, Debug)]
pub struct MatpowerCase {
    pub network: Network,
    pub report: MatpowerReport,
}

pub fn load_matpower<P: AsRef<Path>>(path: P) -> Result<MatpowerCase, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    parse_matpower(&text)
}

/// Raw numeric tables pulled out of the `.m` text.
#[derive(Default)]
struct RawCase {
    base_mva: Option<f64>,
    bus: Vec<Vec<f64>>,
    gen: Vec<Vec<f64>>,
    branch: Vec<Vec<f64>>,
}

pub fn parse_matpower(text: &str) -> Result<MatpowerCase, NetworkError> {
    let raw = scan_tables(text)?;
    build_network(&raw)
}

fn parse_err(line: usize, msg: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, msg: msg.into() }
}

fn scan_tables(text: &str) -> Result<RawCase, NetworkError> {
    let mut raw = RawCase::default();
    // Name of the matrix currently being filled, if any.
    let mut open: Option<String> = None;

    for (idx, full_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(full_line).trim();
        if line.is_empty() {
            continue;
        }

        if let Some(name) = &open {
            let closes = line.contains("];");
            let data = line.trim_end_matches("];").trim_end_matches(';').trim();
            if !data.is_empty() {
                let row = parse_row(data)
                    .map_err(|tok| parse_err(lineno, format!("bad number {tok:?} in mpc.{name}")))?;
                match name.as_str() {
                    "bus" => raw.bus.push(row),
                    "gen" => raw.gen.push(row),
                    "branch" => raw.branch.push(row),
                    _ => {}
                }
            }
            if closes {
                open = None;
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("mpc.baseMVA") {
            let value = rest.trim_start_matches([' ', '=']).trim_end_matches(';').trim();
            raw.base_mva =
                Some(value.parse().map_err(|_| parse_err(lineno, "bad baseMVA value"))?);
            continue;
        }

        // Matrix assignments look like "mpc.bus = [" with rows following.
        // "gencost" must not match the "gen" prefix, so compare exact names.
        // Non-target matrices (gencost, dcline, ...) are consumed and
        // discarded by the same row loop.
        if let Some(rest) = line.strip_prefix("mpc.") {
            if let Some(eq) = rest.find('=') {
                let name = rest[..eq].trim().to_string();
                if rest[eq + 1..].trim_start().starts_with('[') && !rest.contains("];") {
                    open = Some(name);
                }
            }
        }
    }

    if raw.bus.is_empty() {
        return Err(parse_err(0, "no mpc.bus table found"));
    }
    if raw.branch.is_empty() {
        return Err(parse_err(0, "no mpc.branch table found"));
    }
    Ok(raw)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_row(data: &str) -> Result<Vec<f64>, String> {
    data.split([' ', '\t', ','])
        .filter(|tok| !tok.is_empty())
        .map(|tok| tok.parse::<f64>().map_err(|_| tok.to_string()))
        .collect()
}

fn col(row: &[f64], idx: usize, what: &str, table: &str, rowno: usize) -> Result<f64, NetworkError> {
    row.get(idx).copied().ok_or_else(|| {
        parse_err(0, format!("mpc.{table} row {rowno} is missing column {idx} ({what})"))
    })
}

fn as_bus_id(value: f64, table: &str, rowno: usize) -> Result<BusId, NetworkError> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(parse_err(0, format!("mpc.{table} row {rowno}: bad bus id {value}")));
    }
    Ok(BusId(value as u32))
}

fn build_network(raw: &RawCase) -> Result<MatpowerCase, NetworkError> {
    let base_mva = raw.base_mva.unwrap_or(100.0);

    // Buses: id, type, load.
    let mut loads: BTreeMap<BusId, f64> = BTreeMap::new();
    let mut slack: Option<BusId> = None;
    for (i, row) in raw.bus.iter().enumerate() {
        let rowno = i + 1;
        let id = as_bus_id(col(row, 0, "BUS_I", "bus", rowno)?, "bus", rowno)?;
        let bus_type = col(row, 1, "BUS_TYPE", "bus", rowno)?;
        let pd = col(row, 2, "PD", "bus", rowno)?;
        if loads.insert(id, pd).is_some() {
            return Err(ValidationError::DuplicateBusId(id).into());
        }
        if bus_type == 3.0 {
            // Lowest-id type-3 bus wins if the case lists several.
            slack = Some(match slack {
                Some(s) if s <= id => s,
                _ => id,
            });
        }
    }
    let slack = slack.ok_or(ValidationError::NoSlackBus)?;

    // Generators: accumulate output per bus.
    let mut pg: BTreeMap<BusId, f64> = BTreeMap::new();
    for (i, row) in raw.gen.iter().enumerate() {
        let rowno = i + 1;
        let id = as_bus_id(col(row, 0, "GEN_BUS", "gen", rowno)?, "gen", rowno)?;
        if !loads.contains_key(&id) {
            return Err(parse_err(0, format!("mpc.gen row {rowno}: unknown bus {id}")));
        }
        *pg.entry(id).or_insert(0.0) += col(row, 1, "PG", "gen", rowno)?;
    }

    // Branches: drop status 0, convert x to susceptance, merge parallels.
    struct BranchGroup {
        from: BusId,
        to: BusId,
        rows: Vec<usize>,
        susceptance: f64,
    }
    let mut report = MatpowerReport::default();
    let mut groups: BTreeMap<(BusId, BusId), BranchGroup> = BTreeMap::new();
    let mut group_order: Vec<(BusId, BusId)> = Vec::new();
    for (i, row) in raw.branch.iter().enumerate() {
        let rowno = i + 1;
        let from = as_bus_id(col(row, 0, "F_BUS", "branch", rowno)?, "branch", rowno)?;
        let to = as_bus_id(col(row, 1, "T_BUS", "branch", rowno)?, "branch", rowno)?;
        let x = col(row, 3, "BR_X", "branch", rowno)?;
        let status = col(row, 10, "BR_STATUS", "branch", rowno).unwrap_or(1.0);
        if status == 0.0 {
            report.dropped_out_of_service.push(rowno);
            continue;
        }
        if x <= 0.0 {
            return Err(ValidationError::NonPositiveSusceptance {
                line: LineId(rowno as u32),
                value: if x == 0.0 { f64::INFINITY } else { 1.0 / x },
            }
            .into());
        }
        let key = if from < to { (from, to) } else { (to, from) };
        let entry = groups.entry(key).or_insert_with(|| {
            group_order.push(key);
            BranchGroup { from, to, rows: Vec::new(), susceptance: 0.0 }
        });
        entry.rows.push(rowno);
        entry.susceptance += 1.0 / x;
    }

    let mut lines = Vec::with_capacity(group_order.len());
    for (next_id, key) in group_order.iter().enumerate() {
        let BranchGroup { from, to, rows, susceptance: b } =
            groups.remove(key).expect("group recorded once");
        let id = LineId(next_id as u32 + 1);
        for &row in &rows {
            report.row_lines.push((row, id));
        }
        if rows.len() > 1 {
            report.merged_parallel.push(MergedGroup { line: id, from, to, rows, susceptance: b });
        }
        lines.push(Line { id, from, to, susceptance: b });
    }
    report.row_lines.sort_unstable();

    // Injections in per-unit, slack absorbing the case imbalance.
    let mut buses: Vec<Bus> = loads
        .iter()
        .map(|(&id, &pd)| Bus {
            id,
            injection: (pg.get(&id).copied().unwrap_or(0.0) - pd) / base_mva,
            is_generator: pg.contains_key(&id),
        })
        .collect();
    let mismatch: f64 = buses.iter().map(|b| b.injection).sum();
    report.slack_mismatch = -mismatch;
    for b in &mut buses {
        if b.id == slack {
            b.injection -= mismatch;
        }
    }

    let network = Network::new(buses, lines, slack)?.with_base_mva(base_mva);
    Ok(MatpowerCase { network, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL_CASE: &str = r#"
function mpc = small_case
% a 4-bus example with one parallel pair and one dead branch
mpc.version = '2';
mpc.baseMVA = 100;

mpc.bus = [
    1  3  0    0  0  0  1  1  0  345  1  1.1  0.9;
    2  1  90   0  0  0  1  1  0  345  1  1.1  0.9;
    3  2  0    0  0  0  1  1  0  345  1  1.1  0.9;
    4  1  60   0  0  0  1  1  0  345  1  1.1  0.9;
];

mpc.gencost = [
    2  0  0  3  0.11  5  150;
    2  0  0  3  0.085 1.2 600;
];

mpc.gen = [
    1  100  0  300  -300  1  100  1  250  10;
    3  50   0  300  -300  1  100  1  270  10;
];

mpc.branch = [
    1  2  0.0  0.25  0.0  250  250  250  0  0  1  -360  360;
    1  3  0.0  0.50  0.0  250  250  250  0  0  1  -360  360;
    2  3  0.0  0.25  0.0  250  250  250  0  0  1  -360  360;
    3  2  0.0  0.25  0.0  250  250  250  0  0  1  -360  360;
    2  4  0.0  0.20  0.0  250  250  250  0  0  1  -360  360;
    3  4  0.0  0.10  0.0  250  250  250  0  0  0  -360  360;
];
"#;

    #[test]
    fn parses_small_case() {
        let case = parse_matpower(SMALL_CASE).unwrap();
        let net = &case.network;
        assert_eq!(net.bus_count(), 4);
        // 6 branch rows, one dead, one parallel pair merged: 4 lines.
        assert_eq!(net.line_count(), 4);
        assert_eq!(net.slack(), BusId(1));
        assert_eq!(net.base_mva(), 100.0);

        assert_eq!(case.report.dropped_out_of_service, vec![6]);
        assert_eq!(case.report.merged_parallel.len(), 1);
        let merged = &case.report.merged_parallel[0];
        assert_eq!(merged.rows, vec![3, 4]);
        assert_eq!(merged.susceptance, 8.0); // 1/0.25 + 1/0.25

        // Susceptance is 1/x on the surviving single rows.
        let l12 = net
            .lines()
            .iter()
            .find(|l| (l.from, l.to) == (BusId(1), BusId(2)))
            .unwrap();
        assert_eq!(l12.susceptance, 4.0);
    }

    #[test]
    fn injections_balance_at_slack() {
        let case = parse_matpower(SMALL_CASE).unwrap();
        let net = &case.network;
        // Raw imbalance: (100 + 50 - 90 - 60)/100 = 0, so nothing to absorb.
        assert!(case.report.slack_mismatch.abs() < 1e-12);
        assert!(net.injection_sum().abs() < 1e-12);
        assert_eq!(net.bus(BusId(2)).unwrap().injection, -0.9);
        assert!(net.bus(BusId(3)).unwrap().is_generator);
        assert!(!net.bus(BusId(2)).unwrap().is_generator);
    }

    #[test]
    fn slack_absorbs_mismatch() {
        let text = SMALL_CASE.replace("1  100  0  300", "1  130  0  300");
        let case = parse_matpower(&text).unwrap();
        assert!((case.report.slack_mismatch + 0.3).abs() < 1e-12);
        assert!(case.network.injection_sum().abs() < 1e-12);
        assert!((case.network.bus(BusId(1)).unwrap().injection - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_reactance() {
        let text = SMALL_CASE.replace("1  2  0.0  0.25", "1  2  0.0  0.00");
        let err = parse_matpower(&text).unwrap_err();
        match err {
            NetworkError::Validation(ValidationError::NonPositiveSusceptance { .. }) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_tables_are_reported() {
        let err = parse_matpower("function mpc = empty\nmpc.baseMVA = 100;\n").unwrap_err();
        match err {
            NetworkError::Parse { msg, .. } => assert!(msg.contains("mpc.bus")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gencost_does_not_leak_into_gen() {
        // gencost appears before gen in the fixture; the 150/600 cost values
        // must not be read as generator outputs.
        let case = parse_matpower(SMALL_CASE).unwrap();
        assert!((case.network.bus(BusId(1)).unwrap().injection - 1.0).abs() < 1e-12);
    }
}
