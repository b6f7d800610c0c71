//! JSON serialization of networks.
//!
//! The format is a direct dump of the model:
//!
//! ```json
//! {
//!   "baseMVA": 100.0,
//!   "slack": 1,
//!   "buses": [{ "id": 1, "p": 1.0, "gen": true }, ...],
//!   "lines": [{ "id": 1, "from": 1, "to": 2, "b": 2.5 }, ...]
//! }
//! ```
//!
//! `slack` may be omitted, in which case the bus with the lowest id is used.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bus, BusId, Line, LineId, Network, NetworkError, ValidationError};

#[derive(Serialize, Deserialize)]
struct NativeFile {
    #[serde(rename = "baseMVA", default = "default_base")]
    base_mva: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack: Option<u32>,
    buses: Vec<NativeBus>,
    lines: Vec<NativeLine>,
}

fn default_base() -> f64 {
    100.0
}

#[derive(Serialize, Deserialize)]
struct NativeBus {
    id: u32,
    p: f64,
    #[serde(default)]
    gen: bool,
}

#[derive(Serialize, Deserialize)]
struct NativeLine {
    id: u32,
    from: u32,
    to: u32,
    b: f64,
}

pub fn load_native<P: AsRef<Path>>(path: P) -> Result<Network, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    parse_native(&text)
}

pub fn parse_native(text: &str) -> Result<Network, NetworkError> {
    let file: NativeFile = serde_json::from_str(text)
        .map_err(|e| NetworkError::Parse { line: e.line(), msg: e.to_string() })?;
    let buses: Vec<Bus> = file
        .buses
        .iter()
        .map(|b| Bus { id: BusId(b.id), injection: b.p, is_generator: b.gen })
        .collect();
    let lines: Vec<Line> = file
        .lines
        .iter()
        .map(|l| Line {
            id: LineId(l.id),
            from: BusId(l.from),
            to: BusId(l.to),
            susceptance: l.b,
        })
        .collect();
    let slack = match file.slack {
        Some(s) => BusId(s),
        None => buses.iter().map(|b| b.id).min().ok_or(ValidationError::NoSlackBus)?,
    };
    Ok(Network::new(buses, lines, slack)?.with_base_mva(file.base_mva))
}

pub fn save_native<P: AsRef<Path>>(net: &Network, path: P) -> Result<(), NetworkError> {
    Ok(std::fs::write(path, to_native_string(net))?)
}

pub fn to_native_string(net: &Network) -> String {
    let mut buses: Vec<NativeBus> = net
        .buses()
        .iter()
        .map(|b| NativeBus { id: b.id.0, p: b.injection, gen: b.is_generator })
        .collect();
    buses.sort_by_key(|b| b.id);
    let mut lines: Vec<NativeLine> = net
        .lines()
        .iter()
        .map(|l| NativeLine { id: l.id.0, from: l.from.0, to: l.to.0, b: l.susceptance })
        .collect();
    lines.sort_by_key(|l| l.id);
    let file =
        NativeFile { base_mva: net.base_mva(), slack: Some(net.slack().0), buses, lines };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

/// Loads a network from either supported format, keyed on the file extension:
/// `.m` for Matpower cases, anything else is treated as native JSON.
pub fn load_auto<P: AsRef<Path>>(path: P) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("m")) {
        Ok(super::matpower::load_matpower(path)?.network)
    } else {
        load_native(path)
    }
}
