//! Failure localization analysis for DC power networks.
//!
//! A transmission grid, modeled as a connected graph with per-line
//! susceptances and per-bus injections, reacts to a line outage everywhere
//! in general — but not arbitrarily. Partition the buses by removing every
//! bridge ([`partition::irreducible_tree_partition`]) and split each
//! region into its 2-connected cells ([`partition::cell_decomposition`]):
//! the impact of tripping a non-bridge line, measured by line outage
//! distribution factors ([`lodf`]), is then confined to the tripped line's
//! own cell, exactly. Bridge outages are the complement: they island the
//! grid, force a rebalancing rule ([`balance`]), and touch every line.
//!
//! The crate provides:
//!
//! * the network model with Matpower-subset and JSON ingestion
//!   ([`network`]),
//! * DC power flow on one network or per island ([`flow`]),
//! * tree partitions, cells, bridges, cut vertices ([`partition`]),
//! * distribution factors: matrix route, extended bridge route, full
//!   matrix ([`lodf`]),
//! * an exact rational oracle for the same factors via spanning-forest
//!   enumeration, for verification at small scale ([`forest`]),
//! * balance rules and the island-free / participating conditions
//!   ([`balance`]),
//! * pair classification, influence graphs, sparsity reports
//!   ([`localize`]),
//! * seeded susceptance perturbation for almost-surely-nonzero statements
//!   ([`perturb`]),
//! * switching studies: congestion and localization before/after removing
//!   lines ([`switching`]),
//! * a catalog of small example networks and random generators
//!   ([`networks`]).
//!
//! The `gridpart` binary exposes the same operations as subcommands; the
//! `examples/` directory walks through each capability end to end.
//!
//! ```
//! use gridpart::networks::two_triangles_with_bridge;
//! use gridpart::partition::{cell_decomposition, irreducible_tree_partition};
//!
//! let net = two_triangles_with_bridge();
//! let tp = irreducible_tree_partition(&net);
//! assert_eq!(tp.region_count(), 2);
//! let cells = cell_decomposition(&net, &tp);
//! assert_eq!(cells.cells().len(), 2);
//! ```

#![forbid(unsafe_code)]
#![warn(missing_debug_implementations)]

pub mod balance;
pub mod flow;
pub mod forest;
pub mod localize;
pub mod lodf;
pub mod network;
pub mod networks;
pub mod perturb;
pub mod partition;
pub mod switching;
pub mod tolerance;

pub use network::{Bus, BusId, Line, LineId, Network, NetworkError, ValidationError};
