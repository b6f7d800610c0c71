//! Numeric thresholds used across the crate.
//!
//! Everything here is an absolute tolerance. Analyses accept an override
//! where it makes sense (CLI `--tol`, influence thresholds); these constants
//! are the defaults.

/// Absolute threshold below which a computed quantity is treated as zero:
/// flow mismatches, distribution factors, injection balance checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Default threshold on |K| for drawing an influence graph edge.
pub const INFLUENCE_THRESHOLD: f64 = 0.005;

/// Tolerance for balance rule weights: the weights must sum to one within
/// this bound, and each weight must exceed it.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;
