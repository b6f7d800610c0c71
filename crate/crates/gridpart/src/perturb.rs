//! Random susceptance perturbation.
//!
//! Structural zeros of the factor matrix survive any susceptance change;
//! coincidental zeros (like the symmetry cancellations of a completely
//! regular network) do not. Perturbing every susceptance by an
//! independent, absolutely-continuous relative noise,
//!
//! ```text
//! B_e  ->  B_e * (1 + scale * u_e)
//! ```
//!
//! breaks every coincidence with probability one while leaving the
//! topology — and with it the partition, bridges, and cells — untouched.
//! Draws are deterministic per seed.
//!
//! The distributions are truncated by rejection so that perturbed
//! susceptances stay strictly positive; per-line independence is a
//! convenience, not a requirement of the theory (any joint density works).

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::network::{LineId, Network};

#[derive(Debug, Error, PartialEq)]
pub enum PerturbError {
    #[error("bad perturbation spec {0:?} (expected eps=<float>,dist=<name>,seed=<int>)")]
    Parse(String),
}

/// Noise shape for the relative perturbation u_e.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on (-1, 1).
    #[default]
    Uniform,
    /// Standard normal, rejected down to positivity.
    TruncatedGaussian,
    /// Standard Laplace (double exponential), rejected down to positivity.
    TruncatedLaplace,
}

/// A reproducible perturbation: distribution, relative scale, seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub distribution: Distribution,
    /// Relative magnitude of the noise; 1e-3 by default.
    pub scale: f64,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec { distribution: Distribution::Uniform, scale: 1e-3, seed: 0 }
    }
}

impl PerturbationSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

impl FromStr for PerturbationSpec {
    type Err = PerturbError;

    /// Parses `eps=1e-3,dist=uniform,seed=42`; every field is optional and
    /// defaults as in [`PerturbationSpec::default`].
    fn from_str(s: &str) -> Result<Self, PerturbError> {
        let mut spec = PerturbationSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| PerturbError::Parse(s.to_string()))?;
            match key.trim() {
                "eps" | "scale" => {
                    spec.scale = value
                        .trim()
                        .parse()
                        .map_err(|_| PerturbError::Parse(s.to_string()))?;
                    if spec.scale < 0.0 || spec.scale.is_nan() {
                        return Err(PerturbError::Parse(s.to_string()));
                    }
                }
                "dist" => {
                    spec.distribution = match value.trim() {
                        "uniform" => Distribution::Uniform,
                        "gaussian" | "truncated-gaussian" | "truncated_gaussian" => {
                            Distribution::TruncatedGaussian
                        }
                        "laplace" | "truncated-laplace" | "truncated_laplace" => {
                            Distribution::TruncatedLaplace
                        }
                        _ => return Err(PerturbError::Parse(s.to_string())),
                    }
                }
                "seed" => {
                    spec.seed = value
                        .trim()
                        .parse()
                        .map_err(|_| PerturbError::Parse(s.to_string()))?;
                }
                _ => return Err(PerturbError::Parse(s.to_string())),
            }
        }
        Ok(spec)
    }
}

fn sample<R: Rng>(distribution: Distribution, rng: &mut R) -> f64 {
    match distribution {
        Distribution::Uniform => rng.random_range(-1.0..1.0),
        Distribution::TruncatedGaussian => rng.sample(rand_distr::StandardNormal),
        Distribution::TruncatedLaplace => {
            // Inverse CDF of the standard Laplace on a uniform draw,
            // avoiding the w = -1/2 endpoint where it diverges.
            let w = loop {
                let v: f64 = rng.random::<f64>() - 0.5;
                if v > -0.5 {
                    break v;
                }
            };
            -w.signum() * (1.0 - 2.0 * w.abs()).ln()
        }
    }
}

/// Multiplies every susceptance by (1 + scale * u) with u drawn i.i.d.
/// from the spec's distribution, re-drawing any u that would make the
/// susceptance non-positive. Same topology, same ids, deterministic per
/// seed.
pub fn perturb(net: &Network, spec: &PerturbationSpec) -> Network {
    assert!(spec.scale >= 0.0, "perturbation scale must be non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let susceptances: std::collections::BTreeMap<LineId, f64> = net
        .lines()
        .iter()
        .map(|l| {
            let factor = loop {
                let u = sample(spec.distribution, &mut rng);
                let f = 1.0 + spec.scale * u;
                if f > 1e-9 {
                    break f;
                }
            };
            (l.id, l.susceptance * factor)
        })
        .collect();
    net.with_susceptances(&susceptances).expect("perturbed susceptances stay positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lodf::lodf_nonbridge;
    use crate::networks::{complete, cycle, two_triangles_with_bridge};
    use crate::partition::{cell_decomposition, irreducible_tree_partition};

    #[test]
    fn spec_parsing() {
        let spec: PerturbationSpec = "eps=1e-2,dist=laplace,seed=42".parse().unwrap();
        assert_eq!(
            spec,
            PerturbationSpec {
                distribution: Distribution::TruncatedLaplace,
                scale: 1e-2,
                seed: 42
            }
        );
        assert_eq!("".parse::<PerturbationSpec>().unwrap(), PerturbationSpec::default());
        assert_eq!(
            "dist=gaussian".parse::<PerturbationSpec>().unwrap().distribution,
            Distribution::TruncatedGaussian
        );
        assert!("eps=-1".parse::<PerturbationSpec>().is_err());
        assert!("nonsense".parse::<PerturbationSpec>().is_err());
        assert!("dist=cauchy".parse::<PerturbationSpec>().is_err());
    }

    #[test]
    fn deterministic_per_seed_and_identity_at_zero_scale() {
        let net = cycle(9);
        let spec = PerturbationSpec::default().with_seed(5);
        let a = perturb(&net, &spec);
        let b = perturb(&net, &spec);
        assert_eq!(a.lines(), b.lines());
        let c = perturb(&net, &spec.with_seed(6));
        assert_ne!(a.lines(), c.lines());

        let id = perturb(&net, &PerturbationSpec::default().with_scale(0.0));
        assert_eq!(id.lines(), net.lines());
    }

    #[test]
    fn stays_positive_even_with_huge_scale() {
        let net = cycle(40);
        for dist in [
            Distribution::Uniform,
            Distribution::TruncatedGaussian,
            Distribution::TruncatedLaplace,
        ] {
            for seed in 0..25 {
                let spec = PerturbationSpec { distribution: dist, scale: 3.0, seed };
                let out = perturb(&net, &spec);
                assert!(out.lines().iter().all(|l| l.susceptance > 0.0), "{dist:?}/{seed}");
            }
        }
    }

    #[test]
    fn topology_and_partition_are_invariant() {
        let net = two_triangles_with_bridge();
        let spec = PerturbationSpec::default().with_seed(77);
        let out = perturb(&net, &spec);
        let (tp0, tp1) =
            (irreducible_tree_partition(&net), irreducible_tree_partition(&out));
        assert_eq!(tp0.regions(), tp1.regions());
        assert_eq!(tp0.bridges(), tp1.bridges());
        let (cd0, cd1) =
            (cell_decomposition(&net, &tp0), cell_decomposition(&out, &tp1));
        assert_eq!(cd0.cells(), cd1.cells());
        assert_eq!(cd0.cut_vertices(), cd1.cut_vertices());
    }

    #[test]
    fn perturbation_breaks_complete_graph_symmetry() {
        // On the unit-susceptance complete graph over four buses, tripping
        // (1,2) leaves the vertex-disjoint line (3,4) untouched — a
        // cancellation of symmetry, not structure. Any perturbation breaks
        // it.
        let net = complete(4);
        let e = LineId(1); // (1,2)
        let disjoint = net
            .lines()
            .iter()
            .find(|l| l.from == crate::network::BusId(3) && l.to == crate::network::BusId(4))
            .unwrap()
            .id;
        let base = lodf_nonbridge(&net, e).unwrap();
        assert!(base[&disjoint].abs() < 1e-12);

        for seed in 0..20 {
            let spec = PerturbationSpec::default().with_seed(seed);
            let shaken = perturb(&net, &spec);
            let k = lodf_nonbridge(&shaken, e).unwrap();
            assert!(k[&disjoint].abs() > 1e-12, "seed {seed} kept the zero");
        }
    }
}
