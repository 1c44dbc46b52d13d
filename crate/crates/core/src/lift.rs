//! Lifting equilibria from a weighted graph to its k-spinning, and checking
//! that equilibria and Hessian spectra carry over.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, PhaseVector};
use crate::graph::{self, Coupling, GraphError, SpinGraph, WeightedGraph};
use crate::spectral::{self, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("base eigenvalue {base} has no lifted partner within {tol:e} (nearest gap {gap:e})")]
    MatchFailure { base: f64, gap: f64, tol: f64 },
}

/// Copies the phase of every base vertex onto its whole fiber.
pub fn lift(theta: &PhaseVector, s: &SpinGraph) -> Result<PhaseVector, DynamicsError> {
    let n = s.base().n();
    if theta.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: theta.len() });
    }
    let k = s.k();
    Ok(PhaseVector::new(theta.as_slice().iter().flat_map(|&x| std::iter::repeat_n(x, k)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPair {
    pub base_residual: f64,
    pub lifted_residual: f64,
}

/// Residuals of `theta` on `g` and of its lift on `S_k(g)`.
pub fn verify_prop1(g: &WeightedGraph, theta: &PhaseVector, k: usize) -> Result<ResidualPair, LiftError> {
    let s = graph::spin(g, k)?;
    let base_residual = dynamics::residual(g, theta)?;
    let lifted_residual = dynamics::residual(&s, &lift(theta, &s)?)?;
    Ok(ResidualPair { base_residual, lifted_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedEigenvalue {
    pub base: f64,
    pub lifted: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMatch {
    pub matched: Vec<MatchedEigenvalue>,
    /// Lifted eigenvalues left over after matching, ascending.
    pub extras: Vec<f64>,
}

/// Pairs every value of `base` with the nearest unused value of `lifted`
/// (both ascending), failing if some gap exceeds `tol`.
pub fn match_spectra(base: &[f64], lifted: &[f64], tol: f64) -> Result<SpectralMatch, LiftError> {
    let mut used = vec![false; lifted.len()];
    let mut matched = Vec::with_capacity(base.len());
    for &b in base {
        let at = lifted.partition_point(|&x| x < b);
        let left = (0..at).rev().find(|&i| !used[i]);
        let right = (at..lifted.len()).find(|&i| !used[i]);
        let best = match (left, right) {
            (Some(l), Some(r)) => Some(if b - lifted[l] <= lifted[r] - b { l } else { r }),
            (l, r) => l.or(r),
        };
        let Some(i) = best else {
            return Err(LiftError::MatchFailure { base: b, gap: f64::INFINITY, tol });
        };
        let gap = (lifted[i] - b).abs();
        if gap > tol {
            return Err(LiftError::MatchFailure { base: b, gap, tol });
        }
        used[i] = true;
        matched.push(MatchedEigenvalue { base: b, lifted: lifted[i], gap });
    }
    let extras = lifted.iter().zip(&used).filter(|(_, &u)| !u).map(|(&x, _)| x).collect();
    Ok(SpectralMatch { matched, extras })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    pub k: usize,
    pub base_residual: f64,
    pub lifted_residual: f64,
    pub matched: Vec<MatchedEigenvalue>,
    /// The `(k−1)·|G|` lifted eigenvalues not inherited from the base.
    pub extras: Vec<f64>,
    pub extras_min: f64,
    pub match_tol: f64,
    /// Whether `k > 2·w(G)`, the regime where the extras are guaranteed positive.
    pub prop2_bound_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftOptions {
    pub eq_tol: f64,
    /// Matching tolerance factor; the gap bound is `factor·(1 + ‖H‖∞)` of the lifted Hessian.
    pub match_factor: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self { eq_tol: 1e-10, match_factor: 1e-8 }
    }
}

/// Eigendecomposes the Hessians at `theta` and at its lift, matches the base
/// spectrum inside the lifted one, and reports the leftover eigenvalues.
///
/// The leftover eigenvalues are reported, not judged: when
/// `prop2_bound_holds` they should all be positive, which callers check
/// through `extras_min`.
pub fn verify_prop2(
    g: &WeightedGraph,
    theta: &PhaseVector,
    k: usize,
    opts: &LiftOptions,
) -> Result<LiftReport, LiftError> {
    let base_residual = dynamics::residual(g, theta)?;
    if base_residual >= opts.eq_tol {
        return Err(DynamicsError::NotAnEquilibrium { residual: base_residual, tol: opts.eq_tol }.into());
    }
    let s = graph::spin(g, k)?;
    let lifted_theta = lift(theta, &s)?;
    let lifted_residual = dynamics::residual(&s, &lifted_theta)?;

    let hb = spectral::hessian(g, theta)?;
    let hl = spectral::hessian(&s, &lifted_theta)?;
    let match_tol = opts.match_factor * (1.0 + spectral::inf_norm(&hl));
    let (base, lifted) = rayon::join(|| spectral::eigen(&hb, false), || spectral::eigen(&hl, false));
    let m = match_spectra(&base?.eigenvalues, &lifted?.eigenvalues, match_tol)?;
    let extras_min = m.extras.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LiftReport {
        k,
        base_residual,
        lifted_residual,
        matched: m.matched,
        extras: m.extras,
        extras_min,
        match_tol,
        prop2_bound_holds: k as u64 > 2 * g.total_weight(),
    })
}

/// Fiber-constant lift of a base vector: `x_(u,i) = x_u`.
pub fn lift_vector(x: &[f64], k: usize) -> Vec<f64> {
    x.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect()
}

/// Order of the spin graph, `k·|G|`, i.e. the expected `|matched| + |extras|`.
pub fn lifted_order(g: &WeightedGraph, k: usize) -> usize {
    g.order() * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lift_copies_fibers() {
        let g = WeightedGraph::new(2, [(0, 1, 1)]).unwrap();
        let s = graph::spin(&g, 2).unwrap();
        let l = lift(&PhaseVector::new(vec![0.0, PI]), &s).unwrap();
        assert_eq!(l.as_slice(), &[0.0, 0.0, PI, PI]);
        let c = lift(&PhaseVector::consensus(2, 0.3), &s).unwrap();
        assert_eq!(c, PhaseVector::consensus(4, 0.3));
        assert!(lift(&PhaseVector::consensus(3, 0.0), &s).is_err());
    }

    #[test]
    fn consensus_residuals_vanish() {
        let g = WeightedGraph::new(3, [(0, 1, 2), (1, 2, 1)]).unwrap();
        let r = verify_prop1(&g, &PhaseVector::consensus(3, 1.0), 3).unwrap();
        assert_eq!(r.base_residual, 0.0);
        assert_eq!(r.lifted_residual, 0.0);
    }

    #[test]
    fn non_equilibrium_lifted_residual_dominates() {
        let g = WeightedGraph::new(3, [(0, 1, 2), (1, 2, 3), (0, 2, 1)]).unwrap();
        let theta = PhaseVector::new(vec![0.0, 0.4, 1.9]);
        for k in 3..7 {
            let r = verify_prop1(&g, &theta, k).unwrap();
            assert!(r.base_residual > 0.1);
            assert!(r.lifted_residual >= r.base_residual - 1e-12);
        }
    }

    #[test]
    fn spin_too_small_is_reported() {
        let g = WeightedGraph::new(2, [(0, 1, 3)]).unwrap();
        assert!(matches!(
            verify_prop1(&g, &PhaseVector::consensus(2, 0.0), 2),
            Err(LiftError::Graph(GraphError::SpinTooSmall { .. }))
        ));
    }

    #[test]
    fn greedy_matching() {
        let m = match_spectra(&[0.0, 1.0, 1.0], &[0.0, 0.5, 1.0, 1.0 + 1e-12, 7.0], 1e-9).unwrap();
        assert_eq!(m.extras, vec![0.5, 7.0]);
        assert!(m.matched.iter().all(|p| p.gap < 2e-12));
        assert!(matches!(match_spectra(&[2.0], &[0.0, 3.0], 1e-9), Err(LiftError::MatchFailure { .. })));
        assert!(matches!(match_spectra(&[2.0], &[], 1e-9), Err(LiftError::MatchFailure { .. })));
    }

    #[test]
    fn consensus_prop2_in_strict_regime() {
        let g = WeightedGraph::new(3, [(0, 1, 1), (1, 2, 2)]).unwrap();
        let k = 2 * g.total_weight() as usize + 1;
        let r = verify_prop2(&g, &PhaseVector::consensus(3, 0.0), k, &LiftOptions::default()).unwrap();
        assert!(r.prop2_bound_holds);
        assert_eq!(r.matched.len() + r.extras.len(), lifted_order(&g, k));
        assert_eq!(r.extras.len(), (k - 1) * 3);
        assert!(r.extras_min > 0.0);
        assert!(r.matched.iter().all(|m| m.gap < r.match_tol));
    }

    #[test]
    fn prop2_requires_equilibrium() {
        let g = WeightedGraph::new(2, [(0, 1, 1)]).unwrap();
        let err = verify_prop2(&g, &PhaseVector::new(vec![0.0, 1.0]), 3, &LiftOptions::default());
        assert!(matches!(err, Err(LiftError::Dynamics(DynamicsError::NotAnEquilibrium { .. }))));
    }
}
