//! Homogeneous Kuramoto gradient flow `θ̇_v = Σ_u w_uv sin(θ_u − θ_v)`.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Coupling;
use crate::ratio::ExactRatio;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("phase vector has {got} entries, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not an equilibrium (residual {residual:e} ≥ {tol:e})")]
    NotAnEquilibrium { residual: f64, tol: f64 },
    #[error("flow did not reach residual {tol:e} before t = {t_max} (residual {residual:e})")]
    NonConvergence { residual: f64, tol: f64, t_max: f64 },
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
    #[error("monte carlo needs at least one trial")]
    NoTrials,
}

/// One phase angle (radians) per vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(theta: Vec<f64>) -> Self {
        Self(theta)
    }

    /// The constant configuration `(c, …, c)`.
    pub fn consensus(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Every angle reduced to `[0, 2π)`.
    pub fn canonical(&self) -> Self {
        Self(self.0.iter().map(|&x| reduce_angle(x)).collect())
    }

    /// Adds `c` to every angle.
    pub fn rotated(&self, c: f64) -> Self {
        Self(self.0.iter().map(|&x| x + c).collect())
    }
}

impl From<Vec<f64>> for PhaseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = reduce_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn check_dim(g: &impl Coupling, theta: &PhaseVector) -> Result<(), DynamicsError> {
    if g.order() != theta.len() {
        return Err(DynamicsError::DimensionMismatch { expected: g.order(), got: theta.len() });
    }
    Ok(())
}

/// Flat edge list used by the inner integration loop.
struct Kernel {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Kernel {
    fn new(g: &impl Coupling) -> Self {
        Self { n: g.order(), edges: g.edges().iter().map(|e| (e.u, e.v, f64::from(e.w))).collect() }
    }

    fn rhs_into(&self, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(u, v, w) in &self.edges {
            let s = w * (theta[u] - theta[v]).sin();
            out[v] += s;
            out[u] -= s;
        }
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        self.edges.iter().map(|&(u, v, w)| w * (1.0 - (theta[u] - theta[v]).cos())).sum()
    }
}

fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

/// Right-hand side of the flow at `theta`.
pub fn rhs(g: &impl Coupling, theta: &PhaseVector) -> Result<Vec<f64>, DynamicsError> {
    check_dim(g, theta)?;
    let mut out = vec![0.0; g.order()];
    Kernel::new(g).rhs_into(theta.as_slice(), &mut out);
    Ok(out)
}

/// Potential `U = Σ_uv w_uv (1 − cos(θ_u − θ_v))`; the flow is `−∇U`.
pub fn potential(g: &impl Coupling, theta: &PhaseVector) -> Result<f64, DynamicsError> {
    check_dim(g, theta)?;
    Ok(Kernel::new(g).potential(theta.as_slice()))
}

/// Max-norm of the right-hand side.
pub fn residual(g: &impl Coupling, theta: &PhaseVector) -> Result<f64, DynamicsError> {
    rhs(g, theta).map(|r| max_norm(&r))
}

/// Tolerances and integration settings shared by the flow routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub step: f64,
    pub t_max: f64,
    pub eq_tol: f64,
    pub consensus_tol: f64,
    pub match_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { step: 0.01, t_max: 1e4, eq_tol: 1e-10, consensus_tol: 1e-6, match_tol: 1e-5 }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<(), DynamicsError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.step) {
            return Err(DynamicsError::InvalidOptions("step must be positive"));
        }
        if !positive(self.t_max) {
            return Err(DynamicsError::InvalidOptions("t_max must be positive"));
        }
        if !positive(self.eq_tol) || !positive(self.consensus_tol) || !positive(self.match_tol) {
            return Err(DynamicsError::InvalidOptions("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Consensus,
    KnownEquilibrium(usize),
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub final_state: PhaseVector,
    pub t_final: f64,
    pub residual: f64,
    pub classification: Classification,
    pub steps: u64,
    /// False when `t_max` was hit before the residual dropped below `eq_tol`.
    pub converged: bool,
}

/// Integrates the flow from `theta0` with fixed-step RK4 until the residual
/// falls below `opts.eq_tol` or `opts.t_max` is reached.
///
/// A non-converged run is still returned, with `converged == false` and
/// classification `Unclassified`.
pub fn integrate(
    g: &impl Coupling,
    theta0: &PhaseVector,
    opts: &FlowOptions,
) -> Result<TrajectoryResult, DynamicsError> {
    integrate_observed(g, theta0, opts, &[], |_, _| {})
}

/// [`integrate`], classifying the end point against `known` equilibria and
/// calling `observe(t, θ)` at the start and after every step.
pub fn integrate_observed(
    g: &impl Coupling,
    theta0: &PhaseVector,
    opts: &FlowOptions,
    known: &[PhaseVector],
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<TrajectoryResult, DynamicsError> {
    check_dim(g, theta0)?;
    opts.validate()?;
    let kernel = Kernel::new(g);
    let n = kernel.n;
    let h = opts.step;
    let max_steps = (opts.t_max / h).ceil() as u64;

    let mut theta = theta0.as_slice().to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let mut steps = 0u64;
    observe(0.0, &theta);
    let res = loop {
        kernel.rhs_into(&theta, &mut k1);
        let res = max_norm(&k1);
        if res < opts.eq_tol || steps >= max_steps {
            break res;
        }
        for i in 0..n {
            tmp[i] = theta[i] + 0.5 * h * k1[i];
        }
        kernel.rhs_into(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = theta[i] + 0.5 * h * k2[i];
        }
        kernel.rhs_into(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = theta[i] + h * k3[i];
        }
        kernel.rhs_into(&tmp, &mut k4);
        for i in 0..n {
            theta[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        steps += 1;
        observe(steps as f64 * h, &theta);
    };

    let converged = res < opts.eq_tol;
    let final_state = PhaseVector(theta).canonical();
    let classification =
        if converged { classify_unchecked(&final_state, known, opts) } else { Classification::Unclassified };
    Ok(TrajectoryResult { final_state, t_final: steps as f64 * h, residual: res, classification, steps, converged })
}

/// Largest `|wrap(θ_v − θ_0)|`; zero exactly at consensus.
pub fn circular_spread(theta: &PhaseVector) -> f64 {
    let Some(&first) = theta.as_slice().first() else {
        return 0.0;
    };
    theta.as_slice().iter().fold(0.0, |m, &x| m.max(wrap_angle(x - first).abs()))
}

/// Max-norm circular distance between `a` and `b` after removing the best
/// global rotation (the circular mean of the differences).
pub fn rotation_distance(a: &PhaseVector, b: &PhaseVector) -> f64 {
    assert_eq!(a.len(), b.len(), "phase vectors must have equal length");
    let (mut s, mut c) = (0.0, 0.0);
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        let d = x - y;
        s += d.sin();
        c += d.cos();
    }
    let shift = s.atan2(c);
    a.as_slice().iter().zip(b.as_slice()).fold(0.0, |m, (x, y)| m.max(wrap_angle(x - y - shift).abs()))
}

fn classify_unchecked(theta: &PhaseVector, known: &[PhaseVector], opts: &FlowOptions) -> Classification {
    if circular_spread(theta) < opts.consensus_tol {
        return Classification::Consensus;
    }
    known
        .iter()
        .position(|q| q.len() == theta.len() && rotation_distance(theta, q) < opts.match_tol)
        .map_or(Classification::Unclassified, Classification::KnownEquilibrium)
}

/// Classifies an equilibrium as consensus, one of `known` (modulo global
/// rotation), or unclassified.
pub fn classify(
    g: &impl Coupling,
    theta: &PhaseVector,
    known: &[PhaseVector],
    opts: &FlowOptions,
) -> Result<Classification, DynamicsError> {
    let res = residual(g, theta)?;
    if res >= opts.eq_tol {
        return Err(DynamicsError::NotAnEquilibrium { residual: res, tol: opts.eq_tol });
    }
    Ok(classify_unchecked(theta, known, opts))
}

/// Finds an equilibrium near the end of the trajectory from `theta0`: flows
/// until the residual is below `1e-6`, then polishes with damped Newton steps
/// on the hyperplane of fixed phase sum.
pub fn descend_to_equilibrium(
    g: &impl Coupling,
    theta0: &PhaseVector,
    opts: &FlowOptions,
) -> Result<PhaseVector, DynamicsError> {
    let coarse = FlowOptions { eq_tol: opts.eq_tol.max(1e-6), ..*opts };
    let traj = integrate(g, theta0, &coarse)?;
    if !traj.converged {
        return Err(DynamicsError::NonConvergence { residual: traj.residual, tol: coarse.eq_tol, t_max: opts.t_max });
    }
    let kernel = Kernel::new(g);
    let n = kernel.n;
    let mut theta = traj.final_state.into_inner();
    let mut f = vec![0.0; n];
    kernel.rhs_into(&theta, &mut f);
    let mut res = max_norm(&f);
    let mut trial = vec![0.0; n];
    let mut trial_f = vec![0.0; n];
    for _ in 0..50 {
        if res < opts.eq_tol * 1e-2 {
            break;
        }
        // U'' δ = −∇U = f, with the all-ones kernel lifted by 11ᵀ/n.
        let mut h = crate::spectral::hessian_matrix(g.edges(), n, &theta);
        h.add_scalar_mut(1.0 / n as f64);
        let Some(delta) = h.lu().solve(&DVector::from_column_slice(&f)) else {
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-4 {
            for i in 0..n {
                trial[i] = theta[i] + t * delta[i];
            }
            kernel.rhs_into(&trial, &mut trial_f);
            let r = max_norm(&trial_f);
            if r < res {
                theta.copy_from_slice(&trial);
                f.copy_from_slice(&trial_f);
                res = r;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if res >= opts.eq_tol {
        return Err(DynamicsError::NonConvergence { residual: res, tol: opts.eq_tol, t_max: opts.t_max });
    }
    Ok(PhaseVector(theta))
}

/// Uniform random phases on `[0, 2π)` drawn from the stream of trial
/// `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn random_phases(rng: &mut impl Rng, n: usize) -> PhaseVector {
    PhaseVector((0..n).map(|_| rng.random_range(0.0..TAU)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct McCounts {
    pub consensus: u64,
    /// One count per known equilibrium, in the order supplied.
    pub known: Vec<u64>,
    pub unclassified: u64,
    /// Trials that hit `t_max` first.
    pub non_converged: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub trials: u64,
    pub seed: u64,
    pub counts: McCounts,
    pub fraction_consensus: ExactRatio,
}

/// Runs `trials` independent flows from uniform random initial phases.
///
/// Trial `t` draws from its own ChaCha stream `(seed, t)`, so the counts do
/// not depend on how trials are scheduled across worker threads.
pub fn monte_carlo(
    g: &(impl Coupling + Sync),
    trials: u64,
    seed: u64,
    opts: &FlowOptions,
    known: &[PhaseVector],
) -> Result<McReport, DynamicsError> {
    if trials == 0 {
        return Err(DynamicsError::NoTrials);
    }
    opts.validate()?;
    let n = g.order();
    let outcomes: Vec<(bool, Classification)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let theta0 = random_phases(&mut trial_rng(seed, t), n);
            let r =
                integrate_observed(g, &theta0, opts, known, |_, _| {}).expect("dimensions and options were validated");
            (r.converged, r.classification)
        })
        .collect();
    let mut counts = McCounts { consensus: 0, known: vec![0; known.len()], unclassified: 0, non_converged: 0 };
    for (converged, class) in outcomes {
        match (converged, class) {
            (false, _) => counts.non_converged += 1,
            (true, Classification::Consensus) => counts.consensus += 1,
            (true, Classification::KnownEquilibrium(i)) => counts.known[i] += 1,
            (true, Classification::Unclassified) => counts.unclassified += 1,
        }
    }
    let fraction_consensus = ExactRatio::new(counts.consensus as i64, trials as i64);
    Ok(McReport { trials, seed, counts, fraction_consensus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use std::f64::consts::FRAC_PI_2;

    fn cycle(n: usize) -> WeightedGraph {
        WeightedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1))).unwrap()
    }

    #[test]
    fn rhs_vanishes_at_consensus() {
        let g = cycle(5);
        let r = rhs(&g, &PhaseVector::consensus(5, 0.7)).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rhs_single_edge() {
        let g = WeightedGraph::new(2, [(0, 1, 3)]).unwrap();
        let r = rhs(&g, &PhaseVector::new(vec![0.0, FRAC_PI_2])).unwrap();
        assert!((r[0] - 3.0).abs() < 1e-15 && (r[1] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = cycle(4);
        let err = rhs(&g, &PhaseVector::consensus(3, 0.0)).unwrap_err();
        assert_eq!(err, DynamicsError::DimensionMismatch { expected: 4, got: 3 });
        assert!(potential(&g, &PhaseVector::consensus(5, 0.0)).is_err());
    }

    #[test]
    fn potential_values() {
        let g = WeightedGraph::new(2, [(0, 1, 2)]).unwrap();
        assert_eq!(potential(&g, &PhaseVector::consensus(2, 1.0)).unwrap(), 0.0);
        assert!((potential(&g, &PhaseVector::new(vec![0.0, PI])).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn random_point_on_cycle_is_not_equilibrium() {
        let g = cycle(4);
        let theta = random_phases(&mut trial_rng(7, 0), 4);
        assert!(residual(&g, &theta).unwrap() > 1e-3);
    }

    #[test]
    fn reduce_is_idempotent() {
        for x in [-7.0, -1e-300, 0.0, 3.0, TAU, 100.0] {
            let r = reduce_angle(x);
            assert!((0.0..TAU).contains(&r));
            assert_eq!(reduce_angle(r), r);
        }
    }

    #[test]
    fn consensus_start_converges_immediately() {
        let g = cycle(4);
        let r = integrate(&g, &PhaseVector::consensus(4, 2.0), &FlowOptions::default()).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(r.classification, Classification::Consensus);
    }

    #[test]
    fn two_oscillators_synchronize() {
        let g = WeightedGraph::new(2, [(0, 1, 1)]).unwrap();
        let r = integrate(&g, &PhaseVector::new(vec![0.0, 0.1]), &FlowOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.classification, Classification::Consensus);
    }

    #[test]
    fn t_max_hit_is_flagged() {
        let g = WeightedGraph::new(2, [(0, 1, 1)]).unwrap();
        let opts = FlowOptions { t_max: 0.05, ..Default::default() };
        let r = integrate(&g, &PhaseVector::new(vec![0.0, 2.0]), &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.classification, Classification::Unclassified);
        assert_eq!(r.steps, 5);
    }

    #[test]
    fn invalid_step_rejected() {
        let g = cycle(3);
        let opts = FlowOptions { step: 0.0, ..Default::default() };
        assert!(matches!(integrate(&g, &PhaseVector::consensus(3, 0.0), &opts), Err(DynamicsError::InvalidOptions(_))));
    }

    #[test]
    fn classify_twisted_state() {
        // the 5-cycle twisted state θ_v = 2πv/5 is an equilibrium
        let g = cycle(5);
        let twisted = PhaseVector::new((0..5).map(|v| TAU * v as f64 / 5.0).collect());
        let opts = FlowOptions::default();
        let known = [twisted.clone()];
        assert_eq!(classify(&g, &twisted, &known, &opts).unwrap(), Classification::KnownEquilibrium(0));
        assert_eq!(classify(&g, &twisted.rotated(1.234), &known, &opts).unwrap(), Classification::KnownEquilibrium(0));
        assert_eq!(classify(&g, &twisted, &[], &opts).unwrap(), Classification::Unclassified);
        assert_eq!(classify(&g, &PhaseVector::consensus(5, 3.0), &known, &opts).unwrap(), Classification::Consensus);
        let off = PhaseVector::new(vec![0.0, 0.3, 0.0, 0.0, 0.0]);
        assert!(matches!(classify(&g, &off, &known, &opts), Err(DynamicsError::NotAnEquilibrium { .. })));
    }

    #[test]
    fn consensus_across_the_branch_cut() {
        let theta = PhaseVector::new(vec![TAU - 1e-9, 1e-9, 0.0]);
        assert!(circular_spread(&theta) < 1e-8);
    }

    #[test]
    fn zero_trials_rejected() {
        let g = cycle(3);
        assert_eq!(monte_carlo(&g, 0, 1, &FlowOptions::default(), &[]).unwrap_err(), DynamicsError::NoTrials);
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: Vec<f64> = random_phases(&mut trial_rng(42, 3), 4).into_inner();
        let _ = random_phases(&mut trial_rng(42, 2), 4);
        let b: Vec<f64> = random_phases(&mut trial_rng(42, 3), 4).into_inner();
        assert_eq!(a, b);
        assert_ne!(a, random_phases(&mut trial_rng(42, 4), 4).into_inner());
    }

    #[test]
    fn descent_reaches_tight_residual() {
        let g = WeightedGraph::new(4, [(0, 1, 2), (1, 2, 1), (2, 3, 3), (3, 0, 1)]).unwrap();
        let theta =
            descend_to_equilibrium(&g, &random_phases(&mut trial_rng(3, 0), 4), &FlowOptions::default()).unwrap();
        assert!(residual(&g, &theta).unwrap() < 1e-10);
    }
}
