//! Non-synchronization certificates for the spun family `S_k(G_(k,k,k,⌈k/2⌉−1))`
//! and the exact density sequence that tends to 11/16.

use std::io::Write;

use num_rational::Ratio;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, FlowOptions, PhaseVector};
use crate::gp::{self, GpParams};
use crate::graph::{self, Coupling};
use crate::lift;
use crate::ratio::ExactRatio;
use crate::spectral::{self, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(u64),
    #[error("threshold {0} is not below the limit 11/16")]
    ThresholdAtOrAboveLimit(ExactRatio),
    #[error("no k up to {0} exceeds the threshold")]
    ScanLimit(u64),
    #[error("certification of k={k} failed at stage {stage:?}: {reason}")]
    CertificationFailed { k: u64, stage: Stage, reason: String, certificate: Box<BoundCertificate> },
}

/// `p_k = (k, k, k, ⌈k/2⌉ − 1)`.
pub fn pk_params(k: u64) -> Result<GpParams, BoundError> {
    if k < 2 {
        return Err(BoundError::KTooSmall(k));
    }
    let k32 = u32::try_from(k).map_err(|_| BoundError::KTooSmall(k))?;
    Ok(GpParams::new(k32, k32, k32, k32.div_ceil(2) - 1).expect("p_k always satisfies a > d"))
}

/// Degree of every vertex of `S_k(G_(p_k))`: `5k + ⌈k/2⌉ − 2`.
pub fn spin_degree(k: u64) -> u64 {
    5 * k + k.div_ceil(2) - 2
}

/// `δ / (8k)`.
pub fn mu_paper(k: u64) -> Ratio<i64> {
    Ratio::new(spin_degree(k) as i64, 8 * k as i64)
}

/// `δ / (8k − 1)`.
pub fn mu_strong(k: u64) -> Ratio<i64> {
    Ratio::new(spin_degree(k) as i64, 8 * k as i64 - 1)
}

pub fn mu_limit() -> Ratio<i64> {
    Ratio::new(11, 16)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convention {
    /// Minimum degree over the order, `δ/n`.
    PaperRatio,
    /// Minimum degree over `n − 1`.
    StrongDensity,
}

impl Convention {
    pub fn mu(self, k: u64) -> Ratio<i64> {
        match self {
            Convention::PaperRatio => mu_paper(k),
            Convention::StrongDensity => mu_strong(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MuRow {
    pub k: u64,
    pub mu_paper: ExactRatio,
    pub mu_strong: ExactRatio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MuSequence {
    pub rows: Vec<MuRow>,
}

impl MuSequence {
    /// CSV with columns `k,mu_paper,mu_strong` (exact fractions) followed by
    /// their decimal values.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "mu_paper", "mu_strong", "mu_paper_decimal", "mu_strong_decimal"])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.mu_paper.to_string(),
                r.mu_strong.to_string(),
                crate::io::format_f64(r.mu_paper.to_f64()),
                crate::io::format_f64(r.mu_strong.to_f64()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn mu_sequence(k_max: u64) -> Result<MuSequence, BoundError> {
    if k_max < 2 {
        return Err(BoundError::KTooSmall(k_max));
    }
    let rows = (2..=k_max).map(|k| MuRow { k, mu_paper: mu_paper(k).into(), mu_strong: mu_strong(k).into() }).collect();
    Ok(MuSequence { rows })
}

const SCAN_LIMIT: u64 = 1_000_000_000;

/// Least `k ≥ 2` whose density under `convention` strictly exceeds
/// `threshold`, by exact comparison.
pub fn first_k_exceeding(threshold: Ratio<i64>, convention: Convention) -> Result<u64, BoundError> {
    if threshold >= mu_limit() {
        return Err(BoundError::ThresholdAtOrAboveLimit(threshold.into()));
    }
    let (tn, td) = (i128::from(*threshold.numer()), i128::from(*threshold.denom()));
    // compare δ/den > tn/td without overflow
    let exceeds = |k: u64| {
        let mu = convention.mu(k);
        i128::from(*mu.numer()) * td > tn * i128::from(*mu.denom())
    };
    (2..=SCAN_LIMIT).find(|&k| exceeds(k)).ok_or(BoundError::ScanLimit(SCAN_LIMIT))
}

/// One "first k above threshold" statement, confronted with the exact scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimCheck {
    pub threshold: ExactRatio,
    pub claimed_k: u64,
    pub claimed_order: u64,
    pub computed_k_paper_ratio: u64,
    pub computed_k_strong_density: u64,
    pub mu_paper_at_claimed_k: ExactRatio,
    pub agrees: bool,
}

/// The published statements: first k above 0.6838 is 34 (272 vertices), first
/// k above 0.6874 is 1250 (10000 vertices).
pub const PUBLISHED_CLAIMS: [(i64, i64, u64); 2] = [(6838, 10000, 34), (6874, 10000, 1250)];

pub fn claim_checks() -> Vec<ClaimCheck> {
    PUBLISHED_CLAIMS
        .iter()
        .map(|&(num, den, claimed_k)| {
            let t = Ratio::new(num, den);
            let paper = first_k_exceeding(t, Convention::PaperRatio).expect("claim thresholds are below 11/16");
            let strong = first_k_exceeding(t, Convention::StrongDensity).expect("claim thresholds are below 11/16");
            ClaimCheck {
                threshold: t.into(),
                claimed_k,
                claimed_order: 8 * claimed_k,
                computed_k_paper_ratio: paper,
                computed_k_strong_density: strong,
                mu_paper_at_claimed_k: mu_paper(claimed_k).into(),
                agrees: paper == claimed_k,
            }
        })
        .collect()
}

/// Pipeline stage at which a certification can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Params,
    Equilibrium,
    Spin,
    Lift,
    Spectrum,
    ClosedFormMatch,
    Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CertificateVerdict {
    Certified,
    Failed { stage: Stage, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    /// Eigenvalues with `|λ| < zero_tol`; 1 means only the rotation direction.
    pub kernel_dim_est: usize,
    pub min_positive_eigenvalue: f64,
    /// Smallest eigenvalue on the hyperplane orthogonal to all-ones.
    pub algebraic_connectivity: f64,
    pub zero_tol: f64,
    pub hessian_inf_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    /// `cos α / f`, the factor from the scaled matrix back to the Hessian.
    pub scale: f64,
    pub max_gap: f64,
    pub match_tol: f64,
    pub extras: usize,
    pub extras_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationCheck {
    pub seed: u64,
    pub norm: f64,
    pub converged: bool,
    pub t_final: f64,
    pub final_distance: f64,
    pub return_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub k: u64,
    pub params: GpParams,
    pub order: u64,
    pub degree: u64,
    pub mu_paper: ExactRatio,
    pub mu_strong: ExactRatio,
    pub lemma_margin: i64,
    pub base_residual: f64,
    pub lifted_residual: f64,
    pub spectrum_summary: Option<SpectrumSummary>,
    pub closed_form: Option<ClosedFormCheck>,
    pub perturbation: Option<PerturbationCheck>,
    pub verdict: CertificateVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub run_perturbation_test: bool,
    pub seed: u64,
    pub eq_tol: f64,
    /// Zero tolerance is `zero_factor·(1 + ‖H‖∞)`.
    pub zero_factor: f64,
    /// Closed-form matching tolerance is `match_factor·(1 + ‖H‖∞)`.
    pub match_factor: f64,
    pub perturbation_norm: f64,
    pub return_tol: f64,
    pub flow: FlowOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            run_perturbation_test: false,
            seed: 0,
            eq_tol: 1e-10,
            zero_factor: 1e-9,
            match_factor: 1e-8,
            perturbation_norm: 1e-3,
            return_tol: 1e-6,
            flow: FlowOptions::default(),
        }
    }
}

/// Random direction orthogonal to all-ones with Euclidean norm `norm`.
pub fn orthogonal_perturbation(rng: &mut impl Rng, n: usize, norm: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v *= norm / len);
    x
}

/// Builds `S_k(G_(p_k))`, lifts the explicit equilibrium, and checks that it is
/// a linearly stable non-consensus equilibrium.
///
/// Checks, in order: the lifted residual is below `eq_tol`; the lifted
/// Hessian has exactly one eigenvalue within the zero tolerance and the rest
/// positive; its spectrum contains the eight closed-form base eigenvalues
/// (scaled by `cos α / f`) plus `8(k−1)` positive extras; optionally, the flow
/// returns to the equilibrium from a small random perturbation.
pub fn certify(k: u64, opts: &CertifyOptions) -> Result<BoundCertificate, BoundError> {
    let params = pk_params(k)?;
    let mut cert = BoundCertificate {
        k,
        params,
        order: 8 * k,
        degree: spin_degree(k),
        mu_paper: mu_paper(k).into(),
        mu_strong: mu_strong(k).into(),
        lemma_margin: params.lemma_margin() as i64,
        base_residual: f64::NAN,
        lifted_residual: f64::NAN,
        spectrum_summary: None,
        closed_form: None,
        perturbation: None,
        verdict: CertificateVerdict::Certified,
    };
    let fail = |mut cert: BoundCertificate, stage: Stage, reason: String| {
        cert.verdict = CertificateVerdict::Failed { stage, reason: reason.clone() };
        Err(BoundError::CertificationFailed { k, stage, reason, certificate: Box::new(cert) })
    };

    if gp::gp_lemma_check(&params).ok() != Some(Verdict::Stable) {
        return fail(cert, Stage::Params, "c² > 2ad does not hold".into());
    }
    let g = gp::gp_graph(&params);
    let theta = gp::gp_equilibrium(&params).expect("validated");
    cert.base_residual = dynamics::residual(&g, &theta).expect("dimensions match");
    if cert.base_residual >= opts.eq_tol {
        let reason = format!("base residual {:e}", cert.base_residual);
        return fail(cert, Stage::Equilibrium, reason);
    }

    let s = match graph::spin(&g, k as usize) {
        Ok(s) => s,
        Err(e) => return fail(cert, Stage::Spin, e.to_string()),
    };
    let degrees = s.degrees();
    if degrees.iter().any(|&d| d as u64 != cert.degree) {
        return fail(cert, Stage::Spin, "spin graph is not regular of the expected degree".into());
    }
    let lifted = lift::lift(&theta, &s).expect("dimensions match");
    cert.lifted_residual = dynamics::residual(&s, &lifted).expect("dimensions match");
    if cert.lifted_residual >= opts.eq_tol {
        let reason = format!("lifted residual {:e}", cert.lifted_residual);
        return fail(cert, Stage::Lift, reason);
    }

    let h = spectral::hessian(&s, &lifted).expect("dimensions match");
    let norm = spectral::inf_norm(&h);
    let zero_tol = opts.zero_factor * (1.0 + norm);
    let stab = match spectral::stability_of_hessian(h, Some(zero_tol)) {
        Ok(v) => v,
        Err(e) => return fail(cert, Stage::Spectrum, e.to_string()),
    };
    let min_positive = stab.spectrum.iter().copied().find(|&x| x > zero_tol).unwrap_or(f64::NAN);
    cert.spectrum_summary = Some(SpectrumSummary {
        kernel_dim_est: stab.kernel_dim_est,
        min_positive_eigenvalue: min_positive,
        algebraic_connectivity: stab.algebraic_connectivity,
        zero_tol,
        hessian_inf_norm: norm,
    });
    if stab.kernel_dim_est != 1 || stab.verdict != Verdict::Stable {
        let reason = format!(
            "{} near-zero eigenvalues, algebraic connectivity {:e}",
            stab.kernel_dim_est, stab.algebraic_connectivity
        );
        return fail(cert, Stage::Spectrum, reason);
    }

    let alpha = params.alpha();
    let scale = alpha.cos() / params.f() as f64;
    let mut base: Vec<f64> =
        gp::gp_closed_form_spectrum(&params).expect("validated").iter().map(|x| x * scale).collect();
    base.sort_by(f64::total_cmp);
    let match_tol = opts.match_factor * (1.0 + norm);
    let m = match lift::match_spectra(&base, &stab.spectrum, match_tol) {
        Ok(m) => m,
        Err(e) => return fail(cert, Stage::ClosedFormMatch, e.to_string()),
    };
    let extras_min = m.extras.iter().copied().fold(f64::INFINITY, f64::min);
    cert.closed_form = Some(ClosedFormCheck {
        scale,
        max_gap: m.matched.iter().map(|p| p.gap).fold(0.0, f64::max),
        match_tol,
        extras: m.extras.len(),
        extras_min,
    });
    if m.extras.len() as u64 != 8 * (k - 1) || extras_min <= zero_tol {
        let reason = format!("{} extra eigenvalues, smallest {:e}", m.extras.len(), extras_min);
        return fail(cert, Stage::ClosedFormMatch, reason);
    }

    if opts.run_perturbation_test {
        let mut rng = dynamics::trial_rng(opts.seed, k);
        let delta = orthogonal_perturbation(&mut rng, s.order(), opts.perturbation_norm);
        let start = PhaseVector::new(lifted.as_slice().iter().zip(&delta).map(|(x, d)| x + d).collect());
        let traj = match dynamics::integrate(&s, &start, &opts.flow) {
            Ok(t) => t,
            Err(e) => return fail(cert, Stage::Perturbation, e.to_string()),
        };
        let final_distance = dynamics::rotation_distance(&traj.final_state, &lifted);
        let check = PerturbationCheck {
            seed: opts.seed,
            norm: opts.perturbation_norm,
            converged: traj.converged,
            t_final: traj.t_final,
            final_distance,
            return_tol: opts.return_tol,
        };
        cert.perturbation = Some(check);
        if !traj.converged || final_distance.is_nan() || final_distance >= opts.return_tol {
            let reason = format!("converged={}, distance {:e}", traj.converged, final_distance);
            return fail(cert, Stage::Perturbation, reason);
        }
    }
    Ok(cert)
}

/// Certifies every `k` in `ks` in parallel, keeping input order.
pub fn certify_many(ks: &[u64], opts: &CertifyOptions) -> Vec<Result<BoundCertificate, BoundError>> {
    ks.par_iter().map(|&k| certify(k, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pk_instances() {
        assert_eq!(pk_params(2).unwrap(), GpParams { a: 2, b: 2, c: 2, d: 0 });
        assert_eq!(pk_params(5).unwrap(), GpParams { a: 5, b: 5, c: 5, d: 2 });
        assert_eq!(pk_params(1), Err(BoundError::KTooSmall(1)));
        for k in 2..200 {
            assert_eq!(gp::gp_lemma_check(&pk_params(k).unwrap()).unwrap(), Verdict::Stable);
        }
    }

    #[test]
    fn mu_at_two() {
        assert_eq!(mu_paper(2), Ratio::new(9, 16));
        assert_eq!(mu_strong(2), Ratio::new(9, 15));
    }

    #[test]
    fn scan_small_threshold() {
        assert_eq!(first_k_exceeding(Ratio::new(5, 8), Convention::PaperRatio).unwrap(), 5);
        assert!(matches!(
            first_k_exceeding(Ratio::new(11, 16), Convention::PaperRatio),
            Err(BoundError::ThresholdAtOrAboveLimit(_))
        ));
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        mu_sequence(3).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("k,mu_paper,mu_strong"));
        assert!(lines.next().unwrap().starts_with("2,9/16,3/5,"));
        assert!(lines.next().unwrap().starts_with("3,5/8,15/23,"));
    }

    #[test]
    fn perturbation_is_orthogonal_with_given_norm() {
        let mut rng = dynamics::trial_rng(1, 2);
        let x = orthogonal_perturbation(&mut rng, 24, 1e-3);
        assert!(x.iter().sum::<f64>().abs() < 1e-15);
        assert!((x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn certify_smallest_cases() {
        let c2 = certify(2, &CertifyOptions::default()).unwrap();
        assert_eq!(c2.order, 16);
        assert_eq!(c2.degree, 9);
        assert_eq!(c2.spectrum_summary.as_ref().unwrap().kernel_dim_est, 1);
        let c3 = certify(3, &CertifyOptions::default()).unwrap();
        assert_eq!(c3.params, GpParams { a: 3, b: 3, c: 3, d: 1 });
        assert_eq!(c3.order, 24);
        assert_eq!(c3.lemma_margin, 3);
    }
}
