//! Hessians of the Kuramoto potential, a cyclic Jacobi eigensolver, and
//! linear-stability classification of equilibria.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, PhaseVector};
use crate::graph::{Coupling, Edge};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("phase vector has {got} entries, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("Jacobi iteration stalled after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("point is not an equilibrium (residual {residual:e} ≥ {tol:e})")]
    NotAnEquilibrium { residual: f64, tol: f64 },
    #[error("stability needs at least 2 vertices")]
    DegenerateOrder,
}

/// The Hessian `U''_θ` is a dense symmetric matrix.
pub type HessianMatrix = DMatrix<f64>;

pub(crate) fn hessian_matrix(edges: &[Edge], n: usize, theta: &[f64]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for e in edges {
        let x = f64::from(e.w) * (theta[e.u] - theta[e.v]).cos();
        h[(e.u, e.v)] -= x;
        h[(e.v, e.u)] -= x;
        h[(e.u, e.u)] += x;
        h[(e.v, e.v)] += x;
    }
    h
}

/// Hessian of the potential at `theta`: `−w_uv cos(θ_u − θ_v)` off the
/// diagonal on edges, row sums zero.
pub fn hessian(g: &impl Coupling, theta: &PhaseVector) -> Result<HessianMatrix, SpectralError> {
    if g.order() != theta.len() {
        return Err(SpectralError::DimensionMismatch { expected: g.order(), got: theta.len() });
    }
    Ok(hessian_matrix(g.edges(), g.order(), theta.as_slice()))
}

/// Weighted Laplacian, i.e. the Hessian at any consensus.
pub fn laplacian(g: &impl Coupling) -> DMatrix<f64> {
    hessian_matrix(g.edges(), g.order(), &vec![0.0; g.order()])
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix in ascending order, with optional
/// orthonormal eigenvectors as the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymSpectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<f64>>,
    /// Frobenius norm of the off-diagonal part left when iteration stopped;
    /// bounds the eigenvalue error.
    pub off_diagonal_norm: f64,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100;

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            s += a[p * n + q] * a[p * n + q];
        }
    }
    (2.0 * s).sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all `(p, q)` pairs, annihilating `a_pq` with a plane rotation,
/// until the off-diagonal Frobenius norm drops below `1e-12·‖M‖_F`.
pub fn eigen(m: &DMatrix<f64>, want_vectors: bool) -> Result<SymSpectrum, SpectralError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SpectralError::NotSymmetric { defect: f64::INFINITY });
    }
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let defect = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max((m[(i, j)] - m[(j, i)]).abs()));
    if defect > 1e-12 * (1.0 + scale) {
        return Err(SpectralError::NotSymmetric { defect });
    }

    // row-major working copy, symmetrized
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        (0..n).for_each(|i| v[i * n + i] = 1.0);
        v
    });

    let target = 1e-12 * a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut sweeps = 0;
    let mut off = off_norm(&a, n);
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(SpectralError::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = c * vrp - s * vrq;
                        v[r * n + q] = s * vrp + c * vrq;
                    }
                }
            }
        }
        off = off_norm(&a, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = v.map(|v| DMatrix::from_fn(n, n, |r, col| v[r * n + order[col]]));
    Ok(SymSpectrum { eigenvalues, eigenvectors, off_diagonal_norm: off, sweeps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityOptions {
    pub eq_tol: f64,
    /// Absolute zero tolerance; `None` means `1e-9·(1 + ‖H‖∞)`.
    pub zero_tol: Option<f64>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eq_tol: 1e-10, zero_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    /// Smallest Hessian eigenvalue on the hyperplane orthogonal to all-ones.
    pub algebraic_connectivity: f64,
    /// Hessian eigenvalues with `|λ| < zero_tol`, the all-ones direction included.
    pub kernel_dim_est: usize,
    pub verdict: Verdict,
    pub zero_tol: f64,
    pub hessian_inf_norm: f64,
    /// Full Hessian spectrum, ascending.
    pub spectrum: Vec<f64>,
}

/// Sign of the algebraic connectivity of an equilibrium.
///
/// The all-ones kernel direction is moved out of the way by the rank-one
/// shift `(1 + ‖H‖∞)·11ᵀ/n`, which exceeds every other eigenvalue; the rest of
/// the shifted spectrum is the spectrum on the orthogonal hyperplane.
pub fn stability(
    g: &impl Coupling,
    theta: &PhaseVector,
    opts: &StabilityOptions,
) -> Result<StabilityVerdict, SpectralError> {
    let h = hessian(g, theta)?;
    let res = dynamics::residual(g, theta).expect("dimension already checked");
    if res >= opts.eq_tol {
        return Err(SpectralError::NotAnEquilibrium { residual: res, tol: opts.eq_tol });
    }
    stability_of_hessian(h, opts.zero_tol)
}

/// [`stability`] for a Hessian that is already assembled.
pub fn stability_of_hessian(mut h: HessianMatrix, zero_tol: Option<f64>) -> Result<StabilityVerdict, SpectralError> {
    let n = h.nrows();
    if n < 2 {
        return Err(SpectralError::DegenerateOrder);
    }
    let norm = inf_norm(&h);
    let zero_tol = zero_tol.unwrap_or(1e-9 * (1.0 + norm));
    h.add_scalar_mut((1.0 + norm) / n as f64);
    let mut spectrum = eigen(&h, false)?.eigenvalues;
    spectrum.pop();
    let algebraic_connectivity = spectrum[0];
    let at = spectrum.partition_point(|&x| x < 0.0);
    spectrum.insert(at, 0.0);
    let kernel_dim_est = spectrum.iter().filter(|x| x.abs() < zero_tol).count();
    let verdict = if algebraic_connectivity > zero_tol {
        Verdict::Stable
    } else if algebraic_connectivity < -zero_tol {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    Ok(StabilityVerdict { algebraic_connectivity, kernel_dim_est, verdict, zero_tol, hessian_inf_norm: norm, spectrum })
}
