//! The eight-vertex weighted family `G_(a,b,c,d)` with an explicit
//! non-consensus equilibrium and closed-form Hessian spectrum.
//!
//! Vertices are `Z_8`. Edge classes, indices mod 8 and `i ∈ {0,1,2,3}`:
//!
//! | class | edges            | weight |
//! |-------|------------------|--------|
//! | a     | `(2i, 2i+1)`     | `a`    |
//! | b     | `(v, v+2)`       | `b`    |
//! | c     | `(2i+1, 2i+2)`   | `c`    |
//! | d     | `(2i+1, 2i+4)`   | `d`    |
//!
//! Every vertex meets one edge of each class a, c, d and two of class b. At
//! the equilibrium `θ_2i = iπ/2`, `θ_2i+1 = iπ/2 + α` with
//! `tan α = c/(a−d)`, the b-edges carry a quarter turn and drop out of the
//! Hessian, which scaled by `f/cos α` (`f = a − d`) becomes the integer
//! matrix `M` built by [`gp_scaled_hessian`].

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::PhaseVector;
use crate::graph::WeightedGraph;
use crate::spectral::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GpError {
    #[error("invalid parameters {0:?}: need a ≥ 1, c ≥ 1 and a > d")]
    InvalidParams(GpParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GpParams {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl GpParams {
    pub fn new(a: u32, b: u32, c: u32, d: u32) -> Result<Self, GpError> {
        let p = Self { a, b, c, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.a >= 1 && self.c >= 1 && self.a > self.d {
            Ok(())
        } else {
            Err(GpError::InvalidParams(*self))
        }
    }

    /// `f = a − d`.
    pub fn f(&self) -> i128 {
        i128::from(self.a) - i128::from(self.d)
    }

    /// `c² − 2ad`, exact; its sign decides the stability of the equilibrium.
    pub fn lemma_margin(&self) -> i128 {
        let (a, c, d) = (i128::from(self.a), i128::from(self.c), i128::from(self.d));
        c * c - 2 * a * d
    }

    /// `4a²f² − 4af³ + c⁴ + f⁴ = c⁴ + f²(2a − f)²`, exact.
    pub fn radicand(&self) -> i128 {
        let (a, c, f) = (i128::from(self.a), i128::from(self.c), self.f());
        4 * a * a * f * f - 4 * a * f * f * f + c.pow(4) + f.pow(4)
    }

    /// `r = √(4a²f² − 4af³ + c⁴ + f⁴)`.
    pub fn r(&self) -> f64 {
        exact_sqrt(self.radicand())
    }

    /// `α = arctan(c/(a−d))`.
    pub fn alpha(&self) -> f64 {
        (f64::from(self.c) / self.f() as f64).atan()
    }
}

impl std::str::FromStr for GpParams {
    type Err = String;

    /// Parses `"a,b,c,d"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u32> = s
            .split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let [a, b, c, d] = parts[..] else {
            return Err(format!("expected four comma-separated weights, got {}", parts.len()));
        };
        Self::new(a, b, c, d).map_err(|e| e.to_string())
    }
}

/// Square root that is exact whenever the integer is a perfect square.
fn exact_sqrt(x: i128) -> f64 {
    let s = (x as f64).sqrt();
    let t = s.round() as i128;
    if t * t == x {
        t as f64
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeClass {
    A,
    B,
    C,
    D,
}

/// All 20 potential edges with their class, before zero weights are dropped.
pub fn gp_edge_classes() -> Vec<(usize, usize, EdgeClass)> {
    let mut edges = Vec::with_capacity(20);
    for i in 0..4 {
        edges.push((2 * i, 2 * i + 1, EdgeClass::A));
    }
    for v in 0..8 {
        edges.push((v, (v + 2) % 8, EdgeClass::B));
    }
    for i in 0..4 {
        edges.push((2 * i + 1, (2 * i + 2) % 8, EdgeClass::C));
    }
    for i in 0..4 {
        edges.push((2 * i + 1, (2 * i + 4) % 8, EdgeClass::D));
    }
    edges
}

/// Builds `G_p`; zero-weight classes are omitted. Any weights are accepted,
/// the equilibrium routines are the ones that need `a > d`.
pub fn gp_graph(p: &GpParams) -> WeightedGraph {
    let edges = gp_edge_classes().into_iter().map(|(u, v, class)| {
        let w = match class {
            EdgeClass::A => p.a,
            EdgeClass::B => p.b,
            EdgeClass::C => p.c,
            EdgeClass::D => p.d,
        };
        (u, v, w)
    });
    WeightedGraph::drop_zero_edges(8, edges).expect("the edge classes form a simple graph on Z_8")
}

/// `θ_2i = iπ/2`, `θ_2i+1 = iπ/2 + α`.
pub fn gp_equilibrium(p: &GpParams) -> Result<PhaseVector, GpError> {
    p.validate()?;
    let alpha = p.alpha();
    Ok(PhaseVector::new((0..8).map(|v| (v / 2) as f64 * FRAC_PI_2 + if v % 2 == 1 { alpha } else { 0.0 }).collect()))
}

/// The integer matrix `(f/cos α)·U''` at the equilibrium: diagonal `c²+f²`,
/// `−af` on a-edges, `−c²` on c-edges, `af−f²` on d-edges.
pub fn gp_scaled_hessian(p: &GpParams) -> Result<DMatrix<f64>, GpError> {
    p.validate()?;
    let (a, c, f) = (i128::from(p.a), i128::from(p.c), p.f());
    let mut m = DMatrix::zeros(8, 8);
    for v in 0..8 {
        m[(v, v)] = (c * c + f * f) as f64;
    }
    for (u, v, class) in gp_edge_classes() {
        let x = match class {
            EdgeClass::A => -a * f,
            EdgeClass::B => continue,
            EdgeClass::C => -c * c,
            EdgeClass::D => a * f - f * f,
        };
        m[(u, v)] = x as f64;
        m[(v, u)] = x as f64;
    }
    Ok(m)
}

/// `{0, 2f², 2c², 2c²+2f², c²+f²±r (each twice)}`, ascending.
pub fn gp_closed_form_spectrum(p: &GpParams) -> Result<[f64; 8], GpError> {
    p.validate()?;
    let mut s = closed_form_in_basis_order(p);
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Eigenvalues in the column order of [`gp_eigenvector_basis`].
pub fn closed_form_in_basis_order(p: &GpParams) -> [f64; 8] {
    let (c, f) = (i128::from(p.c), p.f());
    let (c2, f2) = ((c * c) as f64, (f * f) as f64);
    let r = p.r();
    let plus = c2 + f2 + r;
    let minus = c2 + f2 - r;
    [plus, plus, minus, minus, 0.0, 2.0 * f2, 2.0 * c2, 2.0 * c2 + 2.0 * f2]
}

/// Explicit eigenvector basis of the scaled Hessian; column `j` pairs with
/// entry `j` of [`closed_form_in_basis_order`].
pub fn gp_eigenvector_basis(p: &GpParams) -> Result<DMatrix<f64>, GpError> {
    p.validate()?;
    let (a, c, f) = (i128::from(p.a), i128::from(p.c), p.f());
    let c2 = (c * c) as f64;
    let r = p.r() / c2;
    let neg = (f * f - 2 * a * f) as f64 / c2;
    let pos = (f * (2 * a - f)) as f64 / c2;
    #[rustfmt::skip]
    let rows = [
        -r,   neg,  r,    neg,  1.0,  1.0, -1.0, -1.0,
        pos,  r,    pos, -r,    1.0, -1.0, -1.0,  1.0,
        0.0, -1.0,  0.0, -1.0,  1.0, -1.0,  1.0, -1.0,
        -1.0, 0.0, -1.0,  0.0,  1.0,  1.0,  1.0,  1.0,
        r,    pos, -r,    pos,  1.0,  1.0, -1.0, -1.0,
        neg, -r,    neg,  r,    1.0, -1.0, -1.0,  1.0,
        0.0,  1.0,  0.0,  1.0,  1.0, -1.0,  1.0, -1.0,
        1.0,  0.0,  1.0,  0.0,  1.0,  1.0,  1.0,  1.0,
    ];
    Ok(DMatrix::from_row_slice(8, 8, &rows))
}

/// Stability of the equilibrium from the exact sign of `c² − 2ad`.
pub fn gp_lemma_check(p: &GpParams) -> Result<Verdict, GpError> {
    p.validate()?;
    Ok(match p.lemma_margin() {
        m if m > 0 => Verdict::Stable,
        0 => Verdict::Marginal,
        _ => Verdict::Unstable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpAnalysis {
    pub params: GpParams,
    pub alpha: f64,
    pub beta: f64,
    pub f: i64,
    pub r: f64,
    pub closed_spectrum: [f64; 8],
    pub lemma_stable: bool,
    pub lemma_marginal: bool,
}

pub fn gp_analysis(p: &GpParams) -> Result<GpAnalysis, GpError> {
    let verdict = gp_lemma_check(p)?;
    let alpha = p.alpha();
    Ok(GpAnalysis {
        params: *p,
        alpha,
        beta: FRAC_PI_2 - alpha,
        f: p.f() as i64,
        r: p.r(),
        closed_spectrum: gp_closed_form_spectrum(p)?,
        lemma_stable: verdict == Verdict::Stable,
        lemma_marginal: verdict == Verdict::Marginal,
    })
}
