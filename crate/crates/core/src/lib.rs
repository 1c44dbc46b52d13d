//! Weighted-to-unweighted k-spinning for the homogeneous Kuramoto model.
//!
//! * [`graph`]: weighted graphs, densities, the k-spinning `S_k(G)`.
//! * [`dynamics`]: the gradient flow, its potential, RK4 integration,
//!   equilibrium classification and a Monte Carlo harness.
//! * [`spectral`]: Hessians at phase points, a Jacobi eigensolver,
//!   algebraic connectivity of equilibria.
//! * [`lift`]: lifting equilibria to `S_k(G)` and matching spectra.
//! * [`gp`]: the eight-vertex family `G_(a,b,c,d)` with closed-form spectra.
//! * [`bound`]: certificates that `S_k(G_(p_k))` has a stable non-consensus
//!   equilibrium, and the density sequence tending to 11/16.
//! * [`io`]: file formats and report emission.

pub mod bound;
pub mod dynamics;
pub mod gp;
pub mod graph;
pub mod io;
pub mod lift;
pub mod ratio;
pub mod spectral;

pub use bound::{certify, BoundCertificate, CertifyOptions, Convention, MuSequence};
pub use dynamics::{FlowOptions, McReport, PhaseVector, TrajectoryResult};
pub use gp::{GpAnalysis, GpParams};
pub use graph::{spin, Coupling, DensityReport, SpinGraph, WeightedGraph};
pub use lift::LiftReport;
pub use ratio::ExactRatio;
pub use spectral::{StabilityVerdict, SymSpectrum, Verdict};
