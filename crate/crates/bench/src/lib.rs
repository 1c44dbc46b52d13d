//! Fixtures shared by the criterion benches.

use spinsync_core::bound::pk_params;
use spinsync_core::gp::{gp_equilibrium, gp_graph};
use spinsync_core::lift::lift;
use spinsync_core::spectral::{hessian, HessianMatrix};
use spinsync_core::{spin, SpinGraph};

/// `S_k(G_(p_k))`, the certified family member of order `8k`.
pub fn family_spin(k: u64) -> SpinGraph {
    spin(&gp_graph(&pk_params(k).expect("k ≥ 2")), k as usize).expect("k ≥ max weight")
}

/// Hessian of `S_k(G_(p_k))` at the lifted equilibrium.
pub fn family_hessian(k: u64) -> HessianMatrix {
    let s = family_spin(k);
    let theta = gp_equilibrium(&pk_params(k).expect("k ≥ 2")).expect("p_k is valid");
    hessian(&s, &lift(&theta, &s).expect("orders agree")).expect("orders agree")
}
