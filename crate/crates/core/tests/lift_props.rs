mod common;

use nalgebra::DVector;
use rayon::prelude::*;
use spinsync_core::gp::{gp_equilibrium, gp_graph, GpParams};
use spinsync_core::lift::{lift, lift_vector, lifted_order, verify_prop1, verify_prop2, LiftOptions};
use spinsync_core::spectral::{eigen, hessian, inf_norm};
use spinsync_core::{spin, Coupling, PhaseVector, WeightedGraph};

#[test]
fn lifted_equilibria_stay_equilibria() {
    for (g, theta) in common::mixed_corpus() {
        let w = (g.max_weight() as usize).max(1);
        for k in w..=w + 3 {
            let r = verify_prop1(&g, &theta, k).unwrap();
            assert!(r.base_residual < 1e-10);
            assert!(r.lifted_residual < 1e-9, "k={k}: {}", r.lifted_residual);
        }
    }
}

#[test]
fn base_spectrum_embeds_in_lift() {
    let corpus = common::mixed_corpus();
    let failures: Vec<String> = corpus
        .par_iter()
        .enumerate()
        .filter_map(|(i, (g, theta))| {
            let k = 2 * g.total_weight() as usize + 1;
            let r = match verify_prop2(g, theta, k, &LiftOptions::default()) {
                Ok(r) => r,
                Err(e) => return Some(format!("#{i}: {e}")),
            };
            let ok = r.prop2_bound_holds
                && r.matched.len() == g.n()
                && r.extras.len() == (k - 1) * g.n()
                && r.matched.len() + r.extras.len() == lifted_order(g, k)
                && r.extras_min > 0.0;
            (!ok).then(|| format!("#{i}: extras_min={} matched={}", r.extras_min, r.matched.len()))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn lifted_eigenvectors_are_fiber_constant_lifts() {
    for (g, theta) in common::mixed_corpus().into_iter().step_by(5) {
        let k = g.max_weight() as usize + 1;
        let s = spin(&g, k).unwrap();
        let hb = hessian(&g, &theta).unwrap();
        let hl = hessian(&s, &lift(&theta, &s).unwrap()).unwrap();
        let sp = eigen(&hb, true).unwrap();
        let vecs = sp.eigenvectors.unwrap();
        for (j, &lambda) in sp.eigenvalues.iter().enumerate() {
            let x = DVector::from_vec(lift_vector(vecs.column(j).as_slice(), k));
            let defect = (&hl * &x - &x * lambda).amax();
            assert!(defect < 1e-10 * (1.0 + inf_norm(&hl)), "defect {defect}");
        }
    }
}

#[test]
fn extras_can_stay_positive_outside_the_guaranteed_regime() {
    // k = 2 is far below 2·w(G), yet the family's lift keeps positive extras
    let p = GpParams::new(2, 2, 2, 0).unwrap();
    let g = gp_graph(&p);
    let r = verify_prop2(&g, &gp_equilibrium(&p).unwrap(), 2, &LiftOptions::default()).unwrap();
    assert!(!r.prop2_bound_holds);
    assert_eq!(r.extras.len(), 8);
    assert!(r.extras_min > 0.0, "{}", r.extras_min);
}

#[test]
fn unstable_path_state_lifts() {
    // P3 with the middle vertex antipodal: an unstable equilibrium
    let g = WeightedGraph::new(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
    let theta = PhaseVector::new(vec![0.0, std::f64::consts::PI, 0.0]);
    let k = 2 * g.total_weight() as usize + 1;
    let r = verify_prop2(&g, &theta, k, &LiftOptions::default()).unwrap();
    assert!(r.matched.iter().any(|m| m.base < -0.5));
    assert!(r.extras_min > 0.0);
    assert_eq!(r.extras.len(), (k - 1) * 3);
}

#[test]
fn spin_graph_is_unweighted_and_regular_when_base_is() {
    let p = GpParams::new(3, 3, 3, 1).unwrap();
    let s = spin(&gp_graph(&p), 3).unwrap();
    let deg = s.degrees();
    assert!(deg.iter().all(|&d| d == deg[0]));
    assert_eq!(deg[0], 2 + 3 + 2 * 3 + 3 + 1);
    assert!(s.to_weighted().edges().iter().all(|e| e.w == 1));
}
