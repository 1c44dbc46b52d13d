#![allow(dead_code)]

use proptest::test_runner::Config;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinsync_core::dynamics::{self, FlowOptions};
use spinsync_core::{Coupling, PhaseVector, WeightedGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with `n` vertices, each candidate pair present with
/// probability `p`, weights uniform in `1..=max_w`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, max_w: u32) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v, rng.random_range(1..=max_w)));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// Random spanning tree plus up to `extra` further edges; always connected.
pub fn random_connected_sparse(rng: &mut impl Rng, n: usize, extra: usize, max_w: u32) -> WeightedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        edges.push((parent.min(order[i]), parent.max(order[i]), rng.random_range(1..=max_w)));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && !edges.iter().any(|&(a, b, _)| (a, b) == (u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v), rng.random_range(1..=max_w)));
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

pub fn random_phases(rng: &mut impl Rng, n: usize) -> PhaseVector {
    PhaseVector::new((0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect())
}

/// Proptest settings without on-disk regression files.
pub fn pt_config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

/// On a tree every assignment of 0/π phase differences along edges is an
/// equilibrium; most of them are unstable.
pub fn tree_equilibrium(rng: &mut impl Rng, n: usize, max_w: u32) -> (WeightedGraph, PhaseVector) {
    let g = random_connected_sparse(rng, n, 0, max_w);
    let mut theta = vec![f64::NAN; n];
    theta[0] = rng.random_range(0.0..std::f64::consts::TAU);
    while theta.iter().any(|x| x.is_nan()) {
        for e in g.edges() {
            let flip = if rng.random_bool(0.5) { std::f64::consts::PI } else { 0.0 };
            match (theta[e.u].is_nan(), theta[e.v].is_nan()) {
                (false, true) => theta[e.v] = theta[e.u] + flip,
                (true, false) => theta[e.u] = theta[e.v] + flip,
                _ => {}
            }
        }
    }
    (g, PhaseVector::new(theta))
}

/// 100 connected graphs (n ≤ 8, w ≤ 3), each with an equilibrium found by
/// flowing a random start and polishing to residual below 1e-10.
pub fn equilibrium_corpus() -> Vec<(WeightedGraph, PhaseVector)> {
    let mut r = rng(0x5eed);
    let opts = FlowOptions::default();
    let mut out = Vec::with_capacity(100);
    while out.len() < 100 {
        let n = r.random_range(2..=8);
        let extra = r.random_range(0..=2);
        let g = random_connected_sparse(&mut r, n, extra, 3);
        let start = random_phases(&mut r, n);
        if let Ok(theta) = dynamics::descend_to_equilibrium(&g, &start, &opts) {
            out.push((g, theta));
        }
    }
    out
}

/// [`equilibrium_corpus`] followed by 50 mostly unstable tree equilibria.
pub fn mixed_corpus() -> Vec<(WeightedGraph, PhaseVector)> {
    let mut r = rng(0x7eee);
    let mut out = equilibrium_corpus();
    for _ in 0..50 {
        let n = r.random_range(2..=8);
        out.push(tree_equilibrium(&mut r, n, 3));
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
