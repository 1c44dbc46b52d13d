//! Weighted simple graphs and their k-spinning.
//!
//! A [`WeightedGraph`] carries positive integer weights on the edges of a
//! simple graph. Its k-spinning [`SpinGraph`] replaces every vertex `u` by a
//! k-clique (the *fiber* of `u`) and every weight-`w` edge `uv` by the cross
//! edges `(u,i)(v,j)` with `j ∈ {i, i+1, …, i+w−1} (mod k)`.

use std::collections::HashMap;
use std::collections::HashSet;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

/// Errors raised while building or checking graphs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge #{index} is a loop at vertex {u}")]
    LoopEdge { index: usize, u: usize },
    #[error("edge #{index} duplicates the pair {{{u},{v}}}")]
    DuplicateEdge { index: usize, u: usize, v: usize },
    #[error("edge #{index} ({u},{v}) has weight zero")]
    ZeroWeight { index: usize, u: usize, v: usize },
    #[error("edge #{index} references vertex {vertex}, but the graph has {n} vertices")]
    VertexOutOfRange { index: usize, vertex: usize, n: usize },
    #[error("spin count k={k} is smaller than the maximum edge weight {max_weight}")]
    SpinTooSmall { k: usize, max_weight: u32 },
    #[error("density needs at least 2 vertices, got {n}")]
    DegenerateOrder { n: usize },
    #[error("fibers {u} and {v} share {count} cross edges, not a multiple of k={k}")]
    NonUniformFiber { u: usize, v: usize, count: usize, k: usize },
    #[error("quotient of the spin graph does not reproduce its base graph")]
    QuotientMismatch,
}

/// A weighted edge. Stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: u32,
}

/// Anything that couples oscillators along weighted edges.
///
/// Both weighted graphs and (unweighted) spin graphs implement this, so the
/// dynamics and spectral code is written once against it.
pub trait Coupling {
    fn order(&self) -> usize;
    /// Edges with `u < v`, sorted.
    fn edges(&self) -> &[Edge];

    /// Number of neighbours of every vertex (unweighted degree).
    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.order()];
        for e in self.edges() {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Sum of incident weights of every vertex.
    fn weighted_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.order()];
        for e in self.edges() {
            deg[e.u] += u64::from(e.w);
            deg[e.v] += u64::from(e.w);
        }
        deg
    }
}

/// Simple graph on vertices `0..n` with positive integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and builds a graph. Edge orientation is irrelevant; edges are
    /// stored canonically (`u < v`, sorted).
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, u32)>) -> Result<Self, GraphError> {
        Self::build(n, edges, false)
    }

    /// Like [`WeightedGraph::new`] but silently omits weight-0 entries, which
    /// contribute nothing to the dynamics nor to any spinning.
    pub fn drop_zero_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, u32)>) -> Result<Self, GraphError> {
        Self::build(n, edges, true)
    }

    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
        drop_zero: bool,
    ) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (index, (u, v, w)) in edges.into_iter().enumerate() {
            for vertex in [u, v] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { index, vertex, n });
                }
            }
            if u == v {
                return Err(GraphError::LoopEdge { index, u });
            }
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge { index, u, v });
            }
            if w == 0 {
                if drop_zero {
                    continue;
                }
                return Err(GraphError::ZeroWeight { index, u, v });
            }
            out.push(Edge { u, v, w });
        }
        out.sort_unstable();
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_weight(&self) -> u32 {
        self.edges.iter().map(|e| e.w).max().unwrap_or(0)
    }

    /// `w(G)`, the sum of all edge weights.
    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.w)).sum()
    }

    /// Weight of the edge `{u, v}`, or 0 when absent.
    pub fn weight(&self, u: usize, v: usize) -> u32 {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&key)).map(|i| self.edges[i].w).unwrap_or(0)
    }
}

impl Coupling for WeightedGraph {
    fn order(&self) -> usize {
        self.n
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Free-function form of [`WeightedGraph::total_weight`].
pub fn total_weight(g: &WeightedGraph) -> u64 {
    g.total_weight()
}

/// Minimum degree and both strong-density conventions, as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub min_degree: usize,
    pub order: usize,
    /// `δ / (n − 1)`.
    pub strong_density: Ratio<i64>,
    /// `δ / n`.
    pub paper_ratio: Ratio<i64>,
}

/// Minimum (unweighted) degree over the order, both as `δ/(n−1)` and `δ/n`.
pub fn density_report(g: &impl Coupling) -> Result<DensityReport, GraphError> {
    let n = g.order();
    if n < 2 {
        return Err(GraphError::DegenerateOrder { n });
    }
    let min_degree = g.degrees().into_iter().min().unwrap_or(0);
    let delta = min_degree as i64;
    Ok(DensityReport {
        min_degree,
        order: n,
        strong_density: Ratio::new(delta, n as i64 - 1),
        paper_ratio: Ratio::new(delta, n as i64),
    })
}

/// The k-spinning of a weighted graph, an unweighted simple graph on `k·n`
/// vertices. Vertex `(u, i)` has id `u·k + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinGraph {
    base: WeightedGraph,
    k: usize,
    edges: Vec<Edge>,
}

impl SpinGraph {
    /// Assembles a spin graph from raw parts without checking that the edge
    /// set actually is the spinning of `base`; use [`quotient_check`] for that.
    pub fn from_parts(base: WeightedGraph, k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(u, v)| if u < v { Edge { u, v, w: 1 } } else { Edge { u: v, v: u, w: 1 } })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Self { base, k, edges }
    }

    pub fn base(&self) -> &WeightedGraph {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn id(&self, u: usize, i: usize) -> usize {
        u * self.k + i
    }

    /// Inverse of [`SpinGraph::id`]: `(base vertex, spin index)`.
    pub fn fiber_of(&self, id: usize) -> (usize, usize) {
        (id / self.k, id % self.k)
    }

    /// The spin graph as a weighted graph with every weight equal to 1.
    pub fn to_weighted(&self) -> WeightedGraph {
        WeightedGraph { n: self.order(), edges: self.edges.clone() }
    }
}

impl Coupling for SpinGraph {
    fn order(&self) -> usize {
        self.base.n * self.k
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Builds the k-spinning `S_k(g)`.
///
/// Cross edges of a base edge `uv` (`u < v`) join `(u,i)` to `(v, i+s mod k)`
/// for `s < w_uv`.
pub fn spin(g: &WeightedGraph, k: usize) -> Result<SpinGraph, GraphError> {
    let max_weight = g.max_weight();
    if k == 0 || (k as u64) < u64::from(max_weight) {
        return Err(GraphError::SpinTooSmall { k, max_weight });
    }
    let n = g.n();
    let fiber_edges = n * k * (k - 1) / 2;
    let cross_edges = k * g.total_weight() as usize;
    let mut edges = Vec::with_capacity(fiber_edges + cross_edges);
    for u in 0..n {
        for i in 0..k {
            for j in i + 1..k {
                edges.push(Edge { u: u * k + i, v: u * k + j, w: 1 });
            }
        }
    }
    for e in g.edges() {
        for i in 0..k {
            for s in 0..e.w as usize {
                let j = (i + s) % k;
                edges.push(Edge { u: e.u * k + i, v: e.v * k + j, w: 1 });
            }
        }
    }
    edges.sort_unstable();
    Ok(SpinGraph { base: g.clone(), k, edges })
}

/// Contracts every fiber and recovers the weighted base graph from the
/// number of cross edges between fibers (which must be `k·w_uv`).
pub fn quotient_check(s: &SpinGraph) -> Result<WeightedGraph, GraphError> {
    let k = s.k;
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &s.edges {
        let (fu, fv) = (e.u / k, e.v / k);
        if fu != fv {
            let key = if fu < fv { (fu, fv) } else { (fv, fu) };
            *counts.entry(key).or_default() += 1;
        }
    }
    let mut edges = Vec::with_capacity(counts.len());
    for ((u, v), count) in counts {
        if count % k != 0 {
            return Err(GraphError::NonUniformFiber { u, v, count, k });
        }
        edges.push((u, v, (count / k) as u32));
    }
    let g = WeightedGraph::new(s.base.n, edges)?;
    if g != s.base {
        return Err(GraphError::QuotientMismatch);
    }
    Ok(g)
}
