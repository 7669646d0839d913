//! Reversible Markov kernels on finite vertex sets and the discrete calculus
//! living on them.
//!
//! A [`MarkovGraph`] stores the kernel `Q` sparsely as a list of directed edges
//! `(x, y)` with `Q(x, y) > 0`, sorted by `(x, y)`, together with the stationary
//! distribution `π`. Node functions are plain `[f64]` slices indexed by vertex,
//! edge functions are `[f64]` slices indexed like [`MarkovGraph::edges`].
//!
//! The inner products are
//!
//! ```text
//! ⟨φ, ψ⟩_π = Σ_x φ(x) ψ(x) π(x)
//! ⟨Φ, Ψ⟩_Q = ½ Σ_(x,y) Φ(x,y) Ψ(x,y) Q(x,y) π(x)
//! ```
//!
//! and gradient and divergence are adjoint up to sign with respect to them.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Values attached to vertices, indexed by vertex id.
pub type NodeVector = Vec<f64>;

/// Values attached to stored directed edges, indexed like [`MarkovGraph::edges`].
/// Implicitly zero off the edge set.
pub type EdgeVector = Vec<f64>;

/// Relative tolerance for detailed balance and the normalization of `π`.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Tolerance within which the JSON loader renormalizes `π` instead of rejecting it.
pub const PI_RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Transition rate `Q(from, to) > 0`.
    pub rate: f64,
}

/// Finite state space with a reversible, irreducible Markov kernel.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct MarkovGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    reverse: Vec<usize>,
    offsets: Vec<usize>,
    pi: Vec<f64>,
    edge_weight: Vec<f64>,
    total_rate: Vec<f64>,
    labels: Option<Vec<String>>,
    pi_renormalized: bool,
}

impl MarkovGraph {
    /// Builds and validates a graph from directed edges `(x, y, Q(x, y))` and `π`.
    ///
    /// Rejects (never repairs) inputs violating normalization, detailed balance,
    /// edge symmetry, irreducibility or containing self loops.
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize, f64)>, pi: Vec<f64>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        check_len("stationary distribution", vertex_count, pi.len())?;
        if let Some(x) = pi.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidGraph(format!("pi({x}) = {} is not positive", pi[x])));
        }
        let mass: f64 = pi.iter().sum();
        if (mass - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::InvalidGraph(format!("pi sums to {mass}, expected 1")));
        }

        let mut sorted = BTreeMap::new();
        for &(x, y, rate) in &edges {
            if x >= vertex_count || y >= vertex_count {
                return Err(Error::InvalidGraph(format!("edge ({x}, {y}) references a missing vertex")));
            }
            if x == y {
                return Err(Error::InvalidGraph(format!("self loop at vertex {x}")));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::InvalidGraph(format!("edge ({x}, {y}) has rate {rate}")));
            }
            if sorted.insert((x, y), rate).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({x}, {y})")));
            }
        }
        let edges: Vec<Edge> = sorted
            .iter()
            .map(|(&(from, to), &rate)| Edge { from, to, rate })
            .collect();

        let index: BTreeMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(e, edge)| ((edge.from, edge.to), e)).collect();
        let mut reverse = Vec::with_capacity(edges.len());
        for edge in &edges {
            match index.get(&(edge.to, edge.from)) {
                Some(&r) => reverse.push(r),
                None => {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({}, {}) has no reverse edge",
                        edge.from, edge.to
                    )))
                }
            }
        }

        for (e, edge) in edges.iter().enumerate() {
            let back = &edges[reverse[e]];
            let lhs = pi[edge.from] * edge.rate;
            let rhs = pi[back.from] * back.rate;
            if (lhs - rhs).abs() > STRUCTURE_TOL * lhs.abs().max(rhs.abs()) {
                return Err(Error::InvalidGraph(format!(
                    "detailed balance fails on ({}, {}): {lhs} vs {rhs}",
                    edge.from, edge.to
                )));
            }
        }

        let mut offsets = vec![0; vertex_count + 1];
        for edge in &edges {
            offsets[edge.from + 1] += 1;
        }
        for x in 0..vertex_count {
            offsets[x + 1] += offsets[x];
        }

        let edge_weight = edges.iter().map(|e| e.rate * pi[e.from]).collect();
        let mut total_rate = vec![0.0; vertex_count];
        for edge in &edges {
            total_rate[edge.from] += edge.rate;
        }

        let graph = MarkovGraph {
            vertex_count,
            edges,
            reverse,
            offsets,
            pi,
            edge_weight,
            total_rate,
            labels: None,
            pi_renormalized: false,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not strongly connected".into()));
        }
        Ok(graph)
    }

    /// Simple random walk convention: a vertex with `m` incident edges gets
    /// `π(x) = m/|E|` and `Q(x, y) = 1/(π(x)|E|)`, where `|E|` counts directed edges.
    ///
    /// `adjacency` lists undirected edges; duplicates and both orientations are accepted.
    pub fn uniform_edge(vertex_count: usize, adjacency: &[(usize, usize)]) -> Result<Self> {
        let mut undirected = std::collections::BTreeSet::new();
        for &(x, y) in adjacency {
            if x >= vertex_count || y >= vertex_count {
                return Err(Error::InvalidGraph(format!("edge ({x}, {y}) references a missing vertex")));
            }
            if x == y {
                return Err(Error::InvalidGraph(format!("self loop at vertex {x}")));
            }
            undirected.insert((x.min(y), x.max(y)));
        }
        let directed = 2 * undirected.len();
        let mut degree = vec![0usize; vertex_count];
        for &(x, y) in &undirected {
            degree[x] += 1;
            degree[y] += 1;
        }
        if let Some(x) = degree.iter().position(|&d| d == 0) {
            if vertex_count > 1 || directed == 0 {
                return Err(Error::InvalidGraph(format!("vertex {x} is isolated")));
            }
        }
        let pi: Vec<f64> = degree.iter().map(|&d| d as f64 / directed as f64).collect();
        let mut edges = Vec::with_capacity(directed);
        for &(x, y) in &undirected {
            edges.push((x, y, 1.0 / degree[x] as f64));
            edges.push((y, x, 1.0 / degree[y] as f64));
        }
        MarkovGraph::new(vertex_count, edges, pi)
    }

    /// Two states with `Q = [[0, p], [q, 0]]` and `π = (q, p)/(p + q)`.
    pub fn two_node(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidGraph(format!("two-node rates must be positive, got p={p}, q={q}")));
        }
        let pi = vec![q / (p + q), p / (p + q)];
        MarkovGraph::new(2, vec![(0, 1, p), (1, 0, q)], pi)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_len("vertex labels", self.vertex_count, labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Index of the reversed edge `(y, x)` for edge `e = (x, y)`.
    #[inline]
    pub fn reverse(&self, e: usize) -> usize {
        self.reverse[e]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `Q(x, y) π(x)` per edge; symmetric under reversal.
    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weight
    }

    /// `Σ_y Q(x, y)` per vertex.
    pub fn total_rates(&self) -> &[f64] {
        &self.total_rate
    }

    /// Edge indices leaving `x`.
    pub fn out_edges(&self, x: usize) -> std::ops::Range<usize> {
        self.offsets[x]..self.offsets[x + 1]
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        let range = self.out_edges(from);
        self.edges[range.clone()]
            .binary_search_by_key(&to, |e| e.to)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// True when the JSON loader rescaled `π` to unit mass.
    pub fn pi_renormalized(&self) -> bool {
        self.pi_renormalized
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for e in self.out_edges(x) {
                let y = self.edges[e].to;
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// `⟨φ, ψ⟩_π`.
    pub fn inner_node(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        check_len("node vector", self.vertex_count, phi.len())?;
        check_len("node vector", self.vertex_count, psi.len())?;
        Ok(self.inner_node_unchecked(phi, psi))
    }

    #[inline]
    pub(crate) fn inner_node_unchecked(&self, phi: &[f64], psi: &[f64]) -> f64 {
        phi.iter().zip(psi).zip(&self.pi).map(|((a, b), p)| a * b * p).sum()
    }

    /// `⟨Φ, Ψ⟩_Q`.
    pub fn inner_edge(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        check_len("edge vector", self.edges.len(), phi.len())?;
        check_len("edge vector", self.edges.len(), psi.len())?;
        Ok(self.inner_edge_unchecked(phi, psi))
    }

    #[inline]
    pub(crate) fn inner_edge_unchecked(&self, phi: &[f64], psi: &[f64]) -> f64 {
        0.5 * phi
            .iter()
            .zip(psi)
            .zip(&self.edge_weight)
            .map(|((a, b), w)| a * b * w)
            .sum::<f64>()
    }

    /// `(∇ψ)(x, y) = ψ(x) − ψ(y)`.
    pub fn gradient(&self, psi: &[f64]) -> Result<EdgeVector> {
        check_len("node vector", self.vertex_count, psi.len())?;
        let mut out = vec![0.0; self.edges.len()];
        self.gradient_into(psi, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, psi: &[f64], out: &mut [f64]) {
        for (o, edge) in out.iter_mut().zip(&self.edges) {
            *o = psi[edge.from] - psi[edge.to];
        }
    }

    /// `(div Ψ)(x) = ½ Σ_y Q(x, y) (Ψ(y, x) − Ψ(x, y))`.
    pub fn divergence(&self, field: &[f64]) -> Result<NodeVector> {
        check_len("edge vector", self.edges.len(), field.len())?;
        let mut out = vec![0.0; self.vertex_count];
        self.divergence_into(field, &mut out);
        Ok(out)
    }

    pub(crate) fn divergence_into(&self, field: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (e, edge) in self.edges.iter().enumerate() {
            out[edge.from] += 0.5 * edge.rate * (field[self.reverse[e]] - field[e]);
        }
    }

    /// `(Δψ)(x) = Σ_y Q(x, y) (ψ(y) − ψ(x))`.
    pub fn laplacian(&self, psi: &[f64]) -> Result<NodeVector> {
        check_len("node vector", self.vertex_count, psi.len())?;
        let mut out = vec![0.0; self.vertex_count];
        self.laplacian_into(psi, &mut out);
        Ok(out)
    }

    pub(crate) fn laplacian_into(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for edge in &self.edges {
            out[edge.from] += edge.rate * (psi[edge.to] - psi[edge.from]);
        }
    }

    /// Density `δ_x / π(x)`: all mass at one vertex.
    pub fn dirac(&self, x: usize) -> Result<NodeVector> {
        if x >= self.vertex_count {
            return Err(Error::InvalidDensity(format!("vertex {x} does not exist")));
        }
        let mut rho = vec![0.0; self.vertex_count];
        rho[x] = 1.0 / self.pi[x];
        Ok(rho)
    }

    pub fn uniform_density(&self) -> NodeVector {
        vec![1.0; self.vertex_count]
    }

    /// `Σ_x ρ(x) π(x)`.
    pub fn mass(&self, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.pi).map(|(r, p)| r * p).sum()
    }

    /// Checks that `rho` is a probability density with respect to `π`.
    pub fn validate_density(&self, rho: &[f64]) -> Result<()> {
        check_len("density", self.vertex_count, rho.len())?;
        if let Some(x) = rho.iter().position(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidDensity(format!("rho({x}) = {} is negative or not finite", rho[x])));
        }
        let mass = self.mass(rho);
        if (mass - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::InvalidDensity(format!("density has mass {mass}, expected 1")));
        }
        Ok(())
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertex_count,
            labels: self.labels.clone(),
            pi: Some(self.pi.clone()),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec { from: e.from, to: e.to, q: Some(e.rate) })
                .collect(),
            convention: Convention::Explicit,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: GraphSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Explicit,
    UniformEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

/// On-disk graph description.
///
/// ```json
/// { "vertices": 3, "labels": ["a", "b", "c"], "pi": [0.25, 0.5, 0.25],
///   "edges": [{"from": 0, "to": 1, "q": 1.0}, ...], "convention": "explicit" }
/// ```
///
/// With `"convention": "uniform-edge"` the fields `pi` and `q` are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub convention: Convention,
}

impl GraphSpec {
    pub fn build(&self) -> Result<MarkovGraph> {
        let mut graph = match self.convention {
            Convention::UniformEdge => {
                let adjacency: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
                MarkovGraph::uniform_edge(self.vertices, &adjacency)?
            }
            Convention::Explicit => {
                let mut pi = self
                    .pi
                    .clone()
                    .ok_or_else(|| Error::InvalidGraph("explicit convention requires \"pi\"".into()))?;
                let mass: f64 = pi.iter().sum();
                let mut renormalized = false;
                if (mass - 1.0).abs() > STRUCTURE_TOL {
                    if (mass - 1.0).abs() <= PI_RENORMALIZE_TOL {
                        pi.iter_mut().for_each(|p| *p /= mass);
                        renormalized = true;
                    } else {
                        return Err(Error::InvalidGraph(format!("pi sums to {mass}, expected 1")));
                    }
                }
                let mut edges = Vec::with_capacity(self.edges.len());
                for e in &self.edges {
                    let q = e.q.ok_or_else(|| {
                        Error::InvalidGraph(format!("edge ({}, {}) is missing \"q\"", e.from, e.to))
                    })?;
                    edges.push((e.from, e.to, q));
                }
                let mut g = MarkovGraph::new(self.vertices, edges, pi)?;
                if renormalized {
                    log::info!("renormalized pi from mass {mass} to 1");
                    g.pi_renormalized = true;
                }
                g
            }
        };
        if let Some(labels) = &self.labels {
            graph = graph.with_labels(labels.clone())?;
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> MarkovGraph {
        MarkovGraph::two_node(1.0, 1.0).unwrap()
    }

    #[test]
    fn inner_products_on_two_nodes() {
        let g = two();
        assert_eq!(g.inner_node(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((g.inner_node(&[2.0, 0.0], &[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        let ab = g.edge_index(0, 1).unwrap();
        let mut phi = vec![0.0; 2];
        phi[ab] = 1.0;
        assert!((g.inner_edge(&phi, &phi).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(g.inner_edge(&[0.0, 0.0], &phi).unwrap(), 0.0);
        assert!(g.inner_node(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn antisymmetric_against_constant_vanishes() {
        let g = MarkovGraph::two_node(1.0, 0.25).unwrap();
        let ab = g.edge_index(0, 1).unwrap();
        let mut anti = vec![0.0; 2];
        anti[ab] = 0.7;
        anti[g.reverse(ab)] = -0.7;
        assert!(g.inner_edge(&anti, &[1.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gradient_divergence_laplacian_by_hand() {
        let g = two();
        let ab = g.edge_index(0, 1).unwrap();
        let ba = g.edge_index(1, 0).unwrap();
        let grad = g.gradient(&[3.0, 1.0]).unwrap();
        assert_eq!((grad[ab], grad[ba]), (2.0, -2.0));
        assert_eq!(g.gradient(&[5.0, 5.0]).unwrap(), vec![0.0, 0.0]);

        let mut psi = vec![0.0; 2];
        psi[ab] = 1.0;
        psi[ba] = -1.0;
        assert_eq!(g.divergence(&psi).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(g.divergence(&[2.0, 2.0]).unwrap(), vec![0.0, 0.0]);

        assert_eq!(g.laplacian(&[1.0, 0.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(g.laplacian(&[4.0, 4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn uniform_edge_conventions() {
        let tri = MarkovGraph::uniform_edge(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        for p in tri.pi() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(tri.edge_count(), 6);
        assert!(tri.edges().iter().all(|e| e.rate == 0.5));

        let pair = MarkovGraph::uniform_edge(2, &[(0, 1)]).unwrap();
        assert_eq!(pair.pi(), &[0.5, 0.5]);
        assert!(pair.edges().iter().all(|e| e.rate == 1.0));

        let square = MarkovGraph::uniform_edge(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(square.pi().iter().all(|&p| p == 0.25));
        assert!(square.edges().iter().all(|e| e.rate == 0.5));

        assert!(MarkovGraph::uniform_edge(4, &[(0, 1), (2, 3)]).is_err());
    }

    #[test]
    fn two_node_stationary_distribution() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        assert_eq!(g.pi(), &[0.5, 0.5]);
        let g = MarkovGraph::two_node(1.0, 3.0).unwrap();
        assert!((g.pi()[0] - 0.75).abs() < 1e-15 && (g.pi()[1] - 0.25).abs() < 1e-15);
        for (e, edge) in g.edges().iter().enumerate() {
            let back = g.edges()[g.reverse(e)];
            assert_eq!(g.pi()[edge.from] * edge.rate, g.pi()[back.from] * back.rate);
        }
        assert!(MarkovGraph::two_node(0.0, 1.0).is_err());
        assert!(MarkovGraph::two_node(1.0, -1.0).is_err());
    }

    #[test]
    fn rejects_invalid_structures() {
        let pi = vec![0.5, 0.5];
        assert!(MarkovGraph::new(2, vec![(0, 1, 1.0)], pi.clone()).is_err());
        assert!(MarkovGraph::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)], pi.clone()).is_err());
        assert!(MarkovGraph::new(2, vec![(0, 0, 1.0)], pi.clone()).is_err());
        assert!(MarkovGraph::new(2, vec![(0, 1, 1.0), (1, 0, 1.0)], vec![0.6, 0.6]).is_err());
        assert!(MarkovGraph::new(3, vec![(0, 1, 1.0), (1, 0, 1.0)], vec![0.25, 0.25, 0.5]).is_err());
    }

    #[test]
    fn json_loader_renormalizes_small_drift_only() {
        let text = r#"{"vertices": 2, "pi": [0.5000001, 0.5],
            "edges": [{"from": 0, "to": 1, "q": 1.0}, {"from": 1, "to": 0, "q": 1.0000002}],
            "convention": "explicit"}"#;
        let g = MarkovGraph::from_json_str(text).unwrap();
        assert!(g.pi_renormalized());
        assert!((g.pi().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let bad = r#"{"vertices": 2, "pi": [0.6, 0.5],
            "edges": [{"from": 0, "to": 1, "q": 1.0}, {"from": 1, "to": 0, "q": 1.2}]}"#;
        assert!(MarkovGraph::from_json_str(bad).is_err());

        let uniform = r#"{"vertices": 3, "edges": [{"from": 0, "to": 1}, {"from": 1, "to": 2}],
            "convention": "uniform-edge"}"#;
        let g = MarkovGraph::from_json_str(uniform).unwrap();
        assert_eq!(g.pi(), &[0.25, 0.5, 0.25]);
        assert!(!g.pi_renormalized());
    }

    #[test]
    fn spec_round_trip() {
        let g = MarkovGraph::uniform_edge(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let text = serde_json::to_string(&g.to_spec()).unwrap();
        let back = MarkovGraph::from_json_str(&text).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.pi(), g.pi());
    }
}
