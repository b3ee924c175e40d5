//! Random `k`-regular graphs and their certificates: edge connectivity, second adjacency
//! eigenvalue and edge-boundary expansion.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::ford_fulkerson;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, Error, Result};
use crate::seeds::derive_seed;

pub const MAX_FLOW_VERTICES: usize = 64;
pub const MAX_DENSE_EIGEN: usize = 2000;
pub const MAX_EXHAUSTIVE_EXPANSION: usize = 24;
pub const DEFAULT_EPS: f64 = 0.5;
pub const DEFAULT_C: f64 = 0.08;
const PAIRING_BUDGET: usize = 10_000;
const EXPANSION_SAMPLES: usize = 20_000;

/// A simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut adj = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Parameter(format!("edge ({u},{v}) outside 0..{n}")));
            }
            if u == v {
                return Err(Error::Parameter(format!("loop at {u}")));
            }
            if !adj[u].insert(v) || !adj[v].insert(u) {
                return Err(Error::Parameter(format!("repeated edge ({u},{v})")));
            }
        }
        Ok(Graph { adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.vertex_count();
        DMatrix::from_fn(n, n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// `|boundary(S)|` for `S` given as a membership vector.
    pub fn boundary(&self, in_s: &[bool]) -> usize {
        (0..self.vertex_count())
            .filter(|&v| in_s[v])
            .map(|v| self.neighbors(v).filter(|&w| !in_s[w]).count())
            .sum()
    }

    /// One `"u v"` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    pub fn from_edge_list(n: usize, text: &str) -> Result<Graph> {
        let mut edges = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(Error::Parameter(format!("bad edge line {line:?}"))),
            }
        }
        Graph::from_edges(n, &edges)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub edge_connectivity: usize,
    pub mu2: f64,
    /// `true` when every checked set satisfied `|dS| >= c|S|`.
    pub expansion_checked: bool,
    /// `false` when the expansion check fell back to sampling.
    pub expansion_exhaustive: bool,
    /// Smallest `|dS| / |S|` seen.
    pub c_witness: f64,
    pub eps: f64,
    pub c: f64,
}

impl Certificate {
    pub fn passes(&self, k: usize) -> bool {
        self.edge_connectivity == k && self.mu2 <= ramanujan_bound(k) + self.eps && self.expansion_checked
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `2 sqrt(k-1)`.
pub fn ramanujan_bound(k: usize) -> f64 {
    2.0 * ((k as f64) - 1.0).sqrt()
}

/// A simple `k`-regular graph, optionally carrying a certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularGraph {
    graph: Graph,
    k: usize,
    certificate: Option<Certificate>,
}

impl RegularGraph {
    pub fn new(graph: Graph, k: usize) -> Result<RegularGraph> {
        if let Some(v) = (0..graph.vertex_count()).find(|&v| graph.degree(v) != k) {
            return Err(Error::Parameter(format!("vertex {v} has degree {}, expected {k}", graph.degree(v))));
        }
        Ok(RegularGraph {
            graph,
            k,
            certificate: None,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.certificate.as_ref()
    }

    /// Computes and attaches the certificate.
    pub fn certify(&mut self, eps: f64, c: f64, seed: u64) -> Result<&Certificate> {
        let expansion = expansion_check(&self.graph, c, seed);
        let cert = Certificate {
            edge_connectivity: edge_connectivity(&self.graph)?,
            mu2: second_eigenvalue(&self.graph),
            expansion_checked: expansion.holds,
            expansion_exhaustive: expansion.exhaustive,
            c_witness: expansion.min_ratio,
            eps,
            c,
        };
        Ok(self.certificate.insert(cert))
    }

    pub fn is_certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.passes(self.k))
    }
}

fn check_regular_params(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::Parameter("N and k must be positive".into()));
    }
    if n % 2 == 1 {
        return Err(Error::Parameter(format!("N = {n} must be even")));
    }
    if n <= k {
        return Err(Error::Parameter(format!("need N > k, got N = {n}, k = {k}")));
    }
    Ok(())
}

/// Configuration-model sample, rejecting pairings with loops or repeated edges.
pub fn random_regular(n: usize, k: usize, seed: u64) -> Result<RegularGraph> {
    check_regular_params(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    'retry: for _ in 0..PAIRING_BUDGET {
        points.shuffle(&mut rng);
        let mut adj = vec![BTreeSet::new(); n];
        for pair in points.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !adj[u].insert(v) {
                continue 'retry;
            }
            adj[v].insert(u);
        }
        return RegularGraph::new(Graph { adj }, k);
    }
    Err(Error::Generation {
        attempts: PAIRING_BUDGET,
        log: format!("no simple pairing found for N = {n}, k = {k}"),
    })
}

/// Global minimum edge cut: min over `t != 0` of the max-flow from vertex 0 to `t`.
pub fn edge_connectivity(g: &Graph) -> Result<usize> {
    let n = g.vertex_count();
    if n > MAX_FLOW_VERTICES {
        return Err(capacity("max-flow vertex count", n as u128, MAX_FLOW_VERTICES as u128));
    }
    if n < 2 {
        return Ok(0);
    }
    let mut net = DiGraph::<(), u32>::with_capacity(n, 2 * g.edge_count());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| net.add_node(())).collect();
    for (u, v) in g.edges() {
        net.add_edge(nodes[u], nodes[v], 1);
        net.add_edge(nodes[v], nodes[u], 1);
    }
    Ok((1..n)
        .map(|t| ford_fulkerson(&net, nodes[0], nodes[t]).0 as usize)
        .min()
        .unwrap())
}

/// Second largest adjacency eigenvalue.
pub fn second_eigenvalue(g: &Graph) -> f64 {
    let n = g.vertex_count();
    if n < 2 {
        return f64::NAN;
    }
    if n <= MAX_DENSE_EIGEN {
        let mut eig: Vec<f64> = g.adjacency().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        return eig[1];
    }
    second_eigenvalue_power(g, 1e-10, 100_000)
}

/// Power iteration on `A + dI` restricted to the complement of the all-ones vector.
/// Valid for regular graphs, where the all-ones vector is the top eigenvector.
pub fn second_eigenvalue_power(g: &Graph, tol: f64, max_iter: usize) -> f64 {
    let n = g.vertex_count();
    let shift = (0..n).map(|v| g.degree(v)).max().unwrap_or(0) as f64;
    let apply = |x: &DVector<f64>| {
        DVector::from_fn(n, |v, _| shift * x[v] + g.neighbors(v).map(|w| x[w]).sum::<f64>())
    };
    let deflate = |x: &mut DVector<f64>| {
        let mean = x.mean();
        x.add_scalar_mut(-mean);
    };
    let mut x = DVector::from_fn(n, |i, _| ((i * 7919 + 13) % 101) as f64 - 50.0);
    deflate(&mut x);
    x.normalize_mut();
    let mut value = 0.0;
    for _ in 0..max_iter {
        let mut y = apply(&x);
        deflate(&mut y);
        let next = x.dot(&y);
        y.normalize_mut();
        let residual = (&y - &x).norm();
        x = y;
        if (next - value).abs() < tol && residual < tol.sqrt() {
            value = next;
            break;
        }
        value = next;
    }
    value - shift
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub holds: bool,
    pub min_ratio: f64,
    /// A set attaining `min_ratio`.
    pub witness: Vec<usize>,
    pub exhaustive: bool,
}

/// Checks `|dS| >= c|S|` for `0 < |S| <= N/2`: every such set when `N <= 24`,
/// random sets otherwise.
pub fn expansion_check(g: &Graph, c: f64, seed: u64) -> ExpansionReport {
    let n = g.vertex_count();
    let mut best = (f64::INFINITY, Vec::new());
    let mut consider = |members: &[bool]| {
        let size = members.iter().filter(|&&b| b).count();
        if size == 0 || size > n / 2 {
            return;
        }
        let ratio = g.boundary(members) as f64 / size as f64;
        if ratio < best.0 {
            best = (ratio, (0..n).filter(|&v| members[v]).collect());
        }
    };
    let exhaustive = n <= MAX_EXHAUSTIVE_EXPANSION;
    if exhaustive {
        let masks: Vec<u64> = g.adj.iter().map(|ns| ns.iter().fold(0u64, |m, &w| m | 1 << w)).collect();
        let mut min = (f64::INFINITY, 0u64);
        for s in 1u64..(1u64 << n) {
            let size = s.count_ones() as usize;
            if size > n / 2 {
                continue;
            }
            let mut boundary = 0;
            let mut rest = s;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                boundary += (masks[v] & !s).count_ones();
                rest &= rest - 1;
            }
            let ratio = boundary as f64 / size as f64;
            if ratio < min.0 {
                min = (ratio, s);
            }
        }
        if n > 0 {
            let members: Vec<bool> = (0..n).map(|v| min.1 >> v & 1 == 1).collect();
            consider(&members);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..EXPANSION_SAMPLES {
            order.shuffle(&mut rng);
            let size = rng.random_range(1..=n / 2);
            let mut members = vec![false; n];
            order[..size].iter().for_each(|&v| members[v] = true);
            consider(&members);
        }
        // breadth-first balls catch the sparse cuts random sets miss
        for root in 0..n {
            let mut members = vec![false; n];
            let mut frontier = vec![root];
            members[root] = true;
            let mut size = 1;
            while size < n / 2 && !frontier.is_empty() {
                let v = frontier.remove(0);
                for w in g.neighbors(v) {
                    if !members[w] && size < n / 2 {
                        members[w] = true;
                        size += 1;
                        frontier.push(w);
                        consider(&members);
                    }
                }
            }
        }
    }
    ExpansionReport {
        holds: best.0 >= c,
        min_ratio: best.0,
        witness: best.1,
        exhaustive,
    }
}

/// Resamples until a graph passes every certificate; attempts run in parallel and the
/// lowest passing attempt index wins.
pub fn generate_certified(n: usize, k: usize, eps: f64, c: f64, seed: u64, max_attempts: usize) -> Result<RegularGraph> {
    check_regular_params(n, k)?;
    let attempt = |i: usize| -> std::result::Result<RegularGraph, String> {
        let s = derive_seed(seed, i as u64);
        let mut g = random_regular(n, k, s).map_err(|e| e.to_string())?;
        let cert = g.certify(eps, c, derive_seed(s, 1)).map_err(|e| e.to_string())?.clone();
        if cert.passes(k) {
            Ok(g)
        } else {
            Err(format!(
                "connectivity {}, mu2 {:.4}, expansion {:.4}",
                cert.edge_connectivity, cert.mu2, cert.c_witness
            ))
        }
    };
    if let Some(Ok(g)) = (0..max_attempts).into_par_iter().map(attempt).find_first(|r| r.is_ok()) {
        return Ok(g);
    }
    let log = (0..max_attempts.min(10))
        .map(|i| format!("#{i}: {}", attempt(i).err().unwrap_or_default()))
        .collect::<Vec<_>>()
        .join("; ");
    Err(Error::Generation {
        attempts: max_attempts,
        log,
    })
}

pub mod fixtures {
    //! Small named graphs with known spectra.

    use super::{Graph, RegularGraph};

    pub fn complete(n: usize) -> RegularGraph {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        RegularGraph::new(Graph::from_edges(n, &edges).unwrap(), n - 1).unwrap()
    }

    pub fn petersen() -> RegularGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        RegularGraph::new(Graph::from_edges(10, &edges).unwrap(), 3).unwrap()
    }

    pub fn complete_bipartite(m: usize) -> RegularGraph {
        let edges: Vec<_> = (0..m).flat_map(|u| (0..m).map(move |v| (u, m + v))).collect();
        RegularGraph::new(Graph::from_edges(2 * m, &edges).unwrap(), m).unwrap()
    }

    /// Two copies of `K4` joined by a single edge (not regular).
    pub fn bridged_k4_pair() -> Graph {
        let mut edges: Vec<_> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        edges.extend(edges.clone().iter().map(|&(u, v)| (u + 4, v + 4)));
        edges.push((3, 4));
        Graph::from_edges(8, &edges).unwrap()
    }

    /// Two copies of `K4` with one edge each swapped across: 3-regular with a 2-edge cut.
    pub fn rewired_k4_pair() -> RegularGraph {
        let mut edges: Vec<_> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).filter(|&e| e != (0, 1)).collect();
        edges.extend(edges.clone().iter().map(|&(u, v)| (u + 4, v + 4)));
        edges.push((0, 4));
        edges.push((1, 5));
        RegularGraph::new(Graph::from_edges(8, &edges).unwrap(), 3).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn fixture_spectra() {
        let cases = [(complete(4), -1.0), (petersen(), 1.0), (complete_bipartite(3), 0.0)];
        for (g, mu2) in cases {
            assert_eq!(edge_connectivity(g.graph()).unwrap(), 3);
            assert!((second_eigenvalue(g.graph()) - mu2).abs() < 1e-9);
        }
    }

    #[test]
    fn power_iteration_matches_dense() {
        for g in [petersen(), complete_bipartite(3)] {
            let dense = second_eigenvalue(g.graph());
            let power = second_eigenvalue_power(g.graph(), 1e-12, 100_000);
            assert!((dense - power).abs() < 1e-6, "{dense} vs {power}");
        }
    }

    #[test]
    fn bottlenecks_are_rejected() {
        let g = bridged_k4_pair();
        assert_eq!(edge_connectivity(&g).unwrap(), 1);
        let one_side: Vec<bool> = (0..8).map(|v| v < 4).collect();
        assert_eq!(g.boundary(&one_side), 1);
        assert!(expansion_check(&g, DEFAULT_C, 0).holds);

        let mut r = rewired_k4_pair();
        r.certify(DEFAULT_EPS, DEFAULT_C, 0).unwrap();
        assert_eq!(r.certificate().unwrap().edge_connectivity, 2);
        assert!(!r.is_certified());
    }

    #[test]
    fn expansion_on_fixtures() {
        let k4 = expansion_check(complete(4).graph(), DEFAULT_C, 0);
        assert!(k4.holds && k4.exhaustive);
        assert_eq!(k4.min_ratio, 2.0); // two vertices: 4 boundary edges
        assert!(expansion_check(petersen().graph(), DEFAULT_C, 0).holds);
    }

    #[test]
    fn sampled_regular_graphs() {
        let g = random_regular(4, 3, 9).unwrap();
        assert_eq!(g.graph(), complete(4).graph());
        for seed in 0..20 {
            let g = random_regular(12, 3, seed).unwrap();
            assert!((0..12).all(|v| g.graph().degree(v) == 3));
            assert_eq!(g, random_regular(12, 3, seed).unwrap());
        }
        assert!(random_regular(5, 3, 0).is_err());
        assert!(random_regular(3, 3, 0).is_err());
    }

    #[test]
    fn certified_generation() {
        let g = generate_certified(4, 3, DEFAULT_EPS, DEFAULT_C, 1, 10).unwrap();
        assert!(g.is_certified());
        let a = generate_certified(10, 3, DEFAULT_EPS, DEFAULT_C, 5, 100).unwrap();
        let b = generate_certified(10, 3, DEFAULT_EPS, DEFAULT_C, 5, 100).unwrap();
        assert_eq!(a, b);
        assert!(a.is_certified());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = petersen();
        let text = g.graph().to_edge_list();
        assert_eq!(text.lines().count(), 15);
        assert_eq!(&Graph::from_edge_list(10, &text).unwrap(), g.graph());
    }
}
