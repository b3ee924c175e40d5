//! The expander-shaped tensor-network polynomial: the network `H`, its injective edge
//! labelings, and exact or Monte Carlo evaluation of the estimate of `a_1`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinat::falling_factorial;
use crate::error::{capacity, Error, Result};
use crate::expander::RegularGraph;
use crate::model::{odd_order, Instance, ModelParams};
use crate::seeds::derive_seed;

/// Term budget for exhaustive evaluation over all edge labelings.
pub const MAX_EXACT_TERMS: u128 = 100_000_000;
/// Term budget for the `(phi, psi)` double enumeration.
pub const MAX_DECOMPOSITION_TERMS: u128 = 20_000_000;
const MC_CHUNK: usize = 4096;
const MAGNITUDE_WARN: f64 = 1e300;

/// Whether `|lambda_2| <= 1 - n^{-1/52}`.
pub fn lambda_hypothesis(n: f64, lambda2_abs: f64) -> bool {
    lambda2_abs <= 1.0 - n.powf(-1.0 / 52.0)
}

/// Smallest odd `D >= k ln(n) / (1 - |lambda_2|)`.
pub fn choose_degree(n: f64, k: usize, lambda2_abs: f64) -> Result<usize> {
    if n.is_nan() || n <= 1.0 || !(0.0..1.0).contains(&lambda2_abs) {
        return Err(Error::Parameter(format!(
            "need n > 1 and 0 <= |lambda_2| < 1, got n = {n}, |lambda_2| = {lambda2_abs}"
        )));
    }
    let target = (k as f64 * n.ln() / (1.0 - lambda2_abs)).ceil().max(1.0) as usize;
    Ok(if target % 2 == 1 { target } else { target + 1 })
}

/// [`choose_degree`], refusing inputs outside the `|lambda_2| <= 1 - n^{-1/52}` regime.
pub fn choose_degree_checked(n: f64, k: usize, lambda2_abs: f64) -> Result<usize> {
    if !lambda_hypothesis(n, lambda2_abs) {
        return Err(Error::Parameter(format!(
            "|lambda_2| = {lambda2_abs} exceeds 1 - n^(-1/52) = {}",
            1.0 - n.powf(-1.0 / 52.0)
        )));
    }
    choose_degree(n, k, lambda2_abs)
}

/// `G` with a matching rewired to a new vertex `u`, plus a pendant vertex `o` hanging off `u`.
///
/// Vertices `0..N` come from `G`, `u = N`, `o = N + 1`. Edge 0 is `(o, u)`.
#[derive(Clone, Debug)]
pub struct TensorNetworkH {
    base: RegularGraph,
    k: usize,
    k_prime: usize,
    rewired: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
    /// Incident edge indices for every vertex except `o`.
    incidence: Vec<Vec<usize>>,
}

impl TensorNetworkH {
    pub fn base(&self) -> &RegularGraph {
        &self.base
    }

    /// `N`, the number of vertices of `G`.
    pub fn n_base(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn degree_param(&self) -> usize {
        self.n_base() + 1
    }

    pub fn u(&self) -> usize {
        self.n_base()
    }

    pub fn circ(&self) -> usize {
        self.n_base() + 1
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    pub fn rewired(&self) -> &[(usize, usize)] {
        &self.rewired
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Degree in `H` of any vertex, `o` included.
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Incident edge indices of every vertex other than `o`.
    pub fn incidence(&self) -> &[Vec<usize>] {
        &self.incidence
    }

    /// `|Phi| = (n-1)(n-2)...(n-|E|+1)`.
    pub fn labeling_count(&self, n: usize) -> u128 {
        falling_factorial(n as u64 - 1, self.edge_count() as u64 - 1)
    }

    fn check_labels(&self, n: usize) -> Result<()> {
        if n < self.edge_count() {
            return Err(Error::Parameter(format!(
                "n = {n} leaves too few labels for {} edges of H",
                self.edge_count()
            )));
        }
        if n > 64 {
            return Err(capacity("estimator dimension n", n as u128, 64));
        }
        Ok(())
    }
}

fn greedy_matching(edges: &[(usize, usize)], p: usize) -> Option<Vec<(usize, usize)>> {
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in edges {
        if chosen.len() == p {
            break;
        }
        if chosen.iter().all(|&(c, d)| a != c && a != d && b != c && b != d) {
            chosen.push((a, b));
        }
    }
    (chosen.len() == p).then_some(chosen)
}

/// Builds `H` from a certified `k`-regular `G`. The matching is greedy in canonical edge
/// order, falling back to seeded shuffles.
pub fn build_h(g: &RegularGraph, k: usize, seed: u64) -> Result<TensorNetworkH> {
    if g.k() != k {
        return Err(Error::Construction(format!("G is {}-regular, expected {k}", g.k())));
    }
    if !g.is_certified() {
        return Err(Error::Construction("G has no passing certificate".into()));
    }
    let k_prime = odd_order(k);
    let p = (k_prime - 1) / 2;
    let n_base = g.vertex_count();
    let (u, circ) = (n_base, n_base + 1);
    let g_edges = g.graph().edges();
    let mut rewired = greedy_matching(&g_edges, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        if rewired.is_some() {
            break;
        }
        let mut shuffled = g_edges.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        rewired = greedy_matching(&shuffled, p);
    }
    let rewired = rewired.ok_or_else(|| Error::Construction(format!("no matching of size {p} found")))?;

    let mut edges = vec![(circ, u)];
    edges.extend(g_edges.iter().filter(|e| !rewired.contains(e)));
    for &(a, b) in &rewired {
        edges.push((u, a));
        edges.push((u, b));
    }
    let incidence = (0..=n_base)
        .map(|v| (0..edges.len()).filter(|&e| edges[e].0 == v || edges[e].1 == v).collect())
        .collect();
    Ok(TensorNetworkH {
        base: g.clone(),
        k,
        k_prime,
        rewired,
        edges,
        incidence,
    })
}

/// `lambda` scaled by the lcm `L` of its denominators, as integers.
fn integer_weights(params: &ModelParams) -> (Vec<i128>, BigInt) {
    let l = params.lambda.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let w = params
        .lambda
        .iter()
        .map(|x| (x.numer() * (&l / x.denom())).to_i128().expect("scaled weight fits i128"))
        .collect();
    (w, l)
}

/// `sum_j w_j prod_{e in inc} a_{phi(e), j}`.
#[inline]
fn vertex_value<W: Copy + std::ops::Neg<Output = W> + std::ops::Add<Output = W> + Default>(
    inst: &Instance,
    weights: &[W],
    inc: &[usize],
    labels: &[usize],
) -> W {
    let mut total = W::default();
    for (j, &w) in weights.iter().enumerate() {
        let sign = inc.iter().fold(1i8, |s, &e| s * inst.a(labels[e], j));
        total = total + if sign > 0 { w } else { -w };
    }
    total
}

fn network_value_int(h: &TensorNetworkH, inst: &Instance, weights: &[i128], labels: &[usize]) -> i128 {
    h.incidence
        .iter()
        .map(|inc| vertex_value(inst, weights, inc, labels))
        .product()
}

fn network_value_f64(h: &TensorNetworkH, inst: &Instance, weights: &[f64], labels: &[usize]) -> f64 {
    h.incidence
        .iter()
        .map(|inc| vertex_value(inst, weights, inc, labels))
        .product()
}

/// Visits every injective labeling of edges `1..|E|` from `[n] \ {coord}`, with edge 0 on `coord`.
fn for_each_labeling(h: &TensorNetworkH, n: usize, labels: &mut Vec<usize>, used: u64, visit: &mut dyn FnMut(&[usize])) {
    if labels.len() == h.edge_count() {
        visit(labels);
        return;
    }
    for i in 0..n {
        if used >> i & 1 == 0 {
            labels.push(i);
            for_each_labeling(h, n, labels, used | 1 << i, visit);
            labels.pop();
        }
    }
}

fn exact_guard(h: &TensorNetworkH, inst: &Instance, weights: &[i128], budget: u128) -> Result<u128> {
    let n = inst.params.n;
    h.check_labels(n)?;
    let count = h.labeling_count(n);
    if count > budget {
        return Err(capacity("edge labelings |Phi|", count, budget));
    }
    let total_weight: f64 = weights.iter().map(|w| w.unsigned_abs() as f64).sum();
    let bits = (h.n_base() + 1) as f64 * total_weight.log2() + (count as f64).log2();
    if bits > 125.0 {
        return Err(capacity("exact accumulator bits", bits.ceil() as u128, 125));
    }
    Ok(count)
}

/// Exact `f(T)` for the estimate of `(a_1)_coord`.
pub fn evaluate_exact_at(h: &TensorNetworkH, inst: &Instance, coord: usize) -> Result<BigRational> {
    let n = inst.params.n;
    if coord >= n {
        return Err(Error::Parameter(format!("coordinate {coord} outside 0..{n}")));
    }
    let (weights, l) = integer_weights(&inst.params);
    let count = exact_guard(h, inst, &weights, MAX_EXACT_TERMS)?;
    let base = 1u64 << coord;
    let sum: i128 = if h.edge_count() == 1 {
        network_value_int(h, inst, &weights, &[coord])
    } else {
        (0..n)
            .into_par_iter()
            .filter(|&i| i != coord)
            .map(|i| {
                let mut acc = 0i128;
                let mut labels = vec![coord, i];
                for_each_labeling(h, n, &mut labels, base | 1 << i, &mut |ls| {
                    acc += network_value_int(h, inst, &weights, ls)
                });
                acc
            })
            .sum()
    };
    let denom = BigInt::from(count) * l.pow(h.n_base() as u32 + 1);
    Ok(BigRational::new(BigInt::from(sum), denom))
}

/// Exact `f(T)`, the estimate of `(a_1)_1`.
pub fn evaluate_exact(h: &TensorNetworkH, inst: &Instance) -> Result<BigRational> {
    evaluate_exact_at(h, inst, 0)
}

/// Exact estimate of every coordinate of `a_1`.
pub fn estimate_vector_exact(h: &TensorNetworkH, inst: &Instance) -> Result<Vec<BigRational>> {
    (0..inst.params.n).map(|i| evaluate_exact_at(h, inst, i)).collect()
}

/// The three parts of `f` split by vertex labeling class.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// All vertices labeled 1.
    pub f1: BigRational,
    /// All vertices labeled by the same `j >= 2`.
    pub f2: BigRational,
    /// Everything else.
    pub f3: BigRational,
}

impl Decomposition {
    pub fn total(&self) -> BigRational {
        &self.f1 + &self.f2 + &self.f3
    }
}

/// Expands every `T_v` into its `r` terms and sums over `(phi, psi)` pairs directly.
pub fn decompose_exact(h: &TensorNetworkH, inst: &Instance) -> Result<Decomposition> {
    let n = inst.params.n;
    let r = inst.params.r;
    let (weights, l) = integer_weights(&inst.params);
    let vertices = h.n_base() + 1;
    let psi_count = (r as u128).pow(vertices as u32);
    let count = exact_guard(h, inst, &weights, MAX_DECOMPOSITION_TERMS / psi_count.max(1))?;
    let mut parts = [0i128; 3];
    let mut labels = vec![0usize];
    for_each_labeling(h, n, &mut labels, 1, &mut |ls| {
        for psi in crate::combinat::labelings(r, vertices) {
            let mut term = 1i128;
            for (inc, &j) in h.incidence.iter().zip(&psi) {
                let sign = inc.iter().fold(1i8, |s, &e| s * inst.a(ls[e], j));
                term *= if sign > 0 { weights[j] } else { -weights[j] };
            }
            let class = if psi.iter().all(|&j| j == 0) {
                0
            } else if psi.iter().all(|&j| j == psi[0]) {
                1
            } else {
                2
            };
            parts[class] += term;
        }
    });
    let denom = BigInt::from(count) * l.pow(vertices as u32);
    let q = |x: i128| BigRational::new(BigInt::from(x), denom.clone());
    Ok(Decomposition {
        f1: q(parts[0]),
        f2: q(parts[1]),
        f3: q(parts[2]),
    })
}

/// `f_2 = sum_{j >= 2} lambda_j^{N+1} (a_j)_1`.
pub fn f2_closed_form(h: &TensorNetworkH, inst: &Instance) -> BigRational {
    let e = h.n_base() as i32 + 1;
    (1..inst.params.r)
        .map(|j| inst.params.lambda[j].pow(e) * BigRational::from_integer(inst.a(0, j).into()))
        .fold(BigRational::zero(), |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn pairwise_sum(xs: &[(f64, f64)]) -> (f64, f64) {
    match xs.len() {
        0 => (0.0, 0.0),
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            let (x, y) = (pairwise_sum(a), pairwise_sum(b));
            (x.0 + y.0, x.1 + y.1)
        }
    }
}

/// Draws a uniform injective labeling of edges `1..|E|` from `pool` (which excludes `coord`)
/// by partial Fisher-Yates.
fn sample_labeling(rng: &mut ChaCha8Rng, pool: &mut [usize], labels: &mut [usize]) {
    for (slot, label) in labels.iter_mut().enumerate().skip(1) {
        let pick = rng.random_range(slot - 1..pool.len());
        pool.swap(slot - 1, pick);
        *label = pool[slot - 1];
    }
}

/// Monte Carlo `f(T)` for `(a_1)_coord` over uniform labelings. Samples run in fixed-size
/// chunks with derived seeds and are reduced in a fixed tree order.
pub fn evaluate_mc_at(h: &TensorNetworkH, inst: &Instance, coord: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    let n = inst.params.n;
    if n < h.edge_count() {
        return Err(Error::Parameter(format!(
            "n = {n} leaves too few labels for {} edges of H",
            h.edge_count()
        )));
    }
    if coord >= n {
        return Err(Error::Parameter(format!("coordinate {coord} outside 0..{n}")));
    }
    if samples == 0 {
        return Err(Error::Parameter("samples must be positive".into()));
    }
    let weights = inst.params.lambda_f64();
    let magnitude = weights.iter().map(|w| w.abs()).sum::<f64>().powi(h.n_base() as i32 + 1);
    if magnitude > MAGNITUDE_WARN {
        eprintln!("warning: network products may reach {magnitude:e}");
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let mut pool: Vec<usize> = (0..n).filter(|&i| i != coord).collect();
            let mut labels = vec![coord; h.edge_count()];
            let size = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut acc = (0.0, 0.0);
            for _ in 0..size {
                sample_labeling(&mut rng, &mut pool, &mut labels);
                let x = network_value_f64(h, inst, &weights, &labels);
                acc.0 += x;
                acc.1 += x * x;
            }
            acc
        })
        .collect();
    let (sum, sum_sq) = pairwise_sum(&partial);
    let m = samples as f64;
    let mean = sum / m;
    let var = if samples > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}

pub fn evaluate_mc(h: &TensorNetworkH, inst: &Instance, samples: usize, seed: u64) -> Result<McEstimate> {
    evaluate_mc_at(h, inst, 0, samples, seed)
}

/// Monte Carlo estimate of every coordinate, each with the same seed.
pub fn estimate_vector(h: &TensorNetworkH, inst: &Instance, samples: usize, seed: u64) -> Result<Vec<f64>> {
    (0..inst.params.n)
        .map(|i| evaluate_mc_at(h, inst, i, samples, seed).map(|e| e.estimate))
        .collect()
}

/// Coordinate-wise sign, with 0 mapped to +1.
pub fn threshold_recover(estimates: &[f64]) -> Vec<i8> {
    estimates.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorBounds {
    /// `(r-1) |lambda_2|^{2(N+1)}`.
    pub f2_bound: f64,
    /// `sum_{j >= 2} lambda_j^{2(N+1)}`, the exact `E[f_2^2]`.
    pub f2_exact: f64,
    /// `4 k^{k-1} D^{52k} r / n^{k-1-[k even]}`.
    pub f3_bound: f64,
    /// `10 k^{k-1} D^{52k} r / n^{k-1-[k even]}`.
    pub mmse_bound: f64,
    pub lambda_hypothesis: bool,
    /// `r <= k^{-k/2} D^{-27k} n^{k/2} / 2`.
    pub rank_hypothesis: bool,
}

impl EstimatorBounds {
    pub fn assumption_easy_holds(&self) -> bool {
        self.lambda_hypothesis && self.rank_hypothesis
    }
}

/// Numeric right-hand sides of the `f_2` and `f_3` second-moment bounds with `D = N + 1`.
pub fn f2_f3_bounds(params: &ModelParams, h: &TensorNetworkH) -> EstimatorBounds {
    let lambda = params.lambda_f64();
    let d = h.degree_param() as f64;
    let (n, k, r) = (params.n as f64, params.k as f64, params.r as f64);
    let lambda2 = lambda.get(1).map_or(0.0, |x| x.abs());
    let e = 2 * (h.n_base() as i32 + 1);
    let n_power = k - 1.0 - if params.k.is_multiple_of(2) { 1.0 } else { 0.0 };
    let log_core = (k - 1.0) * k.ln() + 52.0 * k * d.ln() + r.ln() - n_power * n.ln();
    let log_rank = (0.5f64).ln() - 0.5 * k * k.ln() - 27.0 * k * d.ln() + 0.5 * k * n.ln();
    EstimatorBounds {
        f2_bound: (r - 1.0) * lambda2.powi(e),
        f2_exact: lambda.iter().skip(1).map(|x| x.powi(e)).sum(),
        f3_bound: 4.0 * log_core.exp(),
        mmse_bound: 10.0 * log_core.exp(),
        lambda_hypothesis: lambda_hypothesis(n, lambda2),
        rank_hypothesis: r.ln() <= log_rank,
    }
}

/// Largest magnitude any single network product can take.
pub fn product_magnitude(params: &ModelParams, h: &TensorNetworkH) -> BigRational {
    params
        .lambda
        .iter()
        .map(|x| x.abs())
        .fold(BigRational::zero(), |a, b| a + b)
        .pow(h.n_base() as i32 + 1)
}
