//! Cross-module identities and inequalities, each run as a named check.

use std::collections::HashSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bound::{
    check_step_bounds, count_even_cover_bound_holds, enumerate_paths, involution, is_good, path_value, r_threshold,
    theorem_bound, v_expanded, v_good_paths, v_labeling, v_magnitude_bound, v_recurrence, VTable,
};
use crate::coeffmap::{build_m, build_mplus, w_norm_squared, w_recurrence, w_vector, BasisIndexing};
use crate::combinat::{multisets_of_degree, subsets_by_size, MultiIndex};
use crate::error::Result;
use crate::estimator::{
    build_h, estimate_vector, estimate_vector_exact, evaluate_exact, evaluate_mc, threshold_recover, TensorNetworkH,
};
use crate::expander::{
    edge_connectivity, fixtures, generate_certified, second_eigenvalue, DEFAULT_C, DEFAULT_EPS,
};
use crate::model::{sample_instance, ModelParams};
use crate::oracle::{corr_spectral, corr_squared, monte_carlo_moment, mmse_exact, p_matrix_from_m, MomentData};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::Rational;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, outcome: Result<std::result::Result<String, String>>) -> CheckResult {
        let (passed, detail) = match outcome {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(e) => (false, format!("error: {e}")),
        };
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

type Outcome = Result<std::result::Result<String, String>>;

/// `lambda_j = 1/j`.
pub fn harmonic_lambda(r: usize) -> Vec<Rational> {
    (1..=r as i64).map(|j| Rational::new(1.into(), j.into())).collect()
}

/// One point of the small exact grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub degree: usize,
}

impl GridPoint {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.r, self.k, harmonic_lambda(self.r), 0)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, r={}, k={}, D={})", self.n, self.r, self.k, self.degree)
    }
}

/// Cartesian product in `n, r, D` order.
pub fn grid(ns: &[usize], rs: &[usize], k: usize, degrees: &[usize]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n in ns {
        for &r in rs {
            for &degree in degrees {
                out.push(GridPoint { n, r, k, degree });
            }
        }
    }
    out
}

/// `M^+ M = I` exactly, and the column-wise recurrence reproduces `c^T M^+`.
pub fn check_left_inverse(points: &[GridPoint]) -> CheckResult {
    let run = || -> Outcome {
        for p in points {
            let params = p.params()?;
            let basis = BasisIndexing::new(&params, p.degree, false)?;
            let m = build_m::<Rational>(&params, &basis)?;
            let mplus = build_mplus(&params, &basis, &m)?;
            if !mplus.mul(&m).is_identity() {
                return Ok(Err(format!("M+M != I at {p}")));
            }
            let moments = MomentData::<Rational>::assemble(&params, &basis)?;
            if w_vector(&moments.c, &mplus) != w_recurrence(&params, &basis, &moments.c)? {
                return Ok(Err(format!("w routes disagree at {p}")));
            }
        }
        Ok(Ok(format!("{} grid points", points.len())))
    };
    CheckResult::new("left inverse", run())
}

/// `Corr^2 <= |c^T M^+|^2 <= sum v_S^2 / (lambda_min^{2|S|} r^(|S|))`.
pub fn check_sandwich(points: &[GridPoint], tol: f64) -> CheckResult {
    let run = || -> Outcome {
        let mut worst = f64::INFINITY;
        for p in points {
            let params = p.params()?;
            let basis = BasisIndexing::new(&params, p.degree, true)?;
            let moments = MomentData::<Rational>::assemble(&params, &basis)?;
            let corr2 = corr_squared(&moments)?;
            let m = build_m::<Rational>(&params, &basis)?;
            let mplus = build_mplus(&params, &basis, &m)?;
            let w2 = w_norm_squared(&w_vector(&moments.c, &mplus));
            let v2 = crate::bound::corr_bound_v_exact(&params, p.degree)?;
            let (c, w, v) = (corr2.to_f64(), w2.to_f64(), v2.to_f64());
            if c > w + tol || w > v + tol {
                return Ok(Err(format!("{p}: corr^2 = {c}, |w|^2 = {w}, v-bound = {v}")));
            }
            let spectral = corr_spectral(&moments);
            if (spectral * spectral - c).abs() > 1e-8 {
                return Ok(Err(format!("{p}: spectral corr^2 {} vs exact {c}", spectral * spectral)));
            }
            worst = worst.min(w - c).min(v - w);
        }
        Ok(Ok(format!("{} grid points, min gap {worst:.3e}", points.len())))
    };
    CheckResult::new("bound sandwich", run())
}

/// Every multiset over `{I subset [n] : 0 < |I| <= k}` with `1 <= |S| <= max_degree`.
fn all_multisets(n: usize, k: usize, max_degree: usize) -> Vec<MultiIndex> {
    let omega = subsets_by_size(n, 1, k);
    (1..=max_degree).flat_map(|d| multisets_of_degree(&omega, d)).collect()
}

/// Path expansion, good-path sum and recurrence agree exactly, and promote/merge pairs
/// every bad path with a distinct bad path of opposite value.
pub fn check_cancellation(n: usize, k: usize, ranks: &[usize], max_degree: usize) -> CheckResult {
    let run = || -> Outcome {
        let (mut sets, mut paths, mut bad) = (0usize, 0usize, 0usize);
        for &r in ranks {
            let params = ModelParams::new(n, r, k, harmonic_lambda(r), 0)?;
            let mut table = VTable::<Rational>::new();
            for s in all_multisets(n, k, max_degree) {
                let all = enumerate_paths(&params, &s)?;
                let index: HashSet<_> = all.iter().cloned().collect();
                for path in &all {
                    let Some(partner) = involution(path) else {
                        if !is_good(path) {
                            return Ok(Err(format!("bad path without partner from {s}")));
                        }
                        continue;
                    };
                    bad += 1;
                    if is_good(path) || !index.contains(&partner) || partner == *path {
                        return Ok(Err(format!("partner of a path from {s} (r={r}) is not an enumerated bad path")));
                    }
                    if involution(&partner).as_ref() != Some(path) {
                        return Ok(Err(format!("involution is not an involution on {s} (r={r})")));
                    }
                    let a: Rational = path_value(&params, path)?;
                    let b: Rational = path_value(&params, &partner)?;
                    if a != -b.clone() {
                        return Ok(Err(format!("pair values {a} and {b} do not cancel at {s} (r={r})")));
                    }
                }
                let expanded: Rational = v_expanded(&params, &s)?;
                let good: Rational = v_good_paths(&params, &s)?;
                let rec = v_recurrence(&params, &s, &mut table)?;
                if expanded != good || good != rec {
                    return Ok(Err(format!(
                        "S = {s}, r = {r}: expanded {expanded}, good {good}, recurrence {rec}"
                    )));
                }
                sets += 1;
                paths += all.len();
            }
        }
        Ok(Ok(format!("{sets} (S, r) cases, {paths} paths, {bad} bad paths paired")))
    };
    CheckResult::new("cancellation", run())
}

/// `v_empty = 0`, even-cover vanishing, `|v_S| <= (3|S|^2)^|S|`, both recurrences agree,
/// and the step bounds hold for every pattern.
pub fn check_v_laws(n: usize, k: usize, ranks: &[usize], max_degree: usize) -> CheckResult {
    let run = || -> Outcome {
        let mut checked = 0usize;
        let mut steps = 0usize;
        for &r in ranks {
            let params = ModelParams::new(n, r, k, harmonic_lambda(r), 0)?;
            let mut a = VTable::<Rational>::new();
            let mut b = VTable::<Rational>::new();
            if !v_recurrence(&params, &MultiIndex::empty(), &mut a)?.is_zero() {
                return Ok(Err("v_empty != 0".into()));
            }
            for s in all_multisets(n, k, max_degree) {
                let v = v_recurrence(&params, &s, &mut a)?;
                if v != v_labeling(&params, &s, &mut b)? {
                    return Ok(Err(format!("recurrences disagree at {s} (r={r})")));
                }
                if !s.even_cover() && !v.is_zero() {
                    return Ok(Err(format!("v_S = {v} != 0 without even cover at {s}")));
                }
                if v.abs() > BigRational::from_integer(v_magnitude_bound(s.degree())) {
                    return Ok(Err(format!("|v_S| = {v} too large at {s}")));
                }
                steps += check_step_bounds(&params, &s)?;
                checked += 1;
            }
        }
        Ok(Ok(format!("{checked} multisets, {steps} pattern steps")))
    };
    CheckResult::new("v laws", run())
}

/// The hard-regime series at the rank threshold stays below `n^{-1/2}`.
pub fn check_theorem_sweep(ns: &[f64], ks: &[usize], degrees: &[usize], lambda_mins: &[f64], slack: f64) -> CheckResult {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for &n in ns {
        for &k in ks {
            for &d in degrees {
                for &lm in lambda_mins {
                    let r = r_threshold(n, k, d, lm);
                    let b = theorem_bound(n, k, d, r, lm);
                    let target = n.powf(-0.5);
                    if !b.assumption_holds || b.bound > target + slack {
                        return CheckResult::new(
                            "theorem endpoint",
                            Ok(Err(format!("n={n} k={k} D={d} lambda_min={lm}: {} > {target}", b.bound))),
                        );
                    }
                    worst = worst.max(b.bound / target);
                    count += 1;
                }
            }
        }
    }
    CheckResult::new(
        "theorem endpoint",
        Ok(Ok(format!("{count} points, max bound / n^-1/2 = {worst:.3e}"))),
    )
}

/// Exhaustive even-cover counts against the closed-form bound.
pub fn check_even_cover_count(max_n: usize, k: usize, max_degree: usize) -> CheckResult {
    for n in 1..=max_n {
        for d in 1..=max_degree {
            if !count_even_cover_bound_holds(n, k, d) {
                return CheckResult::new("even-cover count", Ok(Err(format!("bound fails at n={n}, d={d}"))));
            }
        }
    }
    CheckResult::new(
        "even-cover count",
        Ok(Ok(format!("n <= {max_n}, d <= {max_degree}"))),
    )
}

/// `H` built on `K4` with `k = 3`.
pub fn k4_network() -> Result<TensorNetworkH> {
    let mut g = fixtures::complete(4);
    g.certify(DEFAULT_EPS, DEFAULT_C, 0)?;
    build_h(&g, 3, 0)
}

/// With `r = 1` the network returns `a_11` exactly and thresholding recovers `a_1`.
pub fn check_rank_one_estimator(n: usize, instances: usize, full_vectors: usize) -> CheckResult {
    let run = || -> Outcome {
        let h = k4_network()?;
        for seed in 0..instances as u64 {
            let params = ModelParams::uniform(n, 1, 3, derive_seed(7, seed))?;
            let inst = sample_instance(&params)?;
            let f = evaluate_exact(&h, &inst)?;
            if f != BigRational::from_integer(inst.a(0, 0).into()) {
                return Ok(Err(format!("seed {seed}: f = {f}, a_11 = {}", inst.a(0, 0))));
            }
            let estimates: Vec<f64> = if (seed as usize) < full_vectors {
                estimate_vector_exact(&h, &inst)?.iter().map(|x| x.to_f64()).collect()
            } else {
                estimate_vector(&h, &inst, 16, seed)?
            };
            if threshold_recover(&estimates) != inst.component(0) {
                return Ok(Err(format!("seed {seed}: thresholding missed a_1")));
            }
        }
        Ok(Ok(format!("{instances} instances, {full_vectors} full exact vectors")))
    };
    CheckResult::new("rank-one estimator", run())
}

/// Monte Carlo lands within `z` reported standard errors of the exact value.
pub fn check_mc_unbiased(n: usize, r: usize, samples: usize, seeds: usize, z: f64, max_failures: usize) -> CheckResult {
    let run = || -> Outcome {
        let h = k4_network()?;
        let params = ModelParams::new(n, r, 3, harmonic_lambda(r), 2024)?;
        let inst = sample_instance(&params)?;
        let exact = evaluate_exact(&h, &inst)?.to_f64();
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        for seed in 0..seeds as u64 {
            let mc = evaluate_mc(&h, &inst, samples, seed)?;
            let score = (mc.estimate - exact).abs() / mc.std_error;
            worst = worst.max(score);
            if score > z {
                failures += 1;
            }
        }
        let detail = format!("exact {exact:.6}, {failures}/{seeds} beyond {z} SE, worst {worst:.2} SE");
        Ok(if failures <= max_failures { Ok(detail) } else { Err(detail) })
    };
    CheckResult::new("Monte Carlo unbiasedness", run())
}

/// `P = M^T M` on the grid, then Monte Carlo moments against exact entries of `P`.
pub fn check_p_matrix(points: &[GridPoint], mc_point: GridPoint, pairs: usize, samples: usize, z: f64) -> CheckResult {
    let run = || -> Outcome {
        for p in points {
            let params = p.params()?;
            let basis = BasisIndexing::new(&params, p.degree, false)?;
            let moments = MomentData::<Rational>::assemble(&params, &basis)?;
            let m = build_m::<Rational>(&params, &basis)?;
            if moments.p != p_matrix_from_m(&m) {
                return Ok(Err(format!("P != M^T M at {p}")));
            }
        }
        let params = mc_point.params()?;
        let basis = BasisIndexing::new(&params, mc_point.degree, false)?;
        let moments = MomentData::<Rational>::assemble(&params, &basis)?;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let candidates: Vec<usize> = (0..basis.s_basis.len()).filter(|&i| !basis.s_basis[i].is_empty()).collect();
        let mut worst: f64 = 0.0;
        for t in 0..pairs {
            let i = *candidates.choose(&mut rng).unwrap();
            let j = *candidates.choose(&mut rng).unwrap();
            let (s, s2) = (&basis.s_basis[i], &basis.s_basis[j]);
            let exact = moments.p.get(i, j).to_f64();
            let (mean, se) = monte_carlo_moment(&params, s, s2, samples, derive_seed(5, t as u64))?;
            let off = (mean - exact).abs();
            if se == 0.0 {
                if off > 1e-12 {
                    return Ok(Err(format!("E[T^{s} T^{s2}] = {exact}, deterministic estimate {mean}")));
                }
                continue;
            }
            worst = worst.max(off / se);
            if off > z * se {
                return Ok(Err(format!("E[T^{s} T^{s2}] = {exact}, estimate {mean} +- {se}")));
            }
        }
        Ok(Ok(format!("{} grid points, {pairs} sampled pairs, worst {worst:.2} SE", points.len())))
    };
    CheckResult::new("P matrix", run())
}

/// `MMSE_{<=D}` lies in `[0, 1]` and never increases with `D`.
pub fn check_mmse_monotone(points: &[GridPoint]) -> CheckResult {
    let run = || -> Outcome {
        let mut by_model = std::collections::BTreeMap::<(usize, usize, usize), Vec<(usize, f64)>>::new();
        for p in points {
            let params = p.params()?;
            let basis = BasisIndexing::new(&params, p.degree, true)?;
            let corr2 = corr_squared(&MomentData::<Rational>::assemble(&params, &basis)?)?;
            let mmse = mmse_exact(corr2.to_f64().max(0.0).sqrt())?;
            if !(0.0..=1.0).contains(&mmse) {
                return Ok(Err(format!("MMSE {mmse} at {p}")));
            }
            by_model.entry((p.n, p.r, p.k)).or_default().push((p.degree, mmse));
        }
        for ((n, r, k), mut rows) in by_model {
            rows.sort_by_key(|x| x.0);
            if rows.windows(2).any(|w| w[1].1 > w[0].1 + 1e-12) {
                return Ok(Err(format!("MMSE increases with D at n={n}, r={r}, k={k}: {rows:?}")));
            }
        }
        Ok(Ok(format!("{} grid points", points.len())))
    };
    CheckResult::new("MMSE monotone", run())
}

/// Fixture certificates, then certified generation across seeds.
pub fn check_expander(n: usize, k: usize, seeds: usize, max_attempts: usize) -> CheckResult {
    let run = || -> Outcome {
        for (name, g, mu) in [
            ("K4", fixtures::complete(4), -1.0),
            ("Petersen", fixtures::petersen(), 1.0),
        ] {
            let conn = edge_connectivity(g.graph())?;
            let mu2 = second_eigenvalue(g.graph());
            if conn != 3 || (mu2 - mu).abs() > 1e-9 {
                return Ok(Err(format!("{name}: connectivity {conn}, mu2 {mu2}")));
            }
        }
        for seed in 0..seeds as u64 {
            let g = generate_certified(n, k, DEFAULT_EPS, DEFAULT_C, seed, max_attempts)?;
            if !g.is_certified() {
                return Ok(Err(format!("seed {seed}: returned graph lacks a passing certificate")));
            }
        }
        Ok(Ok(format!("fixtures match, {seeds} seeds certified at N={n}, k={k}")))
    };
    CheckResult::new("expander certification", run())
}
