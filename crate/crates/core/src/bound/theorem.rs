//! The closed-form `Corr^2` series for the hard regime and the even-cover count it rests on.

use num_bigint::BigInt;

use crate::combinat::{multisets_of_degree, subsets_by_size};

/// Evaluated series together with whether `r` clears the hard-regime threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremBound {
    pub bound: f64,
    pub assumption_holds: bool,
}

impl TheoremBound {
    /// `1 - bound`, clipped to `[0, 1]`.
    pub fn mmse_lower_bound(&self) -> f64 {
        (1.0 - self.bound).clamp(0.0, 1.0)
    }
}

/// `19 k^k D^{k+4} lambda_min^{-2} n^{k/2}`.
pub fn r_threshold(n: f64, k: usize, degree: usize, lambda_min: f64) -> f64 {
    let k_f = k as f64;
    let log = (19.0f64).ln() + k_f * k_f.ln() + (k_f + 4.0) * (degree as f64).ln() - 2.0 * lambda_min.ln()
        + 0.5 * k_f * n.ln();
    log.exp()
}

/// `sum_{d=1}^D n^{(kd-1)/2} ((kd+3)/2)^{kd} (3d^2)^{2d} / (lambda_min^{2d} (r-d+1)^d)`,
/// each term formed in log space. Infinite once `r < D`.
pub fn theorem_bound(n: f64, k: usize, degree: usize, r: f64, lambda_min: f64) -> TheoremBound {
    let assumption_holds = degree == 0 || r >= r_threshold(n, k, degree, lambda_min);
    let mut bound = 0.0;
    for d in 1..=degree {
        let base = r - d as f64 + 1.0;
        if base <= 0.0 {
            bound = f64::INFINITY;
            break;
        }
        let kd = (k * d) as f64;
        let df = d as f64;
        let log = 0.5 * (kd - 1.0) * n.ln() + kd * ((kd + 3.0) / 2.0).ln() + 2.0 * df * (3.0 * df * df).ln()
            - 2.0 * df * lambda_min.ln()
            - df * base.ln();
        bound += log.exp();
    }
    TheoremBound {
        bound,
        assumption_holds,
    }
}

/// Number of `|S| = d` multisets over `{I : 0 < |I| <= k}` with the even-cover property.
pub fn count_even_cover(n: usize, k: usize, degree: usize) -> u64 {
    let omega = subsets_by_size(n, 1, k);
    multisets_of_degree(&omega, degree)
        .into_iter()
        .filter(|s| s.even_cover())
        .count() as u64
}

/// `n^{(kd-1)/2} ((kd+3)/2)^{kd}` as a float.
pub fn even_cover_count_bound(n: usize, k: usize, degree: usize) -> f64 {
    let kd = (k * degree) as f64;
    (0.5 * (kd - 1.0) * (n as f64).ln() + kd * ((kd + 3.0) / 2.0).ln()).exp()
}

/// Exact check of `count <= n^{(kd-1)/2} ((kd+3)/2)^{kd}`, squared to stay in integers.
pub fn count_even_cover_bound_holds(n: usize, k: usize, degree: usize) -> bool {
    assert!(degree >= 1, "the count bound is stated for d >= 1");
    let kd = (k * degree) as u32;
    let count = BigInt::from(count_even_cover(n, k, degree));
    let lhs = &count * &count * BigInt::from(2).pow(2 * kd);
    let rhs = BigInt::from(n).pow(kd - 1) * BigInt::from(kd + 3).pow(2 * kd);
    lhs <= rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_rank_kills_the_series() {
        let b = theorem_bound(100.0, 3, 1, 1e60, 1.0);
        assert!(b.bound < 1e-50);
        assert!(b.assumption_holds);
    }

    #[test]
    fn threshold_rank_meets_target() {
        for &n in &[1e2, 1e4, 1e6] {
            for &k in &[3, 5] {
                for degree in 2..=10 {
                    for &lm in &[1.0, 0.5] {
                        let r = r_threshold(n, k, degree, lm);
                        let b = theorem_bound(n, k, degree, r, lm);
                        assert!(b.assumption_holds);
                        assert!(b.bound <= n.powf(-0.5) + 1e-12, "n={n} k={k} D={degree} lm={lm}");
                    }
                }
            }
        }
    }

    #[test]
    fn below_degree_is_infinite() {
        assert!(theorem_bound(10.0, 3, 4, 2.0, 1.0).bound.is_infinite());
    }

    #[test]
    fn small_counts() {
        // d = 1: only S = ({1})
        assert_eq!(count_even_cover(4, 3, 1), 1);
        for n in 1..=5 {
            for d in 1..=2 {
                assert!(count_even_cover_bound_holds(n, 3, d));
                assert!((count_even_cover(n, 3, d) as f64) <= even_cover_count_bound(n, 3, d) + 1e-9);
            }
        }
    }
}
