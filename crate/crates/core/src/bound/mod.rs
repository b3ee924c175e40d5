//! The `v_S` calculus behind the low-degree lower bound: recurrences, path expansions,
//! the bad-path cancellation, and the closed-form bound evaluator.

mod paths;
mod theorem;

pub use paths::{
    enumerate_paths, involution, is_good, path_value, validate_path, v_expanded, v_good_paths, PathStep, PathTerm,
    MAX_PATH_DEGREE, MAX_PATH_RANK,
};
pub use theorem::{
    count_even_cover, count_even_cover_bound_holds, even_cover_count_bound, r_threshold, theorem_bound, TheoremBound,
};

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::combinat::{
    enumerate_patterns, falling_factorial, labelings, multisets_of_degree, subsets_by_size, xor_columns, MultiIndex,
};
use crate::coeffmap::lambda_of_labeling;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::oracle::c_entry;
use crate::scalar::Scalar;

/// Memoised `v_S` values keyed by canonical `S`.
#[derive(Clone, Debug, Default)]
pub struct VTable<T> {
    values: HashMap<MultiIndex, T>,
}

impl<T: Scalar> VTable<T> {
    pub fn new() -> Self {
        VTable { values: HashMap::new() }
    }

    pub fn get(&self, s: &MultiIndex) -> Option<&T> {
        self.values.get(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.values.iter()
    }
}

/// `v_S` from the pattern-grouped recurrence
/// `v_S = c_S - sum_pi m_pi (r_pi)^(s_pi falling) lambda^(pi) / r^(|S'| falling) v_S'`.
pub fn v_recurrence<T: Scalar>(params: &ModelParams, s: &MultiIndex, table: &mut VTable<T>) -> Result<T> {
    if s.is_empty() {
        return Ok(T::zero());
    }
    if let Some(v) = table.get(s) {
        return Ok(v.clone());
    }
    let mut sum = T::zero();
    for pi in enumerate_patterns(s, params.r, params.k, &params.lambda)? {
        let matched = pi.matching_labelings();
        if pi.m() == 0 || matched == 0 {
            continue;
        }
        let target = pi.target().clone();
        let v_target = v_recurrence(params, &target, table)?;
        if v_target.is_zero() {
            continue;
        }
        let denom = falling_factorial(params.r as u64, target.degree() as u64);
        let coef = T::from_i64(pi.m()) * T::from_u128(matched) * T::from_rational(pi.lambda_ratio())
            / T::from_u128(denom);
        sum = sum + coef * v_target;
    }
    let v = c_entry::<T>(params, s) - sum;
    table.values.insert(s.clone(), v.clone());
    Ok(v)
}

/// `v_S` from the labeling-level recurrence, summing over every `ell in [r]^|S|` directly.
pub fn v_labeling<T: Scalar>(params: &ModelParams, s: &MultiIndex, table: &mut VTable<T>) -> Result<T> {
    if s.is_empty() {
        return Ok(T::zero());
    }
    if let Some(v) = table.get(s) {
        return Ok(v.clone());
    }
    crate::combinat::check_enum_guard("labelings r^|S|", params.r, s.degree(), crate::coeffmap::MAX_LABELINGS)?;
    let mut sum = T::zero();
    for ell in labelings(params.r, s.degree()) {
        let image = xor_columns(s, &ell);
        if image.column_count() >= s.degree() || !image.is_generic(params.k, usize::MAX) {
            continue;
        }
        let target = image.column_multiset();
        let v_target = v_labeling(params, &target, table)?;
        if v_target.is_zero() {
            continue;
        }
        let ratio = lambda_of_labeling::<T>(&params.lambda, &ell) / T::from_rational(&image.lambda_product(&params.lambda));
        let denom = T::from_u128(falling_factorial(params.r as u64, target.degree() as u64));
        sum = sum + ratio / denom * v_target;
    }
    let v = c_entry::<T>(params, s) - sum;
    table.values.insert(s.clone(), v.clone());
    Ok(v)
}

/// `(3 d^2)^d`, the magnitude bound on `v_S` for `|S| = d >= 1`.
pub fn v_magnitude_bound(degree: usize) -> BigInt {
    BigInt::from(3 * degree * degree).pow(degree as u32)
}

/// Every even-cover multiset with `1 <= |S| <= degree` over `{I : 0 < |I| <= k}`.
pub fn even_cover_multisets(n: usize, k: usize, degree: usize) -> Vec<MultiIndex> {
    let omega = subsets_by_size(n, 1, k);
    (1..=degree)
        .flat_map(|d| multisets_of_degree(&omega, d))
        .filter(|s| s.even_cover())
        .collect()
}

/// `sum_{|S| <= D} v_S^2 / (lambda_min^{2|S|} r^(|S| falling))`, exactly.
pub fn corr_bound_v_exact(params: &ModelParams, degree: usize) -> Result<BigRational> {
    if degree > params.r {
        return Err(Error::Parameter(format!(
            "degree D = {degree} exceeds rank r = {}",
            params.r
        )));
    }
    let lambda_min = params.lambda_min();
    let mut table = VTable::<BigRational>::new();
    let mut total = BigRational::zero();
    for s in even_cover_multisets(params.n, params.k, degree) {
        let v = v_recurrence(params, &s, &mut table)?;
        if v.is_zero() {
            continue;
        }
        let d = s.degree() as i32;
        let denom = lambda_min.pow(2 * d) * BigRational::from_integer(falling_factorial(params.r as u64, d as u64).into());
        total += &v * &v / denom;
    }
    Ok(total)
}

/// Floating-point value of [`corr_bound_v_exact`] (an upper bound on `Corr^2`).
pub fn corr_bound_v(params: &ModelParams, degree: usize) -> Result<f64> {
    Ok(corr_bound_v_exact(params, degree)?.to_f64())
}

/// Checks the step-level bounds `|m_pi| <= 2^{|S|-|S'|}` and `|lambda^(pi)| <= 1` for every
/// pattern of `S`; returns the number of steps checked.
pub fn check_step_bounds(params: &ModelParams, s: &MultiIndex) -> Result<usize> {
    let patterns = enumerate_patterns(s, params.r, params.k, &params.lambda)?;
    for pi in &patterns {
        let drop = s.degree() - pi.target().degree();
        if pi.m().unsigned_abs() > 1u64 << drop {
            return Err(Error::Consistency(format!(
                "|m_pi| = {} exceeds 2^{drop} for S = {s}, pi = {:?}",
                pi.m(),
                pi.entries()
            )));
        }
        if pi.lambda_ratio().abs() > BigRational::one() {
            return Err(Error::Consistency(format!("|lambda^(pi)| > 1 for S = {s}, pi = {:?}", pi.entries())));
        }
    }
    Ok(patterns.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::Subset;

    type Q = BigRational;

    fn harmonic(r: usize) -> Vec<Q> {
        (1..=r as i64).map(|j| Q::new(BigInt::from(1), BigInt::from(j))).collect()
    }

    fn set(xs: &[usize]) -> Subset {
        Subset::from_elements(xs.iter().map(|x| x - 1))
    }

    #[test]
    fn single_coordinate() {
        let params = ModelParams::new(3, 3, 3, harmonic(3), 0).unwrap();
        let mut t = VTable::<Q>::new();
        assert!(v_recurrence(&params, &MultiIndex::new(vec![set(&[1])]), &mut t).unwrap().is_one());
        assert!(v_recurrence(&params, &MultiIndex::empty(), &mut t).unwrap().is_zero());
    }

    #[test]
    fn pattern_and_labeling_recurrences_agree() {
        let omega = subsets_by_size(3, 1, 3);
        for r in 1..=3 {
            let params = ModelParams::new(3, r, 3, harmonic(r), 0).unwrap();
            let mut a = VTable::<Q>::new();
            let mut b = VTable::<Q>::new();
            for d in 0..=3 {
                for s in multisets_of_degree(&omega, d) {
                    let va = v_recurrence(&params, &s, &mut a).unwrap();
                    let vb = v_labeling(&params, &s, &mut b).unwrap();
                    assert_eq!(va, vb, "S = {s}, r = {r}");
                    if !s.even_cover() {
                        assert!(va.is_zero(), "even-cover law fails at {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_zero_bound_is_zero() {
        let params = ModelParams::uniform(3, 2, 3, 0).unwrap();
        assert_eq!(corr_bound_v(&params, 0).unwrap(), 0.0);
        assert!(corr_bound_v(&params, 3).is_err());
    }

    #[test]
    fn magnitude_bound_values() {
        assert_eq!(v_magnitude_bound(1), BigInt::from(3));
        assert_eq!(v_magnitude_bound(2), BigInt::from(144));
    }

    #[test]
    fn step_bounds_hold() {
        let params = ModelParams::new(3, 3, 3, harmonic(3), 0).unwrap();
        let s = MultiIndex::new(vec![set(&[1]), set(&[1]), set(&[1, 2]), set(&[2])]);
        assert!(check_step_bounds(&params, &s).unwrap() > 0);
    }
}
