//! Exact degree-`D` correlation and MMSE on tiny instances.

use num_rational::BigRational;
use serde::Serialize;

use crate::bound::corr_bound_v;
use crate::coeffmap::{build_m, build_mplus, corr_upper_from_w, lambda_of_labeling, w_vector, BasisIndexing};
use crate::combinat::{labelings, xor_columns, MultiIndex, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{psd_pseudo_quadratic, solve_consistent, SparseMatrix};
use crate::model::{sample_instance, tensor_entry, ModelParams};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;

/// Relative eigenvalue cutoff for the spectral pseudo-inverse.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Slack allowed above 1 before a correlation is reported as inconsistent.
pub const CORR_TOLERANCE: f64 = 1e-9;

/// `c_S = E[T^S a_11] = sum_ell lambda^ell 1{S(ell) = {(1,1)}}`.
pub fn c_entry<T: Scalar>(params: &ModelParams, s: &MultiIndex) -> T {
    let target = SupportSet::target_entry();
    labelings(params.r, s.degree())
        .filter(|ell| xor_columns(s, ell) == target)
        .fold(T::zero(), |acc, ell| acc + lambda_of_labeling::<T>(&params.lambda, &ell))
}

pub fn c_vector<T: Scalar>(params: &ModelParams, basis: &BasisIndexing) -> Result<Vec<T>> {
    Ok(basis.s_basis.iter().map(|s| c_entry(params, s)).collect())
}

/// `P_{S,S'} = sum_{ell, ell'} lambda^ell lambda^ell' 1{S(ell) = S'(ell')}` by direct
/// enumeration of labeling pairs.
pub fn p_matrix_enumerated<T: Scalar>(params: &ModelParams, basis: &BasisIndexing) -> Result<SparseMatrix<T>> {
    let images: Vec<Vec<(SupportSet, T)>> = basis
        .s_basis
        .iter()
        .map(|s| {
            labelings(params.r, s.degree())
                .map(|ell| (xor_columns(s, &ell), lambda_of_labeling::<T>(&params.lambda, &ell)))
                .collect()
        })
        .collect();
    let size = basis.s_basis.len();
    let mut p = SparseMatrix::zeros(size, size);
    for a in 0..size {
        for b in a..size {
            let mut total = T::zero();
            for (u, wa) in &images[a] {
                for (v, wb) in &images[b] {
                    if u == v {
                        total = total + wa.clone() * wb.clone();
                    }
                }
            }
            p.set(a, b, total.clone());
            p.set(b, a, total);
        }
    }
    Ok(p)
}

/// `P = M^T M`, using orthonormality of the characters `A^U`.
pub fn p_matrix_from_m<T: Scalar>(m: &SparseMatrix<T>) -> SparseMatrix<T> {
    m.transpose().mul(m)
}

/// `c` and `P` over one monomial basis.
#[derive(Clone, Debug)]
pub struct MomentData<T> {
    pub c: Vec<T>,
    pub p: SparseMatrix<T>,
}

impl<T: Scalar> MomentData<T> {
    /// Assembles both moments; `P` is computed two ways and they must agree.
    pub fn assemble(params: &ModelParams, basis: &BasisIndexing) -> Result<Self> {
        let m = build_m::<T>(params, basis)?;
        let p = p_matrix_from_m(&m);
        let direct = p_matrix_enumerated::<T>(params, basis)?;
        if !matrices_agree(&p, &direct) {
            return Err(Error::Consistency("P from M^T M differs from labeling enumeration".into()));
        }
        Ok(MomentData {
            c: c_vector(params, basis)?,
            p,
        })
    }
}

fn matrices_agree<T: Scalar>(a: &SparseMatrix<T>, b: &SparseMatrix<T>) -> bool {
    if T::EXACT {
        return a == b;
    }
    a.rows() == b.rows()
        && a.cols() == b.cols()
        && (0..a.rows()).all(|i| (0..a.cols()).all(|j| (a.get(i, j).to_f64() - b.get(i, j).to_f64()).abs() < 1e-9))
}

/// `Corr^2 = sup_f (c^T f)^2 / f^T P f = c^T P^+ c`, via an exact solve of `P x = c`.
///
/// `c` always lies in the range of `P = M^T M` (it is `M^T` applied to the indicator of
/// `{(1,1)}`), so the system is consistent and any solution gives the same value.
pub fn corr_squared<T: Scalar>(moments: &MomentData<T>) -> Result<T> {
    if moments.c.is_empty() {
        return Ok(T::zero());
    }
    let x = solve_consistent(&moments.p, &moments.c)?;
    Ok(moments
        .c
        .iter()
        .zip(&x)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
}

pub fn corr_exact<T: Scalar>(moments: &MomentData<T>) -> Result<f64> {
    Ok(corr_squared(moments)?.to_f64().max(0.0).sqrt())
}

/// The same supremum through a floating-point eigendecomposition of `P`.
pub fn corr_spectral<T: Scalar>(moments: &MomentData<T>) -> f64 {
    let b: Vec<f64> = moments.c.iter().map(|x| x.to_f64()).collect();
    psd_pseudo_quadratic(&moments.p.to_dense_f64(), &b, RANK_THRESHOLD)
        .max(0.0)
        .sqrt()
}

/// `MMSE = E[a_11^2] - Corr^2 = 1 - Corr^2`.
pub fn mmse_exact(corr: f64) -> Result<f64> {
    if !(0.0..=1.0 + CORR_TOLERANCE).contains(&corr) {
        return Err(Error::Consistency(format!("correlation {corr} outside [0, 1]")));
    }
    Ok((1.0 - corr * corr).clamp(0.0, 1.0))
}

/// One row of the oracle table.
#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub degree: usize,
    pub lambda_min: f64,
    pub corr_exact: f64,
    pub mmse_exact: f64,
    pub corr_w_bound: f64,
    pub corr_v_bound: f64,
}

/// Exact correlation, MMSE, and both upper bounds at one parameter point.
pub fn oracle_point(params: &ModelParams, degree: usize, pruned: bool) -> Result<OracleRow> {
    let basis = BasisIndexing::new(params, degree, pruned)?;
    let moments = MomentData::<BigRational>::assemble(params, &basis)?;
    let corr = corr_exact(&moments)?;
    let m = build_m::<BigRational>(params, &basis)?;
    let mplus = build_mplus(params, &basis, &m)?;
    let w = w_vector(&moments.c, &mplus);
    Ok(OracleRow {
        n: params.n,
        r: params.r,
        k: params.k,
        degree,
        lambda_min: params.lambda_min().to_f64(),
        corr_exact: corr,
        mmse_exact: mmse_exact(corr)?,
        corr_w_bound: corr_upper_from_w(&w),
        corr_v_bound: corr_bound_v(params, degree)?.sqrt(),
    })
}

/// Sample mean and standard error of `T^S T^{S'}` over independently seeded instances.
pub fn monte_carlo_moment(
    params: &ModelParams,
    s: &MultiIndex,
    s_prime: &MultiIndex,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..samples {
        let p = ModelParams {
            seed: derive_seed(seed, i as u64),
            ..params.clone()
        };
        let inst = sample_instance(&p)?;
        let mut value = 1.0f64;
        for set in s.sets().iter().chain(s_prime.sets()) {
            value *= tensor_entry::<f64>(&inst, *set)?;
        }
        sum += value;
        sum_sq += value * value;
    }
    let count = samples as f64;
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(0.0) * count / (count - 1.0).max(1.0);
    Ok((mean, (var / count).sqrt()))
}
