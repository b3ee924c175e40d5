//! The transfer matrix `M` from monomial coefficients to Fourier coefficients, its explicit
//! block left-inverse, and the vector `w = c^T M^+`.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;

use crate::combinat::{
    falling_factorial, labelings, multisets_of_degree, subsets_by_size, xor_columns, MultiIndex, SupportSet,
};
use crate::error::{capacity, Error, Result};
use crate::linalg::SparseMatrix;
use crate::model::{ModelParams, MAX_EXACT_N};
use crate::scalar::Scalar;

/// Largest number of labelings `r^D` enumerated per basis column.
pub const MAX_LABELINGS: u128 = 1_000_000;
/// Largest number of monomials in a basis.
pub const MAX_BASIS: usize = 20_000;
/// Multisets enumerated before pruning.
pub const MAX_CANDIDATES: u128 = 2_000_000;

/// Row and column index sets for `M`.
#[derive(Clone, Debug)]
pub struct BasisIndexing {
    pub degree: usize,
    pub k: usize,
    pub r: usize,
    /// Monomials `S` with `|S| <= D`, ordered by `(|S|, canonical list)`.
    pub s_basis: Vec<MultiIndex>,
    /// Every `U` reachable as `S(ell)`, ordered by `(|cols(U)|, canonical)`.
    pub u_basis: Vec<SupportSet>,
    s_index: HashMap<MultiIndex, usize>,
    u_index: HashMap<SupportSet, usize>,
    generic: Vec<bool>,
    pruned: bool,
}

impl BasisIndexing {
    /// Full basis over `Omega = {I : 0 < |I| <= k}`; with `pruned`, only even-cover monomials.
    pub fn new(params: &ModelParams, degree: usize, pruned: bool) -> Result<Self> {
        params.validate()?;
        if params.n > MAX_EXACT_N {
            return Err(capacity("exact pipeline n", params.n as u128, MAX_EXACT_N as u128));
        }
        crate::combinat::check_enum_guard("labelings r^D", params.r, degree, MAX_LABELINGS)?;
        let omega = subsets_by_size(params.n, 1, params.k);
        let candidates = (0..=degree).fold(0u128, |acc, d| {
            acc.saturating_add(crate::combinat::multiset_count(omega.len(), d))
        });
        if candidates > MAX_CANDIDATES {
            return Err(capacity("candidate monomials", candidates, MAX_CANDIDATES));
        }
        let mut s_basis = Vec::new();
        for d in 0..=degree {
            for s in multisets_of_degree(&omega, d) {
                if !pruned || s.even_cover() {
                    s_basis.push(s);
                }
                if s_basis.len() > MAX_BASIS {
                    return Err(capacity("monomial basis", s_basis.len() as u128, MAX_BASIS as u128));
                }
            }
        }
        let mut reachable = std::collections::BTreeSet::new();
        for s in &s_basis {
            for ell in labelings(params.r, s.degree()) {
                reachable.insert(xor_columns(s, &ell));
            }
        }
        let u_basis: Vec<SupportSet> = reachable.into_iter().collect();
        let generic = u_basis.iter().map(|u| u.is_generic(params.k, degree)).collect();
        Ok(BasisIndexing {
            degree,
            k: params.k,
            r: params.r,
            s_index: s_basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect(),
            u_index: u_basis.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect(),
            s_basis,
            u_basis,
            generic,
            pruned,
        })
    }

    pub fn s_position(&self, s: &MultiIndex) -> Option<usize> {
        self.s_index.get(s).copied()
    }

    pub fn u_position(&self, u: &SupportSet) -> Option<usize> {
        self.u_index.get(u).copied()
    }

    pub fn is_generic(&self, u_pos: usize) -> bool {
        self.generic[u_pos]
    }

    pub fn is_pruned(&self) -> bool {
        self.pruned
    }
}

/// `lambda^ell = prod_d lambda_{ell_d}`.
pub(crate) fn lambda_of_labeling<T: Scalar>(lambda: &[BigRational], ell: &[usize]) -> T {
    ell.iter().fold(T::one(), |acc, &j| acc * T::from_rational(&lambda[j]))
}

/// `M_{US} = sum_ell lambda^ell 1{S(ell) = U}`; rows follow `u_basis`, columns `s_basis`.
pub fn build_m<T: Scalar>(params: &ModelParams, basis: &BasisIndexing) -> Result<SparseMatrix<T>> {
    let mut m = SparseMatrix::zeros(basis.u_basis.len(), basis.s_basis.len());
    for (col, s) in basis.s_basis.iter().enumerate() {
        for ell in labelings(params.r, s.degree()) {
            let u = xor_columns(s, &ell);
            let row = basis
                .u_position(&u)
                .ok_or_else(|| Error::Consistency(format!("support {u} missing from basis")))?;
            m.add_to(row, col, lambda_of_labeling(&params.lambda, &ell));
        }
    }
    Ok(m)
}

fn require_degree_at_most_rank(basis: &BasisIndexing) -> Result<()> {
    if basis.degree > basis.r {
        return Err(Error::Parameter(format!(
            "degree D = {} exceeds rank r = {}: no distinct-entry labelings exist",
            basis.degree, basis.r
        )));
    }
    Ok(())
}

/// Left inverse of the diagonal block `Q(d)`: `1{cols(U) = S} / (lambda^U r^(|S| falling))`.
///
/// Shaped `|s_basis| x |u_basis|` with nonzeros only in level-`d` rows and columns.
pub fn build_qplus<T: Scalar>(params: &ModelParams, basis: &BasisIndexing, level: usize) -> Result<SparseMatrix<T>> {
    require_degree_at_most_rank(basis)?;
    let mut q = SparseMatrix::zeros(basis.s_basis.len(), basis.u_basis.len());
    let ff = T::from_u128(falling_factorial(params.r as u64, level as u64));
    for (col, u) in basis.u_basis.iter().enumerate() {
        if !basis.is_generic(col) || u.column_count() != level {
            continue;
        }
        if let Some(row) = basis.s_position(&u.column_multiset()) {
            let lam = T::from_rational(&u.lambda_product(&params.lambda));
            q.set(row, col, T::one() / (lam * ff.clone()));
        }
    }
    Ok(q)
}

/// Explicit left inverse `M^+ = [G^+ 0]` built by the block recursion over degree levels.
pub fn build_mplus<T: Scalar>(
    params: &ModelParams,
    basis: &BasisIndexing,
    m: &SparseMatrix<T>,
) -> Result<SparseMatrix<T>> {
    require_degree_at_most_rank(basis)?;
    let mut gplus = build_qplus::<T>(params, basis, 0)?;
    for level in 1..=basis.degree {
        // R(level): generic rows with fewer than `level` columns, monomials of degree `level`
        let mut r_block = SparseMatrix::zeros(basis.u_basis.len(), basis.s_basis.len());
        for (row, u) in basis.u_basis.iter().enumerate() {
            if !basis.is_generic(row) || u.column_count() >= level {
                continue;
            }
            for (col, v) in m.row(row) {
                if basis.s_basis[col].degree() == level {
                    r_block.set(row, col, v.clone());
                }
            }
        }
        let qplus = build_qplus::<T>(params, basis, level)?;
        let correction = gplus.mul(&r_block).mul(&qplus).scale(&-T::one());
        gplus = gplus.add(&correction).add(&qplus);
    }
    Ok(gplus)
}

/// `w^T = c^T M^+`.
pub fn w_vector<T: Scalar>(c: &[T], mplus: &SparseMatrix<T>) -> Vec<T> {
    mplus.left_mul_vec(c)
}

/// `w` recomputed level by level from its scalar recurrence, without forming `M^+`.
///
/// Returned in `u_basis` order; non-generic supports carry zero.
pub fn w_recurrence<T: Scalar>(params: &ModelParams, basis: &BasisIndexing, c: &[T]) -> Result<Vec<T>> {
    require_degree_at_most_rank(basis)?;
    let mut w = vec![T::zero(); basis.u_basis.len()];
    // u_basis is sorted by column count, so every U' the recurrence reads is already final
    for (pos, u) in basis.u_basis.iter().enumerate() {
        if !basis.is_generic(pos) {
            continue;
        }
        let s = u.column_multiset();
        let Some(s_pos) = basis.s_position(&s) else { continue };
        let mut sum = T::zero();
        for ell in labelings(params.r, s.degree()) {
            let image = xor_columns(&s, &ell);
            if image.column_count() >= s.degree() || !image.is_generic(params.k, basis.degree) {
                continue;
            }
            if let Some(img_pos) = basis.u_position(&image) {
                sum = sum + w[img_pos].clone() * lambda_of_labeling::<T>(&params.lambda, &ell);
            }
        }
        let lam = T::from_rational(&u.lambda_product(&params.lambda));
        let ff = T::from_u128(falling_factorial(params.r as u64, s.degree() as u64));
        w[pos] = (c[s_pos].clone() - sum) / (lam * ff);
    }
    Ok(w)
}

/// `sum_U w_U^2`, kept in the scalar type.
pub fn w_norm_squared<T: Scalar>(w: &[T]) -> T {
    w.iter().fold(T::zero(), |acc, x| acc + x.clone() * x.clone())
}

/// `||c^T M^+||`, an upper bound on the degree-`D` correlation.
pub fn corr_upper_from_w<T: Scalar>(w: &[T]) -> f64 {
    w_norm_squared(w).to_f64().sqrt()
}

/// `v_S = lambda^U r^(|S| falling) w_U`, checked to be the same for every `U` with `cols(U) = S`.
pub fn v_from_w<T: Scalar>(
    params: &ModelParams,
    basis: &BasisIndexing,
    w: &[T],
) -> Result<BTreeMap<MultiIndex, T>> {
    let mut out: BTreeMap<MultiIndex, T> = BTreeMap::new();
    for (pos, u) in basis.u_basis.iter().enumerate() {
        if !basis.is_generic(pos) {
            continue;
        }
        let s = u.column_multiset();
        let lam = T::from_rational(&u.lambda_product(&params.lambda));
        let ff = T::from_u128(falling_factorial(params.r as u64, s.degree() as u64));
        let v = lam * ff * w[pos].clone();
        match out.get(&s) {
            Some(existing) if *existing != v => {
                if T::EXACT || (existing.to_f64() - v.to_f64()).abs() > 1e-9 {
                    return Err(Error::Consistency(format!("v_S differs across supports for S = {s}")));
                }
            }
            Some(_) => {}
            None => {
                out.insert(s, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::Subset;
    use crate::oracle::c_vector;
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    type Q = BigRational;

    fn frac(p: i64, q: i64) -> Q {
        Q::new(BigInt::from(p), BigInt::from(q))
    }

    fn harmonic(r: usize) -> Vec<Q> {
        (1..=r as i64).map(|j| frac(1, j)).collect()
    }

    #[test]
    fn degree_one_column() {
        let params = ModelParams::new(2, 3, 3, harmonic(3), 0).unwrap();
        let basis = BasisIndexing::new(&params, 1, false).unwrap();
        let m = build_m::<Q>(&params, &basis).unwrap();
        let s = MultiIndex::new(vec![Subset::singleton(0)]);
        let col = basis.s_position(&s).unwrap();
        for j in 0..3 {
            let u = SupportSet::from_columns([(j, Subset::singleton(0))]);
            assert_eq!(m.get(basis.u_position(&u).unwrap(), col), params.lambda[j]);
        }
        let nonzero = (0..m.rows()).filter(|&row| !m.get(row, col).is_zero()).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn rank_one_single_nonzero_per_column() {
        let params = ModelParams::uniform(3, 1, 3, 0).unwrap();
        let basis = BasisIndexing::new(&params, 1, false).unwrap();
        let m = build_m::<Q>(&params, &basis).unwrap();
        let mt = m.transpose();
        for col in 0..m.cols() {
            let entries: Vec<_> = mt.row(col).collect();
            assert_eq!(entries.len(), 1);
            assert!(entries[0].1.is_one());
        }
        let mplus = build_mplus(&params, &basis, &m).unwrap();
        assert!(mplus.mul(&m).is_identity());
    }

    #[test]
    fn block_structure_lower_left_zero() {
        let params = ModelParams::new(3, 2, 3, harmonic(2), 0).unwrap();
        let basis = BasisIndexing::new(&params, 2, false).unwrap();
        let m = build_m::<Q>(&params, &basis).unwrap();
        for (row, col, _) in m.entries() {
            assert!(basis.u_basis[row].column_count() <= basis.s_basis[col].degree());
        }
    }

    #[test]
    fn qplus_entries() {
        let params = ModelParams::new(2, 3, 3, harmonic(3), 0).unwrap();
        let basis = BasisIndexing::new(&params, 1, false).unwrap();
        let q = build_qplus::<Q>(&params, &basis, 1).unwrap();
        let s_pos = basis.s_position(&MultiIndex::new(vec![Subset::singleton(0)])).unwrap();
        for j in 0..3 {
            let u = SupportSet::from_columns([(j, Subset::singleton(0))]);
            let expect = Q::one() / (&params.lambda[j] * frac(3, 1));
            assert_eq!(q.get(s_pos, basis.u_position(&u).unwrap()), expect);
        }
        let m = build_m::<Q>(&params, &basis).unwrap();
        // Q+ Q = I on the level-1 block
        let prod = q.mul(&m);
        for (i, s) in basis.s_basis.iter().enumerate() {
            for (j, t) in basis.s_basis.iter().enumerate() {
                if s.degree() == 1 && t.degree() == 1 {
                    assert_eq!(prod.get(i, j), if i == j { Q::one() } else { Q::zero() });
                }
            }
        }
    }

    #[test]
    fn degree_above_rank_rejected() {
        let params = ModelParams::uniform(2, 1, 3, 0).unwrap();
        let basis = BasisIndexing::new(&params, 2, false).unwrap();
        let m = build_m::<Q>(&params, &basis).unwrap();
        assert!(matches!(build_mplus(&params, &basis, &m), Err(Error::Parameter(_))));
    }

    #[test]
    fn left_inverse_and_w_routes_agree() {
        for (n, r, d) in [(2, 2, 2), (3, 2, 1), (3, 3, 2)] {
            let params = ModelParams::new(n, r, 3, harmonic(r), 0).unwrap();
            let basis = BasisIndexing::new(&params, d, false).unwrap();
            let m = build_m::<Q>(&params, &basis).unwrap();
            let mplus = build_mplus(&params, &basis, &m).unwrap();
            assert!(mplus.mul(&m).is_identity());
            for (row, col, _) in mplus.entries() {
                assert!(basis.is_generic(col), "row {row} reads a non-generic support");
            }
            let c = c_vector::<Q>(&params, &basis).unwrap();
            let w = w_vector(&c, &mplus);
            assert_eq!(w, w_recurrence(&params, &basis, &c).unwrap());
            v_from_w(&params, &basis, &w).unwrap();
        }
    }

    #[test]
    fn w_is_independent_of_degree() {
        let params = ModelParams::new(3, 3, 3, harmonic(3), 0).unwrap();
        let b1 = BasisIndexing::new(&params, 1, false).unwrap();
        let b2 = BasisIndexing::new(&params, 2, false).unwrap();
        let w1 = w_recurrence(&params, &b1, &c_vector::<Q>(&params, &b1).unwrap()).unwrap();
        let w2 = w_recurrence(&params, &b2, &c_vector::<Q>(&params, &b2).unwrap()).unwrap();
        for (pos, u) in b1.u_basis.iter().enumerate() {
            if b1.is_generic(pos) {
                assert_eq!(w1[pos], w2[b2.u_position(u).unwrap()], "U = {u}");
            }
        }
    }

    #[test]
    fn rank_one_degree_one_w() {
        let params = ModelParams::uniform(2, 1, 3, 0).unwrap();
        let basis = BasisIndexing::new(&params, 1, false).unwrap();
        let c = c_vector::<Q>(&params, &basis).unwrap();
        let w = w_recurrence(&params, &basis, &c).unwrap();
        let u = SupportSet::target_entry();
        assert!(w[basis.u_position(&u).unwrap()].is_one());
        assert!(corr_upper_from_w(&w) >= 1.0);
        assert_eq!(corr_upper_from_w::<Q>(&vec![Q::zero(); 4]), 0.0);
    }

    #[test]
    fn pruned_basis_keeps_w() {
        let params = ModelParams::new(3, 3, 3, harmonic(3), 0).unwrap();
        let full = BasisIndexing::new(&params, 2, false).unwrap();
        let pruned = BasisIndexing::new(&params, 2, true).unwrap();
        let wf = w_recurrence(&params, &full, &c_vector::<Q>(&params, &full).unwrap()).unwrap();
        let mp = build_m::<Q>(&params, &pruned).unwrap();
        let mplus = build_mplus(&params, &pruned, &mp).unwrap();
        assert!(mplus.mul(&mp).is_identity());
        let wp = w_vector(&c_vector::<Q>(&params, &pruned).unwrap(), &mplus);
        assert_eq!(w_norm_squared(&wf), w_norm_squared(&wp));
    }

    #[test]
    fn float_route_tracks_exact() {
        let params = ModelParams::new(3, 2, 3, harmonic(2), 0).unwrap();
        let basis = BasisIndexing::new(&params, 2, false).unwrap();
        let mq = build_m::<Q>(&params, &basis).unwrap();
        let mf = build_m::<f64>(&params, &basis).unwrap();
        let wq = w_vector(&c_vector::<Q>(&params, &basis).unwrap(), &build_mplus(&params, &basis, &mq).unwrap());
        let wf = w_vector(&c_vector::<f64>(&params, &basis).unwrap(), &build_mplus(&params, &basis, &mf).unwrap());
        assert!((corr_upper_from_w(&wq) - corr_upper_from_w(&wf)).abs() < 1e-12);
    }
}
