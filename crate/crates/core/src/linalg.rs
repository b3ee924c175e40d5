//! Sparse matrices over a [`Scalar`], exact linear solves, and a spectral pseudo-inverse.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::scalar::{format_fraction, Scalar};

/// Row-major sparse matrix; absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, T>>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![BTreeMap::new(); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row].get(&col).cloned().unwrap_or_else(T::zero)
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        assert!(row < self.rows && col < self.cols, "index ({row}, {col}) out of bounds");
        if value.is_zero() {
            self.data[row].remove(&col);
        } else {
            self.data[row].insert(col, value);
        }
    }

    pub fn add_to(&mut self, row: usize, col: usize, value: T) {
        let current = self.get(row, col);
        self.set(row, col, current + value);
    }

    /// Nonzero entries of one row, in column order.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, &T)> {
        self.data[row].iter().map(|(&c, v)| (c, v))
    }

    /// All nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(&j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (i, j, v) in self.entries() {
            t.data[j].insert(i, v.clone());
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for (i, row) in self.data.iter().enumerate() {
            let mut acc: BTreeMap<usize, T> = BTreeMap::new();
            for (&mid, a) in row {
                for (&j, b) in &other.data[mid] {
                    let term = a.clone() * b.clone();
                    let slot = acc.entry(j).or_insert_with(T::zero);
                    *slot = slot.clone() + term;
                }
            }
            acc.retain(|_, v| !v.is_zero());
            out.data[i] = acc;
        }
        out
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = self.clone();
        for row in &mut out.data {
            for v in row.values_mut() {
                *v = v.clone() * factor.clone();
            }
            row.retain(|_, v| !v.is_zero());
        }
        out
    }

    /// `self + other`, entrywise.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (i, j, v) in other.entries() {
            out.add_to(i, j, v.clone());
        }
        out
    }

    /// Row vector times matrix: `x^T A`.
    pub fn left_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (&j, v) in &self.data[i] {
                out[j] = out[j].clone() + xi.clone() * v.clone();
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        self.data
            .iter()
            .map(|row| {
                row.iter()
                    .fold(T::zero(), |acc, (&j, v)| acc + v.clone() * x[j].clone())
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self
                .data
                .iter()
                .enumerate()
                .all(|(i, row)| row.len() == 1 && row.get(&i).is_some_and(|v| v.is_one()))
    }

    pub fn to_dense_f64(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.entries() {
            d[(i, j)] = v.to_f64();
        }
        d
    }
}

impl SparseMatrix<BigRational> {
    /// Coordinate format: one `row col p/q` line per nonzero, 0-indexed.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "% {} {} {}", self.rows, self.cols, self.nnz()).unwrap();
        for (i, j, v) in self.entries() {
            writeln!(out, "{i} {j} {}", format_fraction(v)).unwrap();
        }
        out
    }
}

/// Solves the (possibly singular but consistent) system `A x = b` exactly by Gaussian
/// elimination; free variables are set to zero.
pub fn solve_consistent<T: Scalar>(a: &SparseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    let m = a.cols();
    assert_eq!(b.len(), n);
    let mut rows: Vec<BTreeMap<usize, T>> = (0..n)
        .map(|i| a.row(i).map(|(j, v)| (j, v.clone())).collect())
        .collect();
    let mut rhs: Vec<T> = b.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; n];
    for col in 0..m {
        let pivot = (0..n).find(|&i| !used[i] && rows[i].get(&col).is_some_and(|v| !v.is_zero()));
        let Some(p) = pivot else { continue };
        used[p] = true;
        let pv = rows[p][&col].clone();
        let prow: Vec<(usize, T)> = rows[p].iter().map(|(&j, v)| (j, v.clone() / pv.clone())).collect();
        let prhs = rhs[p].clone() / pv;
        rows[p] = prow.iter().cloned().collect();
        rhs[p] = prhs.clone();
        for i in 0..n {
            if i == p {
                continue;
            }
            let Some(factor) = rows[i].get(&col).cloned() else { continue };
            if factor.is_zero() {
                continue;
            }
            for (j, v) in &prow {
                let slot = rows[i].entry(*j).or_insert_with(T::zero);
                *slot = slot.clone() - factor.clone() * v.clone();
            }
            rows[i].retain(|_, v| !v.is_zero());
            rhs[i] = rhs[i].clone() - factor * prhs.clone();
        }
        pivots.push((p, col));
    }
    for i in 0..n {
        // floats get a little slack for rounding
        if !used[i] && !rhs[i].is_zero() && (T::EXACT || rhs[i].to_f64().abs() > 1e-8) {
            return Err(Error::Consistency(format!("inconsistent linear system at row {i}")));
        }
    }
    let mut x = vec![T::zero(); m];
    for (p, col) in pivots {
        x[col] = rhs[p].clone();
    }
    Ok(x)
}

/// `b^T P^+ b` for symmetric positive semidefinite `P`, with eigenvalues below
/// `rel_threshold * max_eigenvalue` treated as zero.
pub fn psd_pseudo_quadratic(p: &DMatrix<f64>, b: &[f64], rel_threshold: f64) -> f64 {
    if p.nrows() == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(p.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if top <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (idx, &val) in eig.eigenvalues.iter().enumerate() {
        if val > rel_threshold * top {
            let v = eig.eigenvectors.column(idx);
            let proj: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            total += proj * proj / val;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn product_and_identity() {
        let mut a = SparseMatrix::<BigRational>::zeros(2, 2);
        a.set(0, 0, q(2, 1));
        a.set(0, 1, q(1, 1));
        a.set(1, 1, q(3, 1));
        let mut inv = SparseMatrix::zeros(2, 2);
        inv.set(0, 0, q(1, 2));
        inv.set(0, 1, q(-1, 6));
        inv.set(1, 1, q(1, 3));
        assert!(inv.mul(&a).is_identity());
        assert!(!a.is_identity());
        assert_eq!(a.transpose().get(1, 0), q(1, 1));
        assert_eq!(a.left_mul_vec(&[q(1, 1), q(1, 1)]), vec![q(2, 1), q(4, 1)]);
        assert_eq!(a.mul_vec(&[q(1, 1), q(1, 1)]), vec![q(3, 1), q(3, 1)]);
    }

    #[test]
    fn singular_consistent_solve() {
        // [[1,1],[1,1]] x = [2,2]
        let mut a = SparseMatrix::<BigRational>::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                a.set(i, j, q(1, 1));
            }
        }
        let x = solve_consistent(&a, &[q(2, 1), q(2, 1)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![q(2, 1), q(2, 1)]);
        assert!(solve_consistent(&a, &[q(1, 1), q(2, 1)]).is_err());
    }

    #[test]
    fn spectral_route_matches_exact() {
        let mut a = SparseMatrix::<BigRational>::zeros(3, 3);
        let vals = [[2, 1, 0], [1, 2, 1], [0, 1, 2]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, q(vals[i][j], 1));
            }
        }
        let b = vec![q(1, 1), q(0, 1), q(1, 1)];
        let x = solve_consistent(&a, &b).unwrap();
        let exact: BigRational = b.iter().zip(&x).map(|(u, v)| u * v).sum();
        let approx = psd_pseudo_quadratic(&a.to_dense_f64(), &[1.0, 0.0, 1.0], 1e-10);
        assert!((Scalar::to_f64(&exact) - approx).abs() < 1e-12);
    }

    #[test]
    fn coordinate_dump() {
        let mut a = SparseMatrix::<BigRational>::zeros(2, 3);
        a.set(1, 2, q(-1, 3));
        let text = a.to_coordinate_text();
        assert_eq!(text, "% 2 3 1\n1 2 -1/3\n");
    }
}
