//! Set-valued indices: subsets of `[n]`, multisets of them, and column supports.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

/// A subset of `[n]` (`n <= 64`) stored as a bitmask; element `i` is bit `i`, 0-indexed.
///
/// Ordered by size first, then lexicographically on the sorted element list.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Subset(pub u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn singleton(i: usize) -> Self {
        assert!(i < 64, "element {i} out of range for a 64-bit subset");
        Subset(1 << i)
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(elements: I) -> Self {
        elements
            .into_iter()
            .fold(Subset::EMPTY, |acc, i| Subset(acc.0 | Subset::singleton(i).0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn xor(self, other: Subset) -> Subset {
        Subset(self.0 ^ other.0)
    }

    /// Elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Largest element plus one, or 0 for the empty set.
    pub fn span(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.elements().cmp(other.elements()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shown 1-indexed, e.g. `{1,3}`.
impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.elements().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// All subsets `I` of `[n]` with `min_size <= |I| <= max_size`, in canonical order.
pub fn subsets_by_size(n: usize, min_size: usize, max_size: usize) -> Vec<Subset> {
    assert!(n <= 64, "subsets are limited to n <= 64");
    fn extend(n: usize, size: usize, start: usize, acc: &mut Vec<usize>, out: &mut Vec<Subset>) {
        if acc.len() == size {
            out.push(Subset::from_elements(acc.iter().copied()));
            return;
        }
        for i in start..n {
            acc.push(i);
            extend(n, size, i + 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    for size in min_size..=max_size.min(n) {
        extend(n, size, 0, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// A multiset of nonempty subsets kept as a sorted list `(I_1, ..., I_|S|)`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex(Vec<Subset>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// Sorts the given sets into canonical list form.
    pub fn new(mut sets: Vec<Subset>) -> Self {
        sets.sort();
        MultiIndex(sets)
    }

    pub fn sets(&self) -> &[Subset] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_set_size(&self) -> usize {
        self.0.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// XOR of every set in the list: the single column produced by the all-ones labeling.
    pub fn parity(&self) -> Subset {
        self.0.iter().fold(Subset::EMPTY, |acc, &s| acc.xor(s))
    }

    /// Even-cover predicate: the all-ones labeling maps `S` to exactly `{(1,1)}`.
    pub fn even_cover(&self) -> bool {
        !self.0.is_empty() && self.parity() == Subset::singleton(0)
    }

    /// Copy with the positions flagged in `remove` dropped (the result stays sorted).
    pub fn without_positions(&self, remove: &[bool]) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(remove)
                .filter(|(_, &r)| !r)
                .map(|(&s, _)| s)
                .collect(),
        )
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (pos, s) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// `C(m + d - 1, d)`, the number of size-`d` multisets over `m` items (saturating).
pub fn multiset_count(m: usize, degree: usize) -> u128 {
    if degree == 0 {
        return 1;
    }
    if m == 0 {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..degree as u128 {
        // the running product stays a binomial coefficient, so the division is exact
        acc = match acc.checked_mul(m as u128 + i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All multisets of size exactly `degree` over `omega` (which must be sorted), in canonical order.
pub fn multisets_of_degree(omega: &[Subset], degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; degree];
    if degree == 0 {
        return vec![MultiIndex::empty()];
    }
    if omega.is_empty() {
        return out;
    }
    loop {
        out.push(MultiIndex(idx.iter().map(|&i| omega[i]).collect()));
        let mut pos = degree;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] + 1 < omega.len() {
                idx[pos] += 1;
                let v = idx[pos];
                for q in idx.iter_mut().skip(pos + 1) {
                    *q = v;
                }
                break;
            }
        }
    }
}

/// A subset `U` of `[n] x [r]`, stored column-wise; only nonempty columns are kept.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SupportSet {
    columns: BTreeMap<usize, Subset>,
}

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet::default()
    }

    /// Builds from `(column, contents)` pairs; empty contents are dropped.
    pub fn from_columns<I: IntoIterator<Item = (usize, Subset)>>(columns: I) -> Self {
        SupportSet {
            columns: columns.into_iter().filter(|(_, s)| !s.is_empty()).collect(),
        }
    }

    /// The set `{(1,1)}` (row 0, column 0).
    pub fn target_entry() -> Self {
        SupportSet::from_columns([(0, Subset::singleton(0))])
    }

    pub fn column(&self, j: usize) -> Subset {
        self.columns.get(&j).copied().unwrap_or(Subset::EMPTY)
    }

    pub fn columns(&self) -> impl Iterator<Item = (usize, Subset)> + '_ {
        self.columns.iter().map(|(&j, &s)| (j, s))
    }

    /// Number of nonempty columns.
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.columns.values().map(|s| s.len()).sum()
    }

    /// Every column has at most `k` rows and at most `max_columns` columns are nonempty.
    pub fn is_generic(&self, k: usize, max_columns: usize) -> bool {
        self.columns.len() <= max_columns && self.columns.values().all(|s| s.len() <= k)
    }

    /// Product of `lambda_j` over the nonempty columns.
    pub fn lambda_product(&self, lambda: &[BigRational]) -> BigRational {
        self.columns
            .keys()
            .fold(BigRational::one(), |acc, &j| acc * &lambda[j])
    }

    /// Multiset of nonempty columns, without any genericity check.
    pub fn column_multiset(&self) -> MultiIndex {
        MultiIndex::new(self.columns.values().copied().collect())
    }
}

impl Ord for SupportSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.columns
            .len()
            .cmp(&other.columns.len())
            .then_with(|| self.columns.iter().cmp(other.columns.iter()))
    }
}

impl PartialOrd for SupportSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shown as `U[col]=set` pairs, 1-indexed.
impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (pos, (j, s)) in self.columns.iter().enumerate() {
            if pos > 0 {
                write!(f, " ")?;
            }
            write!(f, "U{}={}", j + 1, s)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_order_is_size_then_lex() {
        let a = Subset::from_elements([0, 2]);
        let b = Subset::from_elements([1, 2]);
        let c = Subset::from_elements([3]);
        let mut v = vec![b, a, c];
        v.sort();
        assert_eq!(v, vec![c, a, b]);
    }

    #[test]
    fn subset_counts_match_binomials() {
        assert_eq!(subsets_by_size(2, 1, 3).len(), 3);
        assert_eq!(subsets_by_size(4, 1, 3).len(), 14);
        assert_eq!(subsets_by_size(5, 3, 3).len(), 10);
        assert_eq!(subsets_by_size(6, 0, 0), vec![Subset::EMPTY]);
        let all = subsets_by_size(5, 1, 5);
        assert_eq!(all.len(), 31);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn multiset_counts() {
        let omega = subsets_by_size(4, 1, 3);
        assert_eq!(multisets_of_degree(&omega, 0).len(), 1);
        assert_eq!(multisets_of_degree(&omega, 2).len(), 105);
        assert_eq!(multisets_of_degree(&omega, 3).len(), 560);
        assert_eq!(multiset_count(14, 3), 560);
        assert_eq!(multiset_count(14, 0), 1);
        assert_eq!(multiset_count(0, 2), 0);
        let two = multisets_of_degree(&omega, 2);
        assert!(two.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn multiset_equality_ignores_input_order() {
        let a = Subset::from_elements([0, 1]);
        let b = Subset::from_elements([2]);
        assert_eq!(MultiIndex::new(vec![a, b]), MultiIndex::new(vec![b, a]));
    }

    #[test]
    fn even_cover_predicate() {
        let s = MultiIndex::new(vec![
            Subset::from_elements([0, 1]),
            Subset::from_elements([1]),
        ]);
        assert!(s.even_cover());
        assert!(!MultiIndex::new(vec![Subset::from_elements([1])]).even_cover());
        assert!(!MultiIndex::empty().even_cover());
    }

    #[test]
    fn display_is_one_indexed() {
        let u = SupportSet::from_columns([(6, Subset::from_elements([1, 2, 3]))]);
        assert_eq!(u.to_string(), "[U7={2,3,4}]");
    }
}
