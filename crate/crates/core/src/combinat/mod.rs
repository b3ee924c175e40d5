//! Multiset, labeling and pattern combinatorics behind the coefficient map and the `v` recurrence.

mod pattern;
mod sets;

pub use pattern::{
    enumerate_pattern_orbits, enumerate_patterns, pattern_matches, patterns_to_jsonl, step_predicate,
    Pattern, PatternEntry, PatternOrbit,
};
pub use sets::{multiset_count, multisets_of_degree, subsets_by_size, MultiIndex, Subset, SupportSet};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest `|S|` any exhaustive enumeration accepts.
pub const MAX_ENUM_DEGREE: usize = 6;
/// Largest rank any exhaustive pattern enumeration accepts.
pub const MAX_ENUM_RANK: usize = 6;

/// Places each `I_d` into column `ell[d]` and XORs each column.
pub fn xor_columns(s: &MultiIndex, ell: &[usize]) -> SupportSet {
    assert_eq!(s.degree(), ell.len(), "labeling length must match |S|");
    let mut cols: BTreeMap<usize, Subset> = BTreeMap::new();
    for (&set, &j) in s.sets().iter().zip(ell) {
        let col = cols.entry(j).or_default();
        *col = col.xor(set);
    }
    SupportSet::from_columns(cols)
}

/// The multiset of nonempty columns of a generic `U`.
pub fn cols_of(u: &SupportSet, k: usize, max_columns: usize) -> Result<MultiIndex> {
    if !u.is_generic(k, max_columns) {
        return Err(Error::Domain(format!(
            "support {u} is not generic for k = {k}, D = {max_columns}"
        )));
    }
    Ok(u.column_multiset())
}

/// `r (r-1) ... (r-d+1)`; 1 for `d = 0` and 0 for `d > r`.
///
/// Panics on `u128` overflow, which the enumeration guards keep out of reach.
pub fn falling_factorial(r: u64, d: u64) -> u128 {
    if d > r {
        return 0;
    }
    (0..d).fold(1u128, |acc, i| {
        acc.checked_mul((r - i) as u128)
            .expect("falling factorial overflowed u128")
    })
}

/// Real-valued falling factorial for the asymptotic bound evaluators.
pub fn falling_factorial_f64(r: f64, d: u64) -> f64 {
    (0..d).map(|i| r - i as f64).product::<f64>().max(0.0)
}

/// Iterates all labelings in `[r]^len` in lexicographic order.
pub fn labelings(r: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (r as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    let mut current = vec![0usize; len];
    let mut emitted = 0u128;
    std::iter::from_fn(move || {
        if r == 0 && len > 0 || emitted >= total {
            return None;
        }
        let out = current.clone();
        emitted += 1;
        for pos in (0..len).rev() {
            current[pos] += 1;
            if current[pos] < r {
                break;
            }
            current[pos] = 0;
        }
        Some(out)
    })
}

pub(crate) fn check_enum_guard(what: &'static str, r: usize, degree: usize, limit: u128) -> Result<()> {
    let needed = (r as u128).saturating_pow(degree as u32);
    if needed > limit {
        return Err(crate::error::capacity(what, needed, limit));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> Subset {
        // 1-indexed in tests to mirror the usual notation
        Subset::from_elements(xs.iter().map(|x| x - 1))
    }

    #[test]
    fn xor_columns_places_sets_in_columns() {
        let s = MultiIndex::new(vec![set(&[2, 3, 4]), set(&[2, 3, 5])]);
        let u = xor_columns(&s, &[6, 7]);
        assert_eq!(u.column(6), set(&[2, 3, 4]));
        assert_eq!(u.column(7), set(&[2, 3, 5]));
        assert_eq!(u.column_count(), 2);
        assert_eq!(cols_of(&u, 3, 2).unwrap(), s);
    }

    #[test]
    fn xor_columns_cancels() {
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[1, 2])]);
        assert!(xor_columns(&s, &[2, 2]).is_empty());
        let s = MultiIndex::new(vec![set(&[1]), set(&[1, 2])]);
        let u = xor_columns(&s, &[0, 0]);
        assert_eq!(u, SupportSet::from_columns([(0, set(&[2]))]));
    }

    #[test]
    fn cols_of_rejects_non_generic() {
        let u = SupportSet::from_columns([(0, set(&[1]))]);
        assert_eq!(cols_of(&u, 3, 1).unwrap(), MultiIndex::new(vec![set(&[1])]));
        let wide = SupportSet::from_columns([(0, set(&[1, 2, 3, 4]))]);
        assert!(matches!(cols_of(&wide, 3, 2), Err(Error::Domain(_))));
        let many = SupportSet::from_columns([(0, set(&[1])), (1, set(&[2]))]);
        assert!(cols_of(&many, 3, 1).is_err());
    }

    #[test]
    fn falling_factorial_values() {
        assert_eq!(falling_factorial(5, 2), 20);
        assert_eq!(falling_factorial(7, 0), 1);
        assert_eq!(falling_factorial(0, 0), 1);
        assert_eq!(falling_factorial(3, 5), 0);
        assert_eq!(falling_factorial(3, 3), 6);
        assert_eq!(falling_factorial_f64(5.0, 2), 20.0);
    }

    #[test]
    fn labelings_enumerate_all() {
        let all: Vec<_> = labelings(3, 2).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[8], vec![2, 2]);
        assert_eq!(labelings(4, 0).count(), 1);
        assert_eq!(labelings(0, 2).count(), 0);
    }
}
