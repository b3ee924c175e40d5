//! Star-augmented labelings ("patterns") that group the labelings of a recurrence step.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;
use serde_json::json;

use super::sets::{MultiIndex, Subset};
use super::{falling_factorial, MAX_ENUM_DEGREE, MAX_ENUM_RANK};
use crate::error::{capacity, Result};
use crate::scalar::format_fraction;

/// One slot of a pattern: a concrete column label, or `None` for a star.
pub type PatternEntry = Option<usize>;

/// A pattern over a fixed list `S`, with its step statistics cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    entries: Vec<PatternEntry>,
    /// `S(pi)_j` for every concrete label in use (possibly empty).
    columns: BTreeMap<usize, Subset>,
    target: MultiIndex,
    m: i64,
    free_columns: usize,
    stars: usize,
    lambda: BigRational,
}

impl Pattern {
    /// Validates the three pattern rules and caches `m_pi`, `r_pi`, `s_pi`, `lambda^(pi)`.
    ///
    /// Returns `None` when a rule fails (singleton label, all stars, or an oversized column).
    pub fn new(
        s: &MultiIndex,
        entries: Vec<PatternEntry>,
        r: usize,
        k: usize,
        lambda: &[BigRational],
    ) -> Option<Self> {
        assert_eq!(s.degree(), entries.len(), "pattern length must match |S|");
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut columns: BTreeMap<usize, Subset> = BTreeMap::new();
        for (&set, entry) in s.sets().iter().zip(&entries) {
            if let Some(j) = *entry {
                assert!(j < r, "label {j} out of range for rank {r}");
                *counts.entry(j).or_default() += 1;
                let col = columns.entry(j).or_default();
                *col = col.xor(set);
            }
        }
        if counts.is_empty() || counts.values().any(|&c| c < 2) {
            return None;
        }
        if columns.values().any(|c| c.len() > k) {
            return None;
        }

        let stars = entries.iter().filter(|e| e.is_none()).count();
        let nonempty = columns.values().filter(|c| !c.is_empty()).count();
        let free_columns = r - nonempty;

        let mut m = 1i64;
        for (&j, &col) in &columns {
            let mj = s
                .sets()
                .iter()
                .zip(&entries)
                .filter(|(&set, e)| **e == Some(j) && set == col)
                .count() as i64;
            m *= 1 - mj;
        }

        let mut lambda_pi = BigRational::one();
        for j in entries.iter().flatten() {
            lambda_pi *= &lambda[*j];
        }
        for (&j, col) in &columns {
            if !col.is_empty() {
                lambda_pi /= &lambda[j];
            }
        }

        let mut target_sets: Vec<Subset> = columns.values().copied().filter(|c| !c.is_empty()).collect();
        target_sets.extend(
            s.sets()
                .iter()
                .zip(&entries)
                .filter(|(_, e)| e.is_none())
                .map(|(&set, _)| set),
        );

        Some(Pattern {
            entries,
            columns,
            target: MultiIndex::new(target_sets),
            m,
            free_columns,
            stars,
            lambda: lambda_pi,
        })
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    /// `S(pi)_j`; empty for labels the pattern does not use.
    pub fn column(&self, j: usize) -> Subset {
        self.columns.get(&j).copied().unwrap_or(Subset::EMPTY)
    }

    /// Concrete labels in use, with their XOR'd contents.
    pub fn used_columns(&self) -> impl Iterator<Item = (usize, Subset)> + '_ {
        self.columns.iter().map(|(&j, &c)| (j, c))
    }

    /// `cols(S(ell))` for every `ell` matched by this pattern.
    pub fn target(&self) -> &MultiIndex {
        &self.target
    }

    /// Inclusion-exclusion weight `m_pi`.
    pub fn m(&self) -> i64 {
        self.m
    }

    /// `r_pi`: columns whose content under the pattern is empty.
    pub fn free_columns(&self) -> usize {
        self.free_columns
    }

    /// `s_pi`: number of stars.
    pub fn stars(&self) -> usize {
        self.stars
    }

    /// `lambda^ell / lambda^{S(ell)}`, the same for every matched labeling.
    pub fn lambda_ratio(&self) -> &BigRational {
        &self.lambda
    }

    /// Number of labelings `ell` with `pi |- ell`.
    pub fn matching_labelings(&self) -> u128 {
        falling_factorial(self.free_columns as u64, self.stars as u64)
    }

    /// Whether column `j` is hit and XORs to empty.
    pub fn is_deletion(&self, j: usize) -> bool {
        self.columns.get(&j).is_some_and(|c| c.is_empty())
    }
}

/// Every pattern in `Pi(S)` with concrete labels drawn from all of `[r]`.
pub fn enumerate_patterns(s: &MultiIndex, r: usize, k: usize, lambda: &[BigRational]) -> Result<Vec<Pattern>> {
    guard(s, r)?;
    let len = s.degree();
    let mut out = Vec::new();
    let mut entries = vec![None; len];
    fill(s, r, k, lambda, 0, &mut entries, &mut out);
    Ok(out)
}

fn guard(s: &MultiIndex, r: usize) -> Result<()> {
    if s.degree() > MAX_ENUM_DEGREE {
        return Err(capacity("pattern enumeration |S|", s.degree() as u128, MAX_ENUM_DEGREE as u128));
    }
    if r > MAX_ENUM_RANK {
        return Err(capacity("pattern enumeration rank", r as u128, MAX_ENUM_RANK as u128));
    }
    Ok(())
}

fn fill(
    s: &MultiIndex,
    r: usize,
    k: usize,
    lambda: &[BigRational],
    pos: usize,
    entries: &mut Vec<PatternEntry>,
    out: &mut Vec<Pattern>,
) {
    if pos == entries.len() {
        if let Some(p) = Pattern::new(s, entries.clone(), r, k, lambda) {
            out.push(p);
        }
        return;
    }
    for choice in std::iter::once(None).chain((0..r).map(Some)) {
        entries[pos] = choice;
        fill(s, r, k, lambda, pos + 1, entries, out);
    }
    entries[pos] = None;
}

/// A pattern up to relabeling of its concrete columns.
#[derive(Clone, Debug)]
pub struct PatternOrbit {
    /// Representative with labels numbered by first appearance (0, 1, ...).
    pub representative: Pattern,
    /// Number of patterns in the orbit: `r (r-1) ...` over the distinct labels.
    pub multiplicity: u128,
}

/// Label-symmetric enumeration: one representative per relabeling orbit.
///
/// The representative carries unit weights, so `lambda_ratio` is meaningless on it; `m`,
/// `r_pi`, `s_pi` and the target are orbit invariants.
pub fn enumerate_pattern_orbits(s: &MultiIndex, r: usize, k: usize) -> Result<Vec<PatternOrbit>> {
    guard(s, r)?;
    let ones = vec![BigRational::one(); r];
    let mut out = Vec::new();
    let mut entries = vec![None; s.degree()];
    grow(s, r, k, &ones, 0, 0, &mut entries, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    s: &MultiIndex,
    r: usize,
    k: usize,
    ones: &[BigRational],
    pos: usize,
    next_label: usize,
    entries: &mut Vec<PatternEntry>,
    out: &mut Vec<PatternOrbit>,
) {
    if pos == entries.len() {
        if let Some(p) = Pattern::new(s, entries.clone(), r, k, ones) {
            out.push(PatternOrbit {
                representative: p,
                multiplicity: falling_factorial(r as u64, next_label as u64),
            });
        }
        return;
    }
    entries[pos] = None;
    grow(s, r, k, ones, pos + 1, next_label, entries, out);
    for label in 0..next_label.min(r) {
        entries[pos] = Some(label);
        grow(s, r, k, ones, pos + 1, next_label, entries, out);
    }
    if next_label < r {
        entries[pos] = Some(next_label);
        grow(s, r, k, ones, pos + 1, next_label + 1, entries, out);
    }
    entries[pos] = None;
}

/// The relation `pi |- ell` for a labeling `ell` of `S`.
pub fn pattern_matches(pi: &Pattern, ell: &[usize], s: &MultiIndex) -> bool {
    assert_eq!(pi.entries.len(), ell.len());
    assert_eq!(s.degree(), ell.len());
    let mut starred = Vec::new();
    for (entry, &l) in pi.entries.iter().zip(ell) {
        match entry {
            Some(j) if *j != l => return false,
            Some(_) => {}
            None => starred.push(l),
        }
    }
    let distinct = starred.len();
    starred.sort_unstable();
    starred.dedup();
    if starred.len() != distinct {
        return false;
    }
    starred.iter().all(|&j| pi.column(j).is_empty())
}

/// `S --pi--> S'`: the pattern sends `S` to the strictly smaller multiset `S'`.
pub fn step_predicate(s: &MultiIndex, pi: &Pattern, s_prime: &MultiIndex) -> bool {
    pi.entries.len() == s.degree() && s_prime.degree() < s.degree() && pi.target() == s_prime
}

/// One JSON object per line, labels shown 1-indexed and stars as `null`.
pub fn patterns_to_jsonl(patterns: &[Pattern]) -> String {
    let mut out = String::new();
    for p in patterns {
        let entries: Vec<Option<usize>> = p.entries.iter().map(|e| e.map(|j| j + 1)).collect();
        let target: Vec<Vec<usize>> = p
            .target
            .sets()
            .iter()
            .map(|s| s.elements().map(|i| i + 1).collect())
            .collect();
        let line = json!({
            "entries": entries,
            "m": p.m,
            "r_pi": p.free_columns,
            "s_pi": p.stars,
            "lambda": format_fraction(&p.lambda),
            "target": target,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::{labelings, xor_columns};

    fn set(xs: &[usize]) -> Subset {
        Subset::from_elements(xs.iter().map(|x| x - 1))
    }

    fn ones(r: usize) -> Vec<BigRational> {
        vec![BigRational::one(); r]
    }

    #[test]
    fn single_set_has_no_patterns() {
        let s = MultiIndex::new(vec![set(&[1, 2])]);
        for r in 1..=4 {
            assert!(enumerate_patterns(&s, r, 3, &ones(r)).unwrap().is_empty());
        }
    }

    #[test]
    fn repeated_pair_patterns() {
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[1, 2])]);
        let pats = enumerate_patterns(&s, 2, 3, &ones(2)).unwrap();
        let entries: Vec<_> = pats.iter().map(|p| p.entries().to_vec()).collect();
        assert_eq!(entries, vec![vec![Some(0), Some(0)], vec![Some(1), Some(1)]]);
        for p in &pats {
            assert!(p.target().is_empty());
            assert_eq!(p.m(), 1);
            assert!(step_predicate(&s, p, &MultiIndex::empty()));
        }
    }

    #[test]
    fn oversized_column_excluded() {
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[3, 4])]);
        assert!(enumerate_patterns(&s, 2, 3, &ones(2)).unwrap().is_empty());
        assert_eq!(enumerate_patterns(&s, 2, 4, &ones(2)).unwrap().len(), 2);
    }

    #[test]
    fn merge_step_target() {
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[1, 3])]);
        let p = Pattern::new(&s, vec![Some(0), Some(0)], 2, 3, &ones(2)).unwrap();
        assert_eq!(p.target(), &MultiIndex::new(vec![set(&[2, 3])]));
        assert!(step_predicate(&s, &p, &MultiIndex::new(vec![set(&[2, 3])])));
        assert!(!step_predicate(&s, &p, &s));
    }

    #[test]
    fn matches_rules() {
        let s = MultiIndex::new(vec![set(&[1]), set(&[1])]);
        let p = Pattern::new(&s, vec![Some(1), Some(1)], 6, 3, &ones(6)).unwrap();
        assert!(pattern_matches(&p, &[1, 1], &s));
        assert!(!pattern_matches(&p, &[1, 2], &s));

        let s3 = MultiIndex::new(vec![set(&[1]), set(&[1]), set(&[2])]);
        let p3 = Pattern::new(&s3, vec![Some(0), Some(0), None], 3, 3, &ones(3)).unwrap();
        // star may land on the deleted column 0 but not twice on one column
        assert!(pattern_matches(&p3, &[0, 0, 0], &s3));
        assert!(pattern_matches(&p3, &[0, 0, 2], &s3));
    }

    #[test]
    fn all_stars_rejected() {
        let s = MultiIndex::new(vec![set(&[1]), set(&[1])]);
        assert!(Pattern::new(&s, vec![None, None], 6, 3, &ones(6)).is_none());
    }

    #[test]
    fn lambda_ratio_matches_labelings() {
        let lambda: Vec<BigRational> = (1..=3).map(|j| BigRational::new(1.into(), j.into())).collect();
        let s = MultiIndex::new(vec![set(&[1]), set(&[1, 2]), set(&[2]), set(&[3])]);
        for p in enumerate_patterns(&s, 3, 3, &lambda).unwrap() {
            for ell in labelings(3, s.degree()) {
                if pattern_matches(&p, &ell, &s) {
                    let u = xor_columns(&s, &ell);
                    let lam_ell: BigRational = ell.iter().map(|&j| lambda[j].clone()).product();
                    assert_eq!(&(lam_ell / u.lambda_product(&lambda)), p.lambda_ratio());
                    assert_eq!(&u.column_multiset(), p.target());
                }
            }
        }
    }

    #[test]
    fn jsonl_dump_is_one_line_per_pattern() {
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[1, 2])]);
        let pats = enumerate_patterns(&s, 3, 3, &ones(3)).unwrap();
        let dump = patterns_to_jsonl(&pats);
        assert_eq!(dump.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
        assert_eq!(first["entries"], json!([1, 1]));
    }
}
