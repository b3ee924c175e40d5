//! Paths through the unrolled `v` recurrence and the promote/merge pairing of bad paths.

use std::collections::BTreeMap;

use crate::combinat::{
    enumerate_patterns, falling_factorial, labelings, xor_columns, MultiIndex, Pattern, PatternEntry, SupportSet,
};
use crate::coeffmap::lambda_of_labeling;
use crate::error::{capacity, Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

pub const MAX_PATH_DEGREE: usize = 3;
pub const MAX_PATH_RANK: usize = 4;

/// `S^t --pi^t--> S^{t+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub pattern: Vec<PatternEntry>,
    pub next: MultiIndex,
}

/// `S^0 -> S^1 -> ... -> S^p -> bottom`, the last arrow being a star-free labeling of `S^p`
/// that maps it to `{(1,1)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathTerm {
    pub start: MultiIndex,
    pub steps: Vec<PathStep>,
    pub last: Vec<usize>,
}

impl PathTerm {
    /// Number of pattern steps `p`.
    pub fn length(&self) -> usize {
        self.steps.len()
    }

    /// `S^t` for `0 <= t <= p`.
    pub fn state(&self, t: usize) -> &MultiIndex {
        if t == 0 {
            &self.start
        } else {
            &self.steps[t - 1].next
        }
    }

    /// Entries of the arrow leaving `S^t` (the final labeling when `t = p`).
    fn arrow(&self, t: usize) -> Vec<PatternEntry> {
        if t < self.steps.len() {
            self.steps[t].pattern.clone()
        } else {
            self.last.iter().map(|&j| Some(j)).collect()
        }
    }
}

fn guard(params: &ModelParams, s: &MultiIndex) -> Result<()> {
    if s.degree() > MAX_PATH_DEGREE {
        return Err(capacity("path expansion |S|", s.degree() as u128, MAX_PATH_DEGREE as u128));
    }
    if params.r > MAX_PATH_RANK {
        return Err(capacity("path expansion rank", params.r as u128, MAX_PATH_RANK as u128));
    }
    Ok(())
}

/// All paths from `s`, depth first.
pub fn enumerate_paths(params: &ModelParams, s: &MultiIndex) -> Result<Vec<PathTerm>> {
    guard(params, s)?;
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    extend(params, s, s, &mut prefix, &mut out)?;
    Ok(out)
}

fn extend(
    params: &ModelParams,
    start: &MultiIndex,
    current: &MultiIndex,
    prefix: &mut Vec<PathStep>,
    out: &mut Vec<PathTerm>,
) -> Result<()> {
    let target = SupportSet::target_entry();
    for ell in labelings(params.r, current.degree()) {
        if xor_columns(current, &ell) == target {
            out.push(PathTerm {
                start: start.clone(),
                steps: prefix.clone(),
                last: ell,
            });
        }
    }
    for pi in enumerate_patterns(current, params.r, params.k, &params.lambda)? {
        let next = pi.target().clone();
        prefix.push(PathStep {
            pattern: pi.entries().to_vec(),
            next: next.clone(),
        });
        extend(params, start, &next, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

fn step_pattern(params: &ModelParams, state: &MultiIndex, entries: &[PatternEntry]) -> Result<Pattern> {
    Pattern::new(state, entries.to_vec(), params.r, params.k, &params.lambda)
        .ok_or_else(|| Error::Consistency(format!("{entries:?} is not a pattern of {state}")))
}

/// Checks every structural requirement of a path.
pub fn validate_path(params: &ModelParams, path: &PathTerm) -> Result<()> {
    for (t, step) in path.steps.iter().enumerate() {
        let state = path.state(t);
        let pi = step_pattern(params, state, &step.pattern)?;
        if pi.target() != &step.next || step.next.degree() >= state.degree() {
            return Err(Error::Consistency(format!("step {t} of path does not reach {}", step.next)));
        }
    }
    let last_state = path.state(path.length());
    if path.last.len() != last_state.degree() || xor_columns(last_state, &path.last) != SupportSet::target_entry() {
        return Err(Error::Consistency("final labeling does not produce {(1,1)}".into()));
    }
    Ok(())
}

/// `(-1)^p prod_t m r_pi^(s_pi falling) lambda^(pi) / r^(|S^{t+1}| falling) * lambda^{pi^p}`.
pub fn path_value<T: Scalar>(params: &ModelParams, path: &PathTerm) -> Result<T> {
    let mut value = T::one();
    for (t, step) in path.steps.iter().enumerate() {
        let pi = step_pattern(params, path.state(t), &step.pattern)?;
        let denom = falling_factorial(params.r as u64, step.next.degree() as u64);
        if denom == 0 {
            return Ok(T::zero());
        }
        value = value * T::from_i64(pi.m()) * T::from_u128(pi.matching_labelings()) * T::from_rational(pi.lambda_ratio())
            / T::from_u128(denom);
    }
    value = value * lambda_of_labeling::<T>(&params.lambda, &path.last);
    if path.length() % 2 == 1 {
        value = -value;
    }
    Ok(value)
}

/// For each column with at least one event: `(timestep of last event, was it a deletion)`.
fn last_events(path: &PathTerm) -> BTreeMap<usize, (usize, bool)> {
    let mut last = BTreeMap::new();
    for t in 0..=path.length() {
        let state = path.state(t);
        let arrow = path.arrow(t);
        let mut contents: BTreeMap<usize, crate::combinat::Subset> = BTreeMap::new();
        for (set, entry) in state.sets().iter().zip(&arrow) {
            if let Some(j) = entry {
                let col = contents.entry(*j).or_default();
                *col = col.xor(*set);
            }
        }
        for (j, col) in contents {
            last.insert(j, (t, col.is_empty()));
        }
    }
    last
}

/// Good paths have no column whose last event deletes it.
pub fn is_good(path: &PathTerm) -> bool {
    last_events(path).values().all(|&(_, deletion)| !deletion)
}

/// The promote/merge pairing of bad paths; `None` for good paths.
pub fn involution(path: &PathTerm) -> Option<PathTerm> {
    let events = last_events(path);
    let (&col, &(t_star, _)) = events.iter().rev().find(|(_, &(_, deletion))| deletion)?;
    let p = path.length();
    let state = path.state(t_star).clone();
    let arrow = path.arrow(t_star);
    let others = arrow.iter().any(|e| e.is_some_and(|j| j != col));

    let mut steps: Vec<PathStep> = path.steps[..t_star].to_vec();
    if others {
        // promote: split the deletion off into its own timestep
        let in_col: Vec<bool> = arrow.iter().map(|e| *e == Some(col)).collect();
        let tau: Vec<PatternEntry> = in_col.iter().map(|&c| if c { Some(col) } else { None }).collect();
        let reduced = state.without_positions(&in_col);
        let sigma: Vec<PatternEntry> = arrow
            .iter()
            .zip(&in_col)
            .filter(|(_, &c)| !c)
            .map(|(e, _)| *e)
            .collect();
        steps.push(PathStep {
            pattern: tau,
            next: reduced,
        });
        if t_star < p {
            steps.push(PathStep {
                pattern: sigma,
                next: path.steps[t_star].next.clone(),
            });
            steps.extend_from_slice(&path.steps[t_star + 1..]);
            Some(PathTerm {
                start: path.start.clone(),
                steps,
                last: path.last.clone(),
            })
        } else {
            Some(PathTerm {
                start: path.start.clone(),
                steps,
                last: sigma.into_iter().map(|e| e.expect("final arrow is star-free")).collect(),
            })
        }
    } else {
        // merge: fold the next arrow into the free slots of this one
        debug_assert!(t_star < p, "a lone deletion cannot be the final arrow");
        let next_arrow = path.arrow(t_star + 1);
        let mut fill = next_arrow.into_iter();
        let tau: Vec<PatternEntry> = arrow
            .iter()
            .map(|e| {
                if *e == Some(col) {
                    Some(col)
                } else {
                    fill.next().expect("free slots match |S^{t+1}|")
                }
            })
            .collect();
        if t_star + 1 < p {
            steps.push(PathStep {
                pattern: tau,
                next: path.steps[t_star + 1].next.clone(),
            });
            steps.extend_from_slice(&path.steps[t_star + 2..]);
            Some(PathTerm {
                start: path.start.clone(),
                steps,
                last: path.last.clone(),
            })
        } else {
            Some(PathTerm {
                start: path.start.clone(),
                steps,
                last: tau.into_iter().map(|e| e.expect("final arrow is star-free")).collect(),
            })
        }
    }
}

/// `v_S` as the signed sum over every path.
pub fn v_expanded<T: Scalar>(params: &ModelParams, s: &MultiIndex) -> Result<T> {
    enumerate_paths(params, s)?
        .iter()
        .try_fold(T::zero(), |acc, path| Ok(acc + path_value::<T>(params, path)?))
}

/// `v_S` as the signed sum over good paths only.
pub fn v_good_paths<T: Scalar>(params: &ModelParams, s: &MultiIndex) -> Result<T> {
    enumerate_paths(params, s)?
        .iter()
        .filter(|p| is_good(p))
        .try_fold(T::zero(), |acc, path| Ok(acc + path_value::<T>(params, path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{v_recurrence, VTable};
    use crate::combinat::Subset;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;
    use std::collections::HashSet;

    type Q = BigRational;

    fn harmonic(r: usize) -> Vec<Q> {
        (1..=r as i64).map(|j| Q::new(BigInt::from(1), BigInt::from(j))).collect()
    }

    fn set(xs: &[usize]) -> Subset {
        Subset::from_elements(xs.iter().map(|x| x - 1))
    }

    #[test]
    fn single_step_paths_give_c() {
        let params = ModelParams::new(2, 3, 3, harmonic(3), 0).unwrap();
        let s = MultiIndex::new(vec![set(&[1, 2]), set(&[2])]);
        let paths = enumerate_paths(&params, &s).unwrap();
        assert!(paths.iter().all(|p| validate_path(&params, p).is_ok()));
        let mut t = VTable::new();
        assert_eq!(v_expanded::<Q>(&params, &s).unwrap(), v_recurrence(&params, &s, &mut t).unwrap());
    }

    #[test]
    fn no_paths_means_zero() {
        let params = ModelParams::uniform(3, 2, 3, 0).unwrap();
        let s = MultiIndex::new(vec![set(&[2])]);
        assert!(enumerate_paths(&params, &s).unwrap().is_empty());
        assert!(v_expanded::<Q>(&params, &s).unwrap().is_zero());
    }

    #[test]
    fn bad_paths_pair_off() {
        let params = ModelParams::new(3, 3, 3, harmonic(3), 0).unwrap();
        let s = MultiIndex::new(vec![set(&[1]), set(&[2]), set(&[2])]);
        let paths = enumerate_paths(&params, &s).unwrap();
        let all: HashSet<_> = paths.iter().cloned().collect();
        let mut bad = 0;
        for p in &paths {
            if let Some(partner) = involution(p) {
                bad += 1;
                assert!(!is_good(p));
                assert!(all.contains(&partner), "partner of {p:?} missing");
                assert_eq!(involution(&partner).as_ref(), Some(p));
                let a: Q = path_value(&params, p).unwrap();
                let b: Q = path_value(&params, &partner).unwrap();
                assert_eq!(a, -b);
            } else {
                assert!(is_good(p));
            }
        }
        assert!(bad > 0);
        assert_eq!(v_good_paths::<Q>(&params, &s).unwrap(), v_expanded::<Q>(&params, &s).unwrap());
    }

    #[test]
    fn guard_rejects_large() {
        let params = ModelParams::uniform(3, 5, 3, 0).unwrap();
        let s = MultiIndex::new(vec![set(&[1])]);
        assert!(enumerate_paths(&params, &s).is_err());
    }
}
