//! The spiked rank-`r` hypercube tensor model and its set-indexed entries `T_I`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinat::{subsets_by_size, Subset};
use crate::error::{capacity, Error, Result};
use crate::scalar::{format_fraction, parse_fraction, Scalar};

/// Largest `|Omega|` [`materialize`] will build.
pub const MAX_MATERIALIZED: usize = 10_000_000;

/// Largest `n` supported by the exact (bitmask-indexed) pipeline.
pub const MAX_EXACT_N: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    /// Component weights; `lambda[0] = 1` and magnitudes are non-increasing.
    pub lambda: Vec<BigRational>,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(n: usize, r: usize, k: usize, lambda: Vec<BigRational>, seed: u64) -> Result<Self> {
        let params = ModelParams {
            n,
            r,
            k,
            lambda,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    /// All weights equal to one.
    pub fn uniform(n: usize, r: usize, k: usize, seed: u64) -> Result<Self> {
        Self::new(n, r, k, vec![BigRational::one(); r], seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.r == 0 {
            return Err(Error::Parameter("n and r must be positive".into()));
        }
        if self.k < 3 {
            return Err(Error::Parameter(format!("tensor order k = {} must be at least 3", self.k)));
        }
        if self.lambda.len() != self.r {
            return Err(Error::Parameter(format!(
                "expected {} weights, got {}",
                self.r,
                self.lambda.len()
            )));
        }
        if !self.lambda[0].is_one() {
            return Err(Error::Parameter(format!(
                "leading weight must be 1, got {}",
                format_fraction(&self.lambda[0])
            )));
        }
        for w in self.lambda.windows(2) {
            if w[1].is_zero() {
                return Err(Error::Parameter("weights must be nonzero".into()));
            }
            if w[1].abs() > w[0].abs() {
                return Err(Error::Parameter(format!(
                    "weights must be non-increasing in magnitude: |{}| > |{}|",
                    format_fraction(&w[1]),
                    format_fraction(&w[0])
                )));
            }
        }
        Ok(())
    }

    /// `min_j |lambda_j|`.
    pub fn lambda_min(&self) -> BigRational {
        self.lambda.last().map(|l| l.abs()).unwrap_or_else(BigRational::one)
    }

    pub fn lambda_f64(&self) -> Vec<f64> {
        self.lambda.iter().map(Scalar::to_f64).collect()
    }
}

/// Weights for a leading component of norm `1 + delta` over `r - 1` unit components,
/// normalised so that the leading weight is one.
pub fn spiked_lambda(r: usize, delta: &BigRational) -> Result<Vec<BigRational>> {
    if !delta.is_positive() && !delta.is_zero() {
        return Err(Error::Parameter("delta must be non-negative".into()));
    }
    let rest = (BigRational::one() + delta).recip();
    Ok(std::iter::once(BigRational::one())
        .chain(std::iter::repeat_n(rest, r.saturating_sub(1)))
        .collect())
}

/// Hidden components: the `n x r` sign matrix `A` with columns `a_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub params: ModelParams,
    /// Row-major: `signs[i * r + j] = (a_j)_i`.
    signs: Vec<i8>,
}

impl Instance {
    /// Wraps an explicit sign matrix (row-major `n x r`).
    pub fn from_signs(params: ModelParams, signs: Vec<i8>) -> Result<Self> {
        params.validate()?;
        if signs.len() != params.n * params.r {
            return Err(Error::Parameter(format!(
                "sign matrix has {} entries, expected {}",
                signs.len(),
                params.n * params.r
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Parameter("sign matrix entries must be +1 or -1".into()));
        }
        Ok(Instance { params, signs })
    }

    /// `(a_j)_i`, both 0-indexed.
    pub fn a(&self, i: usize, j: usize) -> i8 {
        self.signs[i * self.params.r + j]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Column `a_j` as a vector of signs.
    pub fn component(&self, j: usize) -> Vec<i8> {
        (0..self.params.n).map(|i| self.a(i, j)).collect()
    }

    /// Every component negated.
    pub fn negated(&self) -> Instance {
        Instance {
            params: self.params.clone(),
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    /// Rows permuted so that new row `perm[i]` is old row `i`.
    pub fn permute_rows(&self, perm: &[usize]) -> Instance {
        let r = self.params.r;
        let mut signs = vec![0i8; self.signs.len()];
        for (i, &target) in perm.iter().enumerate() {
            signs[target * r..(target + 1) * r].copy_from_slice(&self.signs[i * r..(i + 1) * r]);
        }
        Instance {
            params: self.params.clone(),
            signs,
        }
    }

    /// `prod_{i in I} (a_j)_i` for a list of row indices.
    pub fn monomial(&self, j: usize, rows: impl IntoIterator<Item = usize>) -> i8 {
        rows.into_iter().fold(1i8, |acc, i| acc * self.a(i, j))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InstanceDocument::from(self)).expect("instance serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_value(value.clone())?;
        doc.try_into()
    }
}

/// Draws `A` with i.i.d. Rademacher entries from a generator seeded by `params.seed`.
pub fn sample_instance(params: &ModelParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let signs = (0..params.n * params.r)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    Ok(Instance {
        params: params.clone(),
        signs,
    })
}

/// `T_I = sum_j lambda_j prod_{i in I} (a_j)_i`.
pub fn tensor_entry<T: Scalar>(inst: &Instance, subset: Subset) -> Result<T> {
    let size = subset.len();
    if size == 0 || size > inst.params.k {
        return Err(Error::Domain(format!(
            "tensor entry index {subset} must have size in 1..={}",
            inst.params.k
        )));
    }
    if subset.span() > inst.params.n {
        return Err(Error::Domain(format!("index {subset} exceeds n = {}", inst.params.n)));
    }
    let mut total = T::zero();
    for (j, lam) in inst.params.lambda.iter().enumerate() {
        let term = T::from_rational(lam);
        if inst.monomial(j, subset.elements()) > 0 {
            total = total + term;
        } else {
            total = total - term;
        }
    }
    Ok(total)
}

/// Which sets of coordinates the polynomial may read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaSpec {
    /// Every `I` with `0 < |I| <= k`.
    LowerBoundAll,
    /// Every `I` with `k' <= |I| <= k`, `k'` the odd one of `k - 1, k`.
    UpperBoundTop,
}

impl OmegaSpec {
    pub fn size_range(self, k: usize) -> (usize, usize) {
        match self {
            OmegaSpec::LowerBoundAll => (1, k),
            OmegaSpec::UpperBoundTop => (odd_order(k), k),
        }
    }

    pub fn sets(self, n: usize, k: usize) -> Vec<Subset> {
        let (lo, hi) = self.size_range(k);
        subsets_by_size(n, lo, hi)
    }

    pub fn count(self, n: usize, k: usize) -> u128 {
        let (lo, hi) = self.size_range(k);
        (lo..=hi.min(n)).map(|s| binomial(n as u128, s as u128)).sum()
    }
}

/// The odd element of `{k - 1, k}`.
pub fn odd_order(k: usize) -> usize {
    if k % 2 == 1 {
        k
    } else {
        k - 1
    }
}

fn binomial(n: u128, s: u128) -> u128 {
    (0..s).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// The full table of `T_I` over `Omega`.
pub fn materialize(inst: &Instance, omega: OmegaSpec) -> Result<BTreeMap<Subset, BigRational>> {
    let n = inst.params.n;
    if n > MAX_EXACT_N {
        return Err(capacity("exact pipeline n", n as u128, MAX_EXACT_N as u128));
    }
    let count = omega.count(n, inst.params.k);
    if count > MAX_MATERIALIZED as u128 {
        return Err(capacity("materialized |Omega|", count, MAX_MATERIALIZED as u128));
    }
    omega
        .sets(n, inst.params.k)
        .into_iter()
        .map(|s| Ok((s, tensor_entry(inst, s)?)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct InstanceDocument {
    n: usize,
    r: usize,
    k: usize,
    lambda: Vec<String>,
    seed: u64,
    #[serde(rename = "A")]
    a: Vec<i8>,
}

impl From<&Instance> for InstanceDocument {
    fn from(inst: &Instance) -> Self {
        InstanceDocument {
            n: inst.params.n,
            r: inst.params.r,
            k: inst.params.k,
            lambda: inst.params.lambda.iter().map(format_fraction).collect(),
            seed: inst.params.seed,
            a: inst.signs.clone(),
        }
    }
}

impl TryFrom<InstanceDocument> for Instance {
    type Error = Error;

    fn try_from(doc: InstanceDocument) -> Result<Self> {
        let lambda = doc
            .lambda
            .iter()
            .map(|s| parse_fraction(s).ok_or_else(|| Error::Parameter(format!("bad fraction {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let params = ModelParams::new(doc.n, doc.r, doc.k, lambda, doc.seed)?;
        Instance::from_signs(params, doc.a)
    }
}
