//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::spiked_lambda;
use crate::scalar::parse_fraction;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Oracle,
    Bound,
    Estimate,
    Verify,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Bound => "bound",
            Mode::Estimate => "estimate",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_n")]
    pub n: Vec<u64>,
    #[serde(default = "default_r")]
    pub r: Vec<u64>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(rename = "D", default = "default_degree")]
    pub degree: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            n: default_n(),
            r: default_r(),
            k: default_k(),
            degree: default_degree(),
        }
    }
}

fn default_n() -> Vec<u64> {
    vec![2, 3, 4]
}
fn default_r() -> Vec<u64> {
    vec![2, 3]
}
fn default_k() -> Vec<usize> {
    vec![3]
}
fn default_degree() -> Vec<usize> {
    vec![1, 2]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_samples() -> usize {
    10_000
}
fn default_true() -> bool {
    true
}

/// Component weights: explicit fractions, a named family, or a spike `(1 + delta)` on the
/// first component (stored normalised, `lambda_1 = 1`, `lambda_j = 1/(1+delta)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Explicit(Vec<String>),
    Spike { delta: String },
    /// `"harmonic"` (`lambda_j = 1/j`) or `"uniform"` (all ones).
    Named(String),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Named("harmonic".into())
    }
}

pub fn parse_fraction_arg(text: &str) -> Result<Rational> {
    parse_fraction(text).ok_or_else(|| Error::Usage(format!("malformed fraction {text:?}")))
}

impl LambdaSpec {
    /// The first `r` weights.
    pub fn weights(&self, r: usize) -> Result<Vec<Rational>> {
        match self {
            LambdaSpec::Explicit(list) => {
                if list.len() < r {
                    return Err(Error::Usage(format!("{} weights given, r = {r}", list.len())));
                }
                list[..r].iter().map(|s| parse_fraction_arg(s)).collect()
            }
            LambdaSpec::Spike { delta } => spiked_lambda(r, &parse_fraction_arg(delta)?),
            LambdaSpec::Named(name) => match name.as_str() {
                "harmonic" => Ok(crate::harness::verify::harmonic_lambda(r)),
                "uniform" => Ok(vec![Rational::from_integer(1.into()); r]),
                other => Err(Error::Usage(format!("unknown weight family {other:?}"))),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LambdaSpec::Explicit(list) => list.iter().try_for_each(|s| parse_fraction_arg(s).map(drop)),
            LambdaSpec::Spike { delta } => parse_fraction_arg(delta).map(drop),
            LambdaSpec::Named(_) => self.weights(1).map(drop),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub lambda: LambdaSpec,
    /// Overrides every weight past the first (estimate and sweep modes).
    #[serde(default)]
    pub lambda2: Option<String>,
    /// `lambda_min` values for bound mode; defaults to the minimum of `lambda`.
    #[serde(default)]
    pub lambda_min: Vec<String>,
    /// Bound mode: ignore `grid.r` and place `r` at the hard-regime threshold.
    #[serde(default)]
    pub r_at_threshold: bool,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Explicit estimator degree (odd, `D - 1 >= 4`) in place of the asymptotic choice.
    #[serde(rename = "override_D", default)]
    pub override_degree: Option<usize>,
    /// Restrict the exact oracle to even-cover monomials.
    #[serde(default = "default_true")]
    pub pruned: bool,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda.validate()?;
        if let Some(l2) = &self.lambda2 {
            parse_fraction_arg(l2)?;
        }
        for l in &self.lambda_min {
            parse_fraction_arg(l)?;
        }
        let g = &self.grid;
        if g.n.is_empty() || g.r.is_empty() || g.k.is_empty() || g.degree.is_empty() {
            return Err(Error::Usage("every grid axis needs at least one value".into()));
        }
        if g.n.contains(&0) || g.r.contains(&0) || g.k.iter().any(|&k| k < 3) {
            return Err(Error::Usage("grid needs n, r >= 1 and k >= 3".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Usage("seeds must not be empty".into()));
        }
        if self.samples == 0 {
            return Err(Error::Usage("samples must be positive".into()));
        }
        Ok(())
    }

    /// Weights for rank `r`, honouring `lambda2`.
    pub fn weights(&self, r: usize) -> Result<Vec<Rational>> {
        match &self.lambda2 {
            Some(l2) => {
                let l2 = parse_fraction_arg(l2)?;
                Ok((0..r)
                    .map(|j| if j == 0 { Rational::from_integer(1.into()) } else { l2.clone() })
                    .collect())
            }
            None => self.lambda.weights(r),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        let c = ExperimentConfig::default();
        assert_eq!(c.grid.n, vec![2, 3, 4]);
        assert_eq!(c.weights(3).unwrap()[2], Rational::new(1.into(), 3.into()));
        let c = ExperimentConfig::from_json(r#"{"mode":"bound","grid":{"n":[100],"D":[3]},"lambda":{"delta":"1/2"}}"#)
            .unwrap();
        assert_eq!(c.mode, Some(Mode::Bound));
        assert_eq!(c.weights(2).unwrap()[1], Rational::new(2.into(), 3.into()));
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_input_is_a_usage_error() {
        for text in [
            r#"{"lambda":["1","x/2"]}"#,
            r#"{"lambda":"geometric"}"#,
            r#"{"grid":{"k":[2]}}"#,
            r#"{"bogus":1}"#,
            r#"{"lambda2":"1/0"}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Usage(_))), "{text}");
        }
    }
}
