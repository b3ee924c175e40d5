//! Scalar abstraction shared by the exact (rational) and floating-point paths.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// A field element the combinatorial linear algebra can run over.
///
/// `BigRational` gives exact answers; `f64`/`f32` give fast approximate ones.
pub trait Scalar: Num + Signed + Clone + Debug + Display + Send + Sync + 'static {
    fn from_rational(value: &BigRational) -> Self;

    fn from_i64(value: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// True when arithmetic is exact, so equality checks can be strict.
    const EXACT: bool;

    fn from_u128(value: u128) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(value)))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn from_u128(value: u128) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &BigRational) -> Self {
        Scalar::to_f64(value)
    }

    fn from_i64(value: i64) -> Self {
        value as f64
    }

    fn from_u128(value: u128) -> Self {
        value as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(value: &BigRational) -> Self {
        Scalar::to_f64(value) as f32
    }

    fn from_i64(value: i64) -> Self {
        value as f32
    }

    fn from_u128(value: u128) -> Self {
        value as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

/// Parses `"p/q"` or `"p"` into a rational.
pub fn parse_fraction(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Formats a rational as `"p/q"` (or `"p"` for integers).
pub fn format_fraction(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_round_trip() {
        let v = parse_fraction("-3/6").unwrap();
        assert_eq!(format_fraction(&v), "-1/2");
        assert_eq!(format_fraction(&parse_fraction("4").unwrap()), "4");
        assert!(parse_fraction("1/0").is_none());
        assert!(parse_fraction("a/2").is_none());
        assert!(parse_fraction("").is_none());
    }

    #[test]
    fn conversions_agree() {
        let half = parse_fraction("1/2").unwrap();
        assert_eq!(<f64 as Scalar>::from_rational(&half), 0.5);
        assert_eq!(<f32 as Scalar>::from_rational(&half), 0.5);
        assert_eq!(Scalar::to_f64(&half), 0.5);
        assert_eq!(<BigRational as Scalar>::from_u128(7), BigRational::from_integer(7.into()));
    }
}
