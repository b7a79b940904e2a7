//! Exact integer and rational helpers shared by every other module.
//!
//! Integers and rationals are `num-bigint` / `num-rational` values. Nothing in
//! here touches floating point; verification code paths rely on that.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type BigRat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericsError {
    #[error("exp_bounds requires |x| <= 1, got {0}")]
    ExpArgumentOutOfRange(BigRat),
    #[error("exp_bounds requires at least 2 series terms, got {0}")]
    TooFewTerms(usize),
    #[error("invalid decimal integer {0:?}")]
    InvalidDecimal(String),
    #[error("invalid rational {0:?}")]
    InvalidRational(String),
}

/// Binomial coefficient `C(a, b)`, zero outside `0 <= b <= a`.
///
/// Uses the multiplicative formula with an exact division at every step, so
/// intermediates never exceed `C(a, b) * b`.
pub fn binom(a: u64, b: i64) -> BigInt {
    if b < 0 || b as u64 > a {
        return BigInt::zero();
    }
    let b = b as u64;
    let k = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= a - k + i;
        // acc now holds C(a-k+i, i) * i, divisible by i
        acc /= i;
    }
    BigInt::from(acc)
}

/// Row `n` of Pascal's triangle: `C(n, 0), ..., C(n, n)`.
pub fn binom_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut cur = BigInt::one();
    row.push(cur.clone());
    for j in 1..=n {
        cur = cur * (n - j + 1) / j;
        row.push(cur.clone());
    }
    row
}

/// Certified enclosure of `e^x` for `|x| <= 1`.
///
/// Sums `terms` Taylor terms (`k = 0..terms-1`) and widens by `3 |x|^n / n!`,
/// which bounds the tail since `e^{|x|} < 3`.
pub fn exp_bounds(x: &BigRat, terms: usize) -> Result<(BigRat, BigRat), NumericsError> {
    if terms < 2 {
        return Err(NumericsError::TooFewTerms(terms));
    }
    if x.abs() > BigRat::one() {
        return Err(NumericsError::ExpArgumentOutOfRange(x.clone()));
    }
    let mut sum = BigRat::zero();
    let mut term = BigRat::one();
    for k in 0..terms {
        sum += &term;
        term = term * x / BigInt::from(k + 1);
    }
    // term == x^n / n! with n == terms
    let remainder = term.abs() * BigInt::from(3);
    Ok((&sum - &remainder, sum + remainder))
}

/// `base^exp` for a rational base.
pub fn pow_rat(base: &BigRat, exp: u32) -> BigRat {
    num_traits::pow(base.clone(), exp as usize)
}

/// Bit length of `|x|` (0 for zero).
pub fn bit_length(x: &BigInt) -> u64 {
    x.magnitude().bits()
}

pub fn parse_bigint(s: &str) -> Result<BigInt, NumericsError> {
    let trimmed = s.trim();
    let digits = trimmed.strip_prefix('-').unwrap_or(trimmed);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(NumericsError::InvalidDecimal(s.to_string()));
    }
    trimmed
        .parse()
        .map_err(|_| NumericsError::InvalidDecimal(s.to_string()))
}

/// Parses `"a"` or `"a/b"` with `b != 0`.
pub fn parse_rational(s: &str) -> Result<BigRat, NumericsError> {
    let bad = || NumericsError::InvalidRational(s.to_string());
    match s.split_once('/') {
        None => Ok(BigRat::from_integer(parse_bigint(s).map_err(|_| bad())?)),
        Some((n, d)) => {
            let n = parse_bigint(n).map_err(|_| bad())?;
            let d = parse_bigint(d).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRat::new(n, d))
        }
    }
}

/// Decimal text of a rational: `"-3"` or `"5/9"`.
pub fn rat_to_string(r: &BigRat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `floor(n / d)` for `d > 0`.
pub fn floor_div(n: &BigInt, d: &BigInt) -> BigInt {
    n.div_floor(d)
}

/// Rough base-10 magnitude of a nonnegative big integer, for diagnostics only.
pub fn approx_decimal_exponent(x: &BigInt) -> f64 {
    if x.sign() == Sign::NoSign {
        return f64::NEG_INFINITY;
    }
    let bits = bit_length(x);
    if bits < 1000 {
        x.abs().to_f64().map(f64::log10).unwrap_or(f64::INFINITY)
    } else {
        bits as f64 * std::f64::consts::LOG10_2
    }
}

/// Serde adapters writing big numbers as decimal strings.
pub mod serde_decimal {
    use super::{parse_bigint, parse_rational, rat_to_string, BigRat};
    use num_bigint::BigInt;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let text = String::deserialize(d)?;
        parse_bigint(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&x.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts
                .iter()
                .map(|t| parse_bigint(t).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod rational {
        use super::*;

        pub fn serialize<S: Serializer>(v: &BigRat, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&rat_to_string(v))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRat, D::Error> {
            let text = String::deserialize(d)?;
            parse_rational(&text).map_err(D::Error::custom)
        }
    }

    pub mod opt_rational {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<BigRat>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&rat_to_string(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRat>, D::Error> {
            let text = Option::<String>::deserialize(d)?;
            text.map(|t| parse_rational(&t).map_err(D::Error::custom))
                .transpose()
        }
    }
}
