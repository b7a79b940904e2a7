//! Permutation-invariant integer charges generated by a sequence `p_0, p_1, ...`.
//!
//! The value on a cylinder with `m` coordinates fixed to 0 and `n` fixed to 1 is
//! `h(m, n) = Σ_{i=0}^{n} (-1)^i C(n, i) p_{m+i}`. A clopen set written over a
//! support of size `t` has weight vector `w`, where `w_j` counts its
//! full-support cylinders with exactly `j` coordinates set to 0, and charge
//! `Σ_j w_j h(j, t - j)`.
//!
//! Worked example: `H({}, {3})` over `C = {3}` has one pattern, `3 ↦ 1`, which
//! has zero coordinates set to 0. So `w = (w_0, w_1) = (1, 0)` and the charge is
//! `h(0, 1) = p_0 - p_1`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cylinder::{Algebra, ClopenError, ClopenSet, Coord};
use crate::numerics::{approx_decimal_exponent, binom, binom_row, bit_length, serde_decimal};
use crate::snz::{self, SearchOptions, SnzError};

#[derive(Debug, Error)]
pub enum ChargeError {
    #[error("sequence has {available} terms but index {needed} is required")]
    SequenceTooShort { needed: usize, available: usize },
    #[error("explicit sequence must be nonempty")]
    EmptySequence,
    #[error("weight w_{j} = {value} is outside [0, C({t}, {j})]")]
    WeightOutOfRange { t: usize, j: usize, value: BigInt },
    #[error("weight vector for level {t} needs {} entries, got {got}", t + 1)]
    WeightLength { t: usize, got: usize },
    #[error(transparent)]
    Clopen(#[from] ClopenError),
    #[error("no admissible value for p_{k}: some weight vector vanishes for every choice")]
    NoAdmissibleValue { k: usize },
    #[error(transparent)]
    Search(#[from] SnzError),
    #[error("invalid growth spec {0:?}")]
    InvalidGrowthSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Least absolute value, positive before negative.
    #[default]
    LeastAbsPositiveFirst,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("least-abs-positive-first")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedySequence {
    horizon: usize,
    tie: TiePolicy,
    terms: Vec<BigInt>,
}

impl GreedySequence {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PSequence {
    Explicit(Vec<BigInt>),
    GreedyMinimal(GreedySequence),
}

impl PSequence {
    pub fn explicit(terms: Vec<BigInt>) -> Result<Self, ChargeError> {
        if terms.is_empty() {
            return Err(ChargeError::EmptySequence);
        }
        Ok(Self::Explicit(terms))
    }

    pub fn from_i64(terms: &[i64]) -> Result<Self, ChargeError> {
        Self::explicit(terms.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Greedy-minimal terms `p_0..=p_horizon`.
    pub fn greedy(horizon: usize, opts: &SearchOptions) -> Result<Self, ChargeError> {
        let mut terms = Vec::with_capacity(horizon + 1);
        for _ in 0..=horizon {
            let next = greedy_extend(&terms, opts)?;
            terms.push(next);
        }
        Ok(Self::GreedyMinimal(GreedySequence {
            horizon,
            tie: TiePolicy::default(),
            terms,
        }))
    }

    pub fn terms(&self) -> &[BigInt] {
        match self {
            Self::Explicit(t) => t,
            Self::GreedyMinimal(g) => &g.terms,
        }
    }

    pub fn len(&self) -> usize {
        self.terms().len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms().is_empty()
    }

    pub fn get(&self, k: usize) -> Result<&BigInt, ChargeError> {
        self.terms().get(k).ok_or(ChargeError::SequenceTooShort {
            needed: k,
            available: self.len(),
        })
    }
}

/// JSON file form `{"p": ["1", "-1", ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PSequenceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(with = "serde_decimal::vec")]
    pub p: Vec<BigInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub horizon: usize,
    pub tie_policy: TiePolicy,
    pub strategy: String,
}

impl PSequenceFile {
    pub fn from_sequence(p: &PSequence, strategy: &str) -> Self {
        let provenance = match p {
            PSequence::Explicit(_) => None,
            PSequence::GreedyMinimal(g) => Some(Provenance {
                generator: "greedy-minimal".into(),
                horizon: g.horizon,
                tie_policy: g.tie,
                strategy: strategy.into(),
            }),
        };
        Self {
            schema: Some(crate::cli::SCHEMA.into()),
            p: p.terms().to_vec(),
            provenance,
        }
    }

    pub fn into_sequence(self) -> Result<PSequence, ChargeError> {
        PSequence::explicit(self.p)
    }
}

fn require(p: &[BigInt], last: usize) -> Result<(), ChargeError> {
    if last >= p.len() {
        Err(ChargeError::SequenceTooShort {
            needed: last,
            available: p.len(),
        })
    } else {
        Ok(())
    }
}

/// `h(m, n) = Σ_{i=0}^{n} (-1)^i C(n, i) p_{m+i}`.
pub fn h(m: usize, n: usize, p: &[BigInt]) -> Result<BigInt, ChargeError> {
    require(p, m + n)?;
    let row = binom_row(n as u64);
    let mut acc = BigInt::zero();
    for (i, c) in row.iter().enumerate() {
        let term = c * &p[m + i];
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// `[h(0, t), h(1, t-1), ..., h(t, 0)]`.
pub fn level_coefficients(p: &[BigInt], t: usize) -> Result<Vec<BigInt>, ChargeError> {
    require(p, t)?;
    (0..=t).map(|j| h(j, t - j, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightVector {
    t: usize,
    #[serde(with = "serde_decimal::vec")]
    w: Vec<BigInt>,
}

impl WeightVector {
    pub fn new(t: usize, w: Vec<BigInt>) -> Result<Self, ChargeError> {
        if w.len() != t + 1 {
            return Err(ChargeError::WeightLength { t, got: w.len() });
        }
        for (j, value) in w.iter().enumerate() {
            if value.is_negative() || *value > binom(t as u64, j as i64) {
                return Err(ChargeError::WeightOutOfRange {
                    t,
                    j,
                    value: value.clone(),
                });
            }
        }
        Ok(Self { t, w })
    }

    pub fn from_u64(t: usize, w: &[u64]) -> Result<Self, ChargeError> {
        Self::new(t, w.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn weights(&self) -> &[BigInt] {
        &self.w
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(Zero::is_zero)
    }

    /// `Σ_j w_j h(j, t - j)`.
    pub fn evaluate(&self, p: &[BigInt]) -> Result<BigInt, ChargeError> {
        let coeffs = level_coefficients(p, self.t)?;
        Ok(self.w.iter().zip(&coeffs).map(|(w, h)| w * h).sum())
    }
}

/// Weight vector of `u` over `coords`, or over its minimal support.
pub fn weight_vector(
    u: &ClopenSet,
    coords: Option<&BTreeSet<Coord>>,
    alg: &Algebra,
) -> Result<WeightVector, ChargeError> {
    let minimal: BTreeSet<Coord>;
    let coords = match coords {
        Some(c) => c,
        None => {
            minimal = u.support().iter().copied().collect();
            &minimal
        }
    };
    let view = alg.expand_support(u, coords)?;
    let t = view.support.len();
    let mut w = vec![0u64; t + 1];
    for &pattern in &view.patterns {
        w[view.zero_count(pattern)] += 1;
    }
    WeightVector::from_u64(t, &w)
}

pub fn charge_of(u: &ClopenSet, p: &PSequence) -> Result<BigInt, ChargeError> {
    weight_vector(u, None, &Algebra::default())?.evaluate(p.terms())
}

/// A growth function `g(k)`, `k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrowthSpec {
    /// `g(k) = 2^{(scale·k)^degree}`; never materialized.
    Pow2Poly { scale: u64, degree: u32 },
    /// `g(k) = base^k`.
    Geometric { base: BigInt },
    /// `g(k) = value`.
    Constant { value: BigInt },
}

impl GrowthSpec {
    /// `f(k) = 2^{(100k)^10}`.
    pub fn standard() -> Self {
        Self::Pow2Poly {
            scale: 100,
            degree: 10,
        }
    }

    /// Exact `log2 g(k)` when it is an integer.
    pub fn log2(&self, k: u64) -> Option<BigInt> {
        match self {
            Self::Pow2Poly { scale, degree } => {
                Some(num_traits::pow(BigInt::from(*scale) * k, *degree as usize))
            }
            Self::Geometric { base } if is_power_of_two(base) => {
                Some(BigInt::from(bit_length(base) - 1) * k)
            }
            Self::Constant { value } if is_power_of_two(value) => {
                Some(BigInt::from(bit_length(value) - 1))
            }
            _ => None,
        }
    }

    fn materialize(&self, k: u64) -> BigInt {
        match self {
            Self::Pow2Poly { .. } => unreachable!("power-of-two growth is compared in log space"),
            Self::Geometric { base } => num_traits::pow(base.clone(), k as usize),
            Self::Constant { value } => value.clone(),
        }
    }
}

fn is_power_of_two(x: &BigInt) -> bool {
    x.is_positive() && x.magnitude().count_ones() == 1
}

impl FromStr for GrowthSpec {
    type Err = ChargeError;

    /// `paper`, `pow2poly:<scale>:<degree>`, `geometric:<base>`, `const:<value>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChargeError::InvalidGrowthSpec(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let positive = |text: &str| -> Result<BigInt, ChargeError> {
            let v: BigInt = text.parse().map_err(|_| bad())?;
            if v.is_positive() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match parts.as_slice() {
            ["paper"] => Ok(Self::standard()),
            ["pow2poly", scale, degree] => Ok(Self::Pow2Poly {
                scale: scale.parse().map_err(|_| bad())?,
                degree: degree.parse().map_err(|_| bad())?,
            }),
            ["geometric", base] => Ok(Self::Geometric {
                base: positive(base)?,
            }),
            ["const", value] => Ok(Self::Constant {
                value: positive(value)?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GrowthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pow2Poly { scale, degree } => write!(f, "2^(({scale}k)^{degree})"),
            Self::Geometric { base } => write!(f, "{base}^k"),
            Self::Constant { value } => write!(f, "{value}"),
        }
    }
}

/// Above this many bits a required magnitude is reported as unmaterializable.
pub const MATERIALIZE_BITS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrowthEntry {
    pub k: usize,
    pub holds: bool,
    /// Bit length of `|p_k|`.
    pub actual_bits: u64,
    /// Bit length of `g(k)·Σ_{i<k}|p_i|` (absent for `k = 0`).
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_decimal")]
    pub required_bits: Option<BigInt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

mod opt_decimal {
    use num_bigint::BigInt;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrowthReport {
    pub growth: String,
    pub entries: Vec<GrowthEntry>,
}

impl GrowthReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }
}

/// Checks `p_0 != 0` and `|p_k| > g(k)·Σ_{i<k}|p_i|` for `1 <= k <= k_max`.
pub fn check_growth(
    p: &[BigInt],
    g: &GrowthSpec,
    k_max: usize,
) -> Result<GrowthReport, ChargeError> {
    require(p, k_max)?;
    let mut entries = Vec::with_capacity(k_max + 1);
    entries.push(GrowthEntry {
        k: 0,
        holds: !p[0].is_zero(),
        actual_bits: bit_length(&p[0]),
        required_bits: None,
        note: None,
    });
    let mut prefix_sum = p[0].abs();
    for k in 1..=k_max {
        let lhs = p[k].abs();
        let actual = BigInt::from(bit_length(&lhs));
        let (holds, required) = match g.log2(k as u64) {
            Some(shift) => {
                // bit length of 2^shift·S is exactly shift + bitlen(S)
                let required = &shift + bit_length(&prefix_sum);
                let holds = if prefix_sum.is_zero() {
                    !lhs.is_zero()
                } else if (&actual - &required).abs() <= BigInt::from(2) {
                    let shift: usize = (&shift).try_into().expect("within 2 bits of a materialized value");
                    lhs > &prefix_sum << shift
                } else {
                    actual > required
                };
                (holds, required)
            }
            None => {
                let rhs = g.materialize(k as u64) * &prefix_sum;
                let required = BigInt::from(bit_length(&rhs));
                let holds = if (&actual - &required).abs() <= BigInt::from(2) {
                    lhs > rhs
                } else {
                    actual > required
                };
                (holds, required)
            }
        };
        let note = (required > BigInt::from(MATERIALIZE_BITS)).then(|| {
            format!(
                "not materializable: requires ~1e{:.0} bits",
                approx_decimal_exponent(&required).floor()
            )
        });
        entries.push(GrowthEntry {
            k,
            holds,
            actual_bits: bit_length(&lhs),
            required_bits: Some(required),
            note,
        });
        prefix_sum += lhs;
    }
    Ok(GrowthReport {
        growth: g.to_string(),
        entries,
    })
}

/// Candidates in tie-break order: 0, 1, -1, 2, -2, ...
fn candidate(n: u64) -> i64 {
    if n == 0 {
        0
    } else if n % 2 == 1 {
        n.div_ceil(2) as i64
    } else {
        -((n / 2) as i64)
    }
}

/// The next greedy-minimal term: the least-magnitude `p_k` (positive first)
/// for which level `k = prefix.len()` has no vanishing weight vector.
///
/// Assumes every level below `k` already verifies.
pub fn greedy_extend(prefix: &[BigInt], opts: &SearchOptions) -> Result<BigInt, ChargeError> {
    let k = prefix.len();
    let mut window: u64 = 1 << 10;
    loop {
        let scan = snz::forbidden_next_terms(prefix, window, opts)?;
        if scan.all_forbidden {
            return Err(ChargeError::NoAdmissibleValue { k });
        }
        let chosen = (0..=2 * window)
            .map(candidate)
            .find(|&x| !scan.forbidden[(x + window as i64) as usize]);
        if let Some(x) = chosen {
            let value = BigInt::from(x);
            let mut extended = prefix.to_vec();
            extended.push(value.clone());
            // independent confirmation through the level verifier
            match snz::verify_level(&extended, k, opts)?.verdict {
                snz::LevelVerdict::Ok => return Ok(value),
                snz::LevelVerdict::Indeterminate(reason) => {
                    return Err(SnzError::BudgetExhausted(reason).into())
                }
                snz::LevelVerdict::Counterexample(c) => {
                    unreachable!("forbidden scan missed counterexample {c:?}")
                }
            }
        }
        window = window.checked_mul(16).expect("window overflow");
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::eval_str;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn h_examples() {
        let p = big(&[1, -10, 100]);
        assert_eq!(h(1, 0, &p).unwrap(), BigInt::from(-10));
        assert_eq!(h(0, 2, &p).unwrap(), BigInt::from(121));
        assert_eq!(h(0, 1, &p).unwrap(), BigInt::from(11));
        assert_eq!(h(1, 1, &p).unwrap(), BigInt::from(-110));
        assert!(matches!(
            h(1, 2, &p),
            Err(ChargeError::SequenceTooShort { needed: 3, available: 3 })
        ));
    }

    #[test]
    fn weight_vectors() {
        let alg = Algebra::default();
        let w = weight_vector(&ClopenSet::full(), Some(&[0, 1].into()), &alg).unwrap();
        assert_eq!(w, WeightVector::from_u64(2, &[1, 2, 1]).unwrap());
        let u = eval_str("H({},{3})").unwrap();
        let w = weight_vector(&u, Some(&[3].into()), &alg).unwrap();
        assert_eq!(w.weights(), big(&[1, 0]).as_slice());
        let w = weight_vector(&ClopenSet::empty(), Some(&[1, 2].into()), &alg).unwrap();
        assert_eq!(w.weights(), big(&[0, 0, 0]).as_slice());
        assert!(weight_vector(&u, Some(&[4].into()), &alg).is_err());
    }

    #[test]
    fn weight_bounds_enforced() {
        assert!(WeightVector::from_u64(2, &[1, 3, 1]).is_err());
        assert!(WeightVector::new(1, big(&[-1, 0])).is_err());
        assert!(WeightVector::from_u64(2, &[1, 1]).is_err());
    }

    #[test]
    fn charge_examples() {
        let p = PSequence::from_i64(&[7, -10]).unwrap();
        assert_eq!(charge_of(&ClopenSet::full(), &p).unwrap(), BigInt::from(7));
        assert_eq!(charge_of(&ClopenSet::empty(), &p).unwrap(), BigInt::zero());
        let p = PSequence::from_i64(&[1, -10]).unwrap();
        let u = eval_str("H({},{3})").unwrap();
        assert_eq!(charge_of(&u, &p).unwrap(), BigInt::from(11));
    }

    #[test]
    fn growth_default_is_not_materializable() {
        let report = check_growth(&big(&[1, 5]), &GrowthSpec::standard(), 1).unwrap();
        assert!(report.entries[0].holds);
        let e = &report.entries[1];
        assert!(!e.holds);
        assert_eq!(
            e.required_bits,
            Some(num_traits::pow(BigInt::from(100), 10) + 1)
        );
        assert_eq!(e.note.as_deref(), Some("not materializable: requires ~1e20 bits"));
    }

    #[test]
    fn growth_small_cases() {
        let g: GrowthSpec = "geometric:2".parse().unwrap();
        let report = check_growth(&big(&[1, -1]), &g, 1).unwrap();
        assert!(!report.entries[1].holds);
        // 3 > 2·1 holds, 2 > 2·1 does not
        assert!(check_growth(&big(&[1, 3]), &g, 1).unwrap().all_hold());
        assert!(!check_growth(&big(&[1, 2]), &g, 1).unwrap().all_hold());
        // non power of two: 3^k
        let g: GrowthSpec = "geometric:3".parse().unwrap();
        assert!(check_growth(&big(&[1, -4, 50]), &g, 2).unwrap().all_hold());
        assert!(!check_growth(&big(&[1, -4, 45]), &g, 2).unwrap().all_hold());
        assert!(!check_growth(&big(&[0]), &g, 0).unwrap().all_hold());
    }

    #[test]
    fn growth_spec_parsing() {
        assert_eq!("paper".parse::<GrowthSpec>().unwrap(), GrowthSpec::standard());
        assert!("const:0".parse::<GrowthSpec>().is_err());
        assert!("nope".parse::<GrowthSpec>().is_err());
        assert_eq!(
            "pow2poly:1:1".parse::<GrowthSpec>().unwrap().log2(5),
            Some(BigInt::from(5))
        );
    }

    #[test]
    fn candidate_order() {
        let c: Vec<i64> = (0..7).map(candidate).collect();
        assert_eq!(c, vec![0, 1, -1, 2, -2, 3, -3]);
    }

    #[test]
    fn greedy_prefix() {
        let opts = SearchOptions::default().with_jobs(2);
        let p = PSequence::greedy(5, &opts).unwrap();
        assert_eq!(p.terms(), big(&[1, -1, 2, -3, 5, -8]).as_slice());
        let file = PSequenceFile::from_sequence(&p, "exhaustive");
        let json = serde_json::to_value(&file).unwrap();
        assert_eq!(json["p"][1], "-1");
        assert_eq!(json["provenance"]["horizon"], 5);
        assert_eq!(json["provenance"]["tie_policy"], "least-abs-positive-first");
    }

    #[test]
    fn greedy_first_terms_match_exhaustive_oracle() {
        let opts = SearchOptions::default().with_jobs(1);
        assert_eq!(greedy_extend(&[], &opts).unwrap(), BigInt::from(1));
        assert_eq!(greedy_extend(&big(&[1]), &opts).unwrap(), BigInt::from(-1));
        assert_eq!(greedy_extend(&big(&[1, -1]), &opts).unwrap(), BigInt::from(2));
    }
}
