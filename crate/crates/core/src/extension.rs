//! Constructions on subsets of `ℕ = {1, 2, 3, ...}`: a continuum chain, the
//! finite–cofinite charge and why it stops extending.
//!
//! Rationals are enumerated as `q_1 = 0`, `q_{2k} = c_k`, `q_{2k+1} = -c_k`
//! where `c_1, c_2, ...` is the Calkin–Wilf sequence `1, 1/2, 2, 1/3, ...`.
//! Over ℚ the same arguments go through unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{rat_to_string, BigRat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtensionError {
    #[error("need exactly {expected} values, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("values must be pairwise distinct")]
    Repeated,
    #[error("modulus must be nonzero")]
    ZeroModulus,
    #[error("need r < r'")]
    NotIncreasing,
    #[error("truncation must be at least 1")]
    EmptyTruncation,
}

/// `c_n` for `n >= 1`: start at `1/1`, then each bit of `n` below the top one
/// maps `a/b` to `a/(a+b)` on 0 and `(a+b)/b` on 1.
pub fn calkin_wilf(n: &BigUint) -> BigRat {
    assert!(!n.is_zero(), "Calkin-Wilf index starts at 1");
    let mut a = BigUint::one();
    let mut b = BigUint::one();
    for i in (0..n.bits() - 1).rev() {
        if n.bit(i) {
            a += &b;
        } else {
            b += &a;
        }
    }
    BigRat::new(a.into(), b.into())
}

/// Inverse of [`calkin_wilf`] for positive `q`.
pub fn calkin_wilf_index(q: &BigRat) -> BigUint {
    assert!(q.is_positive(), "Calkin-Wilf covers positive rationals");
    let mut a = q.numer().magnitude().clone();
    let mut b = q.denom().magnitude().clone();
    let mut bits = Vec::new();
    while !(a.is_one() && b.is_one()) {
        if a > b {
            a -= &b;
            bits.push(true);
        } else {
            b -= &a;
            bits.push(false);
        }
    }
    let mut n = BigUint::one();
    for bit in bits.into_iter().rev() {
        n <<= 1;
        if bit {
            n += 1u32;
        }
    }
    n
}

/// `q_n`, `n >= 1`.
pub fn rational_at(n: &BigUint) -> BigRat {
    if n.is_one() {
        return BigRat::zero();
    }
    let (k, r) = n.div_rem(&BigUint::from(2u32));
    let c = calkin_wilf(&k);
    if r.is_zero() {
        c
    } else {
        -c
    }
}

pub fn rational_index(q: &BigRat) -> BigUint {
    if q.is_zero() {
        return BigUint::one();
    }
    let k = calkin_wilf_index(&q.abs()) << 1;
    if q.is_negative() {
        k + 1u32
    } else {
        k
    }
}

/// `{i <= n : q_i < r}`.
pub fn chain_set(r: &BigRat, n: u64) -> Result<BTreeSet<u64>, ExtensionError> {
    if n == 0 {
        return Err(ExtensionError::EmptyTruncation);
    }
    Ok((1..=n)
        .filter(|&i| rational_at(&BigUint::from(i)) < *r)
        .collect())
}

pub fn in_chain_set(r: &BigRat, i: &BigUint) -> bool {
    rational_at(i) < *r
}

/// `(a + c) / (b + d)` for `a/b`, `c/d` in lowest terms with positive denominators.
pub fn mediant(x: &BigRat, y: &BigRat) -> BigRat {
    BigRat::new(x.numer() + y.numer(), x.denom() + y.denom())
}

/// An index in `A_{r'} \ A_r`: the position of the mediant of `r` and `r'`.
pub fn strict_inclusion_witness(r: &BigRat, r2: &BigRat) -> Result<(BigRat, BigUint), ExtensionError> {
    if r >= r2 {
        return Err(ExtensionError::NotIncreasing);
    }
    let m = mediant(r, r2);
    let i = rational_index(&m);
    Ok((m, i))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainDemo {
    pub truncation: u64,
    pub links: Vec<ChainLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainLink {
    pub r: String,
    pub size: usize,
    pub new_index: Option<String>,
}

/// `A_r` for `r = 0, 1/len, ..., 1` truncated where every step is visibly strict.
pub fn demo_chain(len: u64) -> ChainDemo {
    let rs: Vec<BigRat> = (0..=len)
        .map(|k| BigRat::new(k.into(), len.max(1).into()))
        .collect();
    let mut new_index = vec![None];
    let mut n = 1u64;
    for pair in rs.windows(2) {
        let (_, i) = strict_inclusion_witness(&pair[0], &pair[1]).expect("increasing");
        n = n.max(i.to_u64().expect("small demo"));
        new_index.push(Some(i.to_string()));
    }
    let links = rs
        .iter()
        .zip(new_index)
        .map(|(r, new_index)| ChainLink {
            r: rat_to_string(r),
            size: chain_set(r, n).expect("n >= 1").len(),
            new_index,
        })
        .collect();
    ChainDemo {
        truncation: n,
        links,
    }
}

/// A finite set, or the complement of one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "elements", rename_all = "lowercase")]
pub enum FinCofSet {
    Finite(BTreeSet<u64>),
    /// Stores the complement.
    Cofinite(BTreeSet<u64>),
}

impl FinCofSet {
    pub fn finite(xs: impl IntoIterator<Item = u64>) -> Self {
        Self::Finite(xs.into_iter().filter(|&x| x >= 1).collect())
    }

    pub fn cofinite(missing: impl IntoIterator<Item = u64>) -> Self {
        Self::Cofinite(missing.into_iter().filter(|&x| x >= 1).collect())
    }

    pub fn naturals() -> Self {
        Self::Cofinite(BTreeSet::new())
    }

    pub fn contains(&self, x: u64) -> bool {
        match self {
            Self::Finite(s) => s.contains(&x),
            Self::Cofinite(s) => x >= 1 && !s.contains(&x),
        }
    }

    pub fn complement(&self) -> Self {
        match self {
            Self::Finite(s) => Self::Cofinite(s.clone()),
            Self::Cofinite(s) => Self::Finite(s.clone()),
        }
    }

    pub fn union(&self, o: &Self) -> Self {
        use FinCofSet::*;
        match (self, o) {
            (Finite(a), Finite(b)) => Finite(a | b),
            (Finite(a), Cofinite(b)) | (Cofinite(b), Finite(a)) => Cofinite(b - a),
            (Cofinite(a), Cofinite(b)) => Cofinite(a & b),
        }
    }

    pub fn intersect(&self, o: &Self) -> Self {
        self.complement().union(&o.complement()).complement()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Finite(s) if s.is_empty())
    }

    pub fn is_disjoint(&self, o: &Self) -> bool {
        self.intersect(o).is_empty()
    }
}

/// `#A` for finite `A`, `-1 - #(ℕ \ A)` for cofinite `A`.
pub fn fincof_charge(a: &FinCofSet) -> BigInt {
    match a {
        FinCofSet::Finite(s) => BigInt::from(s.len()),
        FinCofSet::Cofinite(s) => -BigInt::one() - s.len(),
    }
}

/// `(E ∩ even) ∪ (O ∩ odd)` with `E` the evens and `O` the odds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParitySet {
    pub even: FinCofSet,
    pub odd: FinCofSet,
}

impl ParitySet {
    pub fn contains(&self, x: u64) -> bool {
        if x % 2 == 0 {
            self.even.contains(x)
        } else {
            self.odd.contains(x)
        }
    }

    /// Whether some element survives; cofinite parts always do.
    pub fn is_nonempty(&self) -> bool {
        let part = |s: &FinCofSet, parity: u64| match s {
            FinCofSet::Finite(xs) => xs.iter().any(|x| x % 2 == parity),
            FinCofSet::Cofinite(_) => true,
        };
        part(&self.even, 0) || part(&self.odd, 1)
    }

    /// The only value additivity allows once `μ(E) = e` and `μ(ℕ) = -1`.
    pub fn forced_charge(&self, e: &BigInt) -> BigInt {
        let odd_total = -BigInt::one() - e;
        let part = |s: &FinCofSet, parity: u64, total: &BigInt| match s {
            FinCofSet::Finite(xs) => BigInt::from(xs.iter().filter(|x| *x % 2 == parity).count()),
            FinCofSet::Cofinite(xs) => total - xs.iter().filter(|x| *x % 2 == parity).count(),
        };
        part(&self.even, 0, e) + part(&self.odd, 1, &odd_total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvensWitness {
    pub e: String,
    pub set: ParitySet,
    pub description: String,
    pub derivation: String,
    pub forced_charge: String,
}

/// A nonempty set whose charge must be 0 if the evens get charge `e`.
pub fn evens_extension_witness(e: i64) -> EvensWitness {
    let eb = BigInt::from(e);
    let (set, description, derivation) = if e > 0 {
        let removed: BTreeSet<u64> = (1..=e as u64).map(|k| 2 * k).collect();
        (
            ParitySet {
                even: FinCofSet::Cofinite(removed),
                odd: FinCofSet::finite([]),
            },
            format!("E \\ {{2, 4, ..., {}}}", 2 * e),
            format!("mu(E) - #{{first {e} evens}} = {e} - {e} = 0"),
        )
    } else if e == 0 {
        (
            ParitySet {
                even: FinCofSet::naturals(),
                odd: FinCofSet::finite([]),
            },
            "E".to_string(),
            "mu(E) = 0".to_string(),
        )
    } else {
        let n = (-1 - e) as u64;
        let removed: BTreeSet<u64> = (0..n).map(|k| 2 * k + 1).collect();
        let description = if n == 0 {
            "O".to_string()
        } else {
            format!("O \\ {{1, 3, ..., {}}}", 2 * n - 1)
        };
        (
            ParitySet {
                even: FinCofSet::finite([]),
                odd: FinCofSet::Cofinite(removed),
            },
            description,
            format!("mu(N) - mu(E) - {n} = -1 - ({e}) - {n} = 0"),
        )
    };
    let forced = set.forced_charge(&eb);
    EvensWitness {
        e: eb.to_string(),
        set,
        description,
        derivation,
        forced_charge: forced.to_string(),
    }
}

fn check_values(values: &[BigInt], a: &BigInt) -> Result<(), ExtensionError> {
    if a.is_zero() {
        return Err(ExtensionError::ZeroModulus);
    }
    let expected = a
        .magnitude()
        .to_usize()
        .and_then(|x| x.checked_add(1))
        .unwrap_or(usize::MAX);
    if values.len() != expected {
        return Err(ExtensionError::WrongCount {
            expected,
            got: values.len(),
        });
    }
    let distinct: BTreeSet<&BigInt> = values.iter().collect();
    if distinct.len() != values.len() {
        return Err(ExtensionError::Repeated);
    }
    Ok(())
}

/// 1-based `(ℓ, m)`, `ℓ < m`, with `values[ℓ] ≡ values[m] (mod a)`, least in
/// lexicographic order.
pub fn pigeonhole_pair(values: &[BigInt], a: &BigInt) -> Result<(usize, usize), ExtensionError> {
    check_values(values, a)?;
    let modulus = a.abs();
    let mut classes: BTreeMap<BigInt, Vec<usize>> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        classes.entry(v.mod_floor(&modulus)).or_default().push(i + 1);
    }
    Ok(classes
        .values()
        .filter(|ix| ix.len() >= 2)
        .map(|ix| (ix[0], ix[1]))
        .min()
        .expect("more values than residue classes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `μ(F) = p·a`: `G` sits inside `F` and `F \ G` is nonempty with charge 0.
    Inside,
    /// `μ(F) = -p·a`: `G` is disjoint from `F` and `F ∪ G` has charge 0.
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Obstruction {
    pub a: String,
    pub ell: usize,
    pub m: usize,
    pub p: String,
    pub orientation: Orientation,
    pub mu_f: String,
    pub mu_g: String,
    pub mu_zero_set: String,
    /// `D_k` as `{i : 2^e divides i}`, listed as exponents `e`.
    pub d_exponents: Vec<usize>,
    pub narrative: Vec<String>,
}

/// The pigeonhole obstruction for pairwise disjoint `A_1, A_2, ...` with
/// `μ(A_i) = a`, and `E_k = ∪_{i ∈ D_k} A_i` taking the given charges.
///
/// `D_k` is the set of multiples of `2^{n+1-k}`, `n = |a| + 1`, so the `E_k`
/// increase, consecutive differences contain infinitely many `A_i`, and so
/// does the complement of the largest.
pub fn build_obstruction(a: &BigInt, values: &[BigInt]) -> Result<Obstruction, ExtensionError> {
    let (ell, m) = pigeonhole_pair(values, a)?;
    let n = values.len();
    let exps: Vec<usize> = (1..=n).map(|k| n + 1 - k).collect();
    let mu_f = &values[m - 1] - &values[ell - 1];
    let (p, rem) = mu_f.div_rem(a);
    debug_assert!(rem.is_zero());
    let orientation = if p.is_positive() {
        Orientation::Inside
    } else {
        Orientation::Outside
    };
    let p = p.abs();
    let mu_g = &p * a;
    let mu_zero = match orientation {
        Orientation::Inside => &mu_f - &mu_g,
        Orientation::Outside => &mu_f + &mu_g,
    };
    let (el, em) = (exps[ell - 1], exps[m - 1]);
    let mut narrative = vec![
        format!("A_1, A_2, ... pairwise disjoint with mu(A_i) = {a}"),
        format!("D_k = {{i : 2^(n+1-k) | i}} for k = 1..{n}; E_k = union of A_i over D_k"),
        format!("mu(E_{ell}) = {}, mu(E_{m}) = {}, congruent mod {}", values[ell - 1], values[m - 1], a.abs()),
        format!("F = E_{m} \\ E_{ell} = union of A_i with 2^{em} | i, 2^{el} not dividing i; mu(F) = {mu_f}"),
    ];
    match orientation {
        Orientation::Inside => {
            narrative.push(format!(
                "G = union of the first {p} of the A_i inside F; mu(G) = {mu_g}; G is a proper subset of F"
            ));
            narrative.push(format!("F \\ G is nonempty and mu(F \\ G) = {mu_f} - {mu_g} = {mu_zero}"));
        }
        Orientation::Outside => {
            narrative.push(format!(
                "G = union of the first {p} of the A_i with i odd, disjoint from every E_k; mu(G) = {mu_g}"
            ));
            narrative.push(format!("F ∪ G is nonempty and mu(F ∪ G) = {mu_f} + {mu_g} = {mu_zero}"));
        }
    }
    narrative.push("so no extension to the algebra generated by the E_k is strictly nonzero".into());
    Ok(Obstruction {
        a: a.to_string(),
        ell,
        m,
        p: p.to_string(),
        orientation,
        mu_f: mu_f.to_string(),
        mu_g: mu_g.to_string(),
        mu_zero_set: mu_zero.to_string(),
        d_exponents: exps,
        narrative,
    })
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.narrative {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
