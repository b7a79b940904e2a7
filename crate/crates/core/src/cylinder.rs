//! Clopen subsets of `{0,1}^N` as finite disjoint unions of full-support
//! cylinders.
//!
//! A [`ClopenSet`] stores a sorted support `C` and the set of assignments
//! `C -> {0,1}` it contains. Bit `i` of a pattern is the value of coordinate
//! `support[i]`. Canonical sets carry no redundant coordinate, so two sets are
//! equal as subsets of Cantor space iff they are structurally equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Coord = u64;

pub const DEFAULT_SUPPORT_LIMIT: usize = 24;
/// Patterns are `u64` masks.
pub const MAX_SUPPORT_LIMIT: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClopenError {
    #[error("coordinate {0} is constrained to be both 0 and 1")]
    OverlappingConstraint(Coord),
    #[error("support of size {size} exceeds the limit of {limit} coordinates")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("coordinate set does not contain support coordinate {0}")]
    NotASuperset(Coord),
    #[error("pattern {pattern:?} does not match a support of size {size}")]
    InvalidPattern { pattern: String, size: usize },
    #[error("support must be strictly increasing")]
    UnsortedSupport,
    #[error("not a bijection: {0}")]
    NotABijection(String),
}

/// `H(A, B)`: the points that are 0 on `zeros` and 1 on `ones`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cylinder {
    zeros: BTreeSet<Coord>,
    ones: BTreeSet<Coord>,
}

impl Cylinder {
    pub fn new(
        zeros: impl IntoIterator<Item = Coord>,
        ones: impl IntoIterator<Item = Coord>,
    ) -> Result<Self, ClopenError> {
        let zeros: BTreeSet<_> = zeros.into_iter().collect();
        let ones: BTreeSet<_> = ones.into_iter().collect();
        if let Some(&c) = zeros.intersection(&ones).next() {
            return Err(ClopenError::OverlappingConstraint(c));
        }
        Ok(Self { zeros, ones })
    }

    pub fn zeros(&self) -> &BTreeSet<Coord> {
        &self.zeros
    }

    pub fn ones(&self) -> &BTreeSet<Coord> {
        &self.ones
    }

    pub fn contains(&self, point: impl Fn(Coord) -> bool) -> bool {
        self.zeros.iter().all(|&c| !point(c)) && self.ones.iter().all(|&c| point(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClopenSet {
    support: Vec<Coord>,
    patterns: Vec<u64>,
}

/// A set written over a chosen coordinate set, not necessarily minimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportView {
    pub support: Vec<Coord>,
    pub patterns: Vec<u64>,
}

impl SupportView {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Number of coordinates a pattern assigns to 0.
    pub fn zero_count(&self, pattern: u64) -> usize {
        self.support.len() - pattern.count_ones() as usize
    }
}

/// Operations on clopen sets with a bound on how many coordinates may be
/// materialized at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Algebra {
    support_limit: usize,
}

impl Default for Algebra {
    fn default() -> Self {
        Self {
            support_limit: DEFAULT_SUPPORT_LIMIT,
        }
    }
}

fn full_mask(t: usize) -> u64 {
    if t == 64 {
        u64::MAX
    } else {
        (1u64 << t) - 1
    }
}

/// Dense membership table over `2^t` patterns.
struct Bitmap {
    words: Vec<u64>,
}

impl Bitmap {
    fn new(t: usize) -> Self {
        let bits = 1usize << t;
        Self {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn set(&mut self, i: u64) {
        self.words[(i >> 6) as usize] |= 1 << (i & 63);
    }

    fn get(&self, i: u64) -> bool {
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    fn ones(&self, t: usize) -> Vec<u64> {
        let n = 1u64 << t;
        (0..n).filter(|&i| self.get(i)).collect()
    }
}

impl Algebra {
    pub fn with_support_limit(limit: usize) -> Self {
        Self {
            support_limit: limit.min(MAX_SUPPORT_LIMIT),
        }
    }

    pub fn support_limit(&self) -> usize {
        self.support_limit
    }

    fn guard(&self, size: usize) -> Result<(), ClopenError> {
        if size > self.support_limit {
            Err(ClopenError::SupportTooLarge {
                size,
                limit: self.support_limit,
            })
        } else {
            Ok(())
        }
    }

    pub fn from_cylinder(&self, c: &Cylinder) -> Result<ClopenSet, ClopenError> {
        let support: Vec<Coord> = c.zeros.union(&c.ones).copied().collect();
        self.guard(support.len())?;
        let mut pattern = 0u64;
        for (i, coord) in support.iter().enumerate() {
            if c.ones.contains(coord) {
                pattern |= 1 << i;
            }
        }
        // every coordinate of a single cylinder is essential
        Ok(ClopenSet {
            support,
            patterns: vec![pattern],
        })
    }

    /// Builds a canonical set from an arbitrary support and pattern list.
    pub fn from_patterns(
        &self,
        support: Vec<Coord>,
        patterns: impl IntoIterator<Item = u64>,
    ) -> Result<ClopenSet, ClopenError> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClopenError::UnsortedSupport);
        }
        self.guard(support.len())?;
        let t = support.len();
        let mut map = Bitmap::new(t);
        for p in patterns {
            if p & !full_mask(t) != 0 {
                return Err(ClopenError::InvalidPattern {
                    pattern: format!("{p:#b}"),
                    size: t,
                });
            }
            map.set(p);
        }
        Ok(canonicalize(support, &map))
    }

    pub fn expand_support(
        &self,
        u: &ClopenSet,
        coords: &BTreeSet<Coord>,
    ) -> Result<SupportView, ClopenError> {
        if let Some(&c) = u.support.iter().find(|c| !coords.contains(c)) {
            return Err(ClopenError::NotASuperset(c));
        }
        self.guard(coords.len())?;
        let support: Vec<Coord> = coords.iter().copied().collect();
        let mut patterns = expand_patterns(u, &support);
        patterns.sort_unstable();
        Ok(SupportView { support, patterns })
    }

    fn combine(
        &self,
        u: &ClopenSet,
        v: &ClopenSet,
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<ClopenSet, ClopenError> {
        let merged: BTreeSet<Coord> = u.support.iter().chain(&v.support).copied().collect();
        self.guard(merged.len())?;
        let support: Vec<Coord> = merged.into_iter().collect();
        let t = support.len();
        let mut left = Bitmap::new(t);
        for p in expand_patterns(u, &support) {
            left.set(p);
        }
        let mut right = Bitmap::new(t);
        for p in expand_patterns(v, &support) {
            right.set(p);
        }
        let mut out = Bitmap::new(t);
        for p in 0..(1u64 << t) {
            if op(left.get(p), right.get(p)) {
                out.set(p);
            }
        }
        Ok(canonicalize(support, &out))
    }

    pub fn union(&self, u: &ClopenSet, v: &ClopenSet) -> Result<ClopenSet, ClopenError> {
        self.combine(u, v, |a, b| a || b)
    }

    pub fn intersect(&self, u: &ClopenSet, v: &ClopenSet) -> Result<ClopenSet, ClopenError> {
        self.combine(u, v, |a, b| a && b)
    }

    pub fn difference(&self, u: &ClopenSet, v: &ClopenSet) -> Result<ClopenSet, ClopenError> {
        self.combine(u, v, |a, b| a && !b)
    }

    pub fn complement(&self, u: &ClopenSet) -> Result<ClopenSet, ClopenError> {
        self.guard(u.support.len())?;
        let t = u.support.len();
        let mut patterns = Vec::with_capacity((1usize << t) - u.patterns.len());
        let mut present = u.patterns.iter().peekable();
        for p in 0..(1u64 << t) {
            if present.peek() == Some(&&p) {
                present.next();
            } else {
                patterns.push(p);
            }
        }
        // dependence on each coordinate is unchanged, so still canonical
        Ok(ClopenSet {
            support: u.support.clone(),
            patterns,
        })
    }

    pub fn apply_permutation(&self, u: &ClopenSet, pi: &FinPermutation) -> ClopenSet {
        let mut relabeled: Vec<(Coord, usize)> = u
            .support
            .iter()
            .enumerate()
            .map(|(i, &c)| (pi.apply(c), i))
            .collect();
        relabeled.sort_unstable();
        let support: Vec<Coord> = relabeled.iter().map(|&(c, _)| c).collect();
        let mut patterns: Vec<u64> = u
            .patterns
            .iter()
            .map(|&p| {
                relabeled
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (new, &(_, old))| acc | ((p >> old) & 1) << new)
            })
            .collect();
        patterns.sort_unstable();
        ClopenSet { support, patterns }
    }
}

/// Patterns of `u` written over `support`, which must contain `u.support`.
fn expand_patterns(u: &ClopenSet, support: &[Coord]) -> Vec<u64> {
    let positions: Vec<usize> = u
        .support
        .iter()
        .map(|c| support.binary_search(c).expect("support superset"))
        .collect();
    let mut fixed_mask = 0u64;
    for &pos in &positions {
        fixed_mask |= 1 << pos;
    }
    let free: Vec<usize> = (0..support.len())
        .filter(|i| fixed_mask >> i & 1 == 0)
        .collect();
    let mut out = Vec::with_capacity(u.patterns.len() << free.len());
    for &p in &u.patterns {
        let mut base = 0u64;
        for (i, &pos) in positions.iter().enumerate() {
            base |= ((p >> i) & 1) << pos;
        }
        for fill in 0..(1u64 << free.len()) {
            let mut q = base;
            for (k, &pos) in free.iter().enumerate() {
                q |= ((fill >> k) & 1) << pos;
            }
            out.push(q);
        }
    }
    out
}

/// Drops every coordinate the indicator does not depend on.
fn canonicalize(support: Vec<Coord>, map: &Bitmap) -> ClopenSet {
    let t = support.len();
    let members = map.ones(t);
    let redundant: Vec<bool> = (0..t)
        .map(|i| members.iter().all(|&p| map.get(p ^ (1 << i))))
        .collect();
    if !redundant.iter().any(|&r| r) {
        return ClopenSet {
            support,
            patterns: members,
        };
    }
    let kept: Vec<usize> = (0..t).filter(|&i| !redundant[i]).collect();
    let dropped_mask = (0..t)
        .filter(|&i| redundant[i])
        .fold(0u64, |m, i| m | 1 << i);
    let mut patterns: Vec<u64> = members
        .iter()
        .filter(|&&p| p & dropped_mask == 0)
        .map(|&p| {
            kept.iter()
                .enumerate()
                .fold(0u64, |acc, (new, &old)| acc | ((p >> old) & 1) << new)
        })
        .collect();
    patterns.sort_unstable();
    ClopenSet {
        support: kept.iter().map(|&i| support[i]).collect(),
        patterns,
    }
}

impl ClopenSet {
    pub fn empty() -> Self {
        Self {
            support: Vec::new(),
            patterns: Vec::new(),
        }
    }

    pub fn full() -> Self {
        Self {
            support: Vec::new(),
            patterns: vec![0],
        }
    }

    pub fn support(&self) -> &[Coord] {
        &self.support
    }

    pub fn patterns(&self) -> &[u64] {
        &self.patterns
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.support.is_empty() && self.patterns.len() == 1
    }

    /// Membership of a point of Cantor space given as a coordinate oracle.
    pub fn contains(&self, point: impl Fn(Coord) -> bool) -> bool {
        let mask = self
            .support
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &c)| if point(c) { m | 1 << i } else { m });
        self.patterns.binary_search(&mask).is_ok()
    }

    /// The full-support cylinder `H(A, B)` a pattern denotes.
    pub fn pattern_cylinder(&self, pattern: u64) -> Cylinder {
        let mut zeros = BTreeSet::new();
        let mut ones = BTreeSet::new();
        for (i, &c) in self.support.iter().enumerate() {
            if pattern >> i & 1 == 1 {
                ones.insert(c);
            } else {
                zeros.insert(c);
            }
        }
        Cylinder { zeros, ones }
    }

    pub fn pattern_string(&self, pattern: u64) -> String {
        (0..self.support.len())
            .map(|i| if pattern >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn union(&self, other: &Self) -> Result<Self, ClopenError> {
        Algebra::default().union(self, other)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, ClopenError> {
        Algebra::default().intersect(self, other)
    }

    pub fn difference(&self, other: &Self) -> Result<Self, ClopenError> {
        Algebra::default().difference(self, other)
    }

    pub fn complement(&self) -> Result<Self, ClopenError> {
        Algebra::default().complement(self)
    }

    pub fn permuted(&self, pi: &FinPermutation) -> Self {
        Algebra::default().apply_permutation(self, pi)
    }
}

impl TryFrom<&Cylinder> for ClopenSet {
    type Error = ClopenError;

    fn try_from(c: &Cylinder) -> Result<Self, Self::Error> {
        Algebra::default().from_cylinder(c)
    }
}

#[derive(Serialize, Deserialize)]
struct ClopenJson {
    support: Vec<Coord>,
    patterns: Vec<String>,
}

impl Serialize for ClopenSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ClopenJson {
            support: self.support.clone(),
            patterns: self
                .patterns
                .iter()
                .map(|&p| self.pattern_string(p))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClopenSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ClopenJson::deserialize(d)?;
        let t = raw.support.len();
        let mut masks = Vec::with_capacity(raw.patterns.len());
        for text in &raw.patterns {
            if text.len() != t || !text.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(D::Error::custom(ClopenError::InvalidPattern {
                    pattern: text.clone(),
                    size: t,
                }));
            }
            masks.push(
                text.bytes()
                    .enumerate()
                    .fold(0u64, |m, (i, b)| if b == b'1' { m | 1 << i } else { m }),
            );
        }
        Algebra::with_support_limit(MAX_SUPPORT_LIMIT)
            .from_patterns(raw.support, masks)
            .map_err(D::Error::custom)
    }
}

/// A permutation of the coordinates moving finitely many points.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FinPermutation {
    // only non-fixed points
    map: BTreeMap<Coord, Coord>,
}

impl FinPermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Coord, Coord)>) -> Result<Self, ClopenError> {
        let mut map = BTreeMap::new();
        for (from, to) in pairs {
            if let Some(prev) = map.insert(from, to) {
                if prev != to {
                    return Err(ClopenError::NotABijection(format!(
                        "{from} mapped to both {prev} and {to}"
                    )));
                }
            }
        }
        map.retain(|k, v| k != v);
        let domain: BTreeSet<Coord> = map.keys().copied().collect();
        let image: BTreeSet<Coord> = map.values().copied().collect();
        if domain != image {
            return Err(ClopenError::NotABijection(
                "moved points do not map onto themselves".into(),
            ));
        }
        Ok(Self { map })
    }

    pub fn swap(a: Coord, b: Coord) -> Self {
        Self::from_pairs([(a, b), (b, a)]).expect("transposition")
    }

    /// `c[0] -> c[1] -> ... -> c[n-1] -> c[0]`.
    pub fn cycle(coords: &[Coord]) -> Result<Self, ClopenError> {
        let distinct: BTreeSet<_> = coords.iter().collect();
        if distinct.len() != coords.len() {
            return Err(ClopenError::NotABijection("cycle repeats a point".into()));
        }
        Self::from_pairs(
            coords
                .iter()
                .zip(coords.iter().cycle().skip(1))
                .map(|(&a, &b)| (a, b)),
        )
    }

    pub fn apply(&self, c: Coord) -> Coord {
        self.map.get(&c).copied().unwrap_or(c)
    }

    pub fn inverse(&self) -> Self {
        Self {
            map: self.map.iter().map(|(&k, &v)| (v, k)).collect(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let points: BTreeSet<Coord> = self.map.keys().chain(other.map.keys()).copied().collect();
        let mut map: BTreeMap<Coord, Coord> = points
            .into_iter()
            .map(|c| (c, self.apply(other.apply(c))))
            .collect();
        map.retain(|k, v| k != v);
        Self { map }
    }

    pub fn moved_points(&self) -> impl Iterator<Item = Coord> + '_ {
        self.map.keys().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }
}

impl fmt::Display for FinPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.map.is_empty() {
            return write!(f, "id");
        }
        let mut first = true;
        for (k, v) in &self.map {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{k}->{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(zeros: &[Coord], ones: &[Coord]) -> ClopenSet {
        ClopenSet::try_from(&Cylinder::new(zeros.iter().copied(), ones.iter().copied()).unwrap())
            .unwrap()
    }

    #[test]
    fn cylinder_encoding() {
        assert_eq!(cyl(&[], &[]), ClopenSet::full());
        let u = cyl(&[1], &[2]);
        assert_eq!(u.support(), &[1, 2]);
        assert_eq!(u.patterns(), &[0b10]);
        assert_eq!(u.pattern_string(u.patterns()[0]), "01");
        assert_eq!(
            Cylinder::new([1], [1]),
            Err(ClopenError::OverlappingConstraint(1))
        );
    }

    #[test]
    fn boolean_examples() {
        let one5 = cyl(&[], &[5]);
        let zero5 = cyl(&[5], &[]);
        assert!(one5.union(&zero5).unwrap().is_full());
        assert!(one5.intersect(&zero5).unwrap().is_empty());
        assert_eq!(
            ClopenSet::full().difference(&cyl(&[1], &[])).unwrap(),
            cyl(&[], &[1])
        );
        assert_eq!(ClopenSet::empty().complement().unwrap(), ClopenSet::full());
        assert_eq!(ClopenSet::full().complement().unwrap(), ClopenSet::empty());
    }

    #[test]
    fn redundant_coordinates_are_dropped() {
        // H({1},{2}) ∪ H({1},{2})ᶜ∩H({1},{}) = H({1},{})
        let a = cyl(&[1], &[2]);
        let b = cyl(&[1, 2], &[]);
        assert_eq!(a.union(&b).unwrap(), cyl(&[1], &[]));
    }

    #[test]
    fn expand_support_counts() {
        let alg = Algebra::default();
        let full = alg
            .expand_support(&ClopenSet::full(), &[0, 1].into())
            .unwrap();
        assert_eq!(full.len(), 4);
        let v = alg.expand_support(&cyl(&[], &[3]), &[3, 7].into()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(
            alg.expand_support(&cyl(&[], &[3]), &[7].into()),
            Err(ClopenError::NotASuperset(3))
        );
    }

    #[test]
    fn support_guard() {
        let alg = Algebra::with_support_limit(3);
        let a = alg.from_cylinder(&Cylinder::new([0, 1], []).unwrap()).unwrap();
        let b = alg.from_cylinder(&Cylinder::new([2, 3], []).unwrap()).unwrap();
        assert_eq!(
            alg.union(&a, &b),
            Err(ClopenError::SupportTooLarge { size: 4, limit: 3 })
        );
    }

    #[test]
    fn permutation_relabels() {
        let u = cyl(&[1], &[2]);
        assert_eq!(u.permuted(&FinPermutation::swap(1, 2)), cyl(&[2], &[1]));
        assert!(ClopenSet::full()
            .permuted(&FinPermutation::cycle(&[0, 4, 9]).unwrap())
            .is_full());
        let pi = FinPermutation::cycle(&[1, 2, 3]).unwrap();
        assert!(pi.compose(&pi.inverse()).is_identity());
        assert!(FinPermutation::from_pairs([(1, 2)]).is_err());
    }

    #[test]
    fn json_form() {
        let u = cyl(&[1], &[2]);
        let text = serde_json::to_string(&u).unwrap();
        assert_eq!(text, r#"{"support":[1,2],"patterns":["01"]}"#);
        let back: ClopenSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, u);
        // non-canonical input is normalized
        let back: ClopenSet =
            serde_json::from_str(r#"{"support":[3,4],"patterns":["10","11"]}"#).unwrap();
        assert_eq!(back, cyl(&[], &[3]));
        assert!(serde_json::from_str::<ClopenSet>(r#"{"support":[3],"patterns":["1x"]}"#).is_err());
    }
}
