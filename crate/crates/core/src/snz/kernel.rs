//! Enumeration kernels over the weight box `Π_j [0, C(t, j)]`.
//!
//! Digit `j` of the odometer is `w_j`; `w_0` is the most significant digit, so
//! odometer order is lexicographic order on weight vectors.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

/// Running sum carried by the odometer.
pub(crate) trait Acc: Clone + Eq + Hash + Send + Sync + Debug {
    fn origin() -> Self;
    fn add(&mut self, o: &Self);
    fn sub(&mut self, o: &Self);
    fn scaled(&self, k: u64) -> Self;
    fn negated(&self) -> Self;
    fn vanishes(&self) -> bool;
}

impl Acc for i128 {
    fn origin() -> Self {
        0
    }
    #[inline]
    fn add(&mut self, o: &Self) {
        *self += o;
    }
    #[inline]
    fn sub(&mut self, o: &Self) {
        *self -= o;
    }
    fn scaled(&self, k: u64) -> Self {
        self * k as i128
    }
    fn negated(&self) -> Self {
        -self
    }
    #[inline]
    fn vanishes(&self) -> bool {
        *self == 0
    }
}

impl Acc for BigInt {
    fn origin() -> Self {
        Zero::zero()
    }
    fn add(&mut self, o: &Self) {
        *self += o;
    }
    fn sub(&mut self, o: &Self) {
        *self -= o;
    }
    fn scaled(&self, k: u64) -> Self {
        self * k
    }
    fn negated(&self) -> Self {
        -self
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Largest prime below 2^64.
pub(crate) const RESIDUE_PRIME: u64 = 18_446_744_073_709_551_557;

/// Residue of a sum modulo [`RESIDUE_PRIME`]. Zero is necessary, not
/// sufficient, for the exact sum to vanish.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Residue(u64);

impl Residue {
    pub(crate) fn of(x: &BigInt) -> Self {
        let p = BigInt::from(RESIDUE_PRIME);
        let r = ((x % &p) + &p) % &p;
        Residue(r.to_u64().expect("reduced residue fits in u64"))
    }
}

impl Acc for Residue {
    fn origin() -> Self {
        Residue(0)
    }
    #[inline]
    fn add(&mut self, o: &Self) {
        let (s, carry) = self.0.overflowing_add(o.0);
        self.0 = if carry || s >= RESIDUE_PRIME {
            s.wrapping_sub(RESIDUE_PRIME)
        } else {
            s
        };
    }
    #[inline]
    fn sub(&mut self, o: &Self) {
        self.add(&o.negated());
    }
    fn scaled(&self, k: u64) -> Self {
        Residue(((self.0 as u128 * k as u128) % RESIDUE_PRIME as u128) as u64)
    }
    fn negated(&self) -> Self {
        if self.0 == 0 {
            *self
        } else {
            Residue(RESIDUE_PRIME - self.0)
        }
    }
    #[inline]
    fn vanishes(&self) -> bool {
        self.0 == 0
    }
}

/// `A(w) + p·C(w)` as a pair, used when scanning for forbidden next terms.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Affine<A> {
    pub(crate) constant: A,
    pub(crate) slope: i64,
}

impl<A: Acc> Acc for Affine<A> {
    fn origin() -> Self {
        Affine {
            constant: A::origin(),
            slope: 0,
        }
    }
    #[inline]
    fn add(&mut self, o: &Self) {
        self.constant.add(&o.constant);
        self.slope += o.slope;
    }
    #[inline]
    fn sub(&mut self, o: &Self) {
        self.constant.sub(&o.constant);
        self.slope -= o.slope;
    }
    fn scaled(&self, k: u64) -> Self {
        Affine {
            constant: self.constant.scaled(k),
            slope: self.slope * k as i64,
        }
    }
    fn negated(&self) -> Self {
        Affine {
            constant: self.constant.negated(),
            slope: -self.slope,
        }
    }
    fn vanishes(&self) -> bool {
        self.constant.vanishes() && self.slope == 0
    }
}

/// Cooperative stop signal shared by workers.
pub(crate) struct Control {
    deadline: Option<Instant>,
    expired: AtomicBool,
    /// Index of the least shard known to hold a hit.
    best_shard: AtomicUsize,
    deterministic: bool,
    covered: AtomicU64,
}

impl Control {
    pub(crate) fn new(deadline: Option<Instant>, deterministic: bool) -> Self {
        Self {
            deadline,
            expired: AtomicBool::new(false),
            best_shard: AtomicUsize::new(usize::MAX),
            deterministic,
            covered: AtomicU64::new(0),
        }
    }

    pub(crate) fn check_deadline(&self) -> bool {
        if self.expired.load(Ordering::Relaxed) {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.expired.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }

    pub(crate) fn expired(&self) -> bool {
        self.expired.load(Ordering::Relaxed)
    }

    fn should_abandon(&self, shard: usize) -> bool {
        let best = self.best_shard.load(Ordering::Relaxed);
        if self.deterministic {
            shard > best
        } else {
            best != usize::MAX
        }
    }

    fn record_hit(&self, shard: usize) {
        self.best_shard.fetch_min(shard, Ordering::Relaxed);
    }

    pub(crate) fn covered(&self) -> u64 {
        self.covered.load(Ordering::Relaxed)
    }

    fn add_covered(&self, n: u64) {
        self.covered.fetch_add(n, Ordering::Relaxed);
    }
}

const POLL_MASK: u64 = (1 << 16) - 1;

pub(crate) enum Stop {
    Done,
    Hit,
    Abandoned,
}

/// Walks `Π [0, maxes[i]]` in lexicographic order starting at all zeros,
/// keeping `sum = start + Σ digits[i]·coeffs[i]`. `visit` returns true to
/// stop. `poll` is called every 2^16 steps and returns true to abandon.
pub(crate) fn walk_box<A: Acc>(
    maxes: &[u64],
    coeffs: &[A],
    start: A,
    mut visit: impl FnMut(&[u64], &A) -> bool,
    mut poll: impl FnMut(u64) -> bool,
) -> (Stop, u64) {
    let n = maxes.len();
    let tops: Vec<A> = coeffs.iter().zip(maxes).map(|(c, &m)| c.scaled(m)).collect();
    let mut digits = vec![0u64; n];
    let mut sum = start;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if visit(&digits, &sum) {
            return (Stop::Hit, steps);
        }
        if steps & POLL_MASK == 0 && poll(steps) {
            return (Stop::Abandoned, steps);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return (Stop::Done, steps);
            }
            i -= 1;
            if digits[i] < maxes[i] {
                digits[i] += 1;
                sum.add(&coeffs[i]);
                break;
            }
            sum.sub(&tops[i]);
            digits[i] = 0;
        }
    }
}

pub(crate) fn box_size(maxes: &[u64]) -> u128 {
    maxes.iter().map(|&m| m as u128 + 1).product()
}

/// Decodes shard index `s` into the leading `maxes.len()` digits.
fn shard_digits(mut s: usize, maxes: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; maxes.len()];
    for i in (0..maxes.len()).rev() {
        let radix = maxes[i] as usize + 1;
        out[i] = (s % radix) as u64;
        s /= radix;
    }
    out
}

pub(crate) enum SearchResult {
    /// Lexicographically least hit when run deterministically.
    Found(Vec<u64>),
    Clear,
    Expired,
}

/// Exhaustive search for a nonzero digit vector whose sum is zero.
///
/// `recheck` is consulted on every accumulator zero; exact accumulators pass
/// `|_| true`, the residue accumulator passes the exact BigInt evaluation.
pub(crate) fn exhaustive<A: Acc>(
    maxes: &[u64],
    coeffs: &[A],
    exact: &[BigInt],
    recheck: &(dyn Fn(&[u64]) -> bool + Sync),
    ctl: &Control,
    pool: &rayon::ThreadPool,
) -> SearchResult {
    let lead = maxes.len().min(2);
    let (lead_max, inner_max) = maxes.split_at(lead);
    let (lead_coeffs, inner_coeffs) = coeffs.split_at(lead);
    let inner_range = exact_range(&exact[lead..], inner_max);
    let shards = box_size(lead_max) as usize;
    let inner_size = box_size(inner_max) as u64;

    let hits: Vec<Option<Vec<u64>>> = pool.install(|| {
        (0..shards)
            .into_par_iter()
            .map(|shard| {
                if ctl.should_abandon(shard) || ctl.check_deadline() {
                    return None;
                }
                let head = shard_digits(shard, lead_max);
                let mut base = A::origin();
                let mut exact_base = BigInt::zero();
                for (i, &d) in head.iter().enumerate() {
                    base.add(&lead_coeffs[i].scaled(d));
                    exact_base += &exact[i] * d;
                }
                // interval pruning: the tail can only reach [lo, hi]
                let target = -exact_base;
                if target < inner_range.0 || target > inner_range.1 {
                    let skipped = if shard == 0 { inner_size - 1 } else { inner_size };
                    ctl.add_covered(skipped);
                    return None;
                }
                let mut skip_first = shard == 0;
                let mut found = None;
                let (stop, steps) = walk_box(
                    inner_max,
                    inner_coeffs,
                    base,
                    |digits, sum| {
                        if skip_first {
                            skip_first = false;
                            return false;
                        }
                        if sum.vanishes() {
                            let w: Vec<u64> = head.iter().chain(digits).copied().collect();
                            if recheck(&w) {
                                found = Some(w);
                                return true;
                            }
                        }
                        false
                    },
                    |_| ctl.should_abandon(shard) || ctl.check_deadline(),
                );
                let visited = if shard == 0 { steps - 1 } else { steps };
                ctl.add_covered(visited);
                match stop {
                    Stop::Hit => {
                        ctl.record_hit(shard);
                        found
                    }
                    Stop::Done | Stop::Abandoned => None,
                }
            })
            .collect()
    });
    if let Some(w) = hits.into_iter().flatten().next() {
        // shards are collected in index order; in deterministic mode every
        // shard below the winner ran to completion
        return SearchResult::Found(w);
    }
    if ctl.expired() {
        SearchResult::Expired
    } else {
        SearchResult::Clear
    }
}

/// `[Σ min(0, m·c), Σ max(0, m·c)]` over the given digits.
fn exact_range(coeffs: &[BigInt], maxes: &[u64]) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for (c, &m) in coeffs.iter().zip(maxes) {
        let v = c * m;
        if v.is_negative() {
            lo += v;
        } else {
            hi += v;
        }
    }
    (lo, hi)
}

pub(crate) enum MitmResult {
    Search(SearchResult),
    /// The left half would need more table entries than allowed.
    OverCap { entries: u128 },
}

/// Index where the left half's box size first reaches the square root of the
/// whole box; at least one digit on each side when possible.
pub(crate) fn balanced_split(maxes: &[u64]) -> usize {
    if maxes.len() < 2 {
        return maxes.len();
    }
    let total = box_size(maxes) as f64;
    let mut left = 1.0f64;
    for (i, &m) in maxes.iter().enumerate() {
        left *= m as f64 + 1.0;
        if left * left >= total {
            return (i + 1).min(maxes.len() - 1);
        }
    }
    maxes.len() - 1
}

/// Meet-in-the-middle with exact accumulators.
pub(crate) fn meet_in_the_middle<A: Acc>(
    maxes: &[u64],
    coeffs: &[A],
    memory_cap: usize,
    ctl: &Control,
) -> MitmResult {
    let split = balanced_split(maxes);
    let (left_max, right_max) = maxes.split_at(split);
    let (left_coeffs, right_coeffs) = coeffs.split_at(split);
    let left_size = box_size(left_max);
    if left_size > memory_cap as u128 {
        return MitmResult::OverCap {
            entries: left_size,
        };
    }

    // least (lexicographic) left half for every reachable partial sum
    let mut table: HashMap<A, Vec<u64>> = HashMap::with_capacity(left_size as usize);
    let mut zero_nonzero: Option<Vec<u64>> = None;
    let mut first = true;
    let (stop, _) = walk_box(
        left_max,
        left_coeffs,
        A::origin(),
        |digits, sum| {
            if !first && zero_nonzero.is_none() && sum.vanishes() {
                zero_nonzero = Some(digits.to_vec());
            }
            first = false;
            table.entry(sum.clone()).or_insert_with(|| digits.to_vec());
            false
        },
        |_| ctl.check_deadline(),
    );
    if matches!(stop, Stop::Abandoned) {
        return MitmResult::Search(SearchResult::Expired);
    }
    ctl.add_covered((left_size - 1) as u64);

    let mut best: Option<Vec<u64>> = None;
    let deterministic = ctl.deterministic;
    let mut first = true;
    let (stop, steps) = walk_box(
        right_max,
        right_coeffs,
        A::origin(),
        |digits, sum| {
            let left = if first {
                zero_nonzero.as_ref()
            } else {
                table.get(&sum.negated())
            };
            first = false;
            if let Some(left) = left {
                let candidate: Vec<u64> = left.iter().chain(digits).copied().collect();
                if best.as_ref().is_none_or(|b| candidate < *b) {
                    best = Some(candidate);
                }
                // right halves arrive in lexicographic order, so an all-zero
                // left half cannot be beaten
                if !deterministic || left.iter().all(|&d| d == 0) {
                    return true;
                }
            }
            false
        },
        |_| ctl.check_deadline(),
    );
    ctl.add_covered(steps.saturating_sub(1) * left_size as u64);
    if let Some(w) = best {
        return MitmResult::Search(SearchResult::Found(w));
    }
    MitmResult::Search(match stop {
        Stop::Abandoned => SearchResult::Expired,
        _ => SearchResult::Clear,
    })
}

/// Integer root of `constant + x·slope = 0` when it exists and lies in
/// `[-window, window]`.
pub(crate) trait WindowRoot {
    fn root_in_window(&self, slope: i64, window: u64) -> Option<i64>;
}

impl WindowRoot for i128 {
    #[inline]
    fn root_in_window(&self, slope: i64, window: u64) -> Option<i64> {
        let slope = slope as i128;
        if self % slope != 0 {
            return None;
        }
        let x = -(self / slope);
        (x.unsigned_abs() <= window as u128).then_some(x as i64)
    }
}

impl WindowRoot for BigInt {
    fn root_in_window(&self, slope: i64, window: u64) -> Option<i64> {
        let slope = BigInt::from(slope);
        if !(self % &slope).is_zero() {
            return None;
        }
        let x = -(self / slope);
        if x.magnitude() <= &window.into() {
            x.to_i64()
        } else {
            None
        }
    }
}

/// Result of scanning for next-term values that would create a zero sum.
pub(crate) struct ForbiddenScan {
    /// `forbidden[v + window]` for `v` in `[-window, window]`.
    pub(crate) forbidden: Vec<bool>,
    /// Some nonzero vector vanishes whatever the next term is.
    pub(crate) all_forbidden: bool,
}

/// For each nonzero `w`, the sum is `A(w) + x·C(w)`; marks every integer `x`
/// in `[-window, window]` making it zero.
pub(crate) fn forbidden_window<A: Acc + WindowRoot>(
    maxes: &[u64],
    coeffs: &[Affine<A>],
    window: u64,
    ctl: &Control,
    pool: &rayon::ThreadPool,
) -> Option<ForbiddenScan> {
    let lead = maxes.len().min(2);
    let (lead_max, inner_max) = maxes.split_at(lead);
    let (lead_coeffs, inner_coeffs) = coeffs.split_at(lead);
    let shards = box_size(lead_max) as usize;
    let width = 2 * window as usize + 1;

    let partials: Vec<Option<(Vec<bool>, bool)>> = pool.install(|| {
        (0..shards)
            .into_par_iter()
            .map(|shard| {
                let head = shard_digits(shard, lead_max);
                let mut base = Affine::<A>::origin();
                for (i, &d) in head.iter().enumerate() {
                    base.add(&lead_coeffs[i].scaled(d));
                }
                let mut marks = vec![false; width];
                let mut all = false;
                let mut skip_first = shard == 0;
                let (stop, _) = walk_box(
                    inner_max,
                    inner_coeffs,
                    base,
                    |_, sum| {
                        if skip_first {
                            skip_first = false;
                            return false;
                        }
                        if sum.slope == 0 {
                            if sum.constant.vanishes() {
                                all = true;
                                return true;
                            }
                            return false;
                        }
                        if let Some(x) = sum.constant.root_in_window(sum.slope, window) {
                            marks[(x + window as i64) as usize] = true;
                        }
                        false
                    },
                    |_| ctl.check_deadline(),
                );
                match stop {
                    Stop::Abandoned => None,
                    _ => Some((marks, all)),
                }
            })
            .collect()
    });
    let mut forbidden = vec![false; width];
    let mut all_forbidden = false;
    for part in partials {
        let (marks, all) = part?;
        all_forbidden |= all;
        for (slot, m) in forbidden.iter_mut().zip(marks) {
            *slot |= m;
        }
    }
    Some(ForbiddenScan {
        forbidden,
        all_forbidden,
    })
}
