//! Exact checks of the linear algebra behind the growth construction.
//!
//! `M_{j,k} = (-1)^{k-j} C(t-j, t-k)`, `v_k` is column `k` of `M` and
//! `u_i = (C(t-i, t), C(t-i, t-1), ..., C(t-i, 0))`. For a weight vector `w`
//! the coefficients `b_k = <w, v_k>` satisfy `Σ_j w_j h(j, t-j) = Σ_k b_k p_k`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::charge::WeightVector;
use crate::numerics::{binom, exp_bounds, pow_rat, rat_to_string, BigRat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LemmaError {
    #[error("weight vector is identically zero")]
    ZeroWeight,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub check: String,
    pub params: Value,
    pub verdict: Verdict,
    /// Smallest slack observed, as a rational string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl LemmaReport {
    fn new(check: &str, params: Value, ok: bool, margin: Option<&BigRat>) -> Self {
        Self {
            check: check.into(),
            params,
            verdict: Verdict::of(ok),
            margin: margin.map(rat_to_string),
            violations: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRat {
    BigRat::new(n.into(), d.into())
}

fn int(n: impl Into<BigInt>) -> BigRat {
    BigRat::from_integer(n.into())
}

fn min_into(slot: &mut Option<BigRat>, x: BigRat) {
    if slot.as_ref().is_none_or(|m| x < *m) {
        *slot = Some(x);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualBasisData {
    pub t: usize,
    /// Row-major `M`.
    pub m: Vec<Vec<BigInt>>,
    pub u: Vec<Vec<BigInt>>,
}

impl DualBasisData {
    pub fn v(&self, k: usize) -> Vec<BigInt> {
        self.m.iter().map(|row| row[k].clone()).collect()
    }
}

pub fn build_dual_basis(t: usize) -> DualBasisData {
    let tt = t as u64;
    let m = (0..=t)
        .map(|j| {
            (0..=t)
                .map(|k| {
                    let c = binom(tt - j as u64, t as i64 - k as i64);
                    if (k + j) % 2 == 1 {
                        -c
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let u = (0..=t)
        .map(|i| {
            (0..=t)
                .map(|j| binom(tt - i as u64, t as i64 - j as i64))
                .collect()
        })
        .collect();
    DualBasisData { t, m, u }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<u_i, v_k> = δ_{ik}` for all `i, k <= t`.
///
/// `u_i` vanishes below index `i` and `v_k` above index `k`, so each product
/// only runs over `i <= j <= k`; the supports are disjoint when `i > k`.
pub fn check_dual_basis(t: usize) -> bool {
    let d = build_dual_basis(t);
    let structural = (0..=t).all(|i| d.u[i][..i].iter().all(Zero::is_zero))
        && (0..=t).all(|k| d.m[k + 1..].iter().all(|row| row[k].is_zero()));
    structural
        && (0..=t).all(|i| {
            (i..=t).all(|k| {
                let s: BigInt = (i..=k).map(|j| &d.u[i][j] * &d.m[j][k]).sum();
                s == BigInt::from((i == k) as u8)
            })
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BCoefficients {
    pub t: usize,
    pub s: usize,
    /// `b_0..=b_s`.
    #[serde(with = "crate::numerics::serde_decimal::vec")]
    pub b: Vec<BigInt>,
}

impl BCoefficients {
    /// `Σ_i b_i u_i`.
    pub fn reconstruct(&self) -> Vec<BigInt> {
        let d = build_dual_basis(self.t);
        let mut w = vec![BigInt::zero(); self.t + 1];
        for (bi, ui) in self.b.iter().zip(&d.u) {
            for (slot, x) in w.iter_mut().zip(ui) {
                *slot += bi * x;
            }
        }
        w
    }

    /// `R(x) = Σ_i b_i x^i`.
    pub fn eval(&self, x: &BigRat) -> BigRat {
        self.b
            .iter()
            .rev()
            .fold(BigRat::zero(), |acc, c| acc * x + int(c.clone()))
    }

    pub fn l1(&self) -> BigInt {
        self.b.iter().map(|x| x.abs()).sum()
    }
}

/// All `b_k = <w, v_k>` for `k = 0..=t`.
pub fn b_vector(w: &WeightVector) -> Vec<BigInt> {
    let d = build_dual_basis(w.t());
    (0..=w.t()).map(|k| dot(w.weights(), &d.v(k))).collect()
}

pub fn recover_b(w: &WeightVector) -> Result<BCoefficients, LemmaError> {
    let full = b_vector(w);
    let s = full
        .iter()
        .rposition(|x| !x.is_zero())
        .ok_or(LemmaError::ZeroWeight)?;
    Ok(BCoefficients {
        t: w.t(),
        s,
        b: full[..=s].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioMatrix {
    pub t: usize,
    /// Rows `0..=s`, columns `0..=t`.
    pub rows: Vec<Vec<BigRat>>,
}

/// `P̃_{i,j}`, computed as the falling-factorial ratio `j^(i) / t^(i)`.
pub fn ptilde_entry(t: usize, i: usize, j: usize) -> BigRat {
    if i > j {
        return BigRat::zero();
    }
    let falling = |n: usize| -> BigInt { (0..i).map(|k| BigInt::from(n - k)).product() };
    BigRat::new(falling(j), falling(t))
}

/// `P̃_{i,j} = C(t-i, t-j) / C(t, j)` for `i <= s`.
pub fn build_ptilde(t: usize, s: usize) -> RatioMatrix {
    RatioMatrix {
        t,
        rows: (0..=s)
            .map(|i| (0..=t).map(|j| ptilde_entry(t, i, j)).collect())
            .collect(),
    }
}

/// `((j-i+1)/t)^i <= P̃_{i,j} <= (j/(t-i+1))^i` for `1 <= i <= s`, `i < j`, `i < t-j`.
pub fn check_sandwich(t: usize, s: usize) -> Result<LemmaReport, LemmaError> {
    if t == 0 || s > t {
        return Err(LemmaError::Precondition(format!(
            "need t >= 1 and s <= t, got t={t}, s={s}"
        )));
    }
    let mut margin: Option<BigRat> = None;
    let mut violations = Vec::new();
    let mut cells = 0u64;
    for i in 1..=s {
        for j in (i + 1)..t.saturating_sub(i) {
            cells += 1;
            let p = ptilde_entry(t, i, j);
            let lo = pow_rat(&rat(j - i + 1, t), i as u32);
            let hi = pow_rat(&rat(j, t - i + 1), i as u32);
            if lo > p || p > hi {
                violations.push(format!("i={i}, j={j}"));
            }
            min_into(&mut margin, (&p - &lo).min(&hi - &p));
        }
    }
    let mut r = LemmaReport::new(
        "ptilde-sandwich",
        json!({"t": t, "s": s, "cells": cells}),
        violations.is_empty(),
        margin.as_ref(),
    );
    r.violations = violations;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePoint {
    pub ell: usize,
    pub lambda: usize,
    /// Column `lambda` of `P̃`, rows `0..=s`.
    pub y: Vec<BigRat>,
}

/// `λ_ℓ = floor(ℓ t / (s+2))` with its `P̃` column, `ℓ = 1..=s+1`.
pub fn sample_points(t: usize, s: usize) -> Result<Vec<SamplePoint>, LemmaError> {
    if t < (s + 2) * (s + 2) {
        return Err(LemmaError::Precondition(format!(
            "need t >= (s+2)^2 = {}, got t={t}",
            (s + 2) * (s + 2)
        )));
    }
    Ok((1..=s + 1)
        .map(|ell| {
            let lambda = ell * t / (s + 2);
            SamplePoint {
                ell,
                lambda,
                y: (0..=s).map(|i| ptilde_entry(t, i, lambda)).collect(),
            }
        })
        .collect())
}

const EXP_TERMS: usize = 30;

/// Certified bounds on `e^x` for any rational `x`, halving until `|x| <= 1`.
fn exp_enclosure(x: &BigRat) -> (BigRat, BigRat) {
    let mut halvings = 0u32;
    let mut y = x.clone();
    while y.abs() > BigRat::one() {
        y /= int(2);
        halvings += 1;
    }
    let (lo, hi) = exp_bounds(&y, EXP_TERMS).expect("argument reduced to [-1, 1]");
    let lo = lo.max(BigRat::zero());
    let power = 1u32 << halvings;
    (pow_rat(&lo, power), pow_rat(&hi, power))
}

/// `(ℓ/(s+2))^i e^{-4s³/t} <= P̃_{i,λ_ℓ} <= (ℓ/(s+2))^i e^{4s³/t}` at every sample point.
pub fn check_vandermonde_error(t: usize, s: usize) -> Result<LemmaReport, LemmaError> {
    if s == 0 {
        return Err(LemmaError::Precondition("need s >= 1".into()));
    }
    if t < 4 * (s + 2) * (s + 2) {
        return Err(LemmaError::Precondition(format!(
            "need t >= 4(s+2)^2 = {}, got t={t}",
            4 * (s + 2) * (s + 2)
        )));
    }
    let x = rat(4 * s * s * s, t);
    let (down, _) = exp_enclosure(&-x.clone());
    let (_, up) = exp_enclosure(&x);
    let mut margin: Option<BigRat> = None;
    let mut violations = Vec::new();
    let points = sample_points(t, s)?;
    for pt in &points {
        let node = rat(pt.ell, s + 2);
        for (i, y) in pt.y.iter().enumerate() {
            let base = pow_rat(&node, i as u32);
            let lo = &base * &down;
            let hi = &base * &up;
            if lo > *y || *y > hi {
                violations.push(format!("i={i}, l={}", pt.ell));
            }
            // slack relative to the node power
            min_into(&mut margin, ((y - &lo) / &base).min((&hi - y) / &base));
        }
    }
    let mut r = LemmaReport::new(
        "vandermonde-sandwich",
        json!({"t": t, "s": s, "cells": points.len() * (s + 1)}),
        violations.is_empty(),
        margin.as_ref(),
    );
    r.violations = violations;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    pub s: usize,
    pub q: Vec<Vec<BigRat>>,
}

/// `Q_{ab} = Σ_{ℓ=1}^{s+1} (ℓ/(s+2))^{a+b}`.
pub fn build_q(s: usize) -> QuadraticForm {
    let powers: Vec<BigRat> = (0..=2 * s)
        .map(|e| {
            (1..=s + 1)
                .map(|ell| pow_rat(&rat(ell, s + 2), e as u32))
                .sum()
        })
        .collect();
    QuadraticForm {
        s,
        q: (0..=s)
            .map(|a| (0..=s).map(|b| powers[a + b].clone()).collect())
            .collect(),
    }
}

/// Exact determinant by Gaussian elimination over ℚ.
pub fn determinant(m: &[Vec<BigRat>]) -> BigRat {
    let n = m.len();
    let mut a: Vec<Vec<BigRat>> = m.to_vec();
    let mut det = BigRat::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRat::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    det
}

fn submatrix(m: &[Vec<BigRat>], idx: &[usize]) -> Vec<Vec<BigRat>> {
    idx.iter()
        .map(|&r| idx.iter().map(|&c| m[r][c].clone()).collect())
        .collect()
}

pub fn leading_minors(m: &[Vec<BigRat>]) -> Vec<BigRat> {
    (1..=m.len())
        .map(|k| determinant(&submatrix(m, &(0..k).collect::<Vec<_>>())))
        .collect()
}

/// Exact PSD test: all leading minors positive, or else every principal
/// minor nonnegative. Returns the verdict and the smallest minor examined.
pub fn is_psd(m: &[Vec<BigRat>]) -> (bool, BigRat) {
    let leading = leading_minors(m);
    if leading.iter().all(|d| d.is_positive()) {
        return (true, leading.into_iter().min().expect("nonempty"));
    }
    let n = m.len();
    let mut least: Option<BigRat> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        min_into(&mut least, determinant(&submatrix(m, &idx)));
    }
    let least = least.expect("nonempty");
    (!least.is_negative(), least)
}

fn shifted(m: &[Vec<BigRat>], c: &BigRat) -> Vec<Vec<BigRat>> {
    let mut out = m.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= c;
    }
    out
}

/// `(10s)^{-10s^2}`.
pub fn lemma_eigen_bound(s: usize) -> BigRat {
    BigRat::one() / int(num_traits::pow(BigInt::from(10 * s), 10 * s * s))
}

/// Spectral checks on `Q` for `s >= 1`.
pub fn q_spectral_report(s: usize) -> Result<Vec<LemmaReport>, LemmaError> {
    if s == 0 {
        return Err(LemmaError::Precondition("need s >= 1".into()));
    }
    let q = build_q(s).q;
    let params = json!({ "s": s });
    let mut out = Vec::new();

    let symmetric = (0..=s).all(|a| (0..=s).all(|b| q[a][b] == q[b][a]));
    out.push(LemmaReport::new(
        "q-symmetric",
        params.clone(),
        symmetric && q[0][0] == int(s as u64 + 1),
        None,
    ));

    let minors = leading_minors(&q);
    let least = minors.iter().min().expect("nonempty").clone();
    out.push(LemmaReport::new(
        "q-positive-definite",
        params.clone(),
        least.is_positive(),
        Some(&least),
    ));

    let det = minors.last().expect("nonempty").clone();
    let det_floor = BigRat::one()
        / int(num_traits::pow(
            BigInt::from(s + 2),
            2 * s * (s + 1),
        ));
    let mut r = LemmaReport::new(
        "q-det-lower-bound",
        params.clone(),
        det >= det_floor,
        Some(&(&det - &det_floor)),
    );
    r.params = json!({ "s": s, "det": rat_to_string(&det) });
    out.push(r);

    let top = int((s as u64 + 1) * (s as u64 + 1));
    let lemma = lemma_eigen_bound(s);
    let chain = &det / pow_rat(&top, s as u32 - 1);
    out.push(LemmaReport::new(
        "q-chain-bound-vs-lemma",
        json!({ "s": s, "chain": rat_to_string(&chain) }),
        chain >= lemma,
        Some(&(&chain - &lemma)),
    ));

    let (ok, m) = is_psd(&shifted(&q, &chain));
    out.push(LemmaReport::new(
        "q-minus-chain-psd",
        json!({ "s": s, "chain": rat_to_string(&chain) }),
        ok,
        Some(&m),
    ));

    // product of the s largest eigenvalues is at most λ_1^s
    let corrected = &det / pow_rat(&top, s as u32);
    let (ok, m) = is_psd(&shifted(&q, &corrected));
    out.push(LemmaReport::new(
        "q-minus-det-over-top-pow-s-psd",
        json!({ "s": s, "bound": rat_to_string(&corrected) }),
        ok,
        Some(&m),
    ));

    let (ok, m) = is_psd(&shifted(&q, &lemma));
    out.push(LemmaReport::new("q-minus-lemma-bound-psd", params, ok, Some(&m)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BBoundEntry {
    #[serde(with = "crate::numerics::serde_decimal::vec")]
    pub w: Vec<BigInt>,
    pub s: usize,
    #[serde(with = "crate::numerics::serde_decimal")]
    pub c: BigInt,
    pub within_coarse: bool,
    pub within_lemma: bool,
}

/// `(s+1)^2 t^s`, from `|b_k| <= (k+1) t^k`.
pub fn coarse_b_bound(t: usize, s: usize) -> BigInt {
    BigInt::from((s + 1) * (s + 1)) * num_traits::pow(BigInt::from(t), s)
}

/// `(20s)^{20s^2}`, with `0^0 = 1`.
pub fn lemma_b_bound(s: usize) -> BigInt {
    num_traits::pow(BigInt::from(20 * s), 20 * s * s)
}

pub fn check_bbound(ws: &[WeightVector]) -> Result<(LemmaReport, Vec<BBoundEntry>), LemmaError> {
    let mut entries = Vec::with_capacity(ws.len());
    for w in ws {
        let b = recover_b(w)?;
        let c = b.l1();
        entries.push(BBoundEntry {
            w: w.weights().to_vec(),
            s: b.s,
            within_coarse: c <= coarse_b_bound(w.t(), b.s),
            within_lemma: c <= lemma_b_bound(b.s),
            c,
        });
    }
    let ok = entries.iter().all(|e| e.within_coarse);
    let report = LemmaReport::new(
        "b-coarse-bound",
        json!({
            "samples": entries.len(),
            "within_lemma_bound": entries.iter().filter(|e| e.within_lemma).count(),
        }),
        ok,
        None,
    );
    Ok((report, entries))
}

/// Checks run by `check-lemmas`. Without `s`, only the `t`-only checks.
pub fn check_all(t: usize, s: Option<usize>) -> Vec<LemmaReport> {
    let mut out = vec![LemmaReport::new(
        "dual-basis",
        json!({ "t": t }),
        check_dual_basis(t),
        None,
    )];
    let skipped = |check: &str, e: LemmaError| LemmaReport {
        check: check.into(),
        params: json!({ "t": t, "s": s, "skipped": e.to_string() }),
        verdict: Verdict::Pass,
        margin: None,
        violations: Vec::new(),
    };
    let sandwich_s = s.unwrap_or(t).min(t);
    match check_sandwich(t, sandwich_s) {
        Ok(r) => out.push(r),
        Err(e) => out.push(skipped("ptilde-sandwich", e)),
    }
    if let Some(s) = s {
        if s >= 1 {
            match check_vandermonde_error(t, s) {
                Ok(r) => out.push(r),
                Err(e) => out.push(skipped("vandermonde-sandwich", e)),
            }
            out.extend(q_spectral_report(s).expect("s >= 1"));
        }
    }
    out
}
