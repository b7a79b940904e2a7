//! Level-by-level search for weight vectors that annihilate a charge.
//!
//! Level `t` asks whether some nonzero `w` with `0 <= w_j <= C(t, j)` has
//! `Σ_j w_j h(j, t - j) = 0`. Only `p_0..=p_t` enter level `t`.

mod kernel;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::charge::{self, ChargeError, WeightVector};
use crate::numerics::{binom_row, bit_length, serde_decimal};

use kernel::{Affine, Control, MitmResult, Residue, SearchResult};
pub(crate) use kernel::ForbiddenScan;

#[derive(Debug, Error)]
pub enum SnzError {
    #[error("sequence has {available} terms but level {t} needs p_0..p_{t}")]
    SequenceTooShort { t: usize, available: usize },
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("jobs must be at least 1")]
    NoWorkers,
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error("level {0} is too large to enumerate")]
    LevelTooLarge(usize),
    #[error("counterexample failed re-validation at level {t}")]
    InvalidCounterexample { t: usize },
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Exhaustive,
    MeetInTheMiddle,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::MeetInTheMiddle => "meet-in-the-middle",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = SnzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "mitm" | "meet-in-the-middle" => Ok(Self::MeetInTheMiddle),
            _ => Err(SnzError::UnknownStrategy(s.to_string())),
        }
    }
}

/// Default limit on meet-in-the-middle table entries.
pub const DEFAULT_MITM_MEMORY_CAP: usize = 1 << 24;

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub strategy: Strategy,
    pub jobs: usize,
    /// Wall-clock budget for a whole call; `None` is unlimited.
    pub budget: Option<Duration>,
    /// Report the lexicographically least counterexample and zero the timing.
    pub deterministic: bool,
    pub mitm_memory_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Exhaustive,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            budget: None,
            deterministic: true,
            mitm_memory_cap: DEFAULT_MITM_MEMORY_CAP,
        }
    }
}

impl SearchOptions {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn with_budget(mut self, budget: Option<Duration>) -> Self {
        self.budget = budget;
        self
    }

    fn pool(&self) -> Result<rayon::ThreadPool, SnzError> {
        if self.jobs == 0 {
            return Err(SnzError::NoWorkers);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| SnzError::Pool(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub t: usize,
    #[serde(with = "serde_decimal::vec")]
    pub w: Vec<BigInt>,
    #[serde(with = "serde_decimal")]
    pub sum: BigInt,
}

impl Counterexample {
    /// Rebuilds the sum from scratch; fails unless `w` is admissible, nonzero
    /// and annihilating.
    pub fn validated(p: &[BigInt], t: usize, w: &[u64]) -> Result<Self, SnzError> {
        let wv = WeightVector::from_u64(t, w).map_err(|_| SnzError::InvalidCounterexample { t })?;
        let c = Self {
            t,
            w: wv.weights().to_vec(),
            sum: BigInt::zero(),
        };
        c.check(p)?;
        Ok(c)
    }

    pub fn check(&self, p: &[BigInt]) -> Result<(), SnzError> {
        let bad = || SnzError::InvalidCounterexample { t: self.t };
        let wv = WeightVector::new(self.t, self.w.clone()).map_err(|_| bad())?;
        if wv.is_zero() || !self.sum.is_zero() {
            return Err(bad());
        }
        match wv.evaluate(p) {
            Ok(s) if s.is_zero() => Ok(()),
            Ok(_) => Err(bad()),
            Err(_) => Err(SnzError::SequenceTooShort {
                t: self.t,
                available: p.len(),
            }),
        }
    }

    pub fn weight_vector(&self) -> WeightVector {
        WeightVector::new(self.t, self.w.clone()).expect("validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelVerdict {
    Ok,
    Counterexample(Counterexample),
    Indeterminate(String),
}

impl LevelVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Counterexample(_) => "counterexample",
            Self::Indeterminate(_) => "indeterminate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub t: usize,
    pub verdict: LevelVerdict,
    pub note: Option<String>,
    /// Nonzero vectors decided, either visited or excluded by pruning.
    pub covered: u64,
}

/// Box maxima `C(t, j)`, or `None` when a digit exceeds `u64`.
fn level_maxes(t: usize) -> Option<Vec<u64>> {
    binom_row(t as u64).iter().map(|c| c.to_u64()).collect()
}

fn coefficients(p: &[BigInt], t: usize) -> Result<Vec<BigInt>, SnzError> {
    charge::level_coefficients(p, t).map_err(|_| SnzError::SequenceTooShort {
        t,
        available: p.len(),
    })
}

/// True when `Σ max_j |c_j|` stays clear of the `i128` range.
fn fits_i128(coeffs: &[BigInt], maxes: &[u64]) -> bool {
    let bound: BigInt = coeffs.iter().zip(maxes).map(|(c, &m)| c.abs() * m).sum();
    bit_length(&bound) < 126
}

struct Outcome {
    result: SearchResult,
    note: Option<String>,
}

fn search_level(
    p: &[BigInt],
    t: usize,
    opts: &SearchOptions,
    ctl: &Control,
    pool: &rayon::ThreadPool,
) -> Result<Outcome, SnzError> {
    let exact = coefficients(p, t)?;
    let maxes = level_maxes(t).ok_or(SnzError::LevelTooLarge(t))?;
    let small = fits_i128(&exact, &maxes);
    let mut note = None;

    if opts.strategy == Strategy::MeetInTheMiddle {
        let mitm = if small {
            let c: Vec<i128> = exact.iter().map(|x| x.to_i128().expect("bounded")).collect();
            kernel::meet_in_the_middle(&maxes, &c, opts.mitm_memory_cap, ctl)
        } else {
            kernel::meet_in_the_middle(&maxes, &exact, opts.mitm_memory_cap, ctl)
        };
        match mitm {
            MitmResult::Search(result) => return Ok(Outcome { result, note }),
            MitmResult::OverCap { entries } => {
                note = Some(format!(
                    "meet-in-the-middle needs {entries} table entries (cap {}); fell back to exhaustive",
                    opts.mitm_memory_cap
                ));
            }
        }
    }

    let result = if small {
        let c: Vec<i128> = exact.iter().map(|x| x.to_i128().expect("bounded")).collect();
        kernel::exhaustive(&maxes, &c, &exact, &|_| true, ctl, pool)
    } else {
        let c: Vec<Residue> = exact.iter().map(Residue::of).collect();
        let recheck = |w: &[u64]| -> bool {
            w.iter()
                .zip(&exact)
                .map(|(&d, c)| c * d)
                .sum::<BigInt>()
                .is_zero()
        };
        let r = kernel::exhaustive(&maxes, &c, &exact, &recheck, ctl, pool);
        note.get_or_insert_with(|| "residue filter with exact recheck".to_string());
        r
    };
    Ok(Outcome { result, note })
}

fn decide(
    p: &[BigInt],
    t: usize,
    opts: &SearchOptions,
    ctl: &Control,
    pool: &rayon::ThreadPool,
) -> Result<LevelReport, SnzError> {
    let before = ctl.covered();
    let Outcome { result, note } = search_level(p, t, opts, ctl, pool)?;
    let verdict = match result {
        SearchResult::Found(w) => LevelVerdict::Counterexample(Counterexample::validated(p, t, &w)?),
        SearchResult::Clear => LevelVerdict::Ok,
        SearchResult::Expired => LevelVerdict::Indeterminate("budget exhausted".into()),
    };
    Ok(LevelReport {
        t,
        verdict,
        note,
        covered: ctl.covered() - before,
    })
}

/// Decides a single level.
pub fn verify_level(p: &[BigInt], t: usize, opts: &SearchOptions) -> Result<LevelReport, SnzError> {
    let pool = opts.pool()?;
    let ctl = Control::new(opts.budget.map(|b| Instant::now() + b), opts.deterministic);
    decide(p, t, opts, &ctl, &pool)
}

pub const CERTIFICATE_SCHEMA: &str = "snzlab/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub t: usize,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnzCertificate {
    pub schema: String,
    pub p_digest: String,
    pub t_max: usize,
    pub levels: Vec<LevelEntry>,
    pub counterexample: Option<Counterexample>,
    pub strategy: Strategy,
    pub ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overall {
    Verified,
    Counterexample,
    Indeterminate,
}

impl SnzCertificate {
    pub fn overall(&self) -> Overall {
        if self.counterexample.is_some() {
            Overall::Counterexample
        } else if self.levels.len() == self.t_max + 1 && self.levels.iter().all(|l| l.verdict == "ok") {
            Overall::Verified
        } else {
            Overall::Indeterminate
        }
    }

    /// Levels reported ok.
    pub fn verified_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| l.verdict == "ok")
            .map(|l| l.t)
            .collect()
    }

    /// Checks the digest, the level listing and the counterexample against `p`.
    /// Ok levels are not re-searched.
    pub fn validate(&self, p: &[BigInt]) -> Result<(), String> {
        if self.schema != CERTIFICATE_SCHEMA {
            return Err(format!("unknown schema {:?}", self.schema));
        }
        if self.p_digest != p_digest(p, self.t_max) {
            return Err("p_digest does not match the sequence".into());
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.t != i {
                return Err(format!("level {} listed at position {i}", l.t));
            }
        }
        match (&self.counterexample, self.levels.last()) {
            (Some(c), Some(last)) => {
                if last.verdict != "counterexample" || last.t != c.t {
                    return Err("counterexample does not close the level list".into());
                }
                c.check(p).map_err(|e| e.to_string())
            }
            (None, _) => {
                if self.levels.iter().any(|l| l.verdict == "counterexample") {
                    return Err("counterexample level without counterexample".into());
                }
                Ok(())
            }
            (Some(_), None) => Err("counterexample without levels".into()),
        }
    }
}

/// `sha256:` over the decimal terms `p_0..=p_{t_max}` (as available) joined by commas.
pub fn p_digest(p: &[BigInt], t_max: usize) -> String {
    let n = p.len().min(t_max.saturating_add(1));
    let text = p[..n]
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())))
}

/// Verifies levels `0..=t_max` in order, stopping at the first counterexample.
/// The budget covers the whole range; once it runs out every remaining level
/// is indeterminate.
pub fn verify_range(
    p: &[BigInt],
    t_max: usize,
    opts: &SearchOptions,
) -> Result<(SnzCertificate, Vec<LevelReport>), SnzError> {
    let start = Instant::now();
    let pool = opts.pool()?;
    let ctl = Control::new(opts.budget.map(|b| start + b), opts.deterministic);
    let mut reports = Vec::new();
    let mut counterexample = None;
    for t in 0..=t_max {
        let report = if ctl.check_deadline() {
            LevelReport {
                t,
                verdict: LevelVerdict::Indeterminate("budget exhausted".into()),
                note: None,
                covered: 0,
            }
        } else {
            decide(p, t, opts, &ctl, &pool)?
        };
        let stop = matches!(report.verdict, LevelVerdict::Counterexample(_));
        if let LevelVerdict::Counterexample(c) = &report.verdict {
            counterexample = Some(c.clone());
        }
        reports.push(report);
        if stop {
            break;
        }
    }
    let levels = reports
        .iter()
        .map(|r| LevelEntry {
            t: r.t,
            verdict: r.verdict.tag().to_string(),
            note: match &r.verdict {
                LevelVerdict::Indeterminate(reason) => Some(match &r.note {
                    Some(n) => format!("{reason}; {n}"),
                    None => reason.clone(),
                }),
                _ => r.note.clone(),
            },
        })
        .collect();
    let ms = if opts.deterministic {
        0
    } else {
        start.elapsed().as_millis() as u64
    };
    Ok((
        SnzCertificate {
            schema: CERTIFICATE_SCHEMA.into(),
            p_digest: p_digest(p, t_max),
            t_max,
            levels,
            counterexample,
            strategy: opts.strategy,
            ms,
        },
        reports,
    ))
}

/// Values of `p_k` in `[-window, window]` that would make level
/// `k = prefix.len()` fail, with `p_0..p_{k-1}` fixed.
pub(crate) fn forbidden_next_terms(
    prefix: &[BigInt],
    window: u64,
    opts: &SearchOptions,
) -> Result<ForbiddenScan, ChargeError> {
    let k = prefix.len();
    let maxes = level_maxes(k).ok_or(SnzError::LevelTooLarge(k))?;
    let mut with_zero = prefix.to_vec();
    with_zero.push(BigInt::zero());
    // h(j, k - j) = A_j + (-1)^{k-j} p_k
    let constants = coefficients(&with_zero, k)?;
    let slope = |j: usize| if (k - j) % 2 == 0 { 1i64 } else { -1 };
    let pool = opts.pool()?;
    let ctl = Control::new(opts.budget.map(|b| Instant::now() + b), false);
    let scan = if fits_i128(&constants, &maxes) {
        let c: Vec<Affine<i128>> = constants
            .iter()
            .enumerate()
            .map(|(j, a)| Affine {
                constant: a.to_i128().expect("bounded"),
                slope: slope(j),
            })
            .collect();
        kernel::forbidden_window(&maxes, &c, window, &ctl, &pool)
    } else {
        let c: Vec<Affine<BigInt>> = constants
            .into_iter()
            .enumerate()
            .map(|(j, a)| Affine {
                constant: a,
                slope: slope(j),
            })
            .collect();
        kernel::forbidden_window(&maxes, &c, window, &ctl, &pool)
    };
    scan.ok_or_else(|| SnzError::BudgetExhausted(format!("forbidden scan at level {k}")).into())
}

/// Number of vectors in the level-`t` box, including zero.
pub fn box_size(t: usize) -> Option<u128> {
    level_maxes(t).map(|m| kernel::box_size(&m))
}
