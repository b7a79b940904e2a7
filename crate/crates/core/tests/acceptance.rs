//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;
use snzlab::charge::{charge_of, h, weight_vector, PSequence, WeightVector};
use snzlab::cylinder::Algebra;
use snzlab::extension::{evens_extension_witness, pigeonhole_pair, FinCofSet};
use snzlab::lang::{eval_str, parse, print};
use snzlab::lemmas::{
    b_vector, build_q, check_dual_basis, check_sandwich, check_vandermonde_error, determinant,
    is_psd, lemma_eigen_bound,
};
use snzlab::numerics::{binom, binom_row, pow_rat, rat_to_string, BigRat};
use snzlab::snz::{self, LevelVerdict, SearchOptions, Strategy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_weights(r: &mut impl Rng, t: usize) -> WeightVector {
    let w: Vec<BigInt> = binom_row(t as u64)
        .iter()
        .map(|c| BigInt::from(r.gen_range(0..=u64::try_from(c).unwrap())))
        .collect();
    WeightVector::new(t, w).unwrap()
}

fn c1_dual_basis() -> Outcome {
    let start = Instant::now();
    let bad: Vec<usize> = (0..=30).filter(|&t| !check_dual_basis(t)).collect();
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && elapsed < Duration::from_secs(60),
        format!("t = 0..=30, failures {bad:?}, {elapsed:.2?}"),
    )
}

fn c2_recurrence_and_reindexing() -> Outcome {
    let mut r = rng(2);
    let p = random_p(&mut r, 42, 1 << 40);
    let mut cells = 0;
    for m in 0..=40usize {
        for n in 0..=40 - m {
            cells += 1;
            if h(m, n, &p).unwrap() != h(m + 1, n, &p).unwrap() + h(m, n + 1, &p).unwrap() {
                return outcome(false, format!("recurrence fails at m={m}, n={n}"));
            }
        }
    }
    for trial in 0..200 {
        let t = r.gen_range(0..=12);
        let p = random_p(&mut r, t + 1, 1 << 40);
        let w = random_weights(&mut r, t);
        let lhs = w.evaluate(&p).unwrap();
        let rhs: BigInt = b_vector(&w).iter().zip(&p).map(|(b, x)| b * x).sum();
        if lhs != rhs {
            return outcome(false, format!("re-indexing fails on trial {trial}"));
        }
    }
    outcome(true, format!("{cells} recurrence cells, 200 re-indexing trials"))
}

fn c3_charge_laws() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let alg = Algebra::default();
    for trial in 0..500 {
        let p = PSequence::explicit(random_p(&mut r, 12, 1 << 30)).unwrap();
        let (u, v) = random_disjoint_pair(&mut r);
        let joint = charge_of(&u.union(&v).unwrap(), &p).unwrap();
        if joint != charge_of(&u, &p).unwrap() + charge_of(&v, &p).unwrap() {
            return outcome(false, format!("additivity fails on trial {trial}"));
        }
        let total = charge_of(&u, &p).unwrap() + charge_of(&u.complement().unwrap(), &p).unwrap();
        if &total != p.get(0).unwrap() {
            return outcome(false, format!("complement law fails on trial {trial}"));
        }
        let c = random_superset(&mut r, &u, 10);
        let wide = weight_vector(&u, Some(&c), &alg).unwrap().evaluate(p.terms()).unwrap();
        if wide != charge_of(&u, &p).unwrap() {
            return outcome(false, format!("support independence fails on trial {trial}"));
        }
    }
    for trial in 0..100 {
        let p = PSequence::explicit(random_p(&mut r, 12, 1 << 30)).unwrap();
        let u = random_set(&mut r, 10, 6);
        let pi = random_permutation(&mut r, 16);
        if charge_of(&u.permuted(&pi), &p).unwrap() != charge_of(&u, &p).unwrap() {
            return outcome(false, format!("permutation invariance fails on trial {trial}"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(120),
        format!("500 disjoint pairs, 100 permutations, {elapsed:.2?}"),
    )
}

/// Least-magnitude (positive first) next term found by plain nested loops
/// over every weight box, with `h` expanded by hand.
fn brute_greedy(horizon: usize) -> Vec<i64> {
    fn h_direct(m: usize, n: usize, p: &[i64]) -> i64 {
        (0..=n)
            .map(|i| {
                let c: i64 = (&binom(n as u64, i as i64)).try_into().unwrap();
                let sign = if i % 2 == 0 { 1 } else { -1 };
                sign * c * p[m + i]
            })
            .sum()
    }
    fn level_ok(p: &[i64], t: usize) -> bool {
        let maxes: Vec<i64> = (0..=t)
            .map(|j| (&binom(t as u64, j as i64)).try_into().unwrap())
            .collect();
        let hs: Vec<i64> = (0..=t).map(|j| h_direct(j, t - j, p)).collect();
        let mut w = vec![0i64; t + 1];
        loop {
            let mut i = 0;
            while i <= t && w[i] == maxes[i] {
                w[i] = 0;
                i += 1;
            }
            if i > t {
                return true;
            }
            w[i] += 1;
            if w.iter().zip(&hs).map(|(a, b)| a * b).sum::<i64>() == 0 {
                return false;
            }
        }
    }
    let mut p = Vec::new();
    for k in 0..=horizon {
        let next = std::iter::once(0)
            .chain((1i64..).flat_map(|x| [x, -x]))
            .find(|&x| {
                let mut q = p.clone();
                q.push(x);
                level_ok(&q, k)
            })
            .unwrap();
        p.push(next);
    }
    p
}

fn c4_greedy() -> Outcome {
    let oracle = brute_greedy(2);
    let engine = PSequence::greedy(2, &SearchOptions::default()).unwrap();
    let engine: Vec<i64> = engine.terms().iter().map(|x| x.try_into().unwrap()).collect();
    outcome(
        oracle == vec![1, -1, 2] && engine == oracle,
        format!("oracle {oracle:?}, engine {engine:?}"),
    )
}

fn c5_cross_check() -> Outcome {
    let mut r = rng(5);
    let ex = SearchOptions::default().with_jobs(4);
    let mitm = ex.clone().with_strategy(Strategy::MeetInTheMiddle);
    let mut found = 0;
    for trial in 0..50 {
        let bound = [1, 3, 10, 1000][trial % 4];
        let p = random_p(&mut r, 6, bound);
        for t in 0..=5 {
            let a = snz::verify_level(&p, t, &ex).unwrap().verdict;
            let b = snz::verify_level(&p, t, &mitm).unwrap().verdict;
            if a != b {
                return outcome(false, format!("disagreement at trial {trial}, t={t}"));
            }
            found += matches!(a, LevelVerdict::Counterexample(_)) as usize;
        }
    }
    let v = snz::verify_level(&big(&[1, 1]), 1, &ex).unwrap().verdict;
    let ok = matches!(&v, LevelVerdict::Counterexample(c) if c.w == big(&[1, 0]));
    outcome(
        ok,
        format!("300 level pairs agree ({found} with counterexamples); p=(1,1) t=1 gives {v:?}"),
    )
}

fn c6_scale_run() -> Outcome {
    let start = Instant::now();
    let opts = SearchOptions::default().with_jobs(8);
    let p = match PSequence::greedy(7, &opts) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("greedy generation failed: {e}")),
    };
    let (cert, reports) = snz::verify_range(p.terms(), 7, &opts).unwrap();
    let elapsed = start.elapsed();
    let covered = reports.last().map(|r| r.covered).unwrap_or(0);
    let expected = snz::box_size(7).unwrap() as u64 - 1;
    let valid = cert.validate(p.terms());
    let (recheck, _) = snz::verify_range(
        p.terms(),
        7,
        &opts.clone().with_strategy(Strategy::MeetInTheMiddle),
    )
    .unwrap();
    let agree = recheck.levels.iter().map(|l| &l.verdict).eq(cert.levels.iter().map(|l| &l.verdict));
    outcome(
        cert.verified_levels() == (0..=7).collect::<Vec<_>>()
            && covered == expected
            && valid.is_ok()
            && agree
            && elapsed < Duration::from_secs(600),
        format!(
            "p = {:?}, t=7 covered {covered}/{expected}, validate {valid:?}, mitm recheck agrees {agree}, {elapsed:.2?}",
            p.terms().iter().map(|x| x.to_string()).collect::<Vec<_>>()
        ),
    )
}

fn c7_sandwich() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for t in [50, 200] {
        let r = check_sandwich(t, 8).unwrap();
        pass &= r.passed() && r.violations.is_empty();
        details.push(format!(
            "t={t}: {} cells, {} violations",
            r.params["cells"],
            r.violations.len()
        ));
    }
    outcome(pass, details.join("; "))
}

fn c8_vandermonde() -> Outcome {
    let mut pass = true;
    let mut cells = 0;
    for s in 1..=3 {
        for t in [1000, 10000] {
            let r = check_vandermonde_error(t, s).unwrap();
            pass &= r.passed();
            cells += r.params["cells"].as_u64().unwrap();
        }
    }
    outcome(pass, format!("{cells} cells over s=1..=3, t in {{1000, 10000}}"))
}

fn c9_spectral() -> (Outcome, Vec<String>) {
    let mut pass = true;
    let mut failures = Vec::new();
    let mut info = Vec::new();
    for s in 1..=6usize {
        let q = build_q(s).q;
        let det = determinant(&q);
        let det_floor = BigRat::one() / BigRat::from_integer(num_traits::pow(BigInt::from(s + 2), 2 * s * (s + 1)));
        let top = BigRat::from_integer(BigInt::from((s + 1) * (s + 1)));
        let chain = &det / pow_rat(&top, s as u32 - 1);
        let lemma = lemma_eigen_bound(s);
        let shifted = |c: &BigRat| -> Vec<Vec<BigRat>> {
            let mut m = q.clone();
            for (i, row) in m.iter_mut().enumerate() {
                row[i] -= c;
            }
            m
        };
        let (psd, least) = is_psd(&shifted(&chain));
        if det < det_floor {
            failures.push(format!("s={s}: det below (s+2)^(-2s(s+1))"));
        }
        if chain < lemma {
            failures.push(format!("s={s}: chain bound below (10s)^(-10s^2)"));
        }
        if !psd {
            failures.push(format!(
                "s={s}: Q - chain*I not PSD (chain = {}, least principal minor {})",
                rat_to_string(&chain),
                rat_to_string(&least)
            ));
        }
        let corrected = &det / pow_rat(&top, s as u32);
        info.push(format!(
            "s={s}: det/((s+1)^2)^s PSD shift {}, (10s)^(-10s^2) PSD shift {}",
            is_psd(&shifted(&corrected)).0,
            is_psd(&shifted(&lemma)).0
        ));
        if s == 1 && det != BigRat::new(1.into(), 9.into()) {
            failures.push(format!("s=1: det(Q) = {}", rat_to_string(&det)));
        }
    }
    pass &= failures.is_empty();
    let detail = if pass {
        "s = 1..=6 all bounds hold, det(Q) = 1/9 at s=1".to_string()
    } else {
        failures.join("; ")
    };
    (outcome(pass, detail), info)
}

fn c10_extension() -> Outcome {
    for e in -50i64..=50 {
        let w = evens_extension_witness(e);
        if !w.set.is_nonempty() {
            return outcome(false, format!("e={e}: empty witness"));
        }
        // recount from membership: every removed element lies below 2|e| + 4
        let limit = 2 * e.unsigned_abs() + 4;
        let part = |s: &FinCofSet, parity: u64, total: BigInt| -> BigInt {
            let hits = (1..=limit).filter(|x| x % 2 == parity);
            match s {
                FinCofSet::Finite(_) => BigInt::from(hits.filter(|&x| s.contains(x)).count()),
                FinCofSet::Cofinite(_) => total - hits.filter(|&x| !s.contains(x)).count(),
            }
        };
        let forced = part(&w.set.even, 0, BigInt::from(e)) + part(&w.set.odd, 1, BigInt::from(-1 - e));
        if !forced.is_zero() || w.forced_charge != "0" {
            return outcome(false, format!("e={e}: forced charge {forced}"));
        }
    }
    let mut r = rng(10);
    for trial in 0..1000 {
        let a = r.gen_range(1..=30usize);
        let mut pool: Vec<i64> = (-500..500).collect();
        pool.shuffle(&mut r);
        let values = big(&pool[..=a]);
        let Ok((l, m)) = pigeonhole_pair(&values, &BigInt::from(a)) else {
            return outcome(false, format!("trial {trial}: no pair"));
        };
        let congruent = |i: usize, j: usize| ((&values[i] - &values[j]) % a as i64).is_zero();
        let least = (0..=a)
            .flat_map(|i| (i + 1..=a).map(move |j| (i, j)))
            .find(|&(i, j)| congruent(i, j))
            .map(|(i, j)| (i + 1, j + 1));
        if least != Some((l, m)) {
            return outcome(false, format!("trial {trial}: got {:?}, oracle {least:?}", (l, m)));
        }
    }
    outcome(true, "e in -50..=50 forced to 0; 1000 pigeonhole inputs")
}

fn c11_parser() -> Outcome {
    let mut r = rng(11);
    let mut distinct = BTreeSet::new();
    for trial in 0..1000 {
        let u = random_set(&mut r, 12, 6);
        let text = print(&u);
        if eval_str(&text).ok().as_ref() != Some(&u) {
            return outcome(false, format!("round trip fails on trial {trial}: {text}"));
        }
        distinct.insert(text);
    }
    let cases = ["H({1},{1})", "H(1,{2})", "FULL |\n  H({1},{2}"];
    let diagnostics: Vec<String> = cases
        .iter()
        .filter_map(|c| parse(c).err().map(|e| e.to_string()))
        .collect();
    let all_located = diagnostics.len() == 3 && diagnostics.iter().all(|d| d.contains(':'));
    outcome(
        all_located,
        format!("1000 round trips ({} distinct); errors: {}", distinct.len(), diagnostics.join(" / ")),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all &= o.pass;
        println!(
            "criterion {n:>2} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report(1, "dual basis", c1_dual_basis());
    report(2, "recurrence and re-indexing", c2_recurrence_and_reindexing());
    report(3, "charge laws", c3_charge_laws());
    report(4, "greedy-minimal prefix", c4_greedy());
    report(5, "verifier cross-check", c5_cross_check());
    report(6, "scale run", c6_scale_run());
    report(7, "ratio sandwich", c7_sandwich());
    report(8, "vandermonde proximity", c8_vandermonde());
    let (c9, info) = c9_spectral();
    report(9, "spectral bounds", c9);
    for line in info {
        println!("             info: {line}");
    }
    report(10, "extension demos", c10_extension());
    report(11, "parser", c11_parser());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
