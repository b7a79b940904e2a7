#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use snzlab::cylinder::{Algebra, ClopenSet, Coord, FinPermutation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn random_p(r: &mut impl Rng, len: usize, bound: i64) -> Vec<BigInt> {
    (0..len).map(|_| BigInt::from(r.gen_range(-bound..=bound))).collect()
}

/// A random set over at most `max_support` coordinates drawn from `0..universe`.
pub fn random_set(r: &mut impl Rng, universe: Coord, max_support: usize) -> ClopenSet {
    let mut coords: Vec<Coord> = (0..universe).collect();
    coords.shuffle(r);
    let t = r.gen_range(0..=max_support.min(universe as usize));
    let mut support: Vec<Coord> = coords[..t].to_vec();
    support.sort_unstable();
    let density = r.gen_range(0.0..=1.0);
    let patterns: Vec<u64> = (0..1u64 << t).filter(|_| r.gen_bool(density)).collect();
    Algebra::default().from_patterns(support, patterns).unwrap()
}

pub fn random_disjoint_pair(r: &mut impl Rng) -> (ClopenSet, ClopenSet) {
    let u = random_set(r, 10, 5);
    let v = random_set(r, 10, 5).difference(&u).unwrap();
    (u, v)
}

pub fn random_permutation(r: &mut impl Rng, universe: Coord) -> FinPermutation {
    let mut image: Vec<Coord> = (0..universe).collect();
    image.shuffle(r);
    FinPermutation::from_pairs((0..universe).zip(image)).unwrap()
}

pub fn random_superset(r: &mut impl Rng, u: &ClopenSet, universe: Coord) -> BTreeSet<Coord> {
    let mut c: BTreeSet<Coord> = u.support().iter().copied().collect();
    for x in 0..universe {
        if r.gen_bool(0.3) {
            c.insert(x);
        }
    }
    c
}
