//! Seeded sample points for zero tests and rank certification.
//!
//! Each value is a pure function of `(seed, sample index, key)`, so two
//! expressions evaluated at "sample 7" see the same coordinates and the same
//! values for shared opaque function atoms, regardless of which other
//! symbols either expression contains.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Point;
use crate::symexpr::Env;

pub const DEFAULT_SEED: u64 = 0xC4A7;
pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { lo: -1.0, hi: 1.0 }
    }
}

impl SampleBox {
    pub fn centre(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// A reproducible family of sample points over `[lo, hi]^dim`.
///
/// Besides `count` uniformly random points, the family contains one point
/// with every coordinate at the box centre and, for each coordinate, one
/// point where only that coordinate sits at the centre. Opaque function
/// atoms always take random values.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub bounds: SampleBox,
    pub coords: Vec<String>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            seed: DEFAULT_SEED,
            count: DEFAULT_SAMPLES,
            bounds: SampleBox::default(),
            coords: Vec::new(),
        }
    }
}

impl Sampler {
    pub fn new(seed: u64, count: usize, bounds: SampleBox, coords: Vec<String>) -> Self {
        Sampler { seed, count, bounds, coords }
    }

    pub fn with_coords(&self, coords: Vec<String>) -> Self {
        Sampler { coords, ..self.clone() }
    }

    pub fn with_count(&self, count: usize) -> Self {
        Sampler { count, ..self.clone() }
    }

    /// Random points only.
    pub fn random_points(&self) -> Vec<SamplePoint> {
        (0..self.count).map(|i| self.point(i as u64, BTreeMap::new())).collect()
    }

    /// Random points followed by the centre-based certification points.
    pub fn points(&self) -> Vec<SamplePoint> {
        let mut out = self.random_points();
        if self.coords.is_empty() {
            return out;
        }
        let c = self.bounds.centre();
        let base = self.count as u64;
        let all: BTreeMap<String, f64> = self.coords.iter().map(|k| (k.clone(), c)).collect();
        out.push(self.point(base, all));
        for (j, k) in self.coords.iter().enumerate() {
            let mut o = BTreeMap::new();
            o.insert(k.clone(), c);
            out.push(self.point(base + 1 + j as u64, o));
        }
        out
    }

    /// The point used to rank pivot candidates: coordinates at the box
    /// centre, opaque atoms random.
    pub fn reference(&self) -> SamplePoint {
        let c = self.bounds.centre();
        let all = self.coords.iter().map(|k| (k.clone(), c)).collect();
        self.point(u64::MAX, all)
    }

    pub fn point(&self, index: u64, overrides: BTreeMap<String, f64>) -> SamplePoint {
        SamplePoint {
            seed: self.seed,
            index,
            bounds: self.bounds,
            overrides,
            cache: RefCell::new(BTreeMap::new()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SamplePoint {
    seed: u64,
    index: u64,
    bounds: SampleBox,
    overrides: BTreeMap<String, f64>,
    cache: RefCell<BTreeMap<String, f64>>,
}

fn key_hash(key: &str) -> u64 {
    // FNV-1a; only needs to be stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SamplePoint {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn get(&self, key: &str) -> f64 {
        if let Some(v) = self.overrides.get(key) {
            return *v;
        }
        if let Some(v) = self.cache.borrow().get(key) {
            return *v;
        }
        let s = self.seed
            ^ key_hash(key).rotate_left(17)
            ^ self.index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let v = rng.random_range(self.bounds.lo..self.bounds.hi);
        self.cache.borrow_mut().insert(key.to_string(), v);
        v
    }

    /// Snapshot of the values this point assigns to `keys`.
    pub fn materialize(&self, keys: &BTreeSet<String>) -> Point {
        keys.iter().map(|k| (k.clone(), self.get(k))).collect()
    }
}

impl Env for SamplePoint {
    fn value(&self, key: &str) -> Option<f64> {
        Some(self.get(key))
    }
}
