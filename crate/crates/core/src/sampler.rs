//! Seeded, ordinal-uniform sampling of valid input points, and a shared
//! LRU cache of samples keyed by spec identity.
//!
//! Each variable is drawn uniformly over the representable values of its
//! range: an integer is drawn uniformly from `[ord(lo), ord(hi)]` and mapped
//! back to a float. The generator is ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`; for every candidate point one 64-bit
//! word stream feeds the variables in spec order, and out-of-span words are
//! rejected (never reduced modulo), so the stream is platform independent.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Program;
use crate::expr::{Spec, SpecKey, VarRange};
use crate::float::{self, FloatFormat};
use crate::oracle;

/// Draw budget, as a multiple of the requested size.
pub const OVERSAMPLING: usize = 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Sample<F: FloatFormat = f64> {
    pub spec_key: SpecKey,
    pub vars: Vec<String>,
    #[serde(with = "float::hex::vec2")]
    pub points: Vec<Vec<F>>,
    /// Correctly rounded exact output of the spec expression at each point.
    #[serde(with = "float::hex::vec")]
    pub exacts: Vec<F>,
    pub seed: u64,
    pub requested: usize,
    pub achieved: usize,
    /// Set when the draw budget ran out before `requested` points were found.
    pub short: bool,
    /// Exact evaluations spent drawing this sample.
    pub exact_evaluations: u64,
}

impl<F: FloatFormat> Sample<F> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of one variable across all points.
    pub fn column(&self, var: &str) -> Option<Vec<F>> {
        let i = self.vars.iter().position(|v| v == var)?;
        Some(self.points.iter().map(|p| p[i]).collect())
    }
}

/// Uniform integer in `[0, span]`.
fn uniform_inclusive(rng: &mut ChaCha8Rng, span: u64) -> u64 {
    if span == u64::MAX {
        return rng.next_u64();
    }
    let n = span + 1;
    let limit = u64::MAX - (u64::MAX % n + 1) % n;
    loop {
        let v = rng.next_u64();
        if v <= limit {
            return v % n;
        }
    }
}

/// Ordinal bounds of a range in `F`, shrunk to values inside `[lo, hi]`.
fn ordinal_bounds<F: FloatFormat>(r: &VarRange) -> Result<(i64, i64)> {
    let mut lo = F::from(r.lo).unwrap_or_else(F::neg_infinity);
    if lo.to_f64() < r.lo {
        lo = float::step(lo, true);
    }
    let mut hi = F::from(r.hi).unwrap_or_else(F::infinity);
    if hi.to_f64() > r.hi {
        hi = float::step(hi, false);
    }
    let (lo, hi) = (lo.max(F::min_value()), hi.min(F::max_value()));
    if lo > hi {
        return Err(Error::InvalidRange(format!(
            "`{}` contains no representable values in this format",
            r.name
        )));
    }
    Ok((lo.to_ordinal(), hi.to_ordinal()))
}

/// Draw a sample for `spec`; see the module docs for the distribution.
pub fn sample<F: FloatFormat>(spec: &Spec) -> Result<Sample<F>> {
    spec.check()?;
    let vars = spec.var_names();
    let prog = Program::<F>::new(&spec.expr, &vars)?;
    let bounds = spec.vars.iter().map(ordinal_bounds::<F>).collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.sample_size;
    let budget = n.saturating_mul(OVERSAMPLING);
    let mut points = Vec::with_capacity(n);
    let mut exacts = Vec::with_capacity(n);
    let mut drawn = 0usize;

    while points.len() < n && drawn < budget {
        let batch = (n - points.len()).min(budget - drawn);
        let candidates: Vec<Vec<F>> = (0..batch)
            .map(|_| {
                bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let span = (i128::from(hi) - i128::from(lo)) as u64;
                        let off = uniform_inclusive(&mut rng, span);
                        F::from_ordinal((i128::from(lo) + i128::from(off)) as i64)
                    })
                    .collect()
            })
            .collect();
        drawn += batch;
        let values: Vec<Option<F>> = candidates
            .par_iter()
            .map(|p| oracle::exact(&prog, p).value.round::<F>())
            .collect();
        for (p, v) in candidates.into_iter().zip(values) {
            if points.len() == n {
                break;
            }
            if let Some(v) = v {
                points.push(p);
                exacts.push(v);
            }
        }
    }

    if points.is_empty() {
        return Err(Error::EmptySample(format!(
            "no valid input among {drawn} draws for `{}`",
            spec.expr
        )));
    }
    let achieved = points.len();
    if achieved < n {
        log::warn!("sample for {} is short: {achieved} of {n} points", spec.key());
    }
    Ok(Sample {
        spec_key: spec.key(),
        vars,
        points,
        exacts,
        seed: spec.seed,
        requested: n,
        achieved,
        short: achieved < n,
        exact_evaluations: drawn as u64,
    })
}

/// Sample the spec with some ranges replaced.
pub fn resample<F: FloatFormat>(spec: &Spec, ranges: &[VarRange]) -> Result<Sample<F>> {
    sample(&spec.with_ranges(ranges)?)
}

/// Counters exposed for cache instrumentation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub samples_computed: u64,
    pub exact_evaluations: u64,
    pub entries: usize,
}

/// Samples by spec key, least recently used evicted past `capacity`.
pub struct SampleCache<F: FloatFormat = f64> {
    capacity: usize,
    inner: Mutex<Lru<F>>,
    hits: AtomicU64,
    misses: AtomicU64,
    samples_computed: AtomicU64,
    exact_evaluations: AtomicU64,
}

struct Lru<F: FloatFormat> {
    map: HashMap<SpecKey, Arc<Sample<F>>>,
    order: VecDeque<SpecKey>,
}

impl<F: FloatFormat> Lru<F> {
    fn touch(&mut self, key: &SpecKey) {
        if let Some(i) = self.order.iter().position(|k| k == key) {
            let k = self.order.remove(i).expect("index in range");
            self.order.push_back(k);
        }
    }
}

pub const DEFAULT_CACHE_CAPACITY: usize = 32;

impl<F: FloatFormat> Default for SampleCache<F> {
    fn default() -> Self {
        SampleCache::new(DEFAULT_CACHE_CAPACITY)
    }
}

impl<F: FloatFormat> SampleCache<F> {
    pub fn new(capacity: usize) -> Self {
        SampleCache {
            capacity: capacity.max(1),
            inner: Mutex::new(Lru { map: HashMap::new(), order: VecDeque::new() }),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            samples_computed: AtomicU64::new(0),
            exact_evaluations: AtomicU64::new(0),
        }
    }

    pub fn get(&self, key: &SpecKey) -> Option<Arc<Sample<F>>> {
        let mut inner = self.inner.lock();
        let found = inner.map.get(key).cloned();
        if found.is_some() {
            inner.touch(key);
        }
        found
    }

    /// The cached sample for `spec`, drawing it on a miss. Sampling runs
    /// outside the lock; concurrent misses on one key both compute and the
    /// last insert wins, which is harmless because samples are deterministic.
    pub fn get_or_sample(&self, spec: &Spec) -> Result<Arc<Sample<F>>> {
        let key = spec.key();
        if let Some(s) = self.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(s);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let s = Arc::new(sample::<F>(spec)?);
        self.samples_computed.fetch_add(1, Ordering::Relaxed);
        self.exact_evaluations.fetch_add(s.exact_evaluations, Ordering::Relaxed);
        self.insert(s.clone());
        Ok(s)
    }

    pub fn insert(&self, s: Arc<Sample<F>>) {
        let mut inner = self.inner.lock();
        let key = s.spec_key.clone();
        if inner.map.insert(key.clone(), s).is_some() {
            inner.touch(&key);
        } else {
            inner.order.push_back(key);
        }
        while inner.order.len() > self.capacity {
            if let Some(old) = inner.order.pop_front() {
                inner.map.remove(&old);
            }
        }
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            samples_computed: self.samples_computed.load(Ordering::Relaxed),
            exact_evaluations: self.exact_evaluations.load(Ordering::Relaxed),
            entries: self.inner.lock().map.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_math;

    fn spec(text: &str, lo: f64, hi: f64, n: usize) -> Spec {
        let e = parse_math(text).unwrap();
        let vars = e.free_vars().into_iter().map(|v| VarRange::new(v, lo, hi)).collect();
        Spec::new(e, vars, n, 42).unwrap()
    }

    #[test]
    fn uniform_is_in_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for span in [0u64, 1, 2, 10, u64::MAX / 3, u64::MAX - 1, u64::MAX] {
            for _ in 0..100 {
                assert!(uniform_inclusive(&mut rng, span) <= span);
            }
        }
    }

    #[test]
    fn asinh_sample_spans_magnitudes() {
        let s: Sample = sample(&spec("log(x + sqrt(x * x + 1))", 0.0, 1e308, 256)).unwrap();
        assert_eq!(s.achieved, 256);
        assert!(!s.short);
        let exps: Vec<i32> = s.points.iter().map(|p| p[0].log10().floor() as i32).collect();
        assert!(*exps.iter().min().unwrap() < -200);
        assert!(*exps.iter().max().unwrap() > 200);
        assert!(s.points.iter().all(|p| (0.0..=1e308).contains(&p[0])));
    }

    #[test]
    fn zoomed_range_is_respected() {
        let s: Sample = sample(&spec("x", 1e-52, 1e12, 256)).unwrap();
        assert!(s.points.iter().all(|p| (1e-52..=1e12).contains(&p[0])));
        let s: Sample = sample(&spec("x", 1e150, 1e308, 64)).unwrap();
        assert!(s.points.iter().all(|p| p[0] >= 1e150));
    }

    #[test]
    fn deterministic() {
        let sp = spec("x * y", -3.0, 1e10, 64);
        let a: Sample = sample(&sp).unwrap();
        let b: Sample = sample(&sp).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c: Sample = resample(&sp, &[]).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn invalid_points_are_redrawn() {
        let s: Sample = sample(&spec("sqrt(x)", -1.0, 1.0, 64)).unwrap();
        assert_eq!(s.achieved, 64);
        assert!(s.points.iter().all(|p| p[0] >= 0.0));
        assert!(s.exact_evaluations > 64);
    }

    #[test]
    fn empty_sample() {
        let r: Result<Sample> = sample(&spec("log(x)", -2.0, -1.0, 16));
        assert!(matches!(r, Err(Error::EmptySample(_))));
    }

    #[test]
    fn json_round_trip() {
        let s: Sample = sample(&spec("x + 1", -1.0, 1.0, 8)).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"points\":[[\""));
        let back: Sample = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn single_precision_sample() {
        let s: Sample<f32> = sample(&spec("x", 1.0, 2.0, 32)).unwrap();
        assert!(s.points.iter().all(|p| (1.0..=2.0).contains(&p[0])));
    }

    #[test]
    fn cache_counts_and_evicts() {
        let cache: SampleCache = SampleCache::new(2);
        let a = spec("x", 0.0, 1.0, 8);
        let b = spec("x", 0.0, 2.0, 8);
        let c = spec("x", 0.0, 3.0, 8);
        cache.get_or_sample(&a).unwrap();
        cache.get_or_sample(&a).unwrap();
        assert_eq!(cache.stats().samples_computed, 1);
        assert_eq!(cache.stats().hits, 1);
        cache.get_or_sample(&b).unwrap();
        cache.get_or_sample(&a).unwrap();
        cache.get_or_sample(&c).unwrap();
        // b was least recently used.
        assert!(cache.get(&b.key()).is_none());
        assert!(cache.get(&a.key()).is_some());
        assert_eq!(cache.stats().entries, 2);
    }
}
