//! Workbench state: sessions holding a spec, its samples and a table of
//! candidate rewritings, plus background suggestion jobs.

mod jobs;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::RwLock;
use serde::Serialize;

use crate::analysis::{self, ErrorReport, LocalErrorTree};
use crate::error::{Error, Result};
use crate::eval::Program;
use crate::expr::{emit_math, Expr, Spec, SpecKey, VarRange, DEFAULT_SAMPLE_SIZE};
use crate::rewriter::{self, Candidate, CandidateId, Provenance, RegimeConfig, SearchConfig};
use crate::sampler::{CacheStats, Sample, SampleCache};

pub use jobs::{JobRegistry, JobStatus, JobView, DEFAULT_WORKERS};
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};

/// Where a spec's expression comes from.
#[derive(Clone, Debug)]
pub enum Source {
    Math(String),
    FpCore(String),
}

/// Build a spec from user input. Math text takes its ranges from `ranges`,
/// which must cover every free variable; FPCore takes them from `:pre`, with
/// `ranges` overriding. `seed` falls back to `default_seed`, except that an
/// explicit `:fpwb-seed` in FPCore wins over the default.
pub fn build_spec(
    source: &Source,
    ranges: &[VarRange],
    n: Option<usize>,
    seed: Option<u64>,
    default_seed: u64,
) -> Result<Spec> {
    let mut spec = match source {
        Source::Math(text) => {
            let e = crate::expr::parse_math(text)?;
            let free = e.free_vars();
            if let Some(r) = ranges.iter().find(|r| !free.contains(&r.name)) {
                return Err(Error::InvalidRange(format!("`{}` does not occur in the expression", r.name)));
            }
            Spec { expr: e, vars: ranges.to_vec(), sample_size: DEFAULT_SAMPLE_SIZE, seed: default_seed }
        }
        Source::FpCore(text) => {
            let parsed = crate::expr::parse_fpcore(text)?;
            let mut spec = parsed.with_ranges(ranges)?;
            if !text.contains(":fpwb-seed") {
                spec.seed = default_seed;
            }
            spec
        }
    };
    if let Some(n) = n {
        spec.sample_size = n;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.check()?;
    Ok(spec)
}

/// Report cache counters of one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SessionStats {
    /// Reports computed by scoring an expression on a sample.
    pub analyses: u64,
    /// Reports served from the (expression, spec key) cache.
    pub report_hits: u64,
    /// Samples taken from this session's own sample map.
    pub sample_hits: u64,
}

/// The candidate table as served to clients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub session_id: String,
    pub spec: Spec,
    pub spec_key: SpecKey,
    pub sample_size: usize,
    pub short: bool,
    pub candidates: Vec<Candidate>,
}

pub struct Session {
    id: String,
    spec: Spec,
    sample: Arc<Sample>,
    samples: HashMap<SpecKey, Arc<Sample>>,
    candidates: Vec<Candidate>,
    next_id: CandidateId,
    reports: HashMap<(String, SpecKey), ErrorReport>,
    stats: SessionStats,
    cache: Arc<SampleCache>,
}

impl Session {
    /// A session whose table holds the spec expression itself.
    pub fn new(id: impl Into<String>, spec: Spec, cache: Arc<SampleCache>) -> Result<Session> {
        spec.check()?;
        let sample = cache.get_or_sample(&spec)?;
        let mut s = Session {
            id: id.into(),
            samples: HashMap::from([(sample.spec_key.clone(), sample.clone())]),
            sample,
            spec,
            candidates: Vec::new(),
            next_id: 0,
            reports: HashMap::new(),
            stats: SessionStats::default(),
            cache,
        };
        let naive = s.spec.expr.clone();
        s.add_candidate(naive, Provenance::UserEntered)?;
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &Spec {
        &self.spec
    }

    pub fn spec_key(&self) -> &SpecKey {
        &self.sample.spec_key
    }

    pub fn sample(&self) -> &Arc<Sample> {
        &self.sample
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn candidate(&self, cid: CandidateId) -> Result<&Candidate> {
        self.candidates
            .iter()
            .find(|c| c.id == cid)
            .ok_or_else(|| Error::NotFound { kind: "candidate", id: cid.to_string() })
    }

    fn index(&self, cid: CandidateId) -> Result<usize> {
        self.candidates
            .iter()
            .position(|c| c.id == cid)
            .ok_or_else(|| Error::NotFound { kind: "candidate", id: cid.to_string() })
    }

    pub fn table(&self) -> Table {
        Table {
            session_id: self.id.clone(),
            spec: self.spec.clone(),
            spec_key: self.spec_key().clone(),
            sample_size: self.sample.len(),
            short: self.sample.short,
            candidates: self.candidates.clone(),
        }
    }

    /// Report for `e` on the current sample, from the cache when possible.
    pub fn analyze(&mut self, e: &Expr) -> Result<ErrorReport> {
        let key = (emit_math(e), self.spec_key().clone());
        if let Some(r) = self.reports.get(&key) {
            self.stats.report_hits += 1;
            return Ok(r.clone());
        }
        let r = analysis::analyze(e, &self.sample)?;
        self.stats.analyses += 1;
        self.reports.insert(key, r.clone());
        Ok(r)
    }

    fn check_expr(&self, e: &Expr) -> Result<()> {
        e.validate()?;
        Program::<f64>::new(e, &self.sample.vars).map(|_| ())
    }

    fn push(&mut self, mut c: Candidate) -> Result<&Candidate> {
        self.check_expr(&c.expr)?;
        if c.report.as_ref().is_none_or(|r| &r.spec_key != self.spec_key()) {
            c.report = Some(self.analyze(&c.expr)?);
        }
        c.id = self.next_id;
        c.visible = true;
        c.duplicate_of = self.candidates.iter().find(|o| o.expr == c.expr).map(|o| o.id);
        self.next_id += 1;
        self.candidates.push(c);
        Ok(self.candidates.last().expect("just pushed"))
    }

    /// Append `e`, analyzed on the current sample. Re-entering an expression
    /// already in the table gives a new row flagged as its duplicate.
    pub fn add_candidate(&mut self, e: Expr, provenance: Provenance) -> Result<&Candidate> {
        self.push(Candidate::new(0, e, provenance))
    }

    /// What `add_candidate` would produce, without changing the table.
    pub fn preview(&mut self, e: Expr, provenance: Provenance) -> Result<Candidate> {
        self.check_expr(&e)?;
        let mut c = Candidate::new(self.next_id, e, provenance);
        c.report = Some(self.analyze(&c.expr)?);
        c.duplicate_of = self.candidates.iter().find(|o| o.expr == c.expr).map(|o| o.id);
        Ok(c)
    }

    /// Append a candidate produced elsewhere, keeping its derivation.
    pub fn add_derived(&mut self, c: Candidate) -> Result<&Candidate> {
        self.push(c)
    }

    /// Show or hide a row. Showing a row whose report is stale re-analyzes it.
    pub fn set_visible(&mut self, cid: CandidateId, visible: bool) -> Result<&Candidate> {
        let i = self.index(cid)?;
        if visible && self.candidates[i].report.as_ref().is_none_or(|r| &r.spec_key != self.spec_key()) {
            let e = self.candidates[i].expr.clone();
            self.candidates[i].report = Some(self.analyze(&e)?);
        }
        self.candidates[i].visible = visible;
        Ok(&self.candidates[i])
    }

    fn sample_for(&mut self, spec: &Spec) -> Result<Arc<Sample>> {
        let key = spec.key();
        if let Some(s) = self.samples.get(&key) {
            self.stats.sample_hits += 1;
            return Ok(s.clone());
        }
        let s = self.cache.get_or_sample(spec)?;
        self.samples.insert(key, s.clone());
        Ok(s)
    }

    /// Replace some variable ranges, resample and re-analyze visible rows.
    /// On error nothing changes. Hidden rows are re-analyzed when shown.
    pub fn set_range(&mut self, ranges: &[VarRange]) -> Result<Table> {
        let spec = self.spec.with_ranges(ranges)?;
        if spec.key() != *self.spec_key() {
            let sample = self.sample_for(&spec)?;
            let old = (self.spec.clone(), self.sample.clone());
            self.spec = spec;
            self.sample = sample;
            if let Err(e) = self.refresh_visible() {
                (self.spec, self.sample) = old;
                return Err(e);
            }
        }
        Ok(self.table())
    }

    fn refresh_visible(&mut self) -> Result<()> {
        let mut fresh = Vec::new();
        for (i, c) in self.candidates.iter().enumerate() {
            if c.visible {
                fresh.push((i, c.expr.clone()));
            }
        }
        let mut reports = Vec::with_capacity(fresh.len());
        for (i, e) in fresh {
            reports.push((i, self.analyze(&e)?));
        }
        for (i, r) in reports {
            self.candidates[i].report = Some(r);
        }
        Ok(())
    }

    /// The candidate's report on the current sample. Hidden rows with a
    /// stale report are scored without touching the table.
    pub fn errors(&self, cid: CandidateId) -> Result<ErrorReport> {
        let c = self.candidate(cid)?;
        match &c.report {
            Some(r) if &r.spec_key == self.spec_key() => Ok(r.clone()),
            _ => match self.reports.get(&(emit_math(&c.expr), self.spec_key().clone())) {
                Some(r) => Ok(r.clone()),
                None => analysis::analyze(&c.expr, &self.sample),
            },
        }
    }

    /// Local error of a candidate at any point, sampled or not.
    pub fn local_error(&self, cid: CandidateId, point: &[f64]) -> Result<LocalErrorTree> {
        let c = self.candidate(cid)?;
        analysis::local_error(&c.expr, &self.sample.vars, point)
    }

    /// Combine candidates into one branched candidate split on `var`, and
    /// append it.
    pub fn combine(&mut self, cids: &[CandidateId], var: &str, cfg: &RegimeConfig) -> Result<&Candidate> {
        let mut picked = Vec::with_capacity(cids.len());
        for &cid in cids {
            picked.push(self.candidate(cid)?.clone());
        }
        let combined = rewriter::infer_regimes(&picked, &self.sample, var, cfg)?;
        if combined.provenance != Provenance::Combined {
            return Err(Error::Degenerate("a single candidate needs no regimes".into()));
        }
        self.push(combined)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            id: self.id.clone(),
            spec: self.spec.clone(),
            next_candidate_id: self.next_id,
            candidates: self.candidates.clone(),
        }
    }

    /// Rebuild a session from a snapshot, redrawing its sample.
    pub fn restore(snap: Snapshot, cache: Arc<SampleCache>) -> Result<Session> {
        snap.check()?;
        let sample = cache.get_or_sample(&snap.spec)?;
        let mut s = Session {
            id: snap.id,
            samples: HashMap::from([(sample.spec_key.clone(), sample.clone())]),
            sample,
            spec: snap.spec,
            candidates: snap.candidates,
            next_id: snap.next_candidate_id,
            reports: HashMap::new(),
            stats: SessionStats::default(),
            cache,
        };
        for c in &s.candidates {
            s.check_expr(&c.expr)?;
            if let Some(r) = &c.report {
                s.reports.insert((emit_math(&c.expr), r.spec_key.clone()), r.clone());
            }
        }
        let stale: Vec<usize> = s
            .candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.visible && c.report.as_ref().is_none_or(|r| &r.spec_key != s.spec_key()))
            .map(|(i, _)| i)
            .collect();
        for i in stale {
            let e = s.candidates[i].expr.clone();
            s.candidates[i].report = Some(s.analyze(&e)?);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct WorkbenchConfig {
    pub workers: usize,
    pub cache_capacity: usize,
    pub search: SearchConfig,
    /// When set, every session is written to `<dir>/<id>.json` after each
    /// change.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            workers: DEFAULT_WORKERS,
            cache_capacity: crate::sampler::DEFAULT_CACHE_CAPACITY,
            search: SearchConfig::default(),
            snapshot_dir: None,
        }
    }
}

/// Overrides for one suggestion job.
#[derive(Clone, Debug, Default)]
pub struct SuggestOptions {
    pub k: Option<usize>,
    pub beam: Option<usize>,
    pub depth: Option<usize>,
    pub budget: Option<std::time::Duration>,
}

/// All sessions, the shared sample cache and the job registry.
pub struct Workbench {
    config: WorkbenchConfig,
    cache: Arc<SampleCache>,
    sessions: RwLock<BTreeMap<String, Arc<RwLock<Session>>>>,
    next_session: AtomicU64,
    jobs: JobRegistry,
}

impl Default for Workbench {
    fn default() -> Self {
        Workbench::new(WorkbenchConfig::default())
    }
}

impl Workbench {
    pub fn new(config: WorkbenchConfig) -> Workbench {
        Workbench {
            cache: Arc::new(SampleCache::new(config.cache_capacity)),
            sessions: RwLock::new(BTreeMap::new()),
            next_session: AtomicU64::new(1),
            jobs: JobRegistry::new(config.workers),
            config,
        }
    }

    pub fn cache(&self) -> &Arc<SampleCache> {
        &self.cache
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }

    pub fn session(&self, id: &str) -> Result<Arc<RwLock<Session>>> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound { kind: "session", id: id.to_string() })
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().keys().cloned().collect()
    }

    fn persist(&self, s: &Session) -> Result<()> {
        match &self.config.snapshot_dir {
            Some(dir) => s.snapshot().save(&dir.join(format!("{}.json", s.id()))),
            None => Ok(()),
        }
    }

    fn register(&self, s: Session) -> Result<Table> {
        self.persist(&s)?;
        let table = s.table();
        self.sessions.write().insert(s.id().to_string(), Arc::new(RwLock::new(s)));
        Ok(table)
    }

    /// Start a session; ids are `s1`, `s2`, ... in creation order.
    pub fn create_session(&self, spec: Spec) -> Result<Table> {
        spec.check()?;
        let id = format!("s{}", self.next_session.load(Ordering::SeqCst));
        let s = Session::new(id, spec, self.cache.clone())?;
        self.next_session.fetch_add(1, Ordering::SeqCst);
        self.register(s)
    }

    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let s = self.session(id)?;
        let mut guard = s.write();
        let out = f(&mut guard)?;
        self.persist(&guard)?;
        Ok(out)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T>) -> Result<T> {
        let s = self.session(id)?;
        let guard = s.read();
        f(&guard)
    }

    pub fn table(&self, id: &str) -> Result<Table> {
        self.read(id, |s| Ok(s.table()))
    }

    pub fn add_candidate(&self, id: &str, e: Expr, provenance: Provenance) -> Result<Candidate> {
        self.mutate(id, |s| s.add_candidate(e, provenance).cloned())
    }

    pub fn preview_candidate(&self, id: &str, e: Expr, provenance: Provenance) -> Result<Candidate> {
        let s = self.session(id)?;
        let mut guard = s.write();
        guard.preview(e, provenance)
    }

    pub fn sample(&self, id: &str) -> Result<Arc<Sample>> {
        self.read(id, |s| Ok(s.sample().clone()))
    }

    pub fn session_stats(&self, id: &str) -> Result<SessionStats> {
        self.read(id, |s| Ok(s.stats()))
    }

    pub fn set_range(&self, id: &str, ranges: &[VarRange]) -> Result<Table> {
        self.mutate(id, |s| s.set_range(ranges))
    }

    pub fn set_visible(&self, id: &str, cid: CandidateId, visible: bool) -> Result<Candidate> {
        self.mutate(id, |s| s.set_visible(cid, visible).cloned())
    }

    pub fn errors(&self, id: &str, cid: CandidateId) -> Result<ErrorReport> {
        self.read(id, |s| s.errors(cid))
    }

    pub fn local_error(&self, id: &str, cid: CandidateId, point: &[f64]) -> Result<LocalErrorTree> {
        self.read(id, |s| s.local_error(cid, point))
    }

    pub fn combine(&self, id: &str, cids: &[CandidateId], var: &str, cfg: &RegimeConfig) -> Result<Candidate> {
        self.mutate(id, |s| s.combine(cids, var, cfg).cloned())
    }

    /// Queue a search from one candidate. Returns the job id at once.
    pub fn run_suggest(&self, id: &str, start: CandidateId, opts: &SuggestOptions) -> Result<String> {
        let (sample, expr) = self.read(id, |s| Ok((s.sample().clone(), s.candidate(start)?.expr.clone())))?;
        let d = &self.config.search;
        let cfg = SearchConfig {
            k: opts.k.unwrap_or(d.k),
            beam: opts.beam.unwrap_or(d.beam),
            depth: opts.depth.unwrap_or(d.depth),
            budget: opts.budget.unwrap_or(d.budget),
        };
        Ok(self.jobs.submit(id, start, expr, sample, cfg))
    }

    /// Job status. Finished results are appended to the session's table on
    /// the first poll that sees them, in rank order. A result equal to the
    /// start expression is reported as the existing start row.
    pub fn poll_job(&self, jid: &str) -> Result<JobView> {
        let job = self.jobs.get(jid)?;
        let mut state = job.state.lock();
        if let Some(found) = state.found.take() {
            let appended = self.mutate(&job.session, |s| {
                let start = s.candidate(job.start)?.expr.clone();
                let mut out = Vec::new();
                for c in found {
                    if c.expr == start {
                        out.push(s.candidate(job.start)?.clone());
                    } else {
                        out.push(s.add_derived(c)?.clone());
                    }
                }
                Ok(out)
            });
            match appended {
                Ok(out) => state.results = Some(out),
                Err(e) => {
                    state.status = JobStatus::Failed;
                    state.error = Some((e.code(), e.to_string()));
                }
            }
        }
        Ok(job.view(&state))
    }

    /// Cancel a queued or running job. Finished jobs are left as they are.
    pub fn cancel_job(&self, jid: &str) -> Result<JobView> {
        self.jobs.cancel(jid)?;
        self.poll_job(jid)
    }

    /// Block until a job leaves the queued and running states, then poll it.
    pub fn wait_job(&self, jid: &str) -> Result<JobView> {
        self.jobs.wait(jid)?;
        self.poll_job(jid)
    }

    pub fn save_session(&self, id: &str, path: &Path) -> Result<()> {
        self.read(id, |s| s.snapshot().save(path))
    }

    /// Load a snapshot as a new session under its stored id.
    pub fn load_session(&self, path: &Path) -> Result<Table> {
        let snap = Snapshot::load(path)?;
        if self.sessions.read().contains_key(&snap.id) {
            return Err(Error::Snapshot(format!("session `{}` already exists", snap.id)));
        }
        if let Some(n) = snap.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
            self.next_session.fetch_max(n + 1, Ordering::SeqCst);
        }
        let s = Session::restore(snap, self.cache.clone())?;
        self.register(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_math;

    fn spec(text: &str, lo: f64, hi: f64) -> Spec {
        let e = parse_math(text).unwrap();
        Spec::new(e, vec![VarRange::new("x", lo, hi)], 64, 42).unwrap()
    }

    fn bench() -> Workbench {
        Workbench::new(WorkbenchConfig {
            search: SearchConfig { depth: 2, beam: 4, ..SearchConfig::default() },
            ..WorkbenchConfig::default()
        })
    }

    #[test]
    fn create_seeds_naive_row() {
        let wb = bench();
        let t = wb.create_session(spec("x", 0.0, 1.0)).unwrap();
        assert_eq!(t.session_id, "s1");
        assert_eq!(t.candidates.len(), 1);
        assert_eq!(t.candidates[0].average(), Some(0.0));
        assert!(wb.create_session(spec("x", 0.0, 1.0)).is_ok());
        assert_eq!(wb.session_ids(), ["s1", "s2"]);
    }

    #[test]
    fn duplicates_and_unbound() {
        let wb = bench();
        wb.create_session(spec("x + 1 - x", 0.0, 1e20)).unwrap();
        let c = wb.add_candidate("s1", parse_math("x + 1 - x").unwrap(), Provenance::UserEntered).unwrap();
        assert_eq!((c.id, c.duplicate_of), (1, Some(0)));
        let err = wb.add_candidate("s1", parse_math("y").unwrap(), Provenance::UserEntered).unwrap_err();
        assert_eq!(err.code(), "unbound_variable");
        assert_eq!(wb.table("s1").unwrap().candidates.len(), 2);
    }

    #[test]
    fn range_change_keeps_visible_rows_coherent() {
        let wb = bench();
        wb.create_session(spec("x + 1 - x", 0.0, 1e20)).unwrap();
        wb.add_candidate("s1", parse_math("1").unwrap(), Provenance::UserEntered).unwrap();
        wb.set_visible("s1", 1, false).unwrap();
        let t = wb.set_range("s1", &[VarRange::new("x", 1.0, 2.0)]).unwrap();
        assert_eq!(t.candidates[0].report.as_ref().unwrap().spec_key, t.spec_key);
        assert_ne!(t.candidates[1].report.as_ref().unwrap().spec_key, t.spec_key);
        assert_eq!(wb.errors("s1", 1).unwrap().spec_key, t.spec_key);
        let shown = wb.set_visible("s1", 1, true).unwrap();
        assert_eq!(shown.report.as_ref().unwrap().spec_key, t.spec_key);

        let before = wb.table("s1").unwrap();
        let err = wb.set_range("s1", &[VarRange::new("x", 2.0, 1.0)]).unwrap_err();
        assert_eq!(err.code(), "invalid_range");
        assert_eq!(wb.table("s1").unwrap(), before);
    }

    #[test]
    fn suggest_job_appends_on_poll() {
        let wb = bench();
        wb.create_session(spec("sqrt(x * x + 1)", 0.0, 1e308)).unwrap();
        let jid = wb.run_suggest("s1", 0, &SuggestOptions::default()).unwrap();
        assert_eq!(jid, "j1");
        let v = wb.wait_job(&jid).unwrap();
        assert_eq!(v.status, JobStatus::Done);
        let results = v.results.unwrap();
        assert!(!results.is_empty() && results.len() <= 5);
        let added: Vec<_> = results.iter().filter(|c| c.id != 0).collect();
        let t = wb.table("s1").unwrap();
        assert_eq!(t.candidates.len(), 1 + added.len());
        assert!(added.iter().all(|c| c.provenance == Provenance::Generated));
        // Polling again does not append twice.
        wb.poll_job(&jid).unwrap();
        assert_eq!(wb.table("s1").unwrap().candidates.len(), t.candidates.len());
        assert_eq!(wb.poll_job("j99").unwrap_err().code(), "job_not_found");
    }

    #[test]
    fn cancelled_job_leaves_table() {
        let wb = Workbench::new(WorkbenchConfig { workers: 1, ..WorkbenchConfig::default() });
        wb.create_session(spec("log(x + sqrt(x * x + 1))", 0.0, 1e308)).unwrap();
        let a = wb.run_suggest("s1", 0, &SuggestOptions::default()).unwrap();
        let b = wb.run_suggest("s1", 0, &SuggestOptions::default()).unwrap();
        assert_eq!(wb.cancel_job(&b).unwrap().status, JobStatus::Cancelled);
        assert_eq!(wb.cancel_job(&a).unwrap().status, JobStatus::Cancelled);
        assert_eq!(wb.wait_job(&a).unwrap().status, JobStatus::Cancelled);
        assert_eq!(wb.table("s1").unwrap().candidates.len(), 1);
    }

    #[test]
    fn repeated_analysis_hits_caches() {
        let wb = bench();
        wb.create_session(spec("x + 1 - x", 0.0, 1e20)).unwrap();
        let before = wb.cache_stats();
        let s = wb.session("s1").unwrap();
        let e = parse_math("1").unwrap();
        s.write().analyze(&e).unwrap();
        s.write().analyze(&e).unwrap();
        assert_eq!(s.read().stats().report_hits, 1);
        assert_eq!(wb.cache_stats().exact_evaluations, before.exact_evaluations);
        wb.set_range("s1", &[VarRange::new("x", 1.0, 2.0)]).unwrap();
        let mid = wb.cache_stats();
        wb.set_range("s1", &[VarRange::new("x", 0.0, 1e20)]).unwrap();
        assert_eq!(wb.cache_stats(), mid);
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = std::env::temp_dir().join(format!("fpwb-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let wb = Workbench::new(WorkbenchConfig { snapshot_dir: Some(dir.clone()), ..WorkbenchConfig::default() });
        wb.create_session(spec("x + 1 - x", 0.0, 1e20)).unwrap();
        wb.add_candidate("s1", parse_math("1").unwrap(), Provenance::UserEntered).unwrap();
        let t = wb.table("s1").unwrap();

        let other = Workbench::default();
        assert_eq!(other.load_session(&dir.join("s1.json")).unwrap(), t);
        assert_eq!(other.create_session(spec("x", 0.0, 1.0)).unwrap().session_id, "s2");
        assert!(other.load_session(&dir.join("s1.json")).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
