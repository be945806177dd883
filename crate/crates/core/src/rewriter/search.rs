use std::cmp::Ordering as CmpOrdering;
use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::rules::{rule_db, Soundness};
use super::{apply_at, under_if, Candidate, Derivation, Provenance, Step};
use crate::analysis::{self, ErrorReport};
use crate::error::{Error, Result};
use crate::eval::Program;
use crate::expr::{emit_math, Expr};
use crate::sampler::Sample;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub beam: usize,
    pub depth: usize,
    pub k: usize,
    pub budget: Duration,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { beam: 16, depth: 4, k: 5, budget: Duration::from_secs(20) }
    }
}

#[derive(Clone)]
struct Node {
    expr: Expr,
    text: String,
    derivation: Derivation,
    report: ErrorReport,
}

fn rank(a: &Node, b: &Node) -> CmpOrdering {
    a.report
        .average
        .total_cmp(&b.report.average)
        .then(a.expr.size().cmp(&b.expr.size()))
        .then_with(|| a.text.cmp(&b.text))
}

fn size_limit(start: &Expr) -> usize {
    (start.size() * 2).max(start.size() + 16)
}

/// Every single-rule rewrite of `e` not yet in `seen`.
fn expand(e: &Expr, derivation: &Derivation, limit: usize, seen: &mut HashSet<Expr>) -> Vec<(Expr, Derivation)> {
    let mut out = Vec::new();
    for path in e.paths() {
        let (in_cond, in_branch) = under_if(e, &path);
        if in_cond {
            continue;
        }
        for rule in rule_db() {
            if in_branch && rule.soundness == Soundness::GuardedApproximation {
                continue;
            }
            let Some(next) = apply_at(rule, e, &path) else { continue };
            if next.size() > limit || next.validate().is_err() || !seen.insert(next.clone()) {
                continue;
            }
            let step = Step {
                rule: rule.name.to_string(),
                path: path.clone(),
                before: e.clone(),
                after: next.clone(),
                regimes: None,
            };
            out.push((next, derivation.then(step)));
        }
    }
    out
}

fn finish(all: &[Node], start_avg: f64, k: usize) -> Vec<Candidate> {
    let mut ranked: Vec<&Node> = all.iter().filter(|n| n.report.average <= start_avg).collect();
    ranked.sort_by(|a, b| rank(a, b));
    ranked
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, n)| Candidate {
            id: i as u64,
            expr: n.expr.clone(),
            provenance: if n.derivation.is_empty() { Provenance::UserEntered } else { Provenance::Generated },
            derivation: n.derivation.clone(),
            report: Some(n.report.clone()),
            visible: true,
            duplicate_of: None,
        })
        .collect()
}

/// Beam search from `start` over the rule catalog, scoring on `sample`.
///
/// Returns up to `k` distinct candidates ordered by average error, never
/// worse than `start`. Ids are ranks within the result. When the budget runs
/// out (or `cancel` is raised) the best results so far are returned inside
/// [`Error::Timeout`].
pub fn suggest(
    sample: &Sample,
    start: &Expr,
    cfg: &SearchConfig,
    cancel: Option<&AtomicBool>,
) -> Result<Vec<Candidate>> {
    let began = Instant::now();
    let report = analysis::analyze(start, sample)?;
    let start_avg = report.average;
    let root = Node { text: emit_math(start), expr: start.clone(), derivation: Derivation::default(), report };
    let limit = size_limit(start);
    let mut seen: HashSet<Expr> = HashSet::from([start.clone()]);
    let mut all = vec![root.clone()];
    let mut frontier = vec![root];

    let out_of_time = || {
        began.elapsed() > cfg.budget || cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    };

    for _ in 0..cfg.depth {
        let mut children = Vec::new();
        for node in &frontier {
            if out_of_time() {
                return Err(Error::Timeout {
                    budget_ms: cfg.budget.as_millis() as u64,
                    partial: finish(&all, start_avg, cfg.k),
                });
            }
            children.extend(expand(&node.expr, &node.derivation, limit, &mut seen));
        }
        if children.is_empty() {
            break;
        }
        let scored: Vec<Node> = children
            .into_par_iter()
            .map(|(expr, derivation)| {
                let prog = Program::new(&expr, &sample.vars).expect("rewrites keep variables bound");
                Node { text: emit_math(&expr), report: analysis::score(&prog, sample), expr, derivation }
            })
            .collect();
        all.extend(scored.iter().cloned());
        let mut pool = frontier;
        pool.extend(scored);
        pool.sort_by(rank);
        pool.truncate(cfg.beam);
        frontier = pool;
    }
    Ok(finish(&all, start_avg, cfg.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_math, Spec, VarRange};
    use crate::rewriter::replay;
    use crate::sampler::sample;

    fn setup(text: &str, lo: f64, hi: f64) -> (Expr, Sample) {
        let e = parse_math(text).unwrap();
        let spec = Spec::new(e.clone(), vec![VarRange::new("x", lo, hi)], 128, 42).unwrap();
        (e, sample(&spec).unwrap())
    }

    #[test]
    fn identity_returns_itself() {
        let (e, s) = setup("x", 0.0, 1.0);
        let cfg = SearchConfig { k: 1, ..SearchConfig::default() };
        let out = suggest(&s, &e, &cfg, None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].expr, e);
        assert_eq!(out[0].average(), Some(0.0));
    }

    #[test]
    fn finds_hypot_and_replays() {
        let (e, s) = setup("sqrt(x * x + 1)", 0.0, 1e308);
        let out = suggest(&s, &e, &SearchConfig::default(), None).unwrap();
        let start_avg = analysis::analyze(&e, &s).unwrap().average;
        assert!(out.iter().all(|c| c.average().unwrap() <= start_avg));
        let best = &out[0];
        assert!(best.expr.contains_op(crate::expr::Op::Hypot), "{}", best.expr);
        assert!(best.average().unwrap() <= 1.0);
        for c in &out {
            assert_eq!(replay(&c.derivation, &e).unwrap(), c.expr);
        }
    }

    #[test]
    fn cancellation_returns_partial() {
        let (e, s) = setup("sqrt(x * x + 1)", 0.0, 1e308);
        let flag = AtomicBool::new(true);
        match suggest(&s, &e, &SearchConfig::default(), Some(&flag)) {
            Err(Error::Timeout { partial, .. }) => assert_eq!(partial[0].expr, e),
            other => panic!("{other:?}"),
        }
    }
}
