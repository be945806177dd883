//! Candidate generation: rule-driven beam search with recorded derivations,
//! and regime inference that splices candidates together with branches.

pub mod pattern;
mod regimes;
pub mod rules;
mod search;

use serde::{Deserialize, Serialize};

use crate::analysis::ErrorReport;
use crate::error::{Error, Result};
use crate::expr::{self, Expr, Op};
use crate::float;

pub use regimes::{infer_regimes, RegimeConfig, DEFAULT_LAMBDA};
pub use rules::{find_rule, rule_db, rule_infos, rule_table, RewriteRule, RuleInfo, Soundness};
pub use search::{suggest, SearchConfig};

pub type CandidateId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserEntered,
    Generated,
    Combined,
}

/// One branch of a combined candidate: used for inputs up to `upper`
/// (inclusive), or for everything remaining when `upper` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub candidate: Option<CandidateId>,
    #[serde(with = "expr::text")]
    pub expr: Expr,
    #[serde(with = "float::hex::option", default)]
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeStep {
    pub var: String,
    pub segments: Vec<Segment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub rule: String,
    pub path: Vec<usize>,
    #[serde(with = "expr::text")]
    pub before: Expr,
    #[serde(with = "expr::text")]
    pub after: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regimes: Option<RegimeStep>,
}

pub const REGIMES_RULE: &str = "regimes";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Derivation {
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub(crate) fn then(&self, step: Step) -> Derivation {
        let mut steps = self.steps.clone();
        steps.push(step);
        Derivation { steps }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    #[serde(with = "expr::text")]
    pub expr: Expr,
    pub provenance: Provenance,
    pub derivation: Derivation,
    pub report: Option<ErrorReport>,
    pub visible: bool,
    #[serde(default)]
    pub duplicate_of: Option<CandidateId>,
}

impl Candidate {
    pub fn new(id: CandidateId, expr: Expr, provenance: Provenance) -> Candidate {
        Candidate {
            id,
            expr,
            provenance,
            derivation: Derivation::default(),
            report: None,
            visible: true,
            duplicate_of: None,
        }
    }

    pub fn average(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.average)
    }
}

/// Whether `path` in `e` lies inside an if-condition or an if-branch.
pub(crate) fn under_if(e: &Expr, path: &[usize]) -> (bool, bool) {
    let mut cur = e;
    let mut in_branch = false;
    for &i in path {
        if cur.head() == Some(Op::If) {
            if i == 0 {
                return (true, in_branch);
            }
            in_branch = true;
        }
        match cur.children().get(i) {
            Some(c) => cur = c,
            None => break,
        }
    }
    (false, in_branch)
}

/// Apply a rule at `path`, returning the rewritten whole expression.
pub fn apply_at(rule: &RewriteRule, e: &Expr, path: &[usize]) -> Option<Expr> {
    let sub = e.at(path)?;
    let new = rule.apply(sub)?;
    e.replace_at(path, new)
}

/// Re-run a derivation from `start`, checking every recorded step.
pub fn replay(derivation: &Derivation, start: &Expr) -> Result<Expr> {
    let mut cur = start.clone();
    for (i, step) in derivation.steps.iter().enumerate() {
        if step.before != cur {
            return Err(Error::Divergence {
                step: i,
                message: format!("expected `{}`, have `{}`", step.before, cur),
            });
        }
        let next = if let Some(reg) = &step.regimes {
            Some(regimes::build(&reg.var, &reg.segments))
        } else {
            let rule = find_rule(&step.rule).ok_or_else(|| Error::Divergence {
                step: i,
                message: format!("unknown rule `{}`", step.rule),
            })?;
            apply_at(rule, &cur, &step.path)
        };
        match next {
            Some(n) if n == step.after => cur = n,
            Some(n) => {
                return Err(Error::Divergence {
                    step: i,
                    message: format!("`{}` produced `{}`, recorded `{}`", step.rule, n, step.after),
                })
            }
            None => {
                return Err(Error::Divergence {
                    step: i,
                    message: format!("`{}` does not apply at {:?}", step.rule, step.path),
                })
            }
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_math;

    fn step(rule: &str, path: &[usize], before: &str) -> Step {
        let before = parse_math(before).unwrap();
        let after = apply_at(find_rule(rule).unwrap(), &before, path).unwrap();
        Step { rule: rule.into(), path: path.to_vec(), before, after, regimes: None }
    }

    #[test]
    fn replay_empty_is_identity() {
        let e = parse_math("x + 1").unwrap();
        assert_eq!(replay(&Derivation::default(), &e).unwrap(), e);
    }

    #[test]
    fn replay_reproduces_and_detects_tampering() {
        let s1 = step("hypot-intro", &[], "sqrt(x * x + 1)");
        let s2 = step("hypot-commute", &[], &s1.after.to_string());
        let d = Derivation { steps: vec![s1, s2] };
        let start = parse_math("sqrt(x * x + 1)").unwrap();
        assert_eq!(replay(&d, &start).unwrap().to_string(), "hypot(1, x)");

        let mut bad = d.clone();
        bad.steps[1].after = parse_math("hypot(2, x)").unwrap();
        assert!(matches!(replay(&bad, &start), Err(Error::Divergence { step: 1, .. })));
        let mut bad = d;
        bad.steps[0].rule = "log1p-intro".into();
        assert!(matches!(replay(&bad, &start), Err(Error::Divergence { step: 0, .. })));
    }

    #[test]
    fn derivation_json() {
        let d = Derivation { steps: vec![step("log1p-intro", &[], "log(1 + x)")] };
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(
            text,
            r#"[{"rule":"log1p-intro","path":[],"before":"log(1 + x)","after":"log1p(x)"}]"#
        );
        let back: Derivation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn if_positions() {
        let e = parse_math("if x < 1 then x + 1 else x").unwrap();
        assert_eq!(under_if(&e, &[0, 0]), (true, false));
        assert_eq!(under_if(&e, &[1, 0]), (false, true));
        assert_eq!(under_if(&e, &[]), (false, false));
    }
}
