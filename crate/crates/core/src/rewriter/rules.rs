//! The built-in rule catalog.

use std::fmt::Write;
use std::sync::OnceLock;

use rug::Rational;
use serde::Serialize;

use super::pattern::{self, Bindings};
use crate::expr::{emit_math, parse_math, Expr, Literal, Op};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Soundness {
    ExactIdentity,
    GuardedApproximation,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Pattern(Expr),
    /// Evaluate the operator on literal operands exactly.
    Fold,
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: &'static str,
    pub lhs: Expr,
    pub rhs: Rhs,
    /// For approximations: the condition under which `rhs` is used.
    pub guard: Option<Expr>,
    pub soundness: Soundness,
}

/// Bound below which the low-order series are accurate to binary64.
const SMALL: &str = "1.490116119384765625e-8";
/// Bound above which the large-argument asymptotics are.
const LARGE: &str = "134217728";

const IDENTITIES: &[(&str, &str, &str)] = &[
    ("add-commute", "a + b", "b + a"),
    ("mul-commute", "a * b", "b * a"),
    ("hypot-commute", "hypot(a, b)", "hypot(b, a)"),
    ("add-assoc-left", "(a + b) + c", "a + (b + c)"),
    ("add-assoc-right", "a + (b + c)", "(a + b) + c"),
    ("mul-assoc-left", "(a * b) * c", "a * (b * c)"),
    ("mul-assoc-right", "a * (b * c)", "(a * b) * c"),
    ("add-sub-assoc", "(a + b) - c", "a + (b - c)"),
    ("sub-add-assoc", "a + (b - c)", "(a + b) - c"),
    ("sub-sub-assoc", "(a - b) - c", "a - (b + c)"),
    ("sub-add-split", "a - (b + c)", "(a - b) - c"),
    ("sub-sub-flip", "a - (b - c)", "(a - b) + c"),
    ("mul-div-assoc", "(a * b) / c", "a * (b / c)"),
    ("div-mul-assoc", "a * (b / c)", "(a * b) / c"),
    ("div-div", "a / (b / c)", "(a * c) / b"),
    ("distribute", "a * (b + c)", "a * b + a * c"),
    ("factor", "a * b + a * c", "a * (b + c)"),
    ("distribute-sub", "a * (b - c)", "a * b - a * c"),
    ("factor-sub", "a * b - a * c", "a * (b - c)"),
    ("sub-to-neg", "a - b", "a + -b"),
    ("neg-to-sub", "a + -b", "a - b"),
    ("neg-sub", "-(a - b)", "b - a"),
    ("neg-neg", "-(-a)", "a"),
    ("neg-mul", "-(a * b)", "(-a) * b"),
    ("diff-squares", "a * a - b * b", "(a - b) * (a + b)"),
    ("diff-squares-rev", "(a - b) * (a + b)", "a * a - b * b"),
    ("pow2-to-mul", "pow(a, 2)", "a * a"),
    ("mul-to-pow2", "a * a", "pow(a, 2)"),
    ("sqrt-square", "sqrt(a * a)", "fabs(a)"),
    ("hypot-intro", "sqrt(a * a + b * b)", "hypot(a, b)"),
    ("hypot-flip", "hypot(1, a) - 1", "a * (a / (hypot(1, a) + 1))"),
    ("hypot-flip-rev", "hypot(a, 1) - 1", "a * (a / (hypot(a, 1) + 1))"),
    ("log1p-intro", "log(1 + t)", "log1p(t)"),
    ("log1p-intro-rev", "log(t + 1)", "log1p(t)"),
    ("log-to-log1p", "log(a)", "log1p(a - 1)"),
    ("expm1-intro", "exp(t) - 1", "expm1(t)"),
    ("expm1-intro-rev", "1 - exp(t)", "-expm1(t)"),
    ("exp-sum", "exp(a + b)", "exp(a) * exp(b)"),
    ("exp-neg", "exp(-a)", "1 / exp(a)"),
    ("log-prod", "log(a * b)", "log(a) + log(b)"),
    ("log-div", "log(a / b)", "log(a) - log(b)"),
    ("exp-log", "exp(log(a))", "a"),
    ("log-exp", "log(exp(a))", "a"),
    ("log1p-expm1", "log1p(expm1(a))", "a"),
    ("pow-exp", "pow(a, b)", "exp(b * log(a))"),
    ("fma-intro", "a * b + c", "fma(a, b, c)"),
    ("fma-intro-rev", "c + a * b", "fma(a, b, c)"),
    ("fma-expand", "fma(a, b, c)", "a * b + c"),
    ("sqrt-diff-flip", "sqrt(a) - sqrt(b)", "(a - b) / (sqrt(a) + sqrt(b))"),
    ("sqrt-sub-flip", "sqrt(a) - b", "(a - b * b) / (sqrt(a) + b)"),
    ("sub-sqrt-flip", "a - sqrt(b)", "(a * a - b) / (a + sqrt(b))"),
    ("div-renorm", "a / (a + b)", "1 / (1 + b / a)"),
    ("div-split", "(a + b) / c", "a / c + b / c"),
    ("div-combine", "a / c + b / c", "(a + b) / c"),
    ("div-lift", "(a + b) / a", "1 + b / a"),
    ("sin-neg", "sin(-a)", "-sin(a)"),
    ("cos-neg", "cos(-a)", "cos(a)"),
    ("tan-quot", "tan(a)", "sin(a) / cos(a)"),
    ("one-minus-cos", "1 - cos(a)", "2 * (sin(a / 2) * sin(a / 2))"),
    ("cosh-def", "exp(a) + exp(-a)", "2 * cosh(a)"),
    ("sinh-def", "exp(a) - exp(-a)", "2 * sinh(a)"),
    ("mul-one", "a * 1", "a"),
    ("add-zero", "a + 0", "a"),
    ("sub-zero", "a - 0", "a"),
    ("div-one", "a / 1", "a"),
];

const FOLDS: &[(&str, &str)] = &[
    ("fold-add", "a + b"),
    ("fold-sub", "a - b"),
    ("fold-mul", "a * b"),
    ("fold-div", "a / b"),
];

// (name, lhs, approximation, guard); `S` and `L` stand for the bounds above.
const APPROXIMATIONS: &[(&str, &str, &str, &str)] = &[
    ("log1p-series", "log(1 + t)", "t - t * t / 2", "fabs(t) <= S"),
    ("log1p-fn-series", "log1p(t)", "t - t * t / 2", "fabs(t) <= S"),
    ("expm1-series", "exp(t) - 1", "t + t * t / 2", "fabs(t) <= S"),
    ("sqrt1p-series", "sqrt(1 + t) - 1", "t / 2 - t * t / 8", "fabs(t) <= S"),
    ("one-minus-cos-series", "1 - cos(t)", "t * t / 2", "fabs(t) <= S"),
    ("sin-series", "sin(t)", "t", "fabs(t) <= S"),
    ("tan-series", "tan(t)", "t", "fabs(t) <= S"),
    ("sinh-series", "sinh(t)", "t", "fabs(t) <= S"),
    ("asinh-small", "log(a + sqrt(a * a + 1))", "a", "fabs(a) <= S"),
    ("asinh-large", "log(a + sqrt(a * a + 1))", "log(a) + log(2)", "a >= L"),
    ("sqrt-square-large", "sqrt(a * a + 1)", "fabs(a)", "fabs(a) >= L"),
];

fn pat(text: &str) -> Expr {
    let text = text.replace('S', SMALL).replace('L', LARGE);
    parse_math(&text).unwrap_or_else(|e| panic!("bad rule pattern `{text}`: {e}"))
}

fn guard_pat(text: &str) -> Expr {
    let wrapped = format!("if {} then 0 else 0", text.replace('S', SMALL).replace('L', LARGE));
    match parse_math(&wrapped) {
        Ok(Expr::Op(Op::If, mut args)) => args.swap_remove(0),
        other => panic!("bad guard `{text}`: {other:?}"),
    }
}

/// The built-in catalog, in a fixed order.
pub fn rule_db() -> &'static [RewriteRule] {
    static DB: OnceLock<Vec<RewriteRule>> = OnceLock::new();
    DB.get_or_init(|| {
        let mut rules = Vec::new();
        for (name, lhs, rhs) in IDENTITIES {
            rules.push(RewriteRule {
                name,
                lhs: pat(lhs),
                rhs: Rhs::Pattern(pat(rhs)),
                guard: None,
                soundness: Soundness::ExactIdentity,
            });
        }
        for (name, lhs) in FOLDS {
            rules.push(RewriteRule {
                name,
                lhs: pat(lhs),
                rhs: Rhs::Fold,
                guard: None,
                soundness: Soundness::ExactIdentity,
            });
        }
        for (name, lhs, rhs, guard) in APPROXIMATIONS {
            rules.push(RewriteRule {
                name,
                lhs: pat(lhs),
                rhs: Rhs::Pattern(pat(rhs)),
                guard: Some(guard_pat(guard)),
                soundness: Soundness::GuardedApproximation,
            });
        }
        rules
    })
}

pub fn find_rule(name: &str) -> Option<&'static RewriteRule> {
    rule_db().iter().find(|r| r.name == name)
}

fn literal_value(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Num(n) => Some(n.to_rational()),
        Expr::Op(Op::Neg, a) => match &a[0] {
            Expr::Num(n) => Some(-n.to_rational()),
            _ => None,
        },
        _ => None,
    }
}

fn literal_expr(v: &Rational) -> Option<Expr> {
    if *v < 0 {
        Some(Expr::unary(Op::Neg, Expr::Num(Literal::from_rational(&-v.clone())?)))
    } else {
        Some(Expr::Num(Literal::from_rational(v)?))
    }
}

fn fold(op: Op, b: &Bindings) -> Option<Expr> {
    let x = literal_value(&b["a"])?;
    let y = literal_value(&b["b"])?;
    let v = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x * y,
        Op::Div if y != 0 => x / y,
        _ => return None,
    };
    literal_expr(&v)
}

impl RewriteRule {
    /// Rewrite `e` at its root, if the rule matches.
    pub fn apply(&self, e: &Expr) -> Option<Expr> {
        let b = pattern::matches(&self.lhs, e)?;
        match &self.rhs {
            Rhs::Fold => fold(self.lhs.head()?, &b),
            Rhs::Pattern(rhs) => {
                let out = pattern::instantiate(rhs, &b);
                Some(match &self.guard {
                    Some(g) => Expr::if_(pattern::instantiate(g, &b), out, e.clone()),
                    None => out,
                })
            }
        }
    }

    pub fn metavariables(&self) -> (Vec<String>, Vec<String>) {
        let mut l = self.lhs.free_vars();
        l.sort();
        let mut r = match &self.rhs {
            Rhs::Pattern(p) => p.free_vars(),
            Rhs::Fold => l.clone(),
        };
        r.sort();
        (l, r)
    }

    pub fn rhs_text(&self) -> String {
        match &self.rhs {
            Rhs::Pattern(p) => emit_math(p),
            Rhs::Fold => "exact constant".to_string(),
        }
    }
}

/// Catalog entry as served to clients.
#[derive(Clone, Debug, Serialize)]
pub struct RuleInfo {
    pub name: &'static str,
    pub lhs: String,
    pub rhs: String,
    pub guard: Option<String>,
    pub soundness: Soundness,
}

pub fn rule_infos() -> Vec<RuleInfo> {
    rule_db()
        .iter()
        .map(|r| RuleInfo {
            name: r.name,
            lhs: emit_math(&r.lhs),
            rhs: r.rhs_text(),
            guard: r.guard.as_ref().map(emit_math),
            soundness: r.soundness,
        })
        .collect()
}

/// The catalog as a Markdown table.
pub fn rule_table() -> String {
    let mut out = String::from("| name | rewrites | into | guard | kind |\n|---|---|---|---|---|\n");
    for r in rule_infos() {
        let _ = writeln!(
            out,
            "| {} | `{}` | `{}` | {} | {} |",
            r.name,
            r.lhs,
            r.rhs,
            r.guard.map(|g| format!("`{g}`")).unwrap_or_default(),
            match r.soundness {
                Soundness::ExactIdentity => "identity",
                Soundness::GuardedApproximation => "approximation",
            }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(name: &str, text: &str) -> Option<String> {
        find_rule(name).unwrap().apply(&parse_math(text).unwrap()).map(|e| emit_math(&e))
    }

    #[test]
    fn catalog_is_well_formed() {
        let db = rule_db();
        assert!(db.len() >= 40);
        let mut names: Vec<_> = db.iter().map(|r| r.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), db.len());
        for r in db {
            let (l, rhs) = r.metavariables();
            assert_eq!(l, rhs, "{}", r.name);
        }
    }

    #[test]
    fn required_rules_present() {
        for name in [
            "add-commute",
            "add-assoc-left",
            "distribute",
            "diff-squares",
            "hypot-intro",
            "log1p-intro",
            "expm1-intro",
            "fma-intro",
            "sqrt-diff-flip",
            "div-renorm",
            "log1p-series",
            "fold-add",
        ] {
            assert!(find_rule(name).is_some(), "{name}");
        }
        assert_eq!(find_rule("log1p-series").unwrap().soundness, Soundness::GuardedApproximation);
    }

    #[test]
    fn applications() {
        assert_eq!(apply("hypot-intro", "sqrt(x * x + 1)").as_deref(), Some("hypot(x, 1)"));
        assert_eq!(apply("log1p-intro", "log(1 + u)").as_deref(), Some("log1p(u)"));
        assert_eq!(apply("log1p-intro", "log(2 + u)"), None);
        assert_eq!(
            apply("diff-squares", "(x + 1) * (x + 1) - x * x").as_deref(),
            Some("(x + 1 - x) * (x + 1 + x)")
        );
        assert_eq!(apply("fold-mul", "0.5 * 3").as_deref(), Some("1.5"));
        assert_eq!(apply("fold-sub", "1 - 3").as_deref(), Some("-2"));
        assert_eq!(apply("fold-div", "1 / 3"), None);
        assert_eq!(apply("fold-div", "1 / 0"), None);
        assert_eq!(apply("fold-add", "x + 3"), None);
    }

    #[test]
    fn approximations_are_guarded() {
        let out = apply("log1p-series", "log(1 + y)").unwrap();
        assert_eq!(
            out,
            "if fabs(y) <= 1.490116119384765625e-8 then y - y * y / 2 else log(1 + y)"
        );
    }

    #[test]
    fn table_lists_every_rule() {
        let t = rule_table();
        assert_eq!(t.lines().count(), rule_db().len() + 2);
    }
}
