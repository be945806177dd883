//! Syntactic matching of rule patterns.
//!
//! Patterns are ordinary expressions whose variables are metavariables. A
//! literal in a pattern matches any literal with the same exact value. The
//! pattern `m * m` also matches a literal that is the square of a
//! terminating decimal, binding `m` to the root (so `1` matches as `1 * 1`).

use std::collections::BTreeMap;

use crate::expr::{Expr, Literal, Op};

pub type Bindings = BTreeMap<String, Expr>;

pub fn matches(pat: &Expr, e: &Expr) -> Option<Bindings> {
    let mut b = Bindings::new();
    bind(pat, e, &mut b).then_some(b)
}

fn bind(pat: &Expr, e: &Expr, b: &mut Bindings) -> bool {
    match (pat, e) {
        (Expr::Var(m), _) => match b.get(m) {
            Some(prev) => prev == e,
            None => {
                b.insert(m.clone(), e.clone());
                true
            }
        },
        (Expr::Num(p), Expr::Num(n)) => p == n || p.to_rational() == n.to_rational(),
        (Expr::Const(p), Expr::Const(c)) => p == c,
        (Expr::Op(Op::Mul, pa), Expr::Num(n)) => match (&pa[0], &pa[1]) {
            (Expr::Var(m1), Expr::Var(m2)) if m1 == m2 => match square_root(n) {
                Some(root) => bind(&pa[0], &Expr::Num(root), b),
                None => false,
            },
            _ => false,
        },
        (Expr::Op(po, pa), Expr::Op(eo, ea)) => {
            po == eo && pa.len() == ea.len() && pa.iter().zip(ea).all(|(p, x)| bind(p, x, b))
        }
        _ => false,
    }
}

fn square_root(n: &Literal) -> Option<Literal> {
    let r = n.to_rational();
    let (num, den) = (r.numer(), r.denom());
    if !num.is_perfect_square() || !den.is_perfect_square() {
        return None;
    }
    let root = rug::Rational::from((num.clone().sqrt(), den.clone().sqrt()));
    Literal::from_rational(&root)
}

pub fn instantiate(pat: &Expr, b: &Bindings) -> Expr {
    match pat {
        Expr::Var(m) => b.get(m).cloned().unwrap_or_else(|| pat.clone()),
        Expr::Op(op, args) => Expr::Op(*op, args.iter().map(|a| instantiate(a, b)).collect()),
        _ => pat.clone(),
    }
}
