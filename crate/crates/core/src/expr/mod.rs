//! Expression trees, the input specification, and the three text formats
//! (infix math, an FPCore subset, LaTeX).

mod emit;
mod fpcore;
mod literal;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use emit::{emit_fpcore, emit_latex, emit_math};
pub use fpcore::parse_fpcore;
pub use literal::Literal;
pub use parse::parse_math;

/// Default number of sampled points.
pub const DEFAULT_SAMPLE_SIZE: usize = 256;
/// Default sampling seed.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NamedConst {
    Pi,
    E,
    Infinity,
}

impl NamedConst {
    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "PI",
            NamedConst::E => "E",
            NamedConst::Infinity => "INFINITY",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "PI" => Some(NamedConst::Pi),
            "E" => Some(NamedConst::E),
            "INFINITY" => Some(NamedConst::Infinity),
            _ => None,
        }
    }
}

/// What position an operator may appear in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpClass {
    /// Produces a real value.
    Value,
    /// Compares two values; only inside an if-condition.
    Compare,
    /// `and` / `or` over comparisons.
    Logic,
    /// `if cond then a else b`.
    Branch,
}

macro_rules! ops {
    ($( $variant:ident => $name:literal, $arity:literal, $class:ident; )*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Op {
            $( $variant, )*
        }

        impl Op {
            pub const ALL: &'static [Op] = &[$( Op::$variant, )*];

            /// The FPCore operator name.
            pub fn name(self) -> &'static str {
                match self { $( Op::$variant => $name, )* }
            }

            pub fn arity(self) -> usize {
                match self { $( Op::$variant => $arity, )* }
            }

            pub fn class(self) -> OpClass {
                match self { $( Op::$variant => OpClass::$class, )* }
            }
        }
    };
}

ops! {
    Add => "+", 2, Value;
    Sub => "-", 2, Value;
    Mul => "*", 2, Value;
    Div => "/", 2, Value;
    Neg => "neg", 1, Value;
    Sqrt => "sqrt", 1, Value;
    Cbrt => "cbrt", 1, Value;
    Fabs => "fabs", 1, Value;
    Exp => "exp", 1, Value;
    Expm1 => "expm1", 1, Value;
    Log => "log", 1, Value;
    Log1p => "log1p", 1, Value;
    Pow => "pow", 2, Value;
    Hypot => "hypot", 2, Value;
    Fma => "fma", 3, Value;
    Sin => "sin", 1, Value;
    Cos => "cos", 1, Value;
    Tan => "tan", 1, Value;
    Asin => "asin", 1, Value;
    Acos => "acos", 1, Value;
    Atan => "atan", 1, Value;
    Atan2 => "atan2", 2, Value;
    Sinh => "sinh", 1, Value;
    Cosh => "cosh", 1, Value;
    Tanh => "tanh", 1, Value;
    Asinh => "asinh", 1, Value;
    Acosh => "acosh", 1, Value;
    Atanh => "atanh", 1, Value;
    Lt => "<", 2, Compare;
    Le => "<=", 2, Compare;
    Gt => ">", 2, Compare;
    Ge => ">=", 2, Compare;
    Eq => "==", 2, Compare;
    And => "and", 2, Logic;
    Or => "or", 2, Logic;
    If => "if", 3, Branch;
}

impl Op {
    /// Operators callable with function syntax in math text.
    pub fn is_function(self) -> bool {
        self.class() == OpClass::Value
            && !matches!(self, Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Neg)
    }

    pub fn function(name: &str) -> Option<Op> {
        Op::ALL
            .iter()
            .copied()
            .find(|op| op.is_function() && op.name() == name)
    }

    /// Names accepted in function-call position.
    pub fn function_names() -> Vec<&'static str> {
        Op::ALL
            .iter()
            .filter(|op| op.is_function())
            .map(|op| op.name())
            .collect()
    }
}

/// An expression over real-valued variables.
///
/// Comparisons and `and`/`or` only occur inside the condition of an `If`;
/// [`Expr::validate`] checks this together with operator arities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    Var(String),
    Num(Literal),
    Const(NamedConst),
    Op(Op, Vec<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn num(text: &str) -> Expr {
        Expr::Num(Literal::new(text).expect("valid literal"))
    }

    pub fn op(op: Op, args: Vec<Expr>) -> Expr {
        debug_assert_eq!(op.arity(), args.len(), "{}", op.name());
        Expr::Op(op, args)
    }

    pub fn unary(op: Op, a: Expr) -> Expr {
        Expr::op(op, vec![a])
    }

    pub fn binary(op: Op, a: Expr, b: Expr) -> Expr {
        Expr::op(op, vec![a, b])
    }

    pub fn if_(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::op(Op::If, vec![cond, then, otherwise])
    }

    pub fn children(&self) -> &[Expr] {
        match self {
            Expr::Op(_, args) => args,
            _ => &[],
        }
    }

    pub fn head(&self) -> Option<Op> {
        match self {
            Expr::Op(op, _) => Some(*op),
            _ => None,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Expr::depth).max().unwrap_or(0)
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Expr::Op(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    pub fn contains_op(&self, op: Op) -> bool {
        self.head() == Some(op) || self.children().iter().any(|c| c.contains_op(op))
    }

    /// Subterm at a child-index path.
    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i)?.at(rest),
        }
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], with: Expr) -> Option<Expr> {
        match path.split_first() {
            None => Some(with),
            Some((&i, rest)) => match self {
                Expr::Op(op, args) if i < args.len() => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, with)?;
                    Some(Expr::Op(*op, args))
                }
                _ => None,
            },
        }
    }

    /// All child-index paths in preorder.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.walk_paths(&mut cur, &mut out);
        out
    }

    fn walk_paths(&self, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        for (i, c) in self.children().iter().enumerate() {
            cur.push(i);
            c.walk_paths(cur, out);
            cur.pop();
        }
    }

    /// Check arities and that conditions only appear where they belong.
    pub fn validate(&self) -> Result<()> {
        self.validate_in(Position::Value)
    }

    fn validate_in(&self, pos: Position) -> Result<()> {
        match self {
            Expr::Var(_) | Expr::Num(_) | Expr::Const(_) => {
                if pos == Position::Condition {
                    return Err(Error::Unsupported(format!(
                        "`{}` used as a condition",
                        emit_math(self)
                    )));
                }
                Ok(())
            }
            Expr::Op(op, args) => {
                if args.len() != op.arity() {
                    return Err(Error::Arity {
                        name: op.name().to_string(),
                        expected: op.arity(),
                        found: args.len(),
                        offset: 0,
                    });
                }
                let ok = match op.class() {
                    OpClass::Value | OpClass::Branch => pos == Position::Value,
                    OpClass::Compare | OpClass::Logic => pos == Position::Condition,
                };
                if !ok {
                    return Err(Error::Unsupported(format!(
                        "`{}` is not allowed in {} position",
                        op.name(),
                        if pos == Position::Value { "value" } else { "condition" }
                    )));
                }
                match op.class() {
                    OpClass::Value | OpClass::Compare => {
                        args.iter().try_for_each(|a| a.validate_in(Position::Value))
                    }
                    OpClass::Logic => {
                        args.iter().try_for_each(|a| a.validate_in(Position::Condition))
                    }
                    OpClass::Branch => {
                        args[0].validate_in(Position::Condition)?;
                        args[1].validate_in(Position::Value)?;
                        args[2].validate_in(Position::Value)
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Position {
    Value,
    Condition,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_math(self))
    }
}

/// Input range of one variable, inclusive on both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarRange {
    pub name: String,
    #[serde(with = "crate::float::hex")]
    pub lo: f64,
    #[serde(with = "crate::float::hex")]
    pub hi: f64,
}

impl VarRange {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        VarRange { name: name.into(), lo, hi }
    }

    pub fn full(name: impl Into<String>) -> Self {
        VarRange::new(name, f64::MIN, f64::MAX)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "bounds of `{}` must be finite doubles",
                self.name
            )));
        }
        if !(self.lo < self.hi) {
            return Err(Error::InvalidRange(format!(
                "`{}`: lower bound {:e} must be below upper bound {:e}",
                self.name, self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// The problem statement: a target expression with input ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    #[serde(with = "text")]
    pub expr: Expr,
    pub vars: Vec<VarRange>,
    pub sample_size: usize,
    pub seed: u64,
}

/// Stable identity of a [`Spec`], usable as a cache key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpecKey(pub String);

impl fmt::Display for SpecKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Spec {
    pub fn new(expr: Expr, vars: Vec<VarRange>, sample_size: usize, seed: u64) -> Result<Spec> {
        let spec = Spec { expr, vars, sample_size, seed };
        spec.check()?;
        Ok(spec)
    }

    /// Spec over the full binary64 range for every free variable.
    pub fn unbounded(expr: Expr) -> Result<Spec> {
        let vars = expr.free_vars().into_iter().map(VarRange::full).collect();
        Spec::new(expr, vars, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED)
    }

    pub fn check(&self) -> Result<()> {
        self.expr.validate()?;
        if self.sample_size == 0 {
            return Err(Error::InvalidRange("sample size must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.vars {
            r.check()?;
            if !seen.insert(r.name.as_str()) {
                return Err(Error::InvalidRange(format!("`{}` has two ranges", r.name)));
            }
        }
        for v in self.expr.free_vars() {
            if !seen.contains(v.as_str()) {
                return Err(Error::InvalidRange(format!("no range given for `{v}`")));
            }
        }
        Ok(())
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|r| r.name.clone()).collect()
    }

    pub fn range(&self, name: &str) -> Option<&VarRange> {
        self.vars.iter().find(|r| r.name == name)
    }

    /// Same spec with some ranges replaced. Names not present are rejected.
    pub fn with_ranges(&self, ranges: &[VarRange]) -> Result<Spec> {
        let mut next = self.clone();
        for r in ranges {
            match next.vars.iter_mut().find(|v| v.name == r.name) {
                Some(slot) => *slot = r.clone(),
                None => {
                    return Err(Error::InvalidRange(format!("unknown variable `{}`", r.name)))
                }
            }
        }
        next.check()?;
        Ok(next)
    }

    pub fn key(&self) -> SpecKey {
        let mut h = Sha256::new();
        h.update(emit_math(&self.expr).as_bytes());
        for r in &self.vars {
            h.update([0u8]);
            h.update(r.name.as_bytes());
            h.update(r.lo.to_bits().to_le_bytes());
            h.update(r.hi.to_bits().to_le_bytes());
        }
        h.update((self.sample_size as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        SpecKey(hex::encode(&h.finalize()[..16]))
    }
}

/// Serde adapter storing an [`Expr`] as its math text.
pub mod text {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::{emit_math, parse_math, Expr};

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&emit_math(e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let t = String::deserialize(d)?;
        parse_math(&t).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_and_replace() {
        let e = parse_math("log(x + sqrt(x * x + 1))").unwrap();
        assert_eq!(e.size(), 9);
        assert_eq!(e.paths().len(), 9);
        let sqrt_path = vec![0, 1];
        assert_eq!(e.at(&sqrt_path).unwrap().head(), Some(Op::Sqrt));
        let swapped = e.replace_at(&sqrt_path, Expr::var("y")).unwrap();
        assert_eq!(emit_math(&swapped), "log(x + y)");
        assert!(e.replace_at(&[3], Expr::var("y")).is_none());
    }

    #[test]
    fn validate_rejects_misplaced_conditions() {
        let bad = Expr::binary(Op::Add, Expr::var("x"), Expr::binary(Op::Lt, Expr::var("x"), Expr::num("1")));
        assert!(bad.validate().is_err());
        let bad_cond = Expr::if_(Expr::var("x"), Expr::var("x"), Expr::var("x"));
        assert!(bad_cond.validate().is_err());
    }

    #[test]
    fn spec_checks_ranges() {
        let e = parse_math("x + y").unwrap();
        assert!(Spec::new(e.clone(), vec![VarRange::new("x", 1.0, 1.0), VarRange::full("y")], 8, 1).is_err());
        assert!(Spec::new(e.clone(), vec![VarRange::full("x")], 8, 1).is_err());
        assert!(Spec::new(e.clone(), vec![VarRange::new("x", 0.0, f64::INFINITY), VarRange::full("y")], 8, 1).is_err());
        let s = Spec::new(e, vec![VarRange::full("x"), VarRange::new("y", -1.0, 1.0)], 8, 1).unwrap();
        assert_eq!(s.key(), s.clone().key());
        let zoomed = s.with_ranges(&[VarRange::new("y", 0.0, 1.0)]).unwrap();
        assert_ne!(zoomed.key(), s.key());
        assert!(s.with_ranges(&[VarRange::new("z", 0.0, 1.0)]).is_err());
    }
}
