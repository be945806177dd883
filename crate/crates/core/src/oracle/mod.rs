//! Correctly-rounded evaluation by precision escalation.
//!
//! An expression is evaluated with outward-rounded MPFR intervals at 80,
//! 160, 320, ... bits up to a 16384-bit cap. A node has converged once both
//! ends of its enclosure round to the same target value; the lower end is
//! then an extended-precision witness that rounds correctly.

pub mod interval;

use std::iter;

use rug::Float;

use crate::error::{Error, Result};
use crate::eval::{self, NodeKind, Program};
use crate::expr::{Expr, Op};
use crate::float::FloatFormat;
pub use crate::float::{bits, ulps};
use interval::{Interval, Ival, Truth};

pub const START_PRECISION: u32 = 80;
pub const MAX_PRECISION: u32 = 16384;

/// The working precisions tried in order.
pub fn precisions() -> impl Iterator<Item = u32> {
    iter::successors(Some(START_PRECISION), |p| Some(p * 2))
        .take_while(|p| *p < MAX_PRECISION)
        .chain(iter::once(MAX_PRECISION))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExactValue {
    Finite(Float),
    PosInf,
    NegInf,
    /// A genuine domain error such as `log(-1)` or `0/0`.
    Invalid,
    /// The precision cap was reached before the result converged.
    Unsamplable,
}

impl ExactValue {
    pub fn is_valid(&self) -> bool {
        !matches!(self, ExactValue::Invalid | ExactValue::Unsamplable)
    }

    pub fn round<F: FloatFormat>(&self) -> Option<F> {
        match self {
            ExactValue::Finite(v) => Some(F::round_from(v)),
            ExactValue::PosInf => Some(F::infinity()),
            ExactValue::NegInf => Some(F::neg_infinity()),
            _ => None,
        }
    }

    fn from_enclosure(iv: &Interval) -> ExactValue {
        if iv.lo.is_infinite() {
            if iv.lo.is_sign_positive() {
                ExactValue::PosInf
            } else {
                ExactValue::NegInf
            }
        } else {
            ExactValue::Finite(iv.lo.clone())
        }
    }
}

/// A converged result and the precision at which it converged.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: ExactValue,
    pub precision: u32,
}

/// Exact truth of a condition node.
#[derive(Clone, Copy, Debug)]
enum Cond {
    Known(bool),
    Unsure,
    Invalid,
}

#[derive(Clone, Debug)]
enum Slot {
    Skipped,
    Value(Ival),
    Truth(Cond),
}

/// Exact per-node outcome of a converged whole-tree evaluation.
#[derive(Clone, Debug)]
pub enum NodeExact {
    /// In an untaken branch.
    Skipped,
    Value(ExactValue),
    /// Condition truth; `None` when the operands are not valid.
    Truth(Option<bool>),
}

struct Pass<'a, F: FloatFormat> {
    prog: &'a Program<F>,
    point: &'a [F],
    prec: u32,
    slots: Vec<Slot>,
}

impl<F: FloatFormat> Pass<'_, F> {
    fn value(&mut self, idx: usize) -> Ival {
        let node = &self.prog.nodes[idx];
        let result = match &node.kind {
            NodeKind::Var(slot) => Ival::Val(Interval::point(self.prec, self.point[*slot].to_f64())),
            NodeKind::Num(lit, _) => Ival::Val(interval::literal(self.prec, lit)),
            NodeKind::Const(c) => Ival::Val(interval::constant(self.prec, *c)),
            NodeKind::Op(Op::If) => {
                let (c, t, e) = (node.children[0], node.children[1], node.children[2]);
                match self.truth(c) {
                    Cond::Known(true) => self.value(t),
                    Cond::Known(false) => self.value(e),
                    Cond::Unsure => Ival::Unsure,
                    Cond::Invalid => Ival::Invalid,
                }
            }
            NodeKind::Op(op) => {
                let op = *op;
                let children = node.children.clone();
                let args: Vec<Ival> = children.iter().map(|&c| self.value(c)).collect();
                if args.iter().any(|a| matches!(a, Ival::Invalid)) {
                    Ival::Invalid
                } else if args.iter().any(|a| matches!(a, Ival::Unsure)) {
                    Ival::Unsure
                } else {
                    let ivs: Vec<&Interval> = args
                        .iter()
                        .map(|a| match a {
                            Ival::Val(iv) => iv,
                            _ => unreachable!(),
                        })
                        .collect();
                    interval::apply(self.prec, op, &ivs)
                }
            }
        };
        self.slots[idx] = Slot::Value(result.clone());
        result
    }

    fn truth(&mut self, idx: usize) -> Cond {
        let node = &self.prog.nodes[idx];
        let (op, children) = match &node.kind {
            NodeKind::Op(op) => (*op, node.children.clone()),
            _ => unreachable!("validated condition"),
        };
        let result = match op {
            Op::And | Op::Or => {
                let short = op == Op::Or;
                match self.truth(children[0]) {
                    Cond::Known(b) if b == short => Cond::Known(short),
                    Cond::Known(_) => self.truth(children[1]),
                    Cond::Invalid => Cond::Invalid,
                    Cond::Unsure => match self.truth(children[1]) {
                        Cond::Invalid => Cond::Invalid,
                        Cond::Known(b) if b == short => Cond::Known(short),
                        _ => Cond::Unsure,
                    },
                }
            }
            _ => {
                let a = self.value(children[0]);
                let b = self.value(children[1]);
                match (a, b) {
                    (Ival::Invalid, _) | (_, Ival::Invalid) => Cond::Invalid,
                    (Ival::Val(a), Ival::Val(b)) => match interval::compare(op, &a, &b) {
                        Truth::Known(t) => Cond::Known(t),
                        Truth::Unsure => Cond::Unsure,
                    },
                    _ => Cond::Unsure,
                }
            }
        };
        self.slots[idx] = Slot::Truth(result);
        result
    }
}

fn run<F: FloatFormat>(prog: &Program<F>, point: &[F], prec: u32) -> Vec<Slot> {
    let mut pass = Pass { prog, point, prec, slots: vec![Slot::Skipped; prog.len()] };
    if prog.is_empty() {
        return pass.slots;
    }
    pass.value(0);
    pass.slots
}

fn converged<F: FloatFormat>(iv: &Interval) -> bool {
    let (lo, hi) = (F::round_from(&iv.lo), F::round_from(&iv.hi));
    lo == hi || (lo.is_nan() && hi.is_nan())
}

/// Evaluate the program's root exactly at `point`.
pub fn exact<F: FloatFormat>(prog: &Program<F>, point: &[F]) -> Evaluation {
    for prec in precisions() {
        let slots = run(prog, point, prec);
        match &slots[0] {
            Slot::Value(Ival::Invalid) => {
                return Evaluation { value: ExactValue::Invalid, precision: prec }
            }
            Slot::Value(Ival::Val(iv)) if converged::<F>(iv) => {
                return Evaluation { value: ExactValue::from_enclosure(iv), precision: prec }
            }
            _ => {}
        }
    }
    Evaluation { value: ExactValue::Unsamplable, precision: MAX_PRECISION }
}

/// Evaluate the root at exactly one working precision, without escalation.
pub fn exact_at<F: FloatFormat>(prog: &Program<F>, point: &[F], prec: u32) -> Option<ExactValue> {
    match &run(prog, point, prec)[0] {
        Slot::Value(Ival::Invalid) => Some(ExactValue::Invalid),
        Slot::Value(Ival::Val(iv)) if converged::<F>(iv) => Some(ExactValue::from_enclosure(iv)),
        _ => None,
    }
}

/// Exact values of every node in preorder, escalating until each evaluated
/// node has converged. Nodes still open at the cap are `Unsamplable`.
pub fn exact_nodes<F: FloatFormat>(prog: &Program<F>, point: &[F]) -> Vec<NodeExact> {
    let mut last = Vec::new();
    for prec in precisions() {
        let slots = run(prog, point, prec);
        let mut done = true;
        last = slots
            .iter()
            .map(|s| match s {
                Slot::Skipped => NodeExact::Skipped,
                Slot::Value(Ival::Invalid) => NodeExact::Value(ExactValue::Invalid),
                Slot::Value(Ival::Val(iv)) if converged::<F>(iv) => {
                    NodeExact::Value(ExactValue::from_enclosure(iv))
                }
                Slot::Value(_) => {
                    done = false;
                    NodeExact::Value(ExactValue::Unsamplable)
                }
                Slot::Truth(Cond::Known(b)) => NodeExact::Truth(Some(*b)),
                Slot::Truth(Cond::Invalid) => NodeExact::Truth(None),
                Slot::Truth(Cond::Unsure) => {
                    done = false;
                    NodeExact::Truth(None)
                }
            })
            .collect();
        if done {
            break;
        }
    }
    last
}

/// Exact value of `e` at a point given as parallel name / value slices.
pub fn eval_exact<F: FloatFormat>(e: &Expr, vars: &[String], point: &[F]) -> Result<ExactValue> {
    Ok(exact(&Program::<F>::new(e, vars)?, point).value)
}

/// Bits of error of the float evaluation of `e` against its own exact value.
pub fn error_at<F: FloatFormat>(e: &Expr, vars: &[String], point: &[F]) -> Result<f64> {
    let prog = Program::<F>::new(e, vars)?;
    let value = exact(&prog, point).value;
    let truth: F = value.round().ok_or_else(|| {
        Error::InvalidPoint(format!("exact value at this point is {}", describe(&value)))
    })?;
    Ok(bits(truth, prog.eval(point)))
}

pub(crate) fn describe(v: &ExactValue) -> &'static str {
    match v {
        ExactValue::Finite(_) => "finite",
        ExactValue::PosInf => "+inf",
        ExactValue::NegInf => "-inf",
        ExactValue::Invalid => "invalid (domain error)",
        ExactValue::Unsamplable => "unsamplable (precision cap reached)",
    }
}

/// Float evaluation of a single node given its children's values.
pub(crate) fn apply_float<F: FloatFormat>(op: Op, args: &[F]) -> F {
    match args.len() {
        1 => eval::apply1(op, args[0]),
        2 => eval::apply2(op, args[0], args[1]),
        _ => args[0].mul_add(args[1], args[2]),
    }
}
