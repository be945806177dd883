//! Expressions flattened into a preorder tape with resolved variable slots,
//! and their evaluation in a target floating-point format.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{Expr, Literal, NamedConst, Op};
use crate::float::FloatFormat;

#[derive(Clone, Debug)]
pub(crate) enum NodeKind<F> {
    Var(usize),
    Num(Literal, F),
    Const(NamedConst),
    Op(Op),
}

#[derive(Clone, Debug)]
pub(crate) struct Node<F> {
    pub kind: NodeKind<F>,
    pub children: Vec<usize>,
}

/// An expression bound to an ordered variable list.
///
/// Node `0` is the root; nodes are stored in preorder, so the index of a node
/// is also its position in a preorder listing of the expression.
#[derive(Clone, Debug)]
pub struct Program<F: FloatFormat = f64> {
    pub(crate) nodes: Vec<Node<F>>,
    expr: Expr,
    vars: Vec<String>,
}

impl<F: FloatFormat> Program<F> {
    pub fn new(expr: &Expr, vars: &[String]) -> Result<Self> {
        let slots: HashMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut nodes = Vec::with_capacity(expr.size());
        flatten(expr, &slots, &mut nodes)?;
        Ok(Program { nodes, expr: expr.clone(), vars: vars.to_vec() })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Evaluate in `F` with round-to-nearest-even semantics, children left to
    /// right, branches selected by the condition evaluated in `F`.
    pub fn eval(&self, point: &[F]) -> F {
        self.value(0, point)
    }

    pub(crate) fn value(&self, idx: usize, point: &[F]) -> F {
        let node = &self.nodes[idx];
        match &node.kind {
            NodeKind::Var(slot) => point[*slot],
            NodeKind::Num(_, v) => *v,
            NodeKind::Const(c) => constant(*c),
            NodeKind::Op(Op::If) => {
                if self.truth(node.children[0], point) {
                    self.value(node.children[1], point)
                } else {
                    self.value(node.children[2], point)
                }
            }
            NodeKind::Op(op) => {
                let c = &node.children;
                match c.len() {
                    1 => apply1(*op, self.value(c[0], point)),
                    2 => apply2(*op, self.value(c[0], point), self.value(c[1], point)),
                    _ => {
                        let (a, b, z) =
                            (self.value(c[0], point), self.value(c[1], point), self.value(c[2], point));
                        a.mul_add(b, z)
                    }
                }
            }
        }
    }

    pub(crate) fn truth(&self, idx: usize, point: &[F]) -> bool {
        let node = &self.nodes[idx];
        let c = &node.children;
        match node.kind {
            NodeKind::Op(Op::And) => self.truth(c[0], point) && self.truth(c[1], point),
            NodeKind::Op(Op::Or) => self.truth(c[0], point) || self.truth(c[1], point),
            NodeKind::Op(op) => compare(op, self.value(c[0], point), self.value(c[1], point)),
            _ => unreachable!("validated condition"),
        }
    }
}

/// Evaluate `expr` in `F` at a point given as parallel name / value slices.
pub fn eval_float<F: FloatFormat>(expr: &Expr, vars: &[String], point: &[F]) -> Result<F> {
    Ok(Program::<F>::new(expr, vars)?.eval(point))
}

fn flatten<F: FloatFormat>(
    e: &Expr,
    slots: &HashMap<&str, usize>,
    out: &mut Vec<Node<F>>,
) -> Result<usize> {
    let idx = out.len();
    let kind = match e {
        Expr::Var(v) => NodeKind::Var(
            *slots.get(v.as_str()).ok_or_else(|| Error::UnboundVariable(v.clone()))?,
        ),
        Expr::Num(n) => {
            let v = n.as_str().parse::<F>().ok().expect("validated literal");
            NodeKind::Num(n.clone(), v)
        }
        Expr::Const(c) => NodeKind::Const(*c),
        Expr::Op(op, _) => NodeKind::Op(*op),
    };
    out.push(Node { kind, children: Vec::new() });
    let children = e
        .children()
        .iter()
        .map(|c| flatten(c, slots, out))
        .collect::<Result<Vec<_>>>()?;
    out[idx].children = children;
    Ok(idx)
}

pub(crate) fn constant<F: FloatFormat>(c: NamedConst) -> F {
    match c {
        NamedConst::Pi => F::PI(),
        NamedConst::E => F::E(),
        NamedConst::Infinity => F::infinity(),
    }
}

pub(crate) fn apply1<F: FloatFormat>(op: Op, a: F) -> F {
    match op {
        Op::Neg => -a,
        Op::Sqrt => a.sqrt(),
        Op::Cbrt => a.cbrt(),
        Op::Fabs => a.abs(),
        Op::Exp => a.exp(),
        Op::Expm1 => a.exp_m1(),
        Op::Log => a.ln(),
        Op::Log1p => a.ln_1p(),
        Op::Sin => a.sin(),
        Op::Cos => a.cos(),
        Op::Tan => a.tan(),
        Op::Asin => a.asin(),
        Op::Acos => a.acos(),
        Op::Atan => a.atan(),
        Op::Sinh => a.sinh(),
        Op::Cosh => a.cosh(),
        Op::Tanh => a.tanh(),
        Op::Asinh => a.asinh(),
        Op::Acosh => a.acosh(),
        Op::Atanh => a.atanh(),
        _ => unreachable!("{} is not unary", op.name()),
    }
}

pub(crate) fn apply2<F: FloatFormat>(op: Op, a: F, b: F) -> F {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Pow => a.powf(b),
        Op::Hypot => a.hypot(b),
        Op::Atan2 => a.atan2(b),
        _ => unreachable!("{} is not binary", op.name()),
    }
}

pub(crate) fn compare<F: FloatFormat>(op: Op, a: F, b: F) -> bool {
    match op {
        Op::Lt => a < b,
        Op::Le => a <= b,
        Op::Gt => a > b,
        Op::Ge => a >= b,
        Op::Eq => a == b,
        _ => unreachable!("{} is not a comparison", op.name()),
    }
}
