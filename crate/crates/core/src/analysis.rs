//! Error reports over a sample and per-operation local error at a point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, NodeKind, Program};
use crate::expr::{Expr, Op, SpecKey};
use crate::float::{self, bits, FloatFormat};
use crate::oracle::{self, ExactValue, NodeExact};
use crate::sampler::Sample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WorstPoint<F: FloatFormat = f64> {
    pub index: usize,
    #[serde(with = "float::hex::vec")]
    pub point: Vec<F>,
    pub bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ErrorReport<F: FloatFormat = f64> {
    pub spec_key: SpecKey,
    /// Bits of error per sample point, in sample order.
    pub bits: Vec<f64>,
    pub average: f64,
    pub worst: WorstPoint<F>,
}

/// Score `e` against the sample's cached exact outputs.
pub fn analyze<F: FloatFormat>(e: &Expr, sample: &Sample<F>) -> Result<ErrorReport<F>> {
    let prog = Program::<F>::new(e, &sample.vars)?;
    Ok(score(&prog, sample))
}

pub(crate) fn score<F: FloatFormat>(prog: &Program<F>, sample: &Sample<F>) -> ErrorReport<F> {
    let per_point: Vec<f64> = sample
        .points
        .par_iter()
        .zip(sample.exacts.par_iter())
        .map(|(p, &truth)| bits(truth, prog.eval(p)))
        .collect();
    let average = per_point.iter().sum::<f64>() / per_point.len().max(1) as f64;
    let mut worst = 0;
    for (i, b) in per_point.iter().enumerate() {
        if *b > per_point[worst] {
            worst = i;
        }
    }
    ErrorReport {
        spec_key: sample.spec_key.clone(),
        worst: WorstPoint {
            index: worst,
            point: sample.points.get(worst).cloned().unwrap_or_default(),
            bits: per_point.get(worst).copied().unwrap_or(0.0),
        },
        bits: per_point,
        average,
    }
}

/// One node of a [`LocalErrorTree`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LocalErrorNode<F: FloatFormat = f64> {
    pub index: usize,
    pub path: Vec<usize>,
    pub label: String,
    pub children: Vec<usize>,
    /// False for nodes inside the branch the exact evaluation did not take.
    pub evaluated: bool,
    /// Correctly rounded exact value of this node.
    #[serde(with = "float::hex::option")]
    pub exact: Option<F>,
    /// Rounded exact values of the children.
    #[serde(with = "float::hex::vec")]
    pub inputs: Vec<F>,
    /// This node's operation applied in `F` to `inputs`.
    #[serde(with = "float::hex::option")]
    pub float_op: Option<F>,
    pub exact_truth: Option<bool>,
    pub float_truth: Option<bool>,
    pub local_bits: Option<f64>,
}

/// Local error of every node at one point, in preorder (node 0 is the root).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LocalErrorTree<F: FloatFormat = f64> {
    pub expr: String,
    pub vars: Vec<String>,
    #[serde(with = "float::hex::vec")]
    pub point: Vec<F>,
    pub nodes: Vec<LocalErrorNode<F>>,
}

impl<F: FloatFormat> LocalErrorTree<F> {
    pub fn root(&self) -> &LocalErrorNode<F> {
        &self.nodes[0]
    }

    pub fn at(&self, path: &[usize]) -> Option<&LocalErrorNode<F>> {
        self.nodes.iter().find(|n| n.path == path)
    }

    /// Node with the most local error; the first in preorder on ties.
    pub fn hottest(&self) -> Option<&LocalErrorNode<F>> {
        let mut best: Option<&LocalErrorNode<F>> = None;
        for n in &self.nodes {
            if let Some(b) = n.local_bits {
                if best.is_none_or(|cur| b > cur.local_bits.unwrap_or(0.0)) {
                    best = Some(n);
                }
            }
        }
        best
    }
}

fn label<F>(kind: &NodeKind<F>, vars: &[String]) -> String {
    match kind {
        NodeKind::Var(slot) => vars[*slot].clone(),
        NodeKind::Num(lit, _) => lit.to_string(),
        NodeKind::Const(c) => c.name().to_string(),
        NodeKind::Op(op) => op.name().to_string(),
    }
}

/// Error each operation introduces at `point` when fed correctly rounded
/// exact inputs: `bits(round(f(exact children)), f_float(round(children)))`.
///
/// Comparison nodes score 0 when the float comparison of the rounded inputs
/// agrees with the exact truth and `F::WIDTH` otherwise.
pub fn local_error<F: FloatFormat>(e: &Expr, vars: &[String], point: &[F]) -> Result<LocalErrorTree<F>> {
    let prog = Program::<F>::new(e, vars)?;
    if point.len() != vars.len() {
        return Err(Error::InvalidPoint(format!(
            "expected {} coordinates, got {}",
            vars.len(),
            point.len()
        )));
    }
    let exact = oracle::exact_nodes(&prog, point);
    let paths = e.paths();
    let rounded: Vec<Option<F>> = exact
        .iter()
        .map(|n| match n {
            NodeExact::Value(v) => v.round(),
            _ => None,
        })
        .collect();

    let mut nodes = Vec::with_capacity(prog.len());
    for (i, node) in prog.nodes.iter().enumerate() {
        let mut out = LocalErrorNode {
            index: i,
            path: paths[i].clone(),
            label: label(&node.kind, vars),
            children: node.children.clone(),
            evaluated: true,
            exact: rounded[i],
            inputs: Vec::new(),
            float_op: None,
            exact_truth: None,
            float_truth: None,
            local_bits: None,
        };
        match &exact[i] {
            NodeExact::Skipped => out.evaluated = false,
            NodeExact::Value(v @ (ExactValue::Invalid | ExactValue::Unsamplable)) => {
                return Err(Error::InvalidPoint(format!(
                    "`{}` (node {i}) is {} here",
                    out.label,
                    oracle::describe(v)
                )))
            }
            NodeExact::Value(_) => {
                let truth = rounded[i].expect("valid value rounds");
                let computed = match &node.kind {
                    NodeKind::Var(slot) => point[*slot],
                    NodeKind::Num(_, v) => *v,
                    NodeKind::Const(c) => eval::constant(*c),
                    NodeKind::Op(Op::If) => {
                        let taken = node.children[1..]
                            .iter()
                            .find(|&&c| !matches!(exact[c], NodeExact::Skipped))
                            .copied()
                            .expect("one branch evaluated");
                        out.inputs = vec![rounded[taken].expect("evaluated branch")];
                        out.inputs[0]
                    }
                    NodeKind::Op(op) => {
                        out.inputs =
                            node.children.iter().map(|&c| rounded[c].expect("evaluated child")).collect();
                        oracle::apply_float(*op, &out.inputs)
                    }
                };
                out.float_op = Some(computed);
                out.local_bits = Some(bits(truth, computed));
            }
            NodeExact::Truth(t) => {
                let t = t.ok_or_else(|| {
                    Error::InvalidPoint(format!("condition `{}` (node {i}) is undecidable here", out.label))
                })?;
                out.exact_truth = Some(t);
                let ft = match &node.kind {
                    NodeKind::Op(op @ (Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq)) => {
                        out.inputs = node
                            .children
                            .iter()
                            .map(|&c| rounded[c].expect("evaluated operand"))
                            .collect();
                        eval::compare(*op, out.inputs[0], out.inputs[1])
                    }
                    _ => t,
                };
                out.float_truth = Some(ft);
                out.local_bits = Some(if ft == t { 0.0 } else { f64::from(F::WIDTH) });
            }
        }
        nodes.push(out);
    }
    Ok(LocalErrorTree { expr: e.to_string(), vars: vars.to_vec(), point: point.to_vec(), nodes })
}
