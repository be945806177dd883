use rug::Rational;

use super::{Candidate, Derivation, Provenance, RegimeStep, Segment, Step, REGIMES_RULE};
use crate::analysis;
use crate::error::{Error, Result};
use crate::expr::{Expr, Literal, Op};
use crate::float::FloatFormat;
use crate::sampler::Sample;

/// Default cost of one extra branch, in bits summed over points.
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct RegimeConfig {
    pub max_branches: usize,
    pub lambda: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig { max_branches: 4, lambda: DEFAULT_LAMBDA }
    }
}

/// Exact literal for a double.
fn threshold_expr(t: f64) -> Expr {
    let short = if t.fract() == 0.0 && t.abs() < 1e16 {
        format!("{}", t.abs() as i64)
    } else {
        format!("{:e}", t.abs())
    };
    let exact = Rational::from_f64(t.abs()).expect("finite threshold");
    let lit = Literal::new(&short)
        .filter(|l| l.to_rational() == exact)
        .or_else(|| Literal::from_rational(&exact))
        .expect("doubles are terminating decimals");
    if t < 0.0 {
        Expr::unary(Op::Neg, Expr::Num(lit))
    } else {
        Expr::Num(lit)
    }
}

/// Nested `if var <= upper then ... else ...` over the segments.
pub(crate) fn build(var: &str, segments: &[Segment]) -> Expr {
    let (last, init) = segments.split_last().expect("at least one segment");
    let mut out = last.expr.clone();
    for seg in init.iter().rev() {
        let cond = Expr::binary(
            Op::Le,
            Expr::var(var),
            threshold_expr(seg.upper.expect("inner segments are bounded")),
        );
        out = Expr::if_(cond, seg.expr.clone(), out);
    }
    out
}

/// Split the sample along `var` and give each piece its best candidate.
///
/// Points are ordered by the ordinal of `var`. A dynamic program picks at
/// most `max_branches` contiguous segments minimizing summed bits plus
/// `lambda` per split; splits only fall between distinct values, at the
/// ordinal midpoint of the two neighbouring points.
pub fn infer_regimes(
    candidates: &[Candidate],
    sample: &Sample,
    var: &str,
    cfg: &RegimeConfig,
) -> Result<Candidate> {
    let Some(first) = candidates.first() else {
        return Err(Error::Degenerate("no candidates to combine".into()));
    };
    if candidates.len() == 1 {
        return Ok(first.clone());
    }
    if candidates.iter().all(|c| c.expr == first.expr) {
        return Err(Error::Degenerate("all candidates are the same expression".into()));
    }
    let column = sample
        .column(var)
        .ok_or_else(|| Error::UnboundVariable(var.to_string()))?;
    let reports = candidates
        .iter()
        .map(|c| analysis::analyze(&c.expr, sample))
        .collect::<Result<Vec<_>>>()?;

    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (column[i].to_ordinal(), i));
    let ords: Vec<i64> = order.iter().map(|&i| column[i].to_ordinal()).collect();

    // prefix[c][j]: summed bits of candidate c over the first j sorted points.
    let prefix: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| {
            let mut p = vec![0.0; n + 1];
            for (j, &i) in order.iter().enumerate() {
                p[j + 1] = p[j] + r.bits[i];
            }
            p
        })
        .collect();
    let seg_cost = |i: usize, j: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (c, p) in prefix.iter().enumerate() {
            let v = p[j] - p[i];
            if v < best.0 {
                best = (v, c);
            }
        }
        best
    };
    // Cut positions j (0 < j < n) are allowed only between distinct values.
    let cuttable = |j: usize| j > 0 && j < n && ords[j - 1] != ords[j];

    let branches = cfg.max_branches.max(1);
    // best[s][j]: minimal cost covering the first j points with s segments.
    let mut best = vec![vec![f64::INFINITY; n + 1]; branches + 1];
    let mut back = vec![vec![0usize; n + 1]; branches + 1];
    best[0][0] = 0.0;
    for s in 1..=branches {
        for j in 1..=n {
            if j < n && !cuttable(j) {
                continue;
            }
            for i in 0..j {
                if i > 0 && !cuttable(i) || best[s - 1][i].is_infinite() {
                    continue;
                }
                let penalty = if i > 0 { cfg.lambda } else { 0.0 };
                let v = best[s - 1][i] + seg_cost(i, j).0 + penalty;
                if v < best[s][j] {
                    best[s][j] = v;
                    back[s][j] = i;
                }
            }
        }
    }
    let mut s_best = 1;
    for s in 2..=branches {
        if best[s][n] < best[s_best][n] {
            s_best = s;
        }
    }

    let mut cuts = vec![n];
    let (mut s, mut j) = (s_best, n);
    while s > 0 {
        let i = back[s][j];
        cuts.push(i);
        j = i;
        s -= 1;
    }
    cuts.reverse();

    let mut segments: Vec<Segment> = Vec::new();
    for w in cuts.windows(2) {
        let (i, j) = (w[0], w[1]);
        let c = seg_cost(i, j).1;
        let upper = (j < n).then(|| {
            let mid = (i128::from(ords[j - 1]) + i128::from(ords[j])).div_euclid(2);
            f64::from_ordinal(mid as i64)
        });
        match segments.last_mut() {
            Some(prev) if prev.candidate == Some(candidates[c].id) => prev.upper = upper,
            _ => segments.push(Segment {
                candidate: Some(candidates[c].id),
                expr: candidates[c].expr.clone(),
                upper,
            }),
        }
    }

    let expr = build(var, &segments);
    let report = analysis::analyze(&expr, sample)?;
    let step = Step {
        rule: REGIMES_RULE.to_string(),
        path: Vec::new(),
        before: segments[0].expr.clone(),
        after: expr.clone(),
        regimes: Some(RegimeStep { var: var.to_string(), segments }),
    };
    Ok(Candidate {
        id: 0,
        expr,
        provenance: Provenance::Combined,
        derivation: Derivation { steps: vec![step] },
        report: Some(report),
        visible: true,
        duplicate_of: None,
    })
}
