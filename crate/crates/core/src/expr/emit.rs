use std::fmt::Write;

use super::{Expr, Op, Spec, VarRange, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED};

// Binding strength, loosest first.
const P_IF: u8 = 0;
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_CMP: u8 = 3;
const P_SUM: u8 = 4;
const P_PRODUCT: u8 = 5;
const P_UNARY: u8 = 7;
const P_ATOM: u8 = 8;

fn strength(e: &Expr) -> u8 {
    match e.head() {
        None => P_ATOM,
        Some(op) => match op {
            Op::If => P_IF,
            Op::Or => P_OR,
            Op::And => P_AND,
            Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => P_CMP,
            Op::Add | Op::Sub => P_SUM,
            Op::Mul | Op::Div => P_PRODUCT,
            Op::Neg => P_UNARY,
            _ => P_ATOM,
        },
    }
}

/// Render as infix math text that [`super::parse_math`] reads back unchanged.
pub fn emit_math(e: &Expr) -> String {
    let mut out = String::new();
    math(e, &mut out);
    out
}

fn math_at(e: &Expr, min: u8, out: &mut String) {
    if strength(e) < min {
        out.push('(');
        math(e, out);
        out.push(')');
    } else {
        math(e, out);
    }
}

fn math(e: &Expr, out: &mut String) {
    match e {
        Expr::Var(v) => out.push_str(v),
        Expr::Num(n) => out.push_str(n.as_str()),
        Expr::Const(c) => out.push_str(c.name()),
        Expr::Op(op, args) => match op {
            Op::Add | Op::Sub | Op::Mul | Op::Div => {
                let level = strength(e);
                math_at(&args[0], level, out);
                let _ = write!(out, " {} ", op.name());
                math_at(&args[1], level + 1, out);
            }
            Op::Neg => {
                out.push('-');
                math_at(&args[0], P_UNARY, out);
            }
            Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => {
                math_at(&args[0], P_SUM, out);
                let _ = write!(out, " {} ", op.name());
                math_at(&args[1], P_SUM, out);
            }
            Op::And | Op::Or => {
                let level = strength(e);
                math_at(&args[0], level, out);
                let _ = write!(out, " {} ", op.name());
                math_at(&args[1], level + 1, out);
            }
            Op::If => {
                out.push_str("if ");
                math(&args[0], out);
                out.push_str(" then ");
                math(&args[1], out);
                out.push_str(" else ");
                math(&args[2], out);
            }
            _ => {
                out.push_str(op.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    math(a, out);
                }
                out.push(')');
            }
        },
    }
}

/// Render as a LaTeX math-mode string.
pub fn emit_latex(e: &Expr) -> String {
    let mut out = String::new();
    latex(e, &mut out);
    out
}

fn latex_at(e: &Expr, min: u8, out: &mut String) {
    if strength(e) < min {
        out.push_str("\\left(");
        latex(e, out);
        out.push_str("\\right)");
    } else {
        latex(e, out);
    }
}

fn latex_fn(name: &str, args: &[Expr], out: &mut String) {
    let _ = write!(out, "{name}\\left(");
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        latex(a, out);
    }
    out.push_str("\\right)");
}

fn latex(e: &Expr, out: &mut String) {
    match e {
        Expr::Var(v) => {
            if v.chars().count() == 1 {
                out.push_str(v);
            } else {
                let _ = write!(out, "\\mathit{{{}}}", v.replace('_', "\\_"));
            }
        }
        Expr::Num(n) => out.push_str(n.as_str()),
        Expr::Const(c) => out.push_str(match c {
            super::NamedConst::Pi => "\\pi",
            super::NamedConst::E => "e",
            super::NamedConst::Infinity => "\\infty",
        }),
        Expr::Op(op, args) => match op {
            Op::Add | Op::Sub | Op::Mul => {
                let level = strength(e);
                latex_at(&args[0], level, out);
                out.push_str(match op {
                    Op::Add => " + ",
                    Op::Sub => " - ",
                    _ => " \\cdot ",
                });
                latex_at(&args[1], level + 1, out);
            }
            Op::Div => {
                out.push_str("\\frac{");
                latex(&args[0], out);
                out.push_str("}{");
                latex(&args[1], out);
                out.push('}');
            }
            Op::Neg => {
                out.push('-');
                latex_at(&args[0], P_UNARY, out);
            }
            Op::Sqrt => {
                out.push_str("\\sqrt{");
                latex(&args[0], out);
                out.push('}');
            }
            Op::Cbrt => {
                out.push_str("\\sqrt[3]{");
                latex(&args[0], out);
                out.push('}');
            }
            Op::Fabs => {
                out.push_str("\\left|");
                latex(&args[0], out);
                out.push_str("\\right|");
            }
            Op::Exp => {
                out.push_str("e^{");
                latex(&args[0], out);
                out.push('}');
            }
            Op::Pow => {
                out.push('{');
                latex_at(&args[0], P_ATOM, out);
                out.push_str("}^{");
                latex(&args[1], out);
                out.push('}');
            }
            Op::Log | Op::Sin | Op::Cos | Op::Tan | Op::Sinh | Op::Cosh | Op::Tanh => {
                latex_fn(&format!("\\{}", op.name()), args, out)
            }
            Op::Asin | Op::Acos | Op::Atan => {
                latex_fn(&format!("\\{}", op.name().replacen('a', "arc", 1)), args, out)
            }
            Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => {
                latex_at(&args[0], P_SUM, out);
                out.push_str(match op {
                    Op::Lt => " < ",
                    Op::Le => " \\le ",
                    Op::Gt => " > ",
                    Op::Ge => " \\ge ",
                    _ => " = ",
                });
                latex_at(&args[1], P_SUM, out);
            }
            Op::And | Op::Or => {
                let level = strength(e);
                latex_at(&args[0], level, out);
                out.push_str(if *op == Op::And { " \\land " } else { " \\lor " });
                latex_at(&args[1], level + 1, out);
            }
            Op::If => {
                out.push_str("\\begin{cases} ");
                latex(&args[1], out);
                out.push_str(" & \\text{if } ");
                latex(&args[0], out);
                out.push_str(" \\\\ ");
                latex(&args[2], out);
                out.push_str(" & \\text{otherwise} \\end{cases}");
            }
            _ => latex_fn(&format!("\\mathrm{{{}}}", op.name()), args, out),
        },
    }
}

/// Render an FPCore form carrying the spec's ranges as its precondition.
///
/// Bounds equal to the full binary64 range are left out; a non-default
/// sample size or seed is kept in `:fpwb-points` / `:fpwb-seed` properties.
pub fn emit_fpcore(e: &Expr, spec: &Spec) -> String {
    let mut out = String::from("(FPCore (");
    out.push_str(&spec.var_names().join(" "));
    out.push(')');
    let mut conjuncts = Vec::new();
    for r in &spec.vars {
        conjuncts.extend(range_conjuncts(r));
    }
    match conjuncts.len() {
        0 => {}
        1 => {
            let _ = write!(out, " :pre {}", conjuncts[0]);
        }
        _ => {
            let _ = write!(out, " :pre (and {})", conjuncts.join(" "));
        }
    }
    if spec.sample_size != DEFAULT_SAMPLE_SIZE {
        let _ = write!(out, " :fpwb-points {}", spec.sample_size);
    }
    if spec.seed != DEFAULT_SEED {
        let _ = write!(out, " :fpwb-seed {}", spec.seed);
    }
    out.push(' ');
    fpcore_body(e, &mut out);
    out.push(')');
    out
}

fn range_conjuncts(r: &VarRange) -> Vec<String> {
    let lo = r.lo != f64::MIN;
    let hi = r.hi != f64::MAX;
    match (lo, hi) {
        (true, true) => vec![format!("(<= {} {} {})", number(r.lo), r.name, number(r.hi))],
        (true, false) => vec![format!("(<= {} {})", number(r.lo), r.name)],
        (false, true) => vec![format!("(<= {} {})", r.name, number(r.hi))],
        (false, false) => vec![],
    }
}

/// Shortest decimal that reads back as exactly `x`.
pub(crate) fn number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e16 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

fn fpcore_body(e: &Expr, out: &mut String) {
    match e {
        Expr::Var(v) => out.push_str(v),
        Expr::Num(n) => out.push_str(n.as_str()),
        Expr::Const(c) => out.push_str(c.name()),
        Expr::Op(op, args) => {
            out.push('(');
            out.push_str(if *op == Op::Neg { "-" } else { op.name() });
            for a in args {
                out.push(' ');
                fpcore_body(a, out);
            }
            out.push(')');
        }
    }
}
