//! Reader for the FPCore subset: one `FPCore` form over the supported
//! operators, with variable ranges taken from `:pre`.

use super::literal::{scan, Literal};
use super::{Expr, NamedConst, Op, OpClass, Spec, VarRange, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED};
use crate::error::{Error, Result};

const UNSUPPORTED_FORMS: &[&str] = &[
    "while", "while*", "for", "for*", "let", "let*", "tensor", "tensor*", "array", "dim", "size",
    "ref", "cast", "!", "digits", "round", "floor", "ceil", "trunc", "fmod", "remainder",
];

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, usize),
    Str(usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn offset(&self) -> usize {
        match self {
            Sexp::Atom(_, o) | Sexp::Str(o) | Sexp::List(_, o) => *o,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>, expected: &[&str]) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        let b = self.src.as_bytes();
        while self.pos < b.len() {
            if b[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            } else if b[self.pos] == b';' {
                while self.pos < b.len() && b[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_ws();
        let b = self.src.as_bytes();
        let start = self.pos;
        match b.get(self.pos) {
            None => Err(syntax(start, "unexpected end of input", &["(", "atom"])),
            Some(b'(') | Some(b'[') => {
                let close = if b[self.pos] == b'(' { b')' } else { b']' };
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match b.get(self.pos) {
                        None => {
                            return Err(syntax(self.pos, "unclosed list", &[")"]));
                        }
                        Some(&c) if c == close => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(b')') | Some(b']') => {
                            return Err(syntax(self.pos, "mismatched bracket", &[")"]));
                        }
                        _ => items.push(self.read()?),
                    }
                }
            }
            Some(b')') | Some(b']') => Err(syntax(start, "unexpected `)`", &["(", "atom"])),
            Some(b'"') => {
                self.pos += 1;
                let mut chars = self.src[self.pos..].char_indices();
                loop {
                    match chars.next() {
                        None => return Err(syntax(start, "unterminated string", &["\""])),
                        Some((i, '"')) => {
                            self.pos += i + 1;
                            return Ok(Sexp::Str(start));
                        }
                        Some((_, '\\')) => {
                            chars.next();
                        }
                        Some(_) => {}
                    }
                }
            }
            Some(_) => {
                while self.pos < b.len()
                    && !b[self.pos].is_ascii_whitespace()
                    && !matches!(b[self.pos], b'(' | b')' | b'[' | b']' | b'"' | b';')
                {
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.src[start..self.pos].to_string(), start))
            }
        }
    }
}

/// Parse a single `(FPCore (vars...) props... body)` form into a [`Spec`].
pub fn parse_fpcore(text: &str) -> Result<Spec> {
    let mut reader = Reader { src: text, pos: 0 };
    let form = reader.read()?;
    reader.skip_ws();
    if reader.pos != text.len() {
        return Err(syntax(reader.pos, "trailing input after FPCore form", &["end of input"]));
    }
    let Sexp::List(items, off) = form else {
        return Err(syntax(form.offset(), "expected an FPCore form", &["("]));
    };
    if items.first().and_then(Sexp::atom) != Some("FPCore") {
        return Err(syntax(off, "expected `FPCore`", &["FPCore"]));
    }
    let mut idx = 1;
    // Optional name symbol.
    if matches!(items.get(idx), Some(Sexp::Atom(..))) {
        idx += 1;
    }
    let args = match items.get(idx) {
        Some(Sexp::List(args, _)) => args,
        Some(other) => return Err(syntax(other.offset(), "expected argument list", &["("])),
        None => return Err(syntax(text.len(), "missing argument list", &["("])),
    };
    idx += 1;
    let mut names = Vec::new();
    for a in args {
        match a {
            Sexp::Atom(name, o) if is_ident(name) => {
                if names.contains(name) {
                    return Err(syntax(*o, format!("duplicate argument `{name}`"), &["identifier"]));
                }
                names.push(name.clone());
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "argument at byte {} is not a plain variable",
                    other.offset()
                )))
            }
        }
    }

    let mut pre = None;
    let mut sample_size = DEFAULT_SAMPLE_SIZE;
    let mut seed = DEFAULT_SEED;
    let mut body = None;
    while idx < items.len() {
        match &items[idx] {
            Sexp::Atom(prop, o) if prop.starts_with(':') => {
                let value = items
                    .get(idx + 1)
                    .ok_or_else(|| syntax(*o, format!("property {prop} has no value"), &["value"]))?;
                match prop.as_str() {
                    ":pre" => pre = Some(value),
                    ":precision" => {
                        if value.atom() != Some("binary64") {
                            return Err(Error::Unsupported(format!(
                                "precision other than binary64 at byte {}",
                                value.offset()
                            )));
                        }
                    }
                    ":fpwb-points" => sample_size = int_prop(value)? as usize,
                    ":fpwb-seed" => seed = int_prop(value)?,
                    _ => {}
                }
                idx += 2;
            }
            other => {
                if body.is_some() {
                    return Err(syntax(other.offset(), "more than one body expression", &[")"]));
                }
                body = Some(other);
                idx += 1;
            }
        }
    }
    let body = body.ok_or_else(|| syntax(text.len(), "missing body", &["expression"]))?;
    let expr = convert(body, &names)?;
    expr.validate()?;

    let mut ranges: Vec<VarRange> = names.iter().map(VarRange::full).collect();
    if let Some(pre) = pre {
        let cond = convert_cond(pre, &names)?;
        apply_precondition(&cond, &mut ranges)?;
    }
    for v in expr.free_vars() {
        if !names.contains(&v) {
            return Err(Error::UnboundVariable(v));
        }
    }
    Spec::new(expr, ranges, sample_size, seed)
}

fn int_prop(value: &Sexp) -> Result<u64> {
    value
        .atom()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| syntax(value.offset(), "expected a non-negative integer", &["integer"]))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && NamedConst::from_name(s).is_none()
}

fn number(text: &str) -> Option<Expr> {
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let lit = if scan(digits.as_bytes()) == Some(digits.len()) {
        Expr::Num(Literal::new(digits)?)
    } else if let Some((n, d)) = digits.split_once('/') {
        // Rational literal: kept as an exact quotient of two integers.
        let int = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !(int(n) && int(d)) {
            return None;
        }
        Expr::binary(Op::Div, Expr::Num(Literal::new(n)?), Expr::Num(Literal::new(d)?))
    } else {
        return None;
    };
    Some(if neg { Expr::unary(Op::Neg, lit) } else { lit })
}

fn convert(s: &Sexp, vars: &[String]) -> Result<Expr> {
    match s {
        Sexp::Str(o) => Err(syntax(*o, "string in expression position", &["expression"])),
        Sexp::Atom(a, o) => {
            if let Some(n) = number(a) {
                return Ok(n);
            }
            if let Some(c) = NamedConst::from_name(a) {
                return Ok(Expr::Const(c));
            }
            if vars.contains(a) {
                return Ok(Expr::Var(a.clone()));
            }
            if is_ident(a) {
                return Err(Error::UnboundVariable(a.clone()));
            }
            Err(Error::Unsupported(format!("atom `{a}` at byte {o}")))
        }
        Sexp::List(items, o) => {
            let Some(head) = items.first().and_then(Sexp::atom) else {
                return Err(syntax(*o, "expected an operator", &["operator"]));
            };
            let args = &items[1..];
            if UNSUPPORTED_FORMS.contains(&head) {
                return Err(Error::Unsupported(format!("`{head}` form at byte {o}")));
            }
            if head == "if" {
                if args.len() != 3 {
                    return Err(arity(head, 3, args.len(), *o));
                }
                return Ok(Expr::if_(
                    convert_cond(&args[0], vars)?,
                    convert(&args[1], vars)?,
                    convert(&args[2], vars)?,
                ));
            }
            if head == "-" && args.len() == 1 {
                return Ok(Expr::unary(Op::Neg, convert(&args[0], vars)?));
            }
            let op = Op::ALL
                .iter()
                .copied()
                .find(|op| op.class() == OpClass::Value && op.name() == head && *op != Op::Neg)
                .ok_or_else(|| {
                    if Op::ALL.iter().any(|op| op.name() == head) {
                        Error::Unsupported(format!("`{head}` in value position at byte {o}"))
                    } else {
                        Error::Unsupported(format!("operator `{head}` at byte {o}"))
                    }
                })?;
            if args.len() != op.arity() {
                return Err(arity(head, op.arity(), args.len(), *o));
            }
            let args = args.iter().map(|a| convert(a, vars)).collect::<Result<_>>()?;
            Ok(Expr::Op(op, args))
        }
    }
}

fn arity(name: &str, expected: usize, found: usize, offset: usize) -> Error {
    Error::Arity { name: name.to_string(), expected, found, offset }
}

fn convert_cond(s: &Sexp, vars: &[String]) -> Result<Expr> {
    let Sexp::List(items, o) = s else {
        if s.atom() == Some("TRUE") {
            return Err(Error::Unsupported("constant condition `TRUE`".into()));
        }
        return Err(Error::Unsupported(format!("condition at byte {} is not a comparison", s.offset())));
    };
    let head = items.first().and_then(Sexp::atom).unwrap_or("");
    let args = &items[1..];
    match head {
        "and" | "or" => {
            let op = if head == "and" { Op::And } else { Op::Or };
            let mut parts = args.iter().map(|a| convert_cond(a, vars));
            let first = parts
                .next()
                .ok_or_else(|| Error::Unsupported(format!("empty `{head}` at byte {o}")))??;
            parts.try_fold(first, |acc, next| Ok(Expr::binary(op, acc, next?)))
        }
        "<" | "<=" | ">" | ">=" | "==" => {
            let op = match head {
                "<" => Op::Lt,
                "<=" => Op::Le,
                ">" => Op::Gt,
                ">=" => Op::Ge,
                _ => Op::Eq,
            };
            if args.len() < 2 {
                return Err(arity(head, 2, args.len(), *o));
            }
            let vals = args.iter().map(|a| convert(a, vars)).collect::<Result<Vec<_>>>()?;
            // Chains mean pairwise conjunction.
            let mut pairs = vals.windows(2).map(|w| Expr::binary(op, w[0].clone(), w[1].clone()));
            let first = pairs.next().expect("two or more operands");
            Ok(pairs.fold(first, |acc, c| Expr::binary(Op::And, acc, c)))
        }
        _ => Err(Error::Unsupported(format!("condition `{head}` at byte {o}"))),
    }
}

fn constant_value(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(n) => Some(n.to_f64()),
        Expr::Op(Op::Neg, a) => constant_value(&a[0]).map(|v| -v),
        Expr::Op(Op::Div, a) => Some(constant_value(&a[0])? / constant_value(&a[1])?),
        Expr::Const(NamedConst::Pi) => Some(std::f64::consts::PI),
        Expr::Const(NamedConst::E) => Some(std::f64::consts::E),
        _ => None,
    }
}

fn apply_precondition(cond: &Expr, ranges: &mut [VarRange]) -> Result<()> {
    match cond {
        Expr::Op(Op::And, args) => {
            apply_precondition(&args[0], ranges)?;
            apply_precondition(&args[1], ranges)
        }
        Expr::Op(op @ (Op::Lt | Op::Le | Op::Gt | Op::Ge), args) => {
            let (var, bound, is_upper) = match (&args[0], &args[1]) {
                (Expr::Var(v), rhs) => (v, constant_value(rhs), matches!(op, Op::Lt | Op::Le)),
                (lhs, Expr::Var(v)) => (v, constant_value(lhs), matches!(op, Op::Gt | Op::Ge)),
                _ => (&String::new(), None, false),
            };
            let bound = bound.ok_or_else(|| {
                Error::Unsupported(format!(
                    "precondition `{}` is not a constant bound on a variable",
                    super::emit_math(cond)
                ))
            })?;
            let slot = ranges
                .iter_mut()
                .find(|r| &r.name == var)
                .ok_or_else(|| Error::UnboundVariable(var.clone()))?;
            let bound = bound.clamp(f64::MIN, f64::MAX);
            if is_upper {
                slot.hi = slot.hi.min(bound);
            } else {
                slot.lo = slot.lo.max(bound);
            }
            Ok(())
        }
        other => Err(Error::Unsupported(format!(
            "precondition `{}` is not a conjunction of variable bounds",
            super::emit_math(other)
        ))),
    }
}
