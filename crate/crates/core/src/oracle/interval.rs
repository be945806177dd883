//! Outward-rounded interval arithmetic over MPFR values.
//!
//! Each operation returns an enclosure of the true real result, a definite
//! domain error, or [`Ival::Unsure`] when the enclosure is too wide to decide
//! (straddles a pole, branch cut, or domain boundary).

use std::cmp::Ordering;

use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::Float;

use crate::expr::{Literal, NamedConst, Op};

#[derive(Clone, Debug)]
pub struct Interval {
    pub lo: Float,
    pub hi: Float,
}

#[derive(Clone, Debug)]
pub enum Ival {
    Val(Interval),
    Invalid,
    Unsure,
}

/// Three-valued truth for conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    Known(bool),
    Unsure,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

fn min(a: Float, b: Float) -> Float {
    if b < a {
        b
    } else {
        a
    }
}

fn max(a: Float, b: Float) -> Float {
    if b > a {
        b
    } else {
        a
    }
}

impl Interval {
    pub fn point(prec: u32, x: f64) -> Interval {
        let v = Float::with_val(prec.max(64), x);
        Interval { lo: v.clone(), hi: v }
    }

    fn new(lo: Float, hi: Float) -> Ival {
        if lo.is_nan() || hi.is_nan() {
            Ival::Unsure
        } else {
            Ival::Val(Interval { lo, hi })
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    fn is_zero(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }

    fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    fn neg(&self) -> Interval {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    fn abs(&self) -> Interval {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let m = max(-self.lo.clone(), self.hi.clone());
            Interval { lo: Float::with_val(m.prec(), 0), hi: m }
        }
    }
}

pub fn literal(prec: u32, lit: &Literal) -> Interval {
    Interval { lo: lit.to_mpfr(prec, Round::Down), hi: lit.to_mpfr(prec, Round::Up) }
}

pub fn constant(prec: u32, c: NamedConst) -> Interval {
    match c {
        NamedConst::Pi => Interval { lo: down(prec, Constant::Pi), hi: up(prec, Constant::Pi) },
        NamedConst::E => {
            let one = Float::with_val(prec, 1);
            Interval { lo: down(prec, one.exp_ref()), hi: up(prec, one.exp_ref()) }
        }
        NamedConst::Infinity => {
            let inf = Float::with_val(prec, rug::float::Special::Infinity);
            Interval { lo: inf.clone(), hi: inf }
        }
    }
}

/// Both operands are exact points and the result is still undefined.
fn undefined(args: &[&Interval]) -> Ival {
    if args.iter().all(|a| a.is_point()) {
        Ival::Invalid
    } else {
        Ival::Unsure
    }
}

fn guard_nan(args: &[&Interval], lo: Float, hi: Float) -> Ival {
    if lo.is_nan() || hi.is_nan() {
        undefined(args)
    } else {
        Ival::Val(Interval { lo, hi })
    }
}

/// Enclosure of a monotone non-decreasing function.
macro_rules! increasing {
    ($prec:expr, $a:expr, $method:ident) => {{
        let a: &Interval = $a;
        guard_nan(&[a], down($prec, a.lo.$method()), up($prec, a.hi.$method()))
    }};
}

pub fn apply(prec: u32, op: Op, args: &[&Interval]) -> Ival {
    match op {
        Op::Add => {
            let (a, b) = (args[0], args[1]);
            guard_nan(args, down(prec, &a.lo + &b.lo), up(prec, &a.hi + &b.hi))
        }
        Op::Sub => {
            let (a, b) = (args[0], args[1]);
            guard_nan(args, down(prec, &a.lo - &b.hi), up(prec, &a.hi - &b.lo))
        }
        Op::Mul => mul(prec, args[0], args[1]),
        Op::Div => div(prec, args[0], args[1]),
        Op::Neg => Ival::Val(args[0].neg()),
        Op::Fabs => Ival::Val(args[0].abs()),
        Op::Sqrt => {
            let a = args[0];
            if a.hi < 0 {
                Ival::Invalid
            } else if a.lo < 0 {
                Ival::Unsure
            } else {
                increasing!(prec, a, sqrt_ref)
            }
        }
        Op::Cbrt => increasing!(prec, args[0], cbrt_ref),
        Op::Exp => increasing!(prec, args[0], exp_ref),
        Op::Expm1 => increasing!(prec, args[0], exp_m1_ref),
        Op::Log => {
            let a = args[0];
            if a.hi < 0 {
                Ival::Invalid
            } else if a.lo < 0 {
                Ival::Unsure
            } else {
                increasing!(prec, a, ln_ref)
            }
        }
        Op::Log1p => {
            let a = args[0];
            if a.hi < -1 {
                Ival::Invalid
            } else if a.lo < -1 {
                Ival::Unsure
            } else {
                increasing!(prec, a, ln_1p_ref)
            }
        }
        Op::Pow => pow(prec, args[0], args[1]),
        Op::Hypot => {
            let (a, b) = (args[0].abs(), args[1].abs());
            guard_nan(args, down(prec, a.lo.hypot_ref(&b.lo)), up(prec, a.hi.hypot_ref(&b.hi)))
        }
        Op::Fma => match mul(prec, args[0], args[1]) {
            Ival::Val(p) => apply(prec, Op::Add, &[&p, args[2]]),
            other => other,
        },
        Op::Sin => lipschitz(prec, args[0], Trig::Sin),
        Op::Cos => lipschitz(prec, args[0], Trig::Cos),
        Op::Tan => {
            let a = args[0];
            match lipschitz(prec, a, Trig::Cos) {
                Ival::Val(c) if !c.contains_zero() => increasing!(prec, a, tan_ref),
                Ival::Val(c) if c.is_zero() => Ival::Invalid,
                other @ Ival::Invalid => other,
                _ => Ival::Unsure,
            }
        }
        Op::Asin | Op::Acos => {
            let a = args[0];
            if a.hi < -1 || a.lo > 1 {
                Ival::Invalid
            } else if a.lo < -1 || a.hi > 1 {
                Ival::Unsure
            } else if op == Op::Asin {
                increasing!(prec, a, asin_ref)
            } else {
                guard_nan(args, down(prec, a.hi.acos_ref()), up(prec, a.lo.acos_ref()))
            }
        }
        Op::Atan => increasing!(prec, args[0], atan_ref),
        Op::Atan2 => atan2(prec, args[0], args[1]),
        Op::Sinh => increasing!(prec, args[0], sinh_ref),
        Op::Cosh => {
            let a = args[0];
            if a.lo >= 0 {
                increasing!(prec, a, cosh_ref)
            } else if a.hi <= 0 {
                guard_nan(args, down(prec, a.hi.cosh_ref()), up(prec, a.lo.cosh_ref()))
            } else {
                let hi = max(up(prec, a.lo.cosh_ref()), up(prec, a.hi.cosh_ref()));
                Ival::Val(Interval { lo: Float::with_val(prec, 1), hi })
            }
        }
        Op::Tanh => increasing!(prec, args[0], tanh_ref),
        Op::Asinh => increasing!(prec, args[0], asinh_ref),
        Op::Acosh => {
            let a = args[0];
            if a.hi < 1 {
                Ival::Invalid
            } else if a.lo < 1 {
                Ival::Unsure
            } else {
                increasing!(prec, a, acosh_ref)
            }
        }
        Op::Atanh => {
            let a = args[0];
            if a.hi < -1 || a.lo > 1 {
                Ival::Invalid
            } else if a.lo < -1 || a.hi > 1 {
                Ival::Unsure
            } else {
                increasing!(prec, a, atanh_ref)
            }
        }
        Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq | Op::And | Op::Or | Op::If => {
            unreachable!("{} is not a value operator", op.name())
        }
    }
}

fn mul(prec: u32, a: &Interval, b: &Interval) -> Ival {
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for x in [&a.lo, &a.hi] {
        for y in [&b.lo, &b.hi] {
            let d = down(prec, x * y);
            let u = up(prec, x * y);
            if d.is_nan() || u.is_nan() {
                // 0 * inf: the true product of finite reals near zero and an
                // exact infinity is undefined.
                return undefined(&[a, b]);
            }
            lo = Some(match lo {
                Some(l) => min(l, d),
                None => d,
            });
            hi = Some(match hi {
                Some(h) => max(h, u),
                None => u,
            });
        }
    }
    Interval::new(lo.expect("four corners"), hi.expect("four corners"))
}

fn div(prec: u32, a: &Interval, b: &Interval) -> Ival {
    if b.is_zero() {
        return if a.is_zero() {
            Ival::Invalid
        } else if a.lo > 0 {
            let inf = Float::with_val(prec, rug::float::Special::Infinity);
            Ival::Val(Interval { lo: inf.clone(), hi: inf })
        } else if a.hi < 0 {
            let inf = Float::with_val(prec, rug::float::Special::NegInfinity);
            Ival::Val(Interval { lo: inf.clone(), hi: inf })
        } else {
            Ival::Unsure
        };
    }
    if b.contains_zero() {
        return Ival::Unsure;
    }
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for x in [&a.lo, &a.hi] {
        for y in [&b.lo, &b.hi] {
            let d = down(prec, x / y);
            let u = up(prec, x / y);
            if d.is_nan() || u.is_nan() {
                return undefined(&[a, b]);
            }
            lo = Some(match lo {
                Some(l) => min(l, d),
                None => d,
            });
            hi = Some(match hi {
                Some(h) => max(h, u),
                None => u,
            });
        }
    }
    Interval::new(lo.expect("four corners"), hi.expect("four corners"))
}

#[derive(Clone, Copy)]
enum Trig {
    Sin,
    Cos,
}

fn trig_round(prec: u32, x: &Float, trig: Trig, round: Round) -> Float {
    let mut r = Float::with_val(x.prec().max(prec), x);
    match trig {
        Trig::Sin => r.sin_round(round),
        Trig::Cos => r.cos_round(round),
    };
    r
}

/// Enclosure for a 1-Lipschitz function (sin, cos): value at the midpoint
/// widened by the half-width, clamped to [-1, 1].
fn lipschitz(prec: u32, a: &Interval, trig: Trig) -> Ival {
    if a.lo.is_infinite() || a.hi.is_infinite() {
        return undefined(&[a]);
    }
    if a.is_point() {
        return Interval::new(
            trig_round(prec, &a.lo, trig, Round::Down),
            trig_round(prec, &a.lo, trig, Round::Up),
        );
    }
    let mid = Float::with_val(prec, &a.lo + &a.hi) / 2u32;
    let rad = max(up(prec, &a.hi - &mid), up(prec, &mid - &a.lo));
    let one = Float::with_val(prec, 1);
    let vlo = trig_round(prec, &mid, trig, Round::Down);
    let vhi = trig_round(prec, &mid, trig, Round::Up);
    let lo = max(down(prec, &vlo - &rad), -one.clone());
    let hi = min(up(prec, &vhi + &rad), one);
    Interval::new(lo, hi)
}

fn is_integer_point(a: &Interval) -> bool {
    a.is_point() && a.lo.is_integer()
}

fn pow(prec: u32, a: &Interval, b: &Interval) -> Ival {
    if b.is_point() && b.lo.is_zero() {
        return Ival::Val(Interval { lo: Float::with_val(prec, 1), hi: Float::with_val(prec, 1) });
    }
    let corners = |a: &Interval, b: &Interval| -> Ival {
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for x in [&a.lo, &a.hi] {
            for y in [&b.lo, &b.hi] {
                let d = down(prec, x.pow(y));
                let u = up(prec, x.pow(y));
                if d.is_nan() || u.is_nan() {
                    return undefined(&[a, b]);
                }
                lo = Some(match lo {
                    Some(l) => min(l, d),
                    None => d,
                });
                hi = Some(match hi {
                    Some(h) => max(h, u),
                    None => u,
                });
            }
        }
        Interval::new(lo.expect("corners"), hi.expect("corners"))
    };

    if is_integer_point(b) && !b.lo.is_infinite() {
        let even = b.lo.to_integer().map(|n| n.is_even()).unwrap_or(false);
        let negative = b.lo < 0;
        if a.contains_zero() && !(a.lo >= 0 || a.hi <= 0) {
            // Base straddles zero.
            if negative {
                return Ival::Unsure;
            }
            let hi = max(up(prec, (&a.lo).pow(&b.lo)), up(prec, (&a.hi).pow(&b.lo)));
            let lo = if even {
                Float::with_val(prec, 0)
            } else {
                down(prec, (&a.lo).pow(&b.lo))
            };
            return Interval::new(lo, hi);
        }
        if negative && a.contains_zero() && !a.is_zero() {
            return Ival::Unsure;
        }
        if negative && a.is_zero() {
            let inf = Float::with_val(prec, rug::float::Special::Infinity);
            return Ival::Val(Interval { lo: inf.clone(), hi: inf });
        }
        return corners(a, b);
    }

    if a.hi < 0 {
        return if b.is_point() { Ival::Invalid } else { Ival::Unsure };
    }
    if a.lo < 0 {
        return Ival::Unsure;
    }
    if a.lo.is_zero() && b.contains_zero() {
        return if a.is_zero() && b.is_point() { corners(a, b) } else { Ival::Unsure };
    }
    corners(a, b)
}

fn atan2(prec: u32, y: &Interval, x: &Interval) -> Ival {
    if y.is_zero() && x.is_zero() {
        return Ival::Invalid;
    }
    if y.contains_zero() && x.contains_zero() {
        return Ival::Unsure;
    }
    // Crossing the branch cut along the negative x axis.
    if y.lo < 0 && y.hi >= 0 && x.lo < 0 {
        return Ival::Unsure;
    }
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for yy in [&y.lo, &y.hi] {
        for xx in [&x.lo, &x.hi] {
            let d = down(prec, yy.atan2_ref(xx));
            let u = up(prec, yy.atan2_ref(xx));
            if d.is_nan() || u.is_nan() {
                return undefined(&[y, x]);
            }
            lo = Some(match lo {
                Some(l) => min(l, d),
                None => d,
            });
            hi = Some(match hi {
                Some(h) => max(h, u),
                None => u,
            });
        }
    }
    Interval::new(lo.expect("corners"), hi.expect("corners"))
}

pub fn compare(op: Op, a: &Interval, b: &Interval) -> Truth {
    let both_points_equal = a.is_point() && b.is_point() && a.lo == b.lo;
    match op {
        Op::Lt => {
            if a.hi < b.lo {
                Truth::Known(true)
            } else if a.lo >= b.hi {
                Truth::Known(false)
            } else {
                Truth::Unsure
            }
        }
        Op::Le => {
            if a.hi <= b.lo {
                Truth::Known(true)
            } else if a.lo > b.hi {
                Truth::Known(false)
            } else {
                Truth::Unsure
            }
        }
        Op::Gt => compare(Op::Lt, b, a),
        Op::Ge => compare(Op::Le, b, a),
        Op::Eq => {
            if both_points_equal {
                Truth::Known(true)
            } else if a.hi < b.lo || b.hi < a.lo {
                Truth::Known(false)
            } else {
                Truth::Unsure
            }
        }
        _ => unreachable!("{} is not a comparison", op.name()),
    }
}
