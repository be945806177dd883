//! Property suites shared by the `properties` and `acceptance` tests.

use fpwb_core::eval::Program;
use fpwb_core::expr::{NamedConst, OpClass};
use fpwb_core::oracle::{eval_exact, exact, exact_at, ExactValue, MAX_PRECISION};
use fpwb_core::rewriter::pattern::{instantiate, Bindings};
use fpwb_core::rewriter::rules::Rhs;
use fpwb_core::rewriter::{rule_db, Soundness};
use fpwb_core::sampler::sample;
use fpwb_core::{bits, emit_fpcore, emit_math, parse_fpcore, parse_math, ulps, Expr, FloatFormat, Op, Spec, VarRange};
use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::{Config, TestRunner};

pub const ORDINAL_CASES: u32 = 100_000;
pub const ULPS_CASES: u32 = 10_000;
pub const ROUND_TRIP_CASES: u32 = 2_000;
pub const RULE_CASES: u32 = 1_000;
pub const ESCALATION_CASES: u32 = 1_000;
pub const SAMPLER_CASES: u32 = 64;

const LITERALS: &[&str] = &["0", "1", "2", "3", "0.5", "1e-3", "2.5e10", "12345", "0.125", "7e-300"];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, max_global_rejects: cases * 8, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        4 => select(vec!["x", "y", "z"]).prop_map(Expr::var),
        3 => select(LITERALS).prop_map(Expr::num),
        1 => select(vec![NamedConst::Pi, NamedConst::E]).prop_map(Expr::Const),
    ]
}

fn ops(class: OpClass, arity: usize) -> Vec<Op> {
    Op::ALL.iter().copied().filter(|o| o.class() == class && o.arity() == arity).collect()
}

/// Random well-formed expressions of depth at most 6.
pub fn value_expr() -> impl Strategy<Value = Expr> {
    leaf()
        .prop_recursive(5, 48, 3, |inner| {
            let cond = (select(ops(OpClass::Compare, 2)), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::binary(op, a, b));
            let cond = prop_oneof![
                3 => cond.clone(),
                1 => (select(ops(OpClass::Logic, 2)), cond.clone(), cond).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            ];
            prop_oneof![
                4 => (select(ops(OpClass::Value, 1)), inner.clone()).prop_map(|(op, a)| Expr::unary(op, a)),
                5 => (select(ops(OpClass::Value, 2)), inner.clone(), inner.clone())
                    .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
                1 => (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| Expr::op(Op::Fma, vec![a, b, c])),
                1 => (cond, inner.clone(), inner).prop_map(|(c, a, b)| Expr::if_(c, a, b)),
            ]
        })
        .prop_filter("depth <= 6", |e| e.depth() <= 6)
}

pub fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<i64>().prop_map(f64::from_ordinal).prop_filter("finite", |x| x.is_finite()),
        -100.0..100.0f64,
        Just(0.0),
        Just(1.0),
    ]
}

pub fn math_round_trip() -> Result<(), String> {
    run(ROUND_TRIP_CASES, value_expr(), |e| {
        prop_assert!(e.validate().is_ok());
        let text = emit_math(&e);
        let back = parse_math(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
        Ok(())
    })
}

pub fn fpcore_round_trip() -> Result<(), String> {
    run(ROUND_TRIP_CASES, value_expr(), |e| {
        let vars = ["x", "y", "z"].map(VarRange::full).to_vec();
        let spec = Spec::new(e.clone(), vars, 256, 42).unwrap();
        let text = emit_fpcore(&e, &spec);
        let back = parse_fpcore(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, spec);
        Ok(())
    })
}

pub fn ordinal_monotonicity() -> Result<(), String> {
    run(ORDINAL_CASES, (any::<u64>(), any::<u64>()), |(a, b)| {
        let (a, b) = (f64::from_bits(a), f64::from_bits(b));
        if a.is_nan() || b.is_nan() {
            return Err(TestCaseError::reject("nan"));
        }
        let (oa, ob) = (a.to_ordinal(), b.to_ordinal());
        prop_assert_eq!(a < b, oa < ob);
        prop_assert_eq!(a == b, oa == ob);
        let back = f64::from_ordinal(oa);
        prop_assert_eq!(back.to_bits(), if a == 0.0 { 0 } else { a.to_bits() });
        Ok(())
    })
}

pub fn ulps_laws() -> Result<(), String> {
    run(ULPS_CASES, (any::<u64>(), any::<u64>()), |(a, b)| {
        let (a, b) = (f64::from_bits(a), f64::from_bits(b));
        prop_assert_eq!(ulps(a, b), ulps(b, a));
        prop_assert_eq!(ulps(a, a), 0);
        prop_assert!((0.0..=64.0).contains(&bits(a, b)));
        if a.is_nan() || b.is_nan() {
            prop_assert_eq!(ulps(a, b) == 0, a.is_nan() && b.is_nan());
        } else {
            prop_assert_eq!(ulps(a, b) == 0, a == b);
            prop_assert_eq!(bits(a, b) == 0.0, a == b);
            if a.is_finite() {
                prop_assert_eq!(ulps(a, fpwb_core::float::step(a, true)), 1);
            }
        }
        Ok(())
    })?;
    run(ULPS_CASES, (any::<u32>(), any::<u32>()), |(a, b)| {
        let (a, b) = (f32::from_bits(a), f32::from_bits(b));
        prop_assert_eq!(ulps(a, b), ulps(b, a));
        prop_assert!(bits(a, b) <= 32.0);
        if !a.is_nan() && !b.is_nan() {
            prop_assert_eq!(ulps(a, b) == 0, a == b);
        }
        Ok(())
    })
}

fn small_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => select(vec!["x", "y"]).prop_map(Expr::var),
        1 => select(LITERALS).prop_map(Expr::num),
    ];
    leaf.prop_recursive(1, 4, 2, |inner| {
        prop_oneof![
            (select(vec![Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Hypot]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (select(vec![Op::Sqrt, Op::Exp, Op::Log, Op::Neg, Op::Sin]), inner).prop_map(|(op, a)| Expr::unary(op, a)),
        ]
    })
}

/// Infinite results come from poles, which lie outside the real domain.
fn agree(lhs: &ExactValue, rhs: &ExactValue) -> bool {
    match (lhs, rhs) {
        (ExactValue::Finite(_), ExactValue::Finite(_)) => lhs.round::<f64>() == rhs.round::<f64>(),
        _ => true,
    }
}

/// Both sides of every exact identity agree wherever both are finite.
pub fn rule_soundness() -> Result<(), String> {
    let rules: Vec<_> = rule_db().iter().filter(|r| r.soundness == Soundness::ExactIdentity).collect();
    let strategy = (
        0..rules.len(),
        prop::collection::vec(small_expr(), 4),
        prop::collection::vec(select(LITERALS), 4),
        prop::collection::vec((finite(), finite()), 3),
    );
    run(RULE_CASES, strategy, |(which, subs, lits, points)| {
        let rule = rules[which];
        let (metas, _) = rule.metavariables();
        let mut b = Bindings::new();
        for (i, m) in metas.iter().enumerate() {
            let v = match rule.rhs {
                Rhs::Fold => Expr::num(lits[i]),
                Rhs::Pattern(_) => subs[i].clone(),
            };
            b.insert(m.clone(), v);
        }
        let before = instantiate(&rule.lhs, &b);
        let after = rule.apply(&before);
        // Folds decline when the result has no terminating decimal form.
        if after.is_none() && rule.rhs == Rhs::Fold {
            return Err(TestCaseError::reject("fold declined"));
        }
        let after = after.ok_or_else(|| TestCaseError::fail(format!("{} does not apply to {before}", rule.name)))?;
        let vars = vec!["x".to_string(), "y".to_string()];
        for (x, y) in points {
            let l = eval_exact(&before, &vars, &[x, y]).unwrap();
            let r = eval_exact(&after, &vars, &[x, y]).unwrap();
            prop_assert!(
                agree(&l, &r),
                "{}: {} = {:?} but {} = {:?} at x={:e}, y={:e}",
                rule.name,
                before,
                l,
                after,
                r,
                x,
                y
            );
        }
        Ok(())
    })
}

const ESCALATION: &[&str] = &[
    "log(x + sqrt(x * x + 1))",
    "x + 1 - x",
    "(exp(x) - 2) + exp(-x)",
    "sqrt(x + 1) - sqrt(x)",
    "(1 - cos(x)) / (x * x)",
    "expm1(x) / x",
    "if x < 1 then log(1 + x) else x * x - x",
];

/// Once the escalation stops, doubling the working precision does not
/// change the rounded result.
pub fn escalation_stability() -> Result<(), String> {
    let progs: Vec<Program<f64>> = ESCALATION
        .iter()
        .map(|t| Program::new(&parse_math(t).unwrap(), &["x".to_string()]).unwrap())
        .collect();
    run(ESCALATION_CASES, (0..ESCALATION.len(), finite()), |(which, x)| {
        let prog = &progs[which];
        let ev = exact(prog, &[x]);
        if !ev.value.is_valid() || ev.precision >= MAX_PRECISION {
            return Err(TestCaseError::reject("not converged"));
        }
        if let Some(v) = exact_at(prog, &[x], ev.precision * 2).filter(ExactValue::is_valid) {
            prop_assert_eq!(v.round::<f64>(), ev.value.round::<f64>(), "{} at {:e}", ESCALATION[which], x);
        }
        Ok(())
    })
}

fn range() -> impl Strategy<Value = (f64, f64)> {
    (finite(), finite()).prop_filter_map("lo < hi", |(a, b)| match a.partial_cmp(&b)? {
        std::cmp::Ordering::Less => Some((a, b)),
        std::cmp::Ordering::Greater => Some((b, a)),
        std::cmp::Ordering::Equal => None,
    })
}

pub fn sampler_determinism() -> Result<(), String> {
    run(SAMPLER_CASES, (any::<u64>(), range(), range()), |(seed, rx, ry)| {
        let e = parse_math("x * y + 1").unwrap();
        let vars = vec![VarRange::new("x", rx.0, rx.1), VarRange::new("y", ry.0, ry.1)];
        let spec = Spec::new(e, vars, 16, seed).unwrap();
        let a = sample::<f64>(&spec).unwrap();
        let b = sample::<f64>(&spec).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.spec_key, &spec.key());
        prop_assert_eq!(a.points.len(), a.achieved);
        for p in &a.points {
            prop_assert!(rx.0 <= p[0] && p[0] <= rx.1);
            prop_assert!(ry.0 <= p[1] && p[1] <= ry.1);
        }
        let wide = |r: (f64, f64)| (r.1.to_ordinal() as i128 - r.0.to_ordinal() as i128) > 1 << 20;
        if wide(rx) && wide(ry) {
            let other = sample::<f64>(&Spec { seed: seed ^ 1, ..spec.clone() }).unwrap();
            prop_assert_ne!(&a.points, &other.points);
        }
        Ok(())
    })
}

/// Every suite with its name, in the order they are reported.
#[allow(dead_code)]
pub fn all() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("ordinal monotonicity", ordinal_monotonicity),
        ("ulps laws", ulps_laws),
        ("math round trip", math_round_trip),
        ("fpcore round trip", fpcore_round_trip),
        ("rule soundness", rule_soundness),
        ("sampler determinism", sampler_determinism),
        ("escalation stability", escalation_stability),
    ]
}
