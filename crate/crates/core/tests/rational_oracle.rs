//! Checks the MPFR oracle against exact rational arithmetic for the field
//! operations, where the true result is a rational number.

use fpwb_core::oracle::eval_exact;
use fpwb_core::{parse_math, FloatFormat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// The smallest magnitude that rounds to infinity: 2^1024 - 2^970.
fn overflow_threshold() -> BigRational {
    let two = BigInt::from(2);
    BigRational::from_integer(two.pow(1024u32) - two.pow(970u32))
}

fn is_even(x: f64) -> bool {
    x.to_bits() & 1 == 0
}

/// `r` is the round-to-nearest-even binary64 value of `q`.
fn correctly_rounded(r: f64, q: &BigRational) -> Result<(), String> {
    if r.is_infinite() {
        return if q.abs() >= overflow_threshold() && (r > 0.0) == q.is_positive() {
            Ok(())
        } else {
            Err(format!("{r} for {q}"))
        };
    }
    let d = (rational(r) - q).abs();
    for up in [false, true] {
        let n = fpwb_core::float::step(r, up);
        if !n.is_finite() {
            continue;
        }
        let dn = (rational(n) - q).abs();
        if dn < d || (dn == d && !is_even(r) && is_even(n)) {
            return Err(format!("{r:e} is not nearest to {q}; {n:e} is"));
        }
    }
    Ok(())
}

fn operand() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<i64>().prop_map(f64::from_ordinal).prop_filter("finite", |x| x.is_finite()),
        -1e6..1e6f64,
        (-1074i32..1024).prop_map(|e| 2f64.powi(e)),
        (1u64..1 << 20).prop_map(|m| m as f64),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn field_operations_round_correctly(a in operand(), b in operand(), op in 0usize..4) {
        let (text, q) = match op {
            0 => ("x + y", rational(a) + rational(b)),
            1 => ("x - y", rational(a) - rational(b)),
            2 => ("x * y", rational(a) * rational(b)),
            _ => {
                prop_assume!(b != 0.0);
                ("x / y", rational(a) / rational(b))
            }
        };
        let vars = ["x".to_string(), "y".to_string()];
        let v = eval_exact(&parse_math(text).unwrap(), &vars, &[a, b]).unwrap();
        let r: f64 = v.round().ok_or_else(|| TestCaseError::fail(format!("{text} at {a:e}, {b:e}: {v:?}")))?;
        if q.is_zero() {
            prop_assert_eq!(r, 0.0);
        } else {
            correctly_rounded(r, &q).map_err(|m| TestCaseError::fail(format!("{text} at {a:e}, {b:e}: {m}")))?;
        }
    }

    #[test]
    fn nested_expressions_round_once(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64) {
        let q = (rational(a) * rational(b) - rational(c)) / (rational(a) + BigRational::from_integer(3.into()));
        prop_assume!(a != -3.0);
        let vars = ["a".to_string(), "b".to_string(), "c".to_string()];
        let v = eval_exact(&parse_math("(a * b - c) / (a + 3)").unwrap(), &vars, &[a, b, c]).unwrap();
        let r: f64 = v.round().unwrap();
        if q.is_zero() {
            prop_assert_eq!(r, 0.0);
        } else {
            correctly_rounded(r, &q).map_err(TestCaseError::fail)?;
        }
    }
}

#[test]
fn halfway_cases_round_to_even() {
    let vars = ["x".to_string(), "y".to_string()];
    let e = parse_math("x + y").unwrap();
    let half_ulp = 2f64.powi(-53);
    for (a, b) in [(1.0, half_ulp), (1.0 + 2.0 * half_ulp, half_ulp), (1e16, 1.0), (1e16 + 2.0, 1.0)] {
        let q = rational(a) + rational(b);
        let r: f64 = eval_exact(&e, &vars, &[a, b]).unwrap().round().unwrap();
        correctly_rounded(r, &q).unwrap();
        assert!(is_even(r), "{a:e} + {b:e} -> {r:e}");
    }
}
