use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Literal exponents are limited so exact conversion stays cheap.
const MAX_EXPONENT: i64 = 100_000;

/// A non-negative decimal literal kept exactly as written.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(String);

impl Literal {
    /// Accepts `digits[.digits][e[+-]digits]` and `.digits[...]`.
    pub fn new(text: &str) -> Option<Literal> {
        scan(text.as_bytes()).filter(|&n| n == text.len())?;
        Some(Literal(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Exact value.
    pub fn to_rational(&self) -> Rational {
        let (mantissa, exp10) = self.decompose();
        let ten = Integer::from(10);
        if exp10 >= 0 {
            Rational::from(mantissa * ten.pow(exp10 as u32))
        } else {
            Rational::from((mantissa, ten.pow((-exp10) as u32)))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.parse().expect("validated literal")
    }

    /// The value rounded to `prec` bits in the given direction.
    pub fn to_mpfr(&self, prec: u32, round: Round) -> rug::Float {
        let parsed = rug::Float::parse(&self.0).expect("validated literal");
        rug::Float::with_val_round(prec, parsed, round).0
    }

    pub fn is_integer(&self) -> bool {
        self.to_rational().is_integer()
    }

    /// Decimal literal for a non-negative rational whose expansion terminates.
    pub fn from_rational(value: &Rational) -> Option<Literal> {
        if *value < 0 {
            return None;
        }
        let mut den = value.denom().clone();
        let (mut twos, mut fives) = (0u32, 0u32);
        while den.is_divisible_u(2) {
            den /= 2;
            twos += 1;
        }
        while den.is_divisible_u(5) {
            den /= 5;
            fives += 1;
        }
        if den != 1 {
            return None;
        }
        let scale = twos.max(fives);
        let scaled = Integer::from(value.numer() * Integer::from(10).pow(scale)) / value.denom();
        let digits = scaled.to_string();
        if scale == 0 {
            return Literal::new(&digits);
        }
        let scale = scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - scale);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            Literal::new(int)
        } else {
            Literal::new(&format!("{int}.{frac}"))
        }
    }

    fn decompose(&self) -> (Integer, i64) {
        let s = self.0.as_str();
        let (body, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().expect("validated exponent")),
            None => (s, 0),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let digits = format!("{int}{frac}");
        let mantissa = if digits.is_empty() {
            Integer::new()
        } else {
            digits.parse::<Integer>().expect("digits")
        };
        (mantissa, exp - frac.len() as i64)
    }
}

/// Length of the literal prefix of `src`, if it starts with one.
pub(crate) fn scan(src: &[u8]) -> Option<usize> {
    let mut i = 0;
    let int_start = i;
    while i < src.len() && src[i].is_ascii_digit() {
        i += 1;
    }
    let mut ndigits = i - int_start;
    if i < src.len() && src[i] == b'.' {
        let frac_start = i + 1;
        let mut j = frac_start;
        while j < src.len() && src[j].is_ascii_digit() {
            j += 1;
        }
        if ndigits > 0 || j > frac_start {
            ndigits += j - frac_start;
            i = j;
        }
    }
    if ndigits == 0 {
        return None;
    }
    if i < src.len() && (src[i] == b'e' || src[i] == b'E') {
        let mut j = i + 1;
        if j < src.len() && (src[j] == b'+' || src[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < src.len() && src[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            let text = std::str::from_utf8(&src[exp_start..j]).ok()?;
            match text.parse::<i64>() {
                Ok(e) if e <= MAX_EXPONENT => i = j,
                _ => return None,
            }
        }
    }
    Some(i)
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Literal::new(&text).ok_or_else(|| serde::de::Error::custom(format!("bad literal `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_and_rejects() {
        for ok in ["0", "1", "1.5", ".5", "5.", "1e15", "1E-52", "2.5e+3"] {
            assert!(Literal::new(ok).is_some(), "{ok}");
        }
        for bad in ["", ".", "-1", "1e", "1e+", "e5", "1.2.3", "1e999999999"] {
            assert!(Literal::new(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn exact_values() {
        assert_eq!(Literal::new("0.1").unwrap().to_rational(), Rational::from((1, 10)));
        assert_eq!(Literal::new("2.5e2").unwrap().to_rational(), Rational::from(250));
        assert!(Literal::new("4e0").unwrap().is_integer());
        assert!(!Literal::new("0.5").unwrap().is_integer());
    }

    #[test]
    fn from_rational_terminating_only() {
        assert_eq!(Literal::from_rational(&Rational::from((3, 4))).unwrap().as_str(), "0.75");
        assert_eq!(Literal::from_rational(&Rational::from(12)).unwrap().as_str(), "12");
        assert_eq!(Literal::from_rational(&Rational::from((1, 40))).unwrap().as_str(), "0.025");
        assert!(Literal::from_rational(&Rational::from((1, 3))).is_none());
        assert!(Literal::from_rational(&Rational::from(-2)).is_none());
    }

    #[test]
    fn directed_rounding_brackets_value() {
        let lit = Literal::new("0.1").unwrap();
        let lo = lit.to_mpfr(80, Round::Down);
        let hi = lit.to_mpfr(80, Round::Up);
        assert!(lo < hi);
        assert!(lo <= lit.to_rational() && lit.to_rational() <= hi);
    }
}
