//! IEEE-754 target formats, their ordinal index, and the ULP / bits metrics.
//!
//! Every binary format is mapped onto a signed integer line: non-negative
//! values use their raw bit pattern, negative values the negated pattern of
//! their magnitude. Adjacent representable values differ by exactly one, the
//! infinities sit one step beyond the largest finite values, and `-0` is
//! folded onto `+0`.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst};
use rug::float::Round;

/// A binary floating-point format the workbench can measure error in.
pub trait FloatFormat:
    Float + FloatConst + FromStr + Debug + Display + Default + Send + Sync + 'static
{
    /// Storage width; also the ceiling of the bits-of-error scale.
    const WIDTH: u32;
    /// Significand precision including the hidden bit.
    const PRECISION: u32;
    /// Hex digits used when encoding a bit pattern.
    const HEX_DIGITS: usize;

    fn to_bits_u64(self) -> u64;
    fn from_bits_u64(bits: u64) -> Self;

    /// Round an extended-precision value to this format, ties to even.
    fn round_from(value: &rug::Float) -> Self;

    /// Round an extended-precision value in a fixed direction.
    fn round_from_dir(value: &rug::Float, round: Round) -> Self;

    fn to_f64(self) -> f64;

    fn to_ordinal(self) -> i64 {
        let x = if self == Self::zero() { Self::zero() } else { self };
        let sign_mask = 1u64 << (Self::WIDTH - 1);
        let bits = x.to_bits_u64();
        if bits & sign_mask != 0 {
            -((bits & !sign_mask) as i64)
        } else {
            bits as i64
        }
    }

    fn from_ordinal(ordinal: i64) -> Self {
        let sign_mask = 1u64 << (Self::WIDTH - 1);
        if ordinal < 0 {
            Self::from_bits_u64(ordinal.unsigned_abs() | sign_mask)
        } else {
            Self::from_bits_u64(ordinal as u64)
        }
    }

    fn to_hex(self) -> String {
        format!("{:0width$x}", self.to_bits_u64(), width = Self::HEX_DIGITS)
    }

    fn from_hex(text: &str) -> Option<Self> {
        let digits = text.strip_prefix("0x").unwrap_or(text);
        if digits.is_empty() || digits.len() > Self::HEX_DIGITS {
            return None;
        }
        u64::from_str_radix(digits, 16).ok().map(Self::from_bits_u64)
    }
}

impl FloatFormat for f64 {
    const WIDTH: u32 = 64;
    const PRECISION: u32 = 53;
    const HEX_DIGITS: usize = 16;

    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }

    fn from_bits_u64(bits: u64) -> Self {
        f64::from_bits(bits)
    }

    fn round_from(value: &rug::Float) -> Self {
        value.to_f64()
    }

    fn round_from_dir(value: &rug::Float, round: Round) -> Self {
        value.to_f64_round(round)
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl FloatFormat for f32 {
    const WIDTH: u32 = 32;
    const PRECISION: u32 = 24;
    const HEX_DIGITS: usize = 8;

    fn to_bits_u64(self) -> u64 {
        u64::from(self.to_bits())
    }

    fn from_bits_u64(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }

    fn round_from(value: &rug::Float) -> Self {
        value.to_f32()
    }

    fn round_from_dir(value: &rug::Float, round: Round) -> Self {
        value.to_f32_round(round)
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Number of representable values between `a` and `b`.
///
/// Two NaNs are at distance zero; a NaN against anything else is at the
/// maximal distance.
pub fn ulps<F: FloatFormat>(a: F, b: F) -> u64 {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => 0,
        (true, false) | (false, true) => u64::MAX,
        (false, false) => {
            let d = i128::from(a.to_ordinal()) - i128::from(b.to_ordinal());
            d.unsigned_abs() as u64
        }
    }
}

/// `log2(1 + ulps(a, b))`, clamped to `[0, F::WIDTH]`.
pub fn bits<F: FloatFormat>(a: F, b: F) -> f64 {
    let u = ulps(a, b);
    if u == 0 {
        return 0.0;
    }
    // 1 + u can exceed u64 for the NaN case; do it in f64.
    (1.0 + u as f64).log2().clamp(0.0, f64::from(F::WIDTH))
}

/// Next representable value toward `+inf` (or `-inf` when `up` is false).
pub fn step<F: FloatFormat>(x: F, up: bool) -> F {
    if x.is_nan() {
        return x;
    }
    let o = x.to_ordinal();
    F::from_ordinal(if up { o + 1 } else { o - 1 })
}

/// Read a binary64 written as a decimal (scientific notation allowed) or as
/// a `0x`-prefixed bit pattern. Decimals are rounded to nearest.
pub fn parse_f64(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.starts_with("0x") {
        return f64::from_hex(t);
    }
    match t.parse::<f64>() {
        Ok(v) if !t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') => Some(v),
        _ => None,
    }
}

/// Serde adapters that encode values as hex bit patterns.
pub mod hex {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::FloatFormat;

    fn decode<F: FloatFormat, E: serde::de::Error>(text: &str) -> Result<F, E> {
        F::from_hex(text).ok_or_else(|| E::custom(format!("bad hex float `{text}`")))
    }

    pub fn serialize<F: FloatFormat, S: Serializer>(v: &F, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_hex())
    }

    pub fn deserialize<'de, F: FloatFormat, D: Deserializer<'de>>(d: D) -> Result<F, D::Error> {
        decode(&String::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<F: FloatFormat, S: Serializer>(v: &Option<F>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&v.to_hex()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, F: FloatFormat, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<F>, D::Error> {
            Option::<String>::deserialize(d)?.map(|t| decode(&t)).transpose()
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<F: FloatFormat, S: Serializer>(v: &[F], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| x.to_hex()))
        }

        pub fn deserialize<'de, F: FloatFormat, D: Deserializer<'de>>(d: D) -> Result<Vec<F>, D::Error> {
            Vec::<String>::deserialize(d)?.iter().map(|t| decode(t)).collect()
        }
    }

    pub mod vec2 {
        use super::*;

        pub fn serialize<F: FloatFormat, S: Serializer>(v: &[Vec<F>], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|p| p.iter().map(|x| x.to_hex()).collect::<Vec<_>>()))
        }

        pub fn deserialize<'de, F: FloatFormat, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<F>>, D::Error> {
            Vec::<Vec<String>>::deserialize(d)?
                .iter()
                .map(|p| p.iter().map(|t| decode(t)).collect())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values() {
        assert_eq!(parse_f64("1e308"), Some(1e308));
        assert_eq!(parse_f64(" -0.1 "), Some(-0.1));
        assert_eq!(parse_f64("0x3ff0000000000000"), Some(1.0));
        assert_eq!(parse_f64("inf"), None);
        assert_eq!(parse_f64("1e400"), Some(f64::INFINITY));
        assert_eq!(parse_f64("x"), None);
    }

    #[test]
    fn ordinal_anchors() {
        assert_eq!(0.0f64.to_ordinal(), 0);
        assert_eq!((-0.0f64).to_ordinal(), 0);
        assert_eq!(f64::from_bits(1).to_ordinal(), 1);
        assert_eq!((-f64::from_bits(1)).to_ordinal(), -1);
        assert_eq!(1.0f64.to_ordinal(), 4607182418800017408);
        assert_eq!(f64::INFINITY.to_ordinal(), f64::MAX.to_ordinal() + 1);
        assert_eq!(f64::NEG_INFINITY.to_ordinal(), f64::MIN.to_ordinal() - 1);
        assert_eq!(f32::MAX.to_ordinal() + 1, f32::INFINITY.to_ordinal());
    }

    #[test]
    fn ordinal_inverse() {
        for x in [0.0, 1.0, -1.0, 1e-310, -3.5e200, f64::MAX, f64::NEG_INFINITY] {
            assert_eq!(f64::from_ordinal(x.to_ordinal()), x);
        }
        for x in [0.0f32, 1.0, -1.0, 1e-40, f32::MIN] {
            assert_eq!(f32::from_ordinal(x.to_ordinal()), x);
        }
    }

    #[test]
    fn ulps_and_bits_examples() {
        assert_eq!(ulps(1.0, 1.0), 0);
        assert_eq!(bits(1.0, 1.0), 0.0);
        let next = step(1.0f64, true);
        assert_eq!(ulps(1.0, next), 1);
        assert_eq!(bits(1.0, next), 1.0);
        // ord(1.0) = 4607182418800017408, log2(1 + that)
        let b = bits(0.0, 1.0);
        assert!((b - 61.99859042974533).abs() < 1e-9, "{b}");
        assert_eq!(ulps(0.0, -0.0), 0);
    }

    #[test]
    fn nan_cases() {
        assert_eq!(ulps(f64::NAN, f64::NAN), 0);
        assert_eq!(ulps(f64::NAN, 1.0), u64::MAX);
        assert_eq!(bits(f64::NAN, 1.0), 64.0);
        assert_eq!(bits(1.0f32, f32::NAN), 32.0);
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(1.0f64.to_hex(), "3ff0000000000000");
        assert_eq!(f64::from_hex("0x3ff0000000000000"), Some(1.0));
        assert_eq!(f32::from_hex("3f800000"), Some(1.0f32));
        assert_eq!(f64::from_hex("zz"), None);
    }

    #[test]
    fn mpfr_rounding_handles_subnormals() {
        // 3 * 2^-1076 lies between the subnormals 2^-1075.. ties; check against bit math.
        let tiny = rug::Float::with_val(200, 3) * (rug::Float::with_val(200, 1) >> 1076u32);
        let expected = f64::from_bits(1); // 0.75 * 2^-1074 rounds to 2^-1074
        assert_eq!(f64::round_from(&tiny), expected);
        let big = rug::Float::with_val(200, 1e300) * rug::Float::with_val(200, 1e300);
        assert_eq!(f64::round_from(&big), f64::INFINITY);
    }
}
