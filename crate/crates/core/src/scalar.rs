//! Scalar fields the block arithmetic runs over.
//!
//! Two implementations are provided: exact rationals backed by big integers,
//! and `f64`. A computation picks one at compile time through the generic
//! parameter; the two are never mixed.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Default tolerance used for equality assertions in floating mode.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

pub trait Scalar: Clone + Debug + PartialEq + Send + Sync + 'static {
    /// True when arithmetic is exact and equality is decidable.
    const EXACT: bool;
    /// Short mode name used in reports ("rational" / "float").
    const MODE: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse, `None` for zero.
    fn recip(&self) -> Option<Self>;

    fn is_zero(&self) -> bool;
    /// Absolute value as a float, used for residuals and pivot selection.
    fn magnitude(&self) -> f64;

    /// Lossless text form (`p/q` for rationals).
    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self, String>;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// Equality under the mode's rules: exact for rationals, `|a-b| <= tol`
    /// for floats.
    fn near(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            self.sub(other).magnitude() <= tol
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(BigRational::recip(self))
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn to_text(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
    fn parse_text(s: &str) -> Result<Self, String> {
        parse_rational(s)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().map_err(|e| format!("bad numerator {p:?}: {e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("bad denominator {q:?}: {e}"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(p / q)
        } else {
            s.parse().map_err(|e| format!("bad number {s:?}: {e}"))
        }
    }
}

/// Parses `p/q`, integers and decimal literals (with optional exponent)
/// exactly.
fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|e| format!("bad exponent in {s:?}: {e}"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['+', '-']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("bad number {s:?}"));
    }
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).map_err(|e| e.to_string())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= pow;
    } else {
        value /= pow;
    }
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parses_rational_forms() {
        assert_eq!(Rational::parse_text("3/6").unwrap(), q(1, 2));
        assert_eq!(Rational::parse_text("-7").unwrap(), q(-7, 1));
        assert_eq!(Rational::parse_text("0.25").unwrap(), q(1, 4));
        assert_eq!(Rational::parse_text("-1.5e2").unwrap(), q(-150, 1));
        assert_eq!(Rational::parse_text("2e-1").unwrap(), q(1, 5));
        assert!(Rational::parse_text("1/0").is_err());
        assert!(Rational::parse_text("abc").is_err());
        assert!(Rational::parse_text("").is_err());
    }

    #[test]
    fn text_round_trip() {
        for v in [q(0, 1), q(-3, 7), q(12, 1), q(5, 10)] {
            assert_eq!(Rational::parse_text(&v.to_text()).unwrap(), v);
        }
        assert_eq!(q(-3, 7).to_text(), "-3/7");
        assert_eq!(q(4, 2).to_text(), "2");
        let x = 0.1_f64 + 0.2;
        assert_eq!(f64::parse_text(&x.to_text()).unwrap(), x);
    }

    #[test]
    fn near_is_exact_for_rationals() {
        assert!(!q(1, 3).near(&q(333_333_333, 1_000_000_000), 1e-3));
        assert!(0.1_f64.near(&0.100_000_000_001, 1e-10));
    }
}
