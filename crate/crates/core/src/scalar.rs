//! Scalar abstraction shared by the reward mechanisms and the closed-form
//! incentive formulas.
//!
//! Rewards are computed exactly with [`Rational`] on the ledger and in the
//! oracle-equivalence checks; the Monte-Carlo paths and quick sweeps use
//! `f64`. Everything that only needs field arithmetic is written once against
//! [`Scalar`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Field-like number type usable by the mechanisms.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `num / den`, exact for rationals and correctly rounded for floats.
    fn ratio(num: i64, den: i64) -> Self;

    /// Parses a plain decimal literal such as `0.95`, `-3` or `1.5e-2`.
    fn parse_decimal(text: &str) -> Option<Self>;

    /// Exact rational value, `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    fn from_count(n: usize) -> Self {
        Self::ratio(n as i64, 1)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn ratio(num: i64, den: i64) -> Self {
                (num as f64 / den as f64) as $t
            }

            fn parse_decimal(text: &str) -> Option<Self> {
                text.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        parse_exact_decimal(text)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

/// Exact decimal parser: `[-+]digits[.digits][e[-+]digits]`.
pub fn parse_exact_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(&all_digits, 10).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Renders a rational with `sig` significant digits, rounding half away from
/// zero. Trailing zeros are kept so every value has the same precision.
pub fn format_significant(value: &Rational, sig: usize) -> String {
    assert!(sig > 0, "at least one significant digit");
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let magnitude = value.abs();
    let ten = Rational::from_integer(BigInt::from(10u8));

    // Decimal exponent e with 10^e <= magnitude < 10^(e+1).
    let mut exponent = magnitude.to_f64().map(|f| f.log10().floor() as i64).unwrap_or(0);
    let pow10 = |e: i64| -> Rational {
        if e >= 0 {
            num_traits::pow(ten.clone(), e as usize)
        } else {
            Rational::one() / num_traits::pow(ten.clone(), (-e) as usize)
        }
    };
    while pow10(exponent) > magnitude {
        exponent -= 1;
    }
    while pow10(exponent + 1) <= magnitude {
        exponent += 1;
    }

    let shift = sig as i64 - 1 - exponent;
    let scaled = &magnitude * pow10(shift);
    let half = Rational::new(BigInt::one(), BigInt::from(2u8));
    let mut digits = (scaled + half).floor().to_integer();
    let mut shift = shift;
    // Rounding can carry into a new leading digit (9.99.. -> 10.0..).
    if digits.to_string().len() > sig {
        digits /= BigInt::from(10u8);
        shift -= 1;
    }

    let digit_str = digits.to_string();
    let body = if shift <= 0 {
        let zeros = "0".repeat((-shift) as usize);
        format!("{digit_str}{zeros}")
    } else {
        let shift = shift as usize;
        if digit_str.len() > shift {
            let (int, frac) = digit_str.split_at(digit_str.len() - shift);
            format!("{int}.{frac}")
        } else {
            let pad = "0".repeat(shift - digit_str.len());
            format!("0.{pad}{digit_str}")
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Twelve-significant-digit rendering used by every CSV writer.
pub fn format_decimal<S: Scalar>(value: &S) -> String {
    match value.to_rational() {
        Some(r) => format_significant(&r, 12),
        None => format!("{:?}", value.to_f64_lossy()),
    }
}

/// `p/q` rendering of an exact value.
pub fn format_fraction(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_exact_decimal("0.95"), Some(q(19, 20)));
        assert_eq!(parse_exact_decimal("-1.5e-2"), Some(q(-3, 200)));
        assert_eq!(parse_exact_decimal("12"), Some(q(12, 1)));
        assert_eq!(parse_exact_decimal(".5"), Some(q(1, 2)));
        assert_eq!(parse_exact_decimal("2e3"), Some(q(2000, 1)));
        assert_eq!(parse_exact_decimal(""), None);
        assert_eq!(parse_exact_decimal("1.2.3"), None);
        assert_eq!(parse_exact_decimal("abc"), None);
    }

    #[test]
    fn formats_twelve_significant_digits() {
        assert_eq!(format_significant(&q(646, 1000), 12), "0.646000000000");
        assert_eq!(format_significant(&q(4, 19), 12), "0.210526315789");
        assert_eq!(format_significant(&q(-2, 3), 12), "-0.666666666667");
        assert_eq!(format_significant(&q(1000, 1), 12), "1000.00000000");
        assert_eq!(format_significant(&q(0, 1), 12), "0");
        assert_eq!(format_significant(&q(1, 1), 3), "1.00");
        assert_eq!(format_significant(&q(9999, 1000), 3), "10.0");
        assert_eq!(format_significant(&q(123456789, 1), 3), "123000000");
        assert_eq!(format_significant(&q(1, 4000), 2), "0.00025");
    }

    #[test]
    fn float_and_rational_agree_on_ratios() {
        assert_eq!(f64::ratio(1, 4), 0.25);
        assert_eq!(f32::ratio(3, 4), 0.75f32);
        assert_eq!(Rational::ratio(2, 4), q(1, 2));
        assert_eq!(format_decimal(&0.25f64), "0.250000000000");
    }
}
