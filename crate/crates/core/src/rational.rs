//! Exact rational numbers and their textual forms.
//!
//! Masses travel through the whole crate as [`Rational`]. Input strings may be
//! integers (`"3"`), fractions (`"3/8"`) or decimals (`"0.375"`, `"-1.5e-2"`);
//! decimals are converted exactly, never through `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {input:?}: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

fn err(input: &str, reason: &'static str) -> ParseRationalError {
    ParseRationalError { input: input.to_string(), reason }
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt, ParseRationalError> {
    let digits = s.strip_prefix('+').unwrap_or(s);
    let body = digits.strip_prefix('-').unwrap_or(digits);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(whole, "expected an integer"));
    }
    BigInt::from_str(digits).map_err(|_| err(whole, "expected an integer"))
}

/// Parses `"p"`, `"p/q"` or a decimal with optional exponent.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(err(input, "empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_int(num.trim(), input)?;
        let d = parse_int(den.trim(), input)?;
        if d.is_zero() {
            return Err(err(input, "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| err(input, "bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, unsigned) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = unsigned.split_once('.').unwrap_or((unsigned, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err(input, "no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err(input, "unexpected character"));
    }
    if exponent.unsigned_abs() > 10_000 {
        return Err(err(input, "exponent out of range"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&digits).map_err(|_| err(input, "no digits"))?;
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
    Ok(value)
}

/// Canonical exact form: `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Nearest `f64`, for display only.
pub fn to_f64(value: &Rational) -> f64 {
    match (value.numer().to_f64(), value.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Huge numerator/denominator: scale both down before dividing.
            let shift = value.numer().bits().max(value.denom().bits()).saturating_sub(1000);
            let n = (value.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (value.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Exact rational representation of a finite `f64`.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn min_ref<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn abs(value: &Rational) -> Rational {
    value.abs()
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}
