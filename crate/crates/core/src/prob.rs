//! Probability scalars.
//!
//! The grammar, parser and benchmark code is generic over [`Probability`] so
//! the same parser runs on `f64` in the hot path and on exact rationals when a
//! test needs bit-exact products such as `0.25 * 0.2 * 0.09 = 9/2000`.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact rational probability.
pub type Exact = BigRational;

/// A scalar usable as a rule probability.
pub trait Probability:
    Clone + PartialOrd + fmt::Debug + Zero + One + Mul<Output = Self> + Send + Sync + 'static
{
    /// Parses `0.25`, `1`, `2.5e-3` or `1/3`.
    fn parse_decimal(text: &str) -> Option<Self>;

    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Text accepted back by [`Probability::parse_decimal`].
    fn to_text(&self) -> String;

    /// Allowed deviation of a per-nonterminal probability sum from one.
    fn sum_tolerance() -> f64;
}

fn parse_fraction(text: &str) -> Option<(u64, u64)> {
    let (n, d) = text.split_once('/')?;
    let n = n.trim().parse().ok()?;
    let d: u64 = d.trim().parse().ok()?;
    (d != 0).then_some((n, d))
}

macro_rules! impl_float {
    ($f:ty, $tol:expr) => {
        impl Probability for $f {
            fn parse_decimal(text: &str) -> Option<Self> {
                if let Some((n, d)) = parse_fraction(text) {
                    return Some(n as $f / d as $f);
                }
                text.parse::<$f>().ok().filter(|v| v.is_finite())
            }

            fn from_ratio(num: u64, den: u64) -> Self {
                num as $f / den as $f
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_text(&self) -> String {
                format!("{}", self)
            }

            fn sum_tolerance() -> f64 {
                $tol
            }
        }
    };
}

impl_float!(f64, 1e-9);
impl_float!(f32, 1e-5);

impl Probability for BigRational {
    fn parse_decimal(text: &str) -> Option<Self> {
        if let Some((n, d)) = parse_fraction(text) {
            return Some(BigRational::new(n.into(), d.into()));
        }
        let text = text.trim();
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10u32);
        let value = if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        };
        Some(value)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_text(&self) -> String {
        // terminating decimals print as decimals, everything else as n/d
        let mut den = self.denom().clone();
        let (two, five) = (BigInt::from(2u32), BigInt::from(5u32));
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (&den % &two).is_zero() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        if !den.is_one() {
            return format!("{}/{}", self.numer(), self.denom());
        }
        let places = twos.max(fives);
        if places == 0 {
            return self.numer().to_string();
        }
        let scaled = self * BigRational::from_integer(num_traits::pow(BigInt::from(10u32), places));
        let digits = scaled.to_integer().to_string();
        let (neg, digits) = match digits.strip_prefix('-') {
            Some(d) => ("-", d.to_string()),
            None => ("", digits),
        };
        let padded = format!("{digits:0>width$}", width = places + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - places);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            format!("{neg}{int_part}")
        } else {
            format!("{neg}{int_part}.{frac_part}")
        }
    }

    fn sum_tolerance() -> f64 {
        1e-9
    }
}
