//! Numeric abstraction shared by the aggregation and quality statistics.
//!
//! Every statistic in this crate is a ratio of integer counts, so it can be
//! computed either in floating point or exactly. The exact route
//! ([`Exact`](crate::Exact)) is what reports use, because published tables are
//! rounded half-up at one decimal and binary floats misplace values such as
//! `87.05` on the wrong side of the tie.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug + Display + PartialOrd + Signed + Sum + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;

    /// Parses a plain decimal literal such as `94.7` or `-3`.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Rounds half away from zero to `places` decimal digits.
    fn round_places(&self, places: u32) -> Self;

    /// Exact rational value of `self` (binary expansion for floats).
    fn to_exact(&self) -> BigRational;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// Converts a configuration float through its shortest decimal
    /// representation, so `0.7` becomes exactly `7/10` for exact scalars.
    fn from_config_f64(x: f64) -> Self {
        Self::parse_decimal(&format_decimal(x)).unwrap_or_else(Self::zero)
    }
}

fn format_decimal(x: f64) -> String {
    // `{}` on f64 yields the shortest round-trip representation without
    // exponent notation for ordinary magnitudes.
    format!("{x}")
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                s.trim().parse().ok()
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_exact(&self) -> BigRational {
                BigRational::from_float(*self).unwrap_or_else(BigRational::zero)
            }

            fn round_places(&self, places: u32) -> Self {
                let factor = (10 as $t).powi(places as i32);
                (*self * factor).round() / factor
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        let denom = num_traits::pow(BigInt::from(10u8), frac_part.len());
        let value = BigRational::new(numer, denom);
        Some(if negative { -value } else { value })
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_exact(&self) -> BigRational {
        self.clone()
    }

    fn round_places(&self, places: u32) -> Self {
        let factor = BigRational::from_integer(num_traits::pow(BigInt::from(10u8), places as usize));
        let scaled = self * &factor;
        // floor(|x| + 1/2) with the sign restored is half-away-from-zero.
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let magnitude = (scaled.abs() + half).floor();
        let rounded = if scaled.is_negative() { -magnitude } else { magnitude };
        rounded / factor
    }
}

/// Renders a scalar with exactly `places` decimals after half-away rounding.
pub fn format_fixed<T: Scalar>(value: &T, places: u32) -> String {
    let rounded = value.round_places(places).to_exact();
    let factor = num_traits::pow(BigInt::from(10u8), places as usize);
    let scaled = (rounded * BigRational::from_integer(factor.clone())).round().to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let (whole, frac) = scaled.abs().div_rem(&factor);
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = places as usize)
    }
}
