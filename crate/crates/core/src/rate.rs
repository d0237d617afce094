//! Exact rational rates in Mbps.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A rate in Mbps, stored as an exact fraction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rate(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational `{0}`")]
pub struct ParseRateError(pub String);

impl Rate {
    pub fn zero() -> Self {
        Rate(BigRational::zero())
    }

    pub fn from_integer(n: i64) -> Self {
        Rate(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        Rate(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        Rate(r)
    }

    /// The exact value of a finite float; non-finite input gives zero.
    pub fn from_f64(v: f64) -> Self {
        Rate(BigRational::from_float(v).unwrap_or_else(BigRational::zero))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Divide by a positive count.
    pub fn div_count(&self, n: usize) -> Rate {
        Rate(&self.0 / BigRational::from_integer(BigInt::from(n)))
    }

    pub fn mul_ratio(&self, num: i64, den: i64) -> Rate {
        Rate(&self.0 * BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn min(self, other: Rate) -> Rate {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Exact `p/q` wire form; integers print without a denominator.
    pub fn to_fraction_string(&self) -> String {
        if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }

    /// Round half away from zero to two decimals (half-up for non-negative rates).
    pub fn to_decimal_2(&self) -> String {
        let hundred = BigInt::from(100);
        let scaled = &self.0 * BigRational::from_integer(hundred.clone());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let negative = scaled.is_negative();
        let magnitude = (scaled.abs() + half).floor().to_integer();
        let int_part = &magnitude / &hundred;
        let frac_part = &magnitude % &hundred;
        let frac = frac_part.to_u32().unwrap_or(0);
        let sign = if negative && !magnitude.is_zero() { "-" } else { "" };
        format!("{sign}{int_part}.{frac:02}")
    }
}

impl FromStr for Rate {
    type Err = ParseRateError;

    /// Accepts integers (`150`), decimals (`37.5`) and fractions (`125/3`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRateError(s.to_string());
        let s = s.trim();
        if s.is_empty() {
            return Err(err());
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = parse_int(n).ok_or_else(err)?;
            let d: BigInt = parse_int(d).ok_or_else(err)?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Rate(BigRational::new(n, d)));
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_digits, frac_digits) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_digits.is_empty() && frac_digits.is_empty() {
            return Err(err());
        }
        if !int_digits.chars().all(|c| c.is_ascii_digit()) || !frac_digits.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let digits = format!("{int_digits}{frac_digits}");
        let numer: BigInt = digits.parse().map_err(|_| err())?;
        let denom = num_traits::pow(BigInt::from(10), frac_digits.len());
        let mut r = BigRational::new(numer, denom);
        if negative {
            r = -r;
        }
        Ok(Rate(r))
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let s = s.trim();
    let body = s.strip_prefix('-').unwrap_or(s);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fraction_string())
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rate({})", self.to_fraction_string())
    }
}

impl std::ops::Add<&Rate> for &Rate {
    type Output = Rate;
    fn add(self, rhs: &Rate) -> Rate {
        Rate(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub<&Rate> for &Rate {
    type Output = Rate;
    fn sub(self, rhs: &Rate) -> Rate {
        Rate(&self.0 - &rhs.0)
    }
}

impl std::ops::AddAssign<&Rate> for Rate {
    fn add_assign(&mut self, rhs: &Rate) {
        self.0 += &rhs.0;
    }
}

impl std::ops::SubAssign<&Rate> for Rate {
    fn sub_assign(&mut self, rhs: &Rate) {
        self.0 -= &rhs.0;
    }
}

impl<'a> std::iter::Sum<&'a Rate> for Rate {
    fn sum<I: Iterator<Item = &'a Rate>>(iter: I) -> Rate {
        iter.fold(Rate::zero(), |acc, r| &acc + r)
    }
}

impl std::iter::Sum<Rate> for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        iter.fold(Rate::zero(), |acc, r| &acc + &r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_decimals_and_fractions() {
        assert_eq!("50".parse::<Rate>().unwrap(), Rate::from_integer(50));
        assert_eq!("37.5".parse::<Rate>().unwrap(), Rate::new(75, 2));
        assert_eq!("125/3".parse::<Rate>().unwrap(), Rate::new(125, 3));
        assert_eq!(".25".parse::<Rate>().unwrap(), Rate::new(1, 4));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "abc", "1/0", "1.2.3", "/3", "3/", "1e5", "12a"] {
            assert!(bad.parse::<Rate>().is_err(), "{bad}");
        }
    }

    #[test]
    fn two_decimal_rounding_is_half_up() {
        assert_eq!(Rate::new(50, 3).to_decimal_2(), "16.67");
        assert_eq!(Rate::new(175, 3).to_decimal_2(), "58.33");
        assert_eq!(Rate::new(125, 3).to_decimal_2(), "41.67");
        assert_eq!(Rate::from_integer(75).to_decimal_2(), "75.00");
        assert_eq!(Rate::new(75, 4).to_decimal_2(), "18.75");
        assert_eq!(Rate::new(1, 200).to_decimal_2(), "0.01");
        assert_eq!(Rate::new(1, 400).to_decimal_2(), "0.00");
    }

    #[test]
    fn fraction_form() {
        assert_eq!(Rate::new(150, 2).to_fraction_string(), "75");
        assert_eq!(Rate::new(50, 3).to_fraction_string(), "50/3");
    }
}
