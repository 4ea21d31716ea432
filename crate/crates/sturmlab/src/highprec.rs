//! Software fixed-point decimals for rotation-number arithmetic.
//!
//! The circle map `n·θ + β mod 1` loses roughly `log10 n` digits to
//! cancellation, so hardware doubles cannot classify potential values near
//! interval boundaries once windows get long. `BigFixed` stores a value as
//! `mantissa · 10^{-scale}` with a `BigInt` mantissa; 50 digits is the
//! default working precision and everything downstream of windows is `f64`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::error::Error;

/// Default number of decimal digits carried by rotation numbers.
pub const DEFAULT_PRECISION: u32 = 50;

/// Fixed-point decimal: `mantissa · 10^{-scale}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigFixed {
    mantissa: BigInt,
    scale: u32,
}

/// `10^scale`.
pub fn pow10(scale: u32) -> BigInt {
    BigInt::from(10u32).pow(scale)
}

/// Nearest-integer division for `b > 0`, ties rounded up.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    let (q, r) = a.div_mod_floor(b);
    if &r * 2 >= *b {
        q + 1
    } else {
        q
    }
}

impl BigFixed {
    pub fn new(mantissa: BigInt, scale: u32) -> Self {
        Self { mantissa, scale }
    }

    pub fn zero(scale: u32) -> Self {
        Self::new(BigInt::zero(), scale)
    }

    pub fn one(scale: u32) -> Self {
        Self::new(pow10(scale), scale)
    }

    pub fn from_int(value: i64, scale: u32) -> Self {
        Self::new(BigInt::from(value) * pow10(scale), scale)
    }

    /// `num/den` rounded to `scale` digits; the flag reports exactness.
    pub fn from_ratio(num: i64, den: i64, scale: u32) -> Result<(Self, bool), Error> {
        if den == 0 {
            return Err(Error::InvalidNumber("zero denominator".into()));
        }
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let scaled = BigInt::from(num) * pow10(scale);
        let den = BigInt::from(den);
        let (_, rem) = scaled.div_mod_floor(&den);
        let mantissa = round_div(&scaled, &den);
        Ok((Self::new(mantissa, scale), rem.is_zero()))
    }

    /// Exact binary expansion of an `f64`, rounded to `scale` digits.
    /// The flag reports whether the decimal rendering is exact.
    pub fn from_f64(value: f64, scale: u32) -> Result<(Self, bool), Error> {
        if !value.is_finite() {
            return Err(Error::InvalidNumber(format!("non-finite value {value}")));
        }
        // value = frac_mantissa * 2^exp exactly
        let bits = value.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let raw_frac = bits & ((1u64 << 52) - 1);
        let (frac, exp) = if raw_exp == 0 {
            (raw_frac, -1074i64)
        } else {
            (raw_frac | (1u64 << 52), raw_exp - 1075)
        };
        let m = BigInt::from(sign) * BigInt::from(frac);
        if exp >= 0 {
            Ok((Self::new(m * BigInt::from(2u32).pow(exp as u32) * pow10(scale), scale), true))
        } else {
            let den = BigInt::from(2u32).pow((-exp) as u32);
            let scaled = m * pow10(scale);
            let (_, rem) = scaled.div_mod_floor(&den);
            Ok((Self::new(round_div(&scaled, &den), scale), rem.is_zero()))
        }
    }

    /// Parse a plain decimal literal (`-0.375`, `12`, `.5`), rounding to
    /// `scale` digits; the flag reports exactness.
    pub fn parse(text: &str, scale: u32) -> Result<(Self, bool), Error> {
        let text = text.trim();
        let bad = || Error::InvalidNumber(format!("cannot parse {text:?} as a decimal"));
        let (sign, body) = match text.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits: String = [int_part, frac_part].concat();
        let raw: BigInt = digits.parse().map_err(|_| bad())?;
        let frac_len = frac_part.len() as u32;
        let (mantissa, exact) = if frac_len <= scale {
            (raw * pow10(scale - frac_len), true)
        } else {
            let den = pow10(frac_len - scale);
            let (_, rem) = raw.div_mod_floor(&den);
            (round_div(&raw, &den), rem.is_zero())
        };
        Ok((Self::new(BigInt::from(sign) * mantissa, scale), exact))
    }

    /// `sqrt(n)` to `scale` digits (truncated, error below one ulp).
    pub fn sqrt_int(n: u64, scale: u32) -> Self {
        let target = BigInt::from(n) * pow10(2 * scale);
        Self::new(target.sqrt(), scale)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    fn check_scale(&self, other: &Self) {
        assert_eq!(self.scale, other.scale, "mixed BigFixed scales");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_scale(other);
        Self::new(&self.mantissa + &other.mantissa, self.scale)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_scale(other);
        Self::new(&self.mantissa - &other.mantissa, self.scale)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.mantissa, self.scale)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.mantissa.abs(), self.scale)
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Self::new(&self.mantissa * BigInt::from(k), self.scale)
    }

    /// Product rounded back to the common scale.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_scale(other);
        let wide = &self.mantissa * &other.mantissa;
        Self::new(round_div(&wide, &pow10(self.scale)), self.scale)
    }

    /// Reciprocal rounded toward −∞ (for directed interval arithmetic).
    pub fn recip_floor(&self) -> Result<Self, Error> {
        self.recip_directed(false)
    }

    /// Reciprocal rounded toward +∞.
    pub fn recip_ceil(&self) -> Result<Self, Error> {
        self.recip_directed(true)
    }

    fn recip_directed(&self, ceil: bool) -> Result<Self, Error> {
        if self.mantissa.is_zero() {
            return Err(Error::InvalidNumber("reciprocal of zero".into()));
        }
        let num = pow10(2 * self.scale);
        let mantissa = if ceil {
            num.div_ceil(&self.mantissa)
        } else {
            num.div_floor(&self.mantissa)
        };
        Ok(Self::new(mantissa, self.scale))
    }

    /// Integer part under floor semantics.
    pub fn floor_int(&self) -> BigInt {
        self.mantissa.div_floor(&pow10(self.scale))
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Self {
        Self::new(self.mantissa.mod_floor(&pow10(self.scale)), self.scale)
    }

    /// One ulp (`10^{-scale}`) at this scale scaled by `k`.
    pub fn ulps(k: i64, scale: u32) -> Self {
        Self::new(BigInt::from(k), scale)
    }

    pub fn to_f64(&self) -> f64 {
        // Render to a decimal string and lean on the correctly rounded
        // std parser; mantissas here are tiny so cost is irrelevant.
        self.to_string().parse().unwrap_or(f64::NAN)
    }
}

impl PartialOrd for BigFixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFixed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.check_scale(other);
        self.mantissa.cmp(&other.mantissa)
    }
}

impl fmt::Display for BigFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ten = pow10(self.scale);
        let (int, frac) = self.mantissa.div_mod_floor(&ten);
        // div_mod_floor keeps frac >= 0; for negative values int is the
        // floor, so -0.25 renders via int = -1, frac = 0.75... correct it
        // by printing sign and magnitude instead.
        let negative = self.mantissa.is_negative();
        let mag = self.mantissa.abs();
        let (int, frac) = if negative {
            mag.div_mod_floor(&ten)
        } else {
            (int, frac)
        };
        let frac_str = format!("{:0width$}", frac, width = self.scale as usize);
        let frac_trim = frac_str.trim_end_matches('0');
        let sign = if negative { "-" } else { "" };
        if frac_trim.is_empty() {
            write!(f, "{sign}{int}")
        } else {
            write!(f, "{sign}{int}.{frac_trim}")
        }
    }
}
