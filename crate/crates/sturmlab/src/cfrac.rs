//! Continued fractions of rotation numbers and their convergents.
//!
//! A rotation number θ ∈ (0,1) is carried as a high-precision value plus
//! its simple continued fraction terms a_1, a_2, …. The convergents
//! p_n/q_n follow the textbook recursion
//!
//!   p_0 = 0, p_1 = 1, p_n = a_n p_{n-1} + p_{n-2},
//!   q_0 = 1, q_1 = a_1, q_n = a_n q_{n-1} + q_{n-2},
//!
//! and q_n is the period of the n-th periodic approximant used by the
//! spectrum module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::highprec::{pow10, BigFixed};

/// An irrational (or certified-rational) frequency in (0,1) with its
/// continued-fraction terms.
#[derive(Debug, Clone)]
pub struct RotationNumber {
    value: BigFixed,
    terms: Vec<u64>,
    precision_digits: u32,
    certified_irrational: bool,
}

/// One rational approximant p_n/q_n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
    pub index: usize,
}

impl Convergent {
    pub fn p_i64(&self) -> Result<i64> {
        self.p
            .to_i64()
            .ok_or_else(|| Error::InvalidArgument(format!("p_{} too large for i64", self.index)))
    }

    pub fn q_i64(&self) -> Result<i64> {
        self.q
            .to_i64()
            .ok_or_else(|| Error::InvalidArgument(format!("q_{} too large for i64", self.index)))
    }

    pub fn value(&self) -> f64 {
        bigint_to_f64_ratio(&self.p, &self.q)
    }
}

fn bigint_to_f64_ratio(num: &BigInt, den: &BigInt) -> f64 {
    // Safe for arbitrarily large integers: go through a scaled quotient.
    let scale = 1i64 << 53;
    let q = (num * scale).div_floor(den);
    q.to_f64().map(|v| v / scale as f64).unwrap_or(f64::NAN)
}

/// Natural log of a positive big integer via bit length.
fn bigint_ln(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 52 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 52;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl RotationNumber {
    /// θ = (√5 − 1)/2, the golden mean; terms are all 1 exactly.
    pub fn golden(precision_digits: u32) -> Self {
        let sqrt5 = BigFixed::sqrt_int(5, precision_digits);
        let (half, _) = BigFixed::from_ratio(1, 2, precision_digits).unwrap();
        let value = sqrt5.sub(&BigFixed::one(precision_digits)).mul(&half);
        Self::quadratic(value, 1, precision_digits)
    }

    /// θ = √2 − 1, the silver mean; terms are all 2 exactly.
    pub fn silver(precision_digits: u32) -> Self {
        let value = BigFixed::sqrt_int(2, precision_digits).sub(&BigFixed::one(precision_digits));
        Self::quadratic(value, 2, precision_digits)
    }

    fn quadratic(value: BigFixed, term: u64, precision_digits: u32) -> Self {
        // Fill terms until q_n q_{n+1} outruns the stored precision; past
        // that point the reconstruction invariant is vacuous anyway.
        let cap = pow10(precision_digits.saturating_sub(5));
        let mut terms = Vec::new();
        let (mut q_prev, mut q_cur) = (BigInt::one(), BigInt::from(term));
        while &q_prev * &q_cur < cap && terms.len() < 4096 {
            terms.push(term);
            let q_next = BigInt::from(term) * &q_cur + &q_prev;
            q_prev = std::mem::replace(&mut q_cur, q_next);
        }
        Self {
            value,
            terms,
            precision_digits,
            certified_irrational: true,
        }
    }

    /// Build from a high-precision value by extracting `n_terms` terms.
    /// The value is treated as correct to one ulp of its scale.
    pub fn from_value(value: BigFixed, n_terms: usize) -> Result<Self> {
        let precision_digits = value.scale();
        check_unit_interval(&value)?;
        let terms = expand(&value, n_terms, 1)?;
        Ok(Self {
            value,
            terms,
            precision_digits,
            certified_irrational: true,
        })
    }

    /// Build the exact rational [0; a_1, …, a_n]. Rejected by the
    /// quasiperiodic constructors but valid for periodic approximants.
    pub fn from_terms(terms: &[u64], precision_digits: u32) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("need at least one term".into()));
        }
        if terms.iter().any(|&a| a == 0) {
            return Err(Error::InvalidArgument("terms must be >= 1".into()));
        }
        let convs = convergents(terms);
        let last = convs.last().unwrap();
        let scaled = &last.p * pow10(precision_digits);
        let mantissa = scaled.div_floor(&last.q);
        Ok(Self {
            value: BigFixed::new(mantissa, precision_digits),
            terms: terms.to_vec(),
            precision_digits,
            certified_irrational: false,
        })
    }

    pub fn value(&self) -> &BigFixed {
        &self.value
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    pub fn precision_digits(&self) -> u32 {
        self.precision_digits
    }

    pub fn is_certified_irrational(&self) -> bool {
        self.certified_irrational
    }

    pub fn convergents(&self) -> Vec<Convergent> {
        convergents(&self.terms)
    }

    /// The n-th convergent (index into the p_0/q_0-based sequence).
    pub fn convergent(&self, index: usize) -> Result<Convergent> {
        let convs = self.convergents();
        convs.get(index).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "convergent index {index} beyond {} stored terms",
                self.terms.len()
            ))
        })
    }
}

fn check_unit_interval(value: &BigFixed) -> Result<()> {
    let zero = BigFixed::zero(value.scale());
    let one = BigFixed::one(value.scale());
    if *value <= zero || *value >= one {
        return Err(Error::InvalidArgument(format!(
            "rotation number {value} outside (0,1)"
        )));
    }
    Ok(())
}

/// Extract the first `n_terms` continued-fraction terms of `x ∈ (0,1)`.
///
/// `uncertainty_ulps` is the trust radius of the input in ulps of its own
/// scale: 0 for exact rationals, 1 for values rounded once. The expansion
/// runs interval arithmetic with directed rounding; a term is emitted only
/// when both interval endpoints agree on it.
pub fn expand(x: &BigFixed, n_terms: usize, uncertainty_ulps: i64) -> Result<Vec<u64>> {
    check_unit_interval(x)?;
    let scale = x.scale();
    let err = BigFixed::ulps(uncertainty_ulps, scale);
    let mut lo = x.sub(&err);
    let mut hi = x.add(&err);
    let mut terms = Vec::with_capacity(n_terms);
    while terms.len() < n_terms {
        if lo.is_zero() || lo.mantissa().is_negative() {
            if hi <= BigFixed::ulps(uncertainty_ulps.max(1), scale) {
                // Remainder is exactly zero (or indistinguishable from it).
                if uncertainty_ulps == 0 && hi.is_zero() {
                    return Err(Error::RationalInput { terms });
                }
                return Err(Error::PrecisionExhausted {
                    context: format!("remainder below resolution after {} terms", terms.len()),
                });
            }
            if uncertainty_ulps == 0 && lo.is_zero() {
                return Err(Error::RationalInput { terms });
            }
            return Err(Error::PrecisionExhausted {
                context: format!("interval straddles zero after {} terms", terms.len()),
            });
        }
        // 1/x maps [lo, hi] to [1/hi, 1/lo] with directed rounding.
        let inv_lo = hi.recip_floor()?;
        let inv_hi = lo.recip_ceil()?;
        let floor_lo = inv_lo.floor_int();
        let floor_hi = inv_hi.floor_int();
        if floor_lo != floor_hi {
            // Exact rational endpoint: 1/x integral makes hi land on it.
            if uncertainty_ulps == 0 && inv_lo.frac().is_zero() && &floor_lo + 1 == floor_hi {
                let a = floor_lo
                    .to_u64()
                    .ok_or_else(|| Error::InvalidNumber("term exceeds u64".into()))?;
                terms.push(a);
                return Err(Error::RationalInput { terms });
            }
            return Err(Error::PrecisionExhausted {
                context: format!(
                    "term {} ambiguous ({} vs {})",
                    terms.len() + 1,
                    floor_lo,
                    floor_hi
                ),
            });
        }
        let a = floor_lo
            .to_u64()
            .ok_or_else(|| Error::InvalidNumber("term exceeds u64".into()))?;
        debug_assert!(a >= 1);
        terms.push(a);
        let a_fixed = BigFixed::from_int(a as i64, scale);
        lo = inv_lo.sub(&a_fixed);
        hi = inv_hi.sub(&a_fixed);
    }
    Ok(terms)
}

/// All convergents p_0/q_0 … p_n/q_n of the given terms.
pub fn convergents(terms: &[u64]) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(terms.len() + 1);
    out.push(Convergent {
        p: BigInt::zero(),
        q: BigInt::one(),
        index: 0,
    });
    let (mut p_prev, mut p_cur) = (BigInt::one(), BigInt::zero());
    let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::one());
    // Virtual seeds (p_{-1}, q_{-1}) = (1, 0) with (p_0, q_0) = (0, 1)
    // make the first recursion step produce (p_1, q_1) = (1, a_1).
    for (i, &a) in terms.iter().enumerate() {
        let p_next = BigInt::from(a) * &p_cur + &p_prev;
        let q_next = BigInt::from(a) * &q_cur + &q_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        out.push(Convergent {
            p: p_cur.clone(),
            q: q_cur.clone(),
            index: i + 1,
        });
    }
    out
}

/// Finite-sample proxy for the bounded-density limsup:
/// max over prefixes of (1/n) Σ_{i<=n} a_i.
pub fn density_statistic(terms: &[u64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("empty term sequence".into()));
    }
    let mut sum = 0.0;
    let mut best = f64::MIN;
    for (i, &a) in terms.iter().enumerate() {
        sum += a as f64;
        best = best.max(sum / (i + 1) as f64);
    }
    Ok(best)
}

/// Smallest B with q_n <= B^n over the available prefix: max_n q_n^{1/n}.
pub fn exponential_growth_bound(convergents: &[Convergent]) -> Result<f64> {
    if convergents.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two convergents".into(),
        ));
    }
    let mut best = 0.0f64;
    for c in convergents.iter().filter(|c| c.index >= 1) {
        let b = (bigint_ln(&c.q) / c.index as f64).exp();
        best = best.max(b);
    }
    Ok(best)
}
