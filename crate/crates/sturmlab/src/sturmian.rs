//! Sturmian potentials V(n) = λ·χ_{[1−θ,1)}(nθ + β mod 1) and windows.
//!
//! Boundary convention: the coding interval is half-open [1−θ, 1) and the
//! fractional part always lands in [0, 1), including for negative sites.
//! Classification near the interval boundary is refused (rather than
//! guessed) once the precision budget cannot separate the orbit point from
//! {0, 1−θ}; a silent misclassification would corrupt every downstream
//! module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::collections::HashSet;
use std::io::Write;

use crate::cfrac::{Convergent, RotationNumber};
use crate::error::{Error, Result};
use crate::highprec::{pow10, BigFixed};

/// A potential on ℤ: quasiperiodic Sturmian, constant, or a custom window.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Sturmian {
        lambda: f64,
        theta: RotationNumber,
        beta: BigFixed,
    },
    Constant(f64),
    Custom {
        offset: i64,
        values: Vec<f64>,
    },
}

/// A sampled stretch of potential values.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialWindow {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl PotentialWindow {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, n: i64) -> Option<f64> {
        let idx = n.checked_sub(self.offset)?;
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }

    /// CSV export with columns `n,V`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["n", "V"])
            .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(self.offset + i as i64).to_string(), format!("{v}")])
                .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

impl PotentialSpec {
    /// Quasiperiodic Sturmian potential. β is normalized mod 1.
    pub fn sturmian(lambda: f64, theta: RotationNumber, beta: BigFixed) -> Result<Self> {
        if !theta.is_certified_irrational() {
            return Err(Error::InvalidArgument(
                "sturmian kind needs an irrational rotation number; \
                 use periodic approximants for rational frequencies"
                    .into(),
            ));
        }
        if beta.scale() != theta.precision_digits() {
            return Err(Error::InvalidArgument(format!(
                "beta scale {} does not match theta precision {}",
                beta.scale(),
                theta.precision_digits()
            )));
        }
        Ok(Self::Sturmian {
            lambda,
            theta,
            beta: beta.frac(),
        })
    }

    /// Convenience constructor taking β as an f64 (stored exactly).
    pub fn sturmian_f64(lambda: f64, theta: RotationNumber, beta: f64) -> Result<Self> {
        let digits = theta.precision_digits();
        let (beta, _) = BigFixed::from_f64(beta, digits)?;
        Self::sturmian(lambda, theta, beta)
    }

    pub fn constant(value: f64) -> Self {
        Self::Constant(value)
    }

    /// The free Laplacian (V ≡ 0).
    pub fn free() -> Self {
        Self::Constant(0.0)
    }

    pub fn custom(offset: i64, values: Vec<f64>) -> Self {
        Self::Custom { offset, values }
    }

    /// Upper bound for |V| (used for spectral-interval estimates).
    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Sturmian { lambda, .. } => lambda.abs(),
            Self::Constant(c) => c.abs(),
            Self::Custom { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// V(n); custom potentials are zero outside their window.
    pub fn value(&self, n: i64) -> Result<f64> {
        match self {
            Self::Constant(c) => Ok(*c),
            Self::Custom { offset, values } => Ok(custom_value(*offset, values, n)),
            Self::Sturmian {
                lambda,
                theta,
                beta,
            } => {
                let ctx = SturmianContext::new(theta, beta);
                ctx.value(*lambda, n)
            }
        }
    }

    /// All values on `n_from..=n_to`.
    pub fn window(&self, n_from: i64, n_to: i64) -> Result<PotentialWindow> {
        if n_from > n_to {
            return Err(Error::InvalidArgument(format!(
                "window bounds reversed: {n_from} > {n_to}"
            )));
        }
        let len = (n_to - n_from + 1) as usize;
        let values = match self {
            Self::Constant(c) => vec![*c; len],
            Self::Custom { offset, values } => (n_from..=n_to)
                .map(|n| custom_value(*offset, values, n))
                .collect(),
            Self::Sturmian {
                lambda,
                theta,
                beta,
            } => {
                let ctx = SturmianContext::new(theta, beta);
                ctx.window(*lambda, n_from, len)?
            }
        };
        Ok(PotentialWindow {
            offset: n_from,
            values,
        })
    }
}

fn custom_value(offset: i64, values: &[f64], n: i64) -> f64 {
    let idx = n - offset;
    if idx < 0 || idx as usize >= values.len() {
        0.0
    } else {
        values[idx as usize]
    }
}

/// Precomputed mantissa arithmetic for the circle map n·θ + β mod 1.
struct SturmianContext {
    theta_m: BigInt,
    beta_m: BigInt,
    boundary_m: BigInt, // mantissa of 1 - θ
    modulus: BigInt,    // 10^digits
    digits: u32,
}

impl SturmianContext {
    fn new(theta: &RotationNumber, beta: &BigFixed) -> Self {
        let digits = theta.precision_digits();
        let modulus = pow10(digits);
        let theta_m = theta.value().mantissa().clone();
        Self {
            boundary_m: &modulus - &theta_m,
            theta_m,
            beta_m: beta.mantissa().clone(),
            modulus,
            digits,
        }
    }

    /// Guard radii in mantissa units, ten guard digits on top of the
    /// first-order θ-sensitivity of each comparison: frac(nθ+β) against 0
    /// moves with |n| ulps, while frac(nθ+β) − (1−θ) moves with |n+1|
    /// (orbit point and interval endpoint shift together, so e.g. the
    /// exact boundary hit at n = −1, β = 0 classifies cleanly).
    fn classify(&self, lambda: f64, orbit_m: &BigInt, n: i64) -> Result<f64> {
        let tol_zero = BigInt::from(n.unsigned_abs()) * pow10(10);
        let tol_boundary = BigInt::from((n.checked_add(1).unwrap_or(i64::MAX)).unsigned_abs())
            * pow10(10);
        if (&tol_zero).max(&tol_boundary) * 2 >= self.modulus {
            return Err(Error::PrecisionExhausted {
                context: format!(
                    "site {n} beyond the precision cap for {} digits",
                    self.digits
                ),
            });
        }
        if !tol_zero.is_zero() {
            let dist_zero = orbit_m.min(&(&self.modulus - orbit_m)).clone();
            if dist_zero < tol_zero {
                return Err(Error::PrecisionExhausted {
                    context: format!("orbit point at site {n} within guard of 0"),
                });
            }
        }
        if !tol_boundary.is_zero() {
            let dist_boundary = (orbit_m - &self.boundary_m).abs();
            if dist_boundary < tol_boundary {
                return Err(Error::PrecisionExhausted {
                    context: format!("orbit point at site {n} within guard of 1-theta"),
                });
            }
        }
        Ok(if *orbit_m >= self.boundary_m { lambda } else { 0.0 })
    }

    fn orbit_mantissa(&self, n: i64) -> BigInt {
        (&self.theta_m * BigInt::from(n) + &self.beta_m).mod_floor(&self.modulus)
    }

    fn value(&self, lambda: f64, n: i64) -> Result<f64> {
        let y = self.orbit_mantissa(n);
        self.classify(lambda, &y, n)
    }

    fn window(&self, lambda: f64, n_from: i64, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        let mut y = self.orbit_mantissa(n_from);
        for i in 0..len {
            let n = n_from + i as i64;
            out.push(self.classify(lambda, &y, n)?);
            y += &self.theta_m;
            if y >= self.modulus {
                y -= &self.modulus;
            }
        }
        Ok(out)
    }
}

/// Number of distinct length-`n` factors of the window's symbol word.
///
/// Sturmian words have complexity exactly n + 1; the count saturates with
/// high confidence once the window is at least 10·n long, which is the
/// enforced precondition.
pub fn factor_complexity(window: &PotentialWindow, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("factor length must be >= 1".into()));
    }
    if window.len() < 10 * n {
        return Err(Error::WindowTooShort {
            needed: 10 * n,
            available: window.len(),
        });
    }
    // Symbolize by first-appearance order of distinct bit patterns.
    let mut alphabet: Vec<u64> = Vec::new();
    let symbols: Vec<u8> = window
        .values
        .iter()
        .map(|v| {
            let bits = v.to_bits();
            match alphabet.iter().position(|&a| a == bits) {
                Some(i) => i as u8,
                None => {
                    alphabet.push(bits);
                    (alphabet.len() - 1) as u8
                }
            }
        })
        .collect();
    let mut seen: HashSet<&[u8]> = HashSet::new();
    for w in symbols.windows(n) {
        seen.insert(w);
    }
    Ok(seen.len())
}

/// Periodic approximant window: θ replaced by p/q, length `periods·q`,
/// starting at site 1. Exactly q-periodic by construction.
pub fn approximant_window(
    lambda: f64,
    convergent: &Convergent,
    beta: &BigFixed,
    periods: usize,
) -> Result<PotentialWindow> {
    let period = approximant_period(lambda, convergent, beta)?;
    let mut values = Vec::with_capacity(period.len() * periods);
    for _ in 0..periods {
        values.extend_from_slice(&period);
    }
    Ok(PotentialWindow { offset: 1, values })
}

/// One period (sites 1..=q) of the approximant potential, evaluated in
/// exact scaled-integer arithmetic: with y = (n p mod q)·10^s + β q·10^s
/// taken mod q·10^s, the indicator test frac(n p/q + β) >= 1 - p/q
/// becomes y >= (q - p)·10^s.
pub fn approximant_period(
    lambda: f64,
    convergent: &Convergent,
    beta: &BigFixed,
) -> Result<Vec<f64>> {
    let p = convergent.p_i64()?;
    let q = convergent.q_i64()?;
    if q < 1 {
        return Err(Error::InvalidArgument(format!("period q = {q} invalid")));
    }
    if p < 0 || p > q {
        return Err(Error::InvalidArgument(format!(
            "approximant {p}/{q} outside [0,1]"
        )));
    }
    let scale_pow = pow10(beta.scale());
    let modulus = BigInt::from(q) * &scale_pow;
    let beta_q = (beta.mantissa() * BigInt::from(q)).mod_floor(&modulus);
    let threshold = BigInt::from(q - p) * &scale_pow;
    let step = (BigInt::from(p) * &scale_pow).mod_floor(&modulus);
    let mut values = Vec::with_capacity(q as usize);
    let mut y = (&step + &beta_q).mod_floor(&modulus);
    for _ in 0..q {
        values.push(if y >= threshold { lambda } else { 0.0 });
        y += &step;
        if y >= modulus {
            y -= &modulus;
        }
    }
    Ok(values)
}

/// Fraction of sites carrying the λ letter over `[1, n]`.
pub fn letter_frequency(window: &PotentialWindow) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let hits = window.values.iter().filter(|v| **v != 0.0).count();
    hits as f64 / window.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::highprec::DEFAULT_PRECISION;

    fn golden_spec(lambda: f64) -> PotentialSpec {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        PotentialSpec::sturmian_f64(lambda, theta, 0.0).unwrap()
    }

    #[test]
    fn golden_single_values() {
        let spec = golden_spec(1.0);
        assert_eq!(spec.value(1).unwrap(), 1.0); // frac ≈ 0.618 ∈ [0.382, 1)
        assert_eq!(spec.value(2).unwrap(), 0.0); // frac ≈ 0.236
        assert_eq!(spec.value(0).unwrap(), 0.0); // frac = 0 exactly, not in [1-θ, 1)
    }

    #[test]
    fn golden_window_matches_hand_values() {
        let spec = golden_spec(1.0);
        let w = spec.window(1, 8).unwrap();
        assert_eq!(w.values, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn fibonacci_substitution_oracle() {
        // The golden-mean word at β = 0 is the Fibonacci word generated by
        // the substitution 1 -> 10, 0 -> 1 starting from "1".
        let mut word = vec![1u8];
        while word.len() < 3000 {
            word = word
                .iter()
                .flat_map(|&c| if c == 1 { vec![1, 0] } else { vec![1] })
                .collect();
        }
        let spec = golden_spec(1.0);
        let w = spec.window(1, 2500).unwrap();
        for (i, v) in w.values.iter().enumerate() {
            assert_eq!(*v, word[i] as f64, "site {}", i + 1);
        }
    }

    #[test]
    fn zero_coupling_and_constant() {
        let spec = golden_spec(0.0);
        assert_eq!(spec.window(1, 5).unwrap().values, vec![0.0; 5]);
        let c = PotentialSpec::constant(2.5);
        assert_eq!(c.window(1, 3).unwrap().values, vec![2.5; 3]);
    }

    #[test]
    fn negative_sites_supported() {
        let spec = golden_spec(1.0);
        let w = spec.window(-10, 10).unwrap();
        assert_eq!(w.len(), 21);
        for n in -10..=10 {
            assert_eq!(w.value_at(n).unwrap(), spec.value(n).unwrap(), "n = {n}");
        }
        // values stay in {0, λ}
        assert!(w.values.iter().all(|v| *v == 0.0 || *v == 1.0));
    }

    #[test]
    fn beta_normalized_mod_one() {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let spec_a = PotentialSpec::sturmian_f64(1.0, theta.clone(), 1.25).unwrap();
        let spec_b = PotentialSpec::sturmian_f64(1.0, theta, 0.25).unwrap();
        assert_eq!(
            spec_a.window(1, 50).unwrap().values,
            spec_b.window(1, 50).unwrap().values
        );
    }

    #[test]
    fn rational_theta_rejected_for_sturmian_kind() {
        let rational = RotationNumber::from_terms(&[2], DEFAULT_PRECISION).unwrap();
        assert!(PotentialSpec::sturmian_f64(1.0, rational, 0.0).is_err());
    }

    #[test]
    fn factor_complexity_examples() {
        let spec = golden_spec(1.0);
        let w = spec.window(1, 10_000).unwrap();
        assert_eq!(factor_complexity(&w, 1).unwrap(), 2);
        assert_eq!(factor_complexity(&w, 3).unwrap(), 4);
        let c = PotentialSpec::constant(1.0).window(1, 500).unwrap();
        for n in [1, 5, 17] {
            assert_eq!(factor_complexity(&c, n).unwrap(), 1);
        }
        assert!(matches!(
            factor_complexity(&w, 2000),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn approximant_examples() {
        let conv = Convergent {
            p: BigInt::from(1),
            q: BigInt::from(2),
            index: 1,
        };
        let (beta, _) = BigFixed::from_f64(0.0, DEFAULT_PRECISION).unwrap();
        let w = approximant_window(1.0, &conv, &beta, 2).unwrap();
        assert_eq!(w.values, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(w.offset, 1);

        let zero = Convergent {
            p: BigInt::from(0),
            q: BigInt::from(1),
            index: 0,
        };
        assert_eq!(approximant_window(1.0, &zero, &beta, 4).unwrap().values, vec![0.0; 4]);

        let unit = Convergent {
            p: BigInt::from(1),
            q: BigInt::from(1),
            index: 1,
        };
        let w = approximant_window(3.0, &unit, &beta, 3).unwrap();
        assert_eq!(w.values, vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn approximant_is_exactly_periodic() {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let conv = theta.convergent(7).unwrap(); // q_7 = 21
        let (beta, _) = BigFixed::from_f64(0.3, DEFAULT_PRECISION).unwrap();
        let w = approximant_window(1.0, &conv, &beta, 5).unwrap();
        let q = conv.q_i64().unwrap() as usize;
        assert_eq!(w.len(), 5 * q);
        for i in 0..w.len() - q {
            assert_eq!(w.values[i], w.values[i + q]);
        }
    }

    #[test]
    fn letter_frequency_approaches_theta() {
        let spec = golden_spec(1.0);
        let w = spec.window(1, 100_000).unwrap();
        let theta = RotationNumber::golden(DEFAULT_PRECISION).value_f64();
        assert!((letter_frequency(&w) - theta).abs() < 0.01);
    }

    #[test]
    fn approximant_matches_true_potential_on_short_windows() {
        // The q_n-approximant agrees with the true Sturmian word on a
        // prefix of length about q_{n+1} for β = 0.
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let conv = theta.convergent(10).unwrap(); // q_10 = 89
        let (beta, _) = BigFixed::from_f64(0.0, DEFAULT_PRECISION).unwrap();
        let approx = approximant_window(1.0, &conv, &beta, 1).unwrap();
        let truth = golden_spec(1.0).window(1, conv.q_i64().unwrap()).unwrap();
        let agree = approx
            .values
            .iter()
            .zip(&truth.values)
            .take_while(|(a, b)| a == b)
            .count();
        assert!(agree >= 80, "only {agree} sites agree");
    }

    #[test]
    fn csv_export_shape() {
        let w = golden_spec(1.0).window(1, 4).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,V");
        assert_eq!(lines[1], "1,1");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn complexity_is_n_plus_one_for_sturmian() {
        let spec = golden_spec(1.0);
        let w = spec.window(1, 10_000).unwrap();
        for n in 1..=40 {
            assert_eq!(factor_complexity(&w, n).unwrap(), n + 1, "length {n}");
        }
        // Silver mean too.
        let silver = RotationNumber::silver(DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(1.0, silver, 0.0).unwrap();
        let w = spec.window(1, 10_000).unwrap();
        for n in [1, 2, 5, 13, 40] {
            assert_eq!(factor_complexity(&w, n).unwrap(), n + 1, "length {n}");
        }
    }

    #[test]
    fn expand_and_window_precision_guard() {
        // At 20 digits, sites beyond ~10^10 must refuse rather than guess.
        let theta = RotationNumber::golden(20);
        let spec = PotentialSpec::sturmian_f64(1.0, theta, 0.0).unwrap();
        let far = 100_000_000_000i64; // 1e11 > 10^(20-10)
        assert!(matches!(
            spec.value(far),
            Err(Error::PrecisionExhausted { .. })
        ));
    }
}
