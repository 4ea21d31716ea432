//! Norm-scale analysis: the scale L_φ(ε) where the solution-norm product
//! reaches 1/(2ε), the two-sided norm-ratio inequality controlled by
//! |m_φ⁺(E+iε)|, dimension functions, and log-Lipschitz continuity fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::sturmian::PotentialSpec;
use crate::transfer::{phi_pair_on_values, PhiPair};
use crate::weyl::{m_on_values, m_phi};

/// Constants of the two-sided bound: 5 ∓ √24.
pub const JL_LOWER_CONSTANT: f64 = 5.0 - 4.898979485566356; // 5 - sqrt(24)
pub const JL_UPPER_CONSTANT: f64 = 5.0 + 4.898979485566356;

/// A dimension function h with h(0) = 0, increasing near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DimensionFunction {
    /// h(x) = x^α, 0 < α < 1.
    Power { alpha: f64 },
    /// h(x) = (log 1/x)^{−b}, b > 0, defined on 0 < x < 1.
    LogInverse { b: f64 },
}

impl DimensionFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "power dimension function needs 0 < alpha < 1, got {alpha}"
            )));
        }
        Ok(Self::Power { alpha })
    }

    pub fn log_inverse(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "log dimension function needs b > 0, got {b}"
            )));
        }
        Ok(Self::LogInverse { b })
    }

    /// Evaluate h(x) on its domain.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Self::Power { alpha } => {
                if x < 0.0 {
                    Err(Error::DomainError(format!("power kind needs x >= 0, got {x}")))
                } else {
                    Ok(x.powf(*alpha))
                }
            }
            Self::LogInverse { b } => {
                if x <= 0.0 || x >= 1.0 {
                    Err(Error::DomainError(format!(
                        "log kind needs 0 < x < 1, got {x}"
                    )))
                } else {
                    Ok((1.0 / x).ln().powf(-b))
                }
            }
        }
    }
}

/// The scale L_φ(ε) with its defining norm pair.
#[derive(Debug, Clone, Copy)]
pub struct JlScale {
    pub energy: f64,
    pub eps: f64,
    pub phi: f64,
    /// The root L of ‖ψ¹‖_L · ‖ψ²‖_L = 1/(2ε).
    pub length: f64,
    pub norms: (f64, f64),
}

/// Outcome of one two-sided inequality check.
#[derive(Debug, Clone, Copy)]
pub struct JlCheck {
    pub energy: f64,
    pub eps: f64,
    pub phi: f64,
    pub scale: JlScale,
    /// (5 − √24)/|m_φ⁺|.
    pub lower: f64,
    /// ‖ψ¹‖/‖ψ²‖ at L_φ(ε).
    pub mid: f64,
    /// (5 + √24)/|m_φ⁺|.
    pub upper: f64,
    pub pass: bool,
}

/// Solve ‖ψ¹_φ‖_L ‖ψ²_φ‖_L = 1/(2ε) by bracketing and bisection.
///
/// The product is continuous, nondecreasing and unbounded in L, so
/// bisection is unconditionally safe; the bracket grows by doubling up to
/// `l_cap`. Relative tolerance on the product is 1e−10.
pub fn jl_length(
    spec: &PotentialSpec,
    energy: f64,
    eps: f64,
    phi: f64,
    l_cap: f64,
) -> Result<JlScale> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    // The Wronskian forces the product to grow at least linearly, so the
    // root sits below ~4/eps; generate just enough potential.
    let needed = (4.0 / eps + 64.0).min(l_cap + 2.0).ceil() as i64;
    let window = spec.window(1, needed.max(66))?;
    jl_length_on_values(&window.values, energy, eps, phi, l_cap)
}

/// Window-level variant; `values[n-1] = V(n)` must cover the bracket.
pub fn jl_length_on_values(
    values: &[f64],
    energy: f64,
    eps: f64,
    phi: f64,
    l_cap: f64,
) -> Result<JlScale> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(l_cap > 1.0) {
        return Err(Error::InvalidArgument(format!("l_cap must exceed 1, got {l_cap}")));
    }
    let target = 1.0 / (2.0 * eps);
    // The Wronskian pins the norm product above ~L/2 − 1, so the root
    // sits below 4/eps; never solve past that (the shared window may be
    // much longer for the continued fraction's sake).
    let needed = ((4.0 / eps + 64.0).min(l_cap) + 2.0).ceil() as usize;
    let values = &values[..needed.min(values.len())];
    let pair = phi_pair_on_values(values, energy, phi)?;
    let max_l = pair.psi1.max_length().min(l_cap);
    let product =
        |pair: &PhiPair, l: f64| -> Result<f64> { Ok(pair.psi1.norm_l(l)? * pair.psi2.norm_l(l)?) };

    let mut hi = 1.0f64.min(max_l);
    // grow the bracket
    while product(&pair, hi)? < target {
        if hi >= max_l {
            return Err(Error::CapExceeded {
                cap: l_cap,
                attained: product(&pair, hi)?,
                target,
            });
        }
        hi = (hi * 2.0).min(max_l);
    }
    let mut lo = 1e-12f64;
    if product(&pair, lo)? > target {
        return Err(Error::InvalidArgument(format!(
            "norm product already exceeds 1/(2 eps) = {target:e} at L -> 0"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = product(&pair, mid)?;
        if (p - target).abs() <= 1e-10 * target {
            lo = mid;
            hi = mid;
            break;
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let length = 0.5 * (lo + hi);
    Ok(JlScale {
        energy,
        eps,
        phi,
        length,
        norms: (pair.psi1.norm_l(length)?, pair.psi2.norm_l(length)?),
    })
}

/// Evaluate both sides of the inequality at one (E, ε, φ) point.
pub fn jl_check(
    spec: &PotentialSpec,
    energy: f64,
    eps: f64,
    phi: f64,
    depth: usize,
    tol: f64,
) -> Result<JlCheck> {
    let l_cap = 4.0 / eps + 64.0;
    let cf_budget = cf_depth_budget(eps, tol);
    let bracket_budget = (l_cap + 2.0) as usize;
    let window = spec.window(1, cf_budget.max(bracket_budget) as i64)?;
    jl_check_on_values(&window.values, energy, eps, phi, depth, tol, l_cap)
}

/// Depth at which the continued fraction resolves Im z = ε to tolerance,
/// with headroom (truncation error decays like exp(−c·ε·depth) with c
/// well below 1 near band centers).
pub fn cf_depth_budget(eps: f64, tol: f64) -> usize {
    let needed = 4.0 * ((1.0 / tol).ln() + (1.0 / eps).ln()).max(1.0) / eps;
    (needed as usize).clamp(1 << 10, 1 << 23)
}

/// Window-level variant: the shared slice serves both the continued
/// fraction and the trajectory bracket.
#[allow(clippy::too_many_arguments)]
pub fn jl_check_on_values(
    values: &[f64],
    energy: f64,
    eps: f64,
    phi: f64,
    depth: usize,
    tol: f64,
    l_cap: f64,
) -> Result<JlCheck> {
    let z = Complex64::new(energy, eps);
    let mp = m_on_values(values, z, depth, tol)?;
    let amp = m_phi(&mp, phi).norm();
    let lower = JL_LOWER_CONSTANT / amp;
    let upper = JL_UPPER_CONSTANT / amp;
    let scale = jl_length_on_values(values, energy, eps, phi, l_cap)?;
    let mid = scale.norms.0 / scale.norms.1;
    Ok(JlCheck {
        energy,
        eps,
        phi,
        scale,
        lower,
        mid,
        upper,
        pass: lower < mid && mid < upper,
    })
}

/// Fitted log-Lipschitz law mass ≈ C·(log 1/ε)^{−b}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogLipschitzFit {
    pub b: f64,
    pub amplitude: f64,
    pub residual: f64,
}

/// Least-squares fit of log(mass) against log log(1/ε). The returned b is
/// clamped at zero (the law is a decay exponent).
pub fn fit_log_lipschitz(samples: &[(f64, f64)]) -> Result<LogLipschitzFit> {
    if samples.len() < 8 {
        return Err(Error::DegenerateFit(format!(
            "need >= 8 (eps, mass) samples, have {}",
            samples.len()
        )));
    }
    let eps_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let eps_max = samples.iter().map(|s| s.0).fold(0.0f64, f64::max);
    if !(eps_min > 0.0) || eps_max >= 1.0 {
        return Err(Error::InvalidArgument(
            "eps samples must lie in (0, 1)".into(),
        ));
    }
    if eps_max / eps_min < 999.9 {
        return Err(Error::DegenerateFit(
            "eps samples must span at least three decades".into(),
        ));
    }
    if samples.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::DegenerateFit("nonpositive mass sample".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.0).ln().ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    Ok(LogLipschitzFit {
        b: (-fit.slope).max(0.0),
        amplitude: fit.intercept.exp(),
        residual: fit.rms_residual,
    })
}

/// Cross-module consistency report for one energy: the continuity
/// exponent b̂ from interval-mass fits next to the growth exponent γ̂,
/// with their ratio b̂/(2γ̂) — reported, never asserted.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContinuityLinkage {
    pub energy: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    pub residual: f64,
    pub gamma_hat: f64,
    pub ratio: Option<f64>,
}

impl ContinuityLinkage {
    pub fn new(energy: f64, fit: &LogLipschitzFit, gamma_hat: f64) -> Self {
        let ratio = if gamma_hat > 0.0 {
            Some(fit.b / (2.0 * gamma_hat))
        } else {
            None
        };
        Self {
            energy,
            b_hat: fit.b,
            c_hat: fit.amplitude,
            residual: fit.residual,
            gamma_hat,
            ratio,
        }
    }
}

/// JSON export of linkage reports.
pub fn write_linkage_json<W: Write>(reports: &[ContinuityLinkage], mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, reports)
        .map_err(|e| Error::InvalidArgument(format!("json write failed: {e}")))?;
    sink.write_all(b"\n")
        .map_err(|e| Error::InvalidArgument(format!("json write failed: {e}")))?;
    Ok(())
}

/// CSV export of inequality checks with columns
/// `E,eps,phi,L,lower,mid,upper,pass`.
pub fn write_checks_csv<W: Write>(rows: &[JlCheck], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["E", "eps", "phi", "L", "lower", "mid", "upper", "pass"])
        .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    for r in rows {
        w.write_record([
            format!("{}", r.energy),
            format!("{}", r.eps),
            format!("{}", r.phi),
            format!("{}", r.scale.length),
            format!("{}", r.lower),
            format!("{}", r.mid),
            format!("{}", r.upper),
            format!("{}", r.pass),
        ])
        .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}
