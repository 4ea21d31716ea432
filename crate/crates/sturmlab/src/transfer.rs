//! Solutions of ψ(n+1) + ψ(n−1) + V(n)ψ(n) = Eψ(n), transfer-matrix
//! products, interpolated truncated norms, φ-parameterized solution pairs,
//! and power-law growth-exponent fits.
//!
//! One-step matrices are [[E − V(n), −1], [1, 0]]; their determinant is
//! exactly 1 in floating point, so determinant drift of cumulative
//! products measures accumulation error only. Trajectories are capped at
//! |ψ| = 1e150 so that squared norms stay representable; overflow is a
//! loud error carrying the reached site, never a silent rescale.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::sturmian::PotentialSpec;

/// Hard cap on trajectory amplitudes (squares must stay finite).
pub const AMPLITUDE_LIMIT: f64 = 1e150;

/// A 2×2 real transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    /// One-step matrix at energy E and potential value v.
    pub fn one_step(energy: f64, v: f64) -> Self {
        Self([[energy - v, -1.0], [1.0, 0.0]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }
}

/// Running product T(n)···T(1) updated one site at a time.
///
/// The product itself is never renormalized; `step` refuses to continue
/// once entries leave the representable range.
#[derive(Debug, Clone)]
pub struct CumulativeProduct {
    matrix: TransferMatrix,
    steps: usize,
}

impl CumulativeProduct {
    pub fn new() -> Self {
        Self {
            matrix: TransferMatrix::identity(),
            steps: 0,
        }
    }

    pub fn step(&mut self, energy: f64, v: f64) -> Result<()> {
        let next = TransferMatrix::one_step(energy, v).mul(&self.matrix);
        if next.norm_inf() > AMPLITUDE_LIMIT {
            return Err(Error::Overflow {
                reached: self.steps + 1,
                limit: AMPLITUDE_LIMIT,
            });
        }
        self.matrix = next;
        self.steps += 1;
        Ok(())
    }

    pub fn matrix(&self) -> &TransferMatrix {
        &self.matrix
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn det(&self) -> f64 {
        self.matrix.det()
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix.norm_inf()
    }
}

impl Default for CumulativeProduct {
    fn default() -> Self {
        Self::new()
    }
}

/// A sampled solution ψ(0..=N+1) with cumulative squared prefix sums.
#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    pub energy: f64,
    pub initial: (f64, f64),
    /// ψ(0), ψ(1), …, ψ(N+1).
    pub samples: Vec<f64>,
    /// cumulative_norms_sq[n] = Σ_{k=0}^{n} ψ(k)².
    pub cumulative_norms_sq: Vec<f64>,
}

impl SolutionTrajectory {
    /// Largest L admissible for `norm_l` (one sample is held in reserve
    /// for the fractional term).
    pub fn max_length(&self) -> f64 {
        (self.samples.len() - 2) as f64
    }

    pub fn sample(&self, n: usize) -> f64 {
        self.samples[n]
    }

    /// Interpolated truncated norm:
    /// ( Σ_{n=0}^{⌊L⌋} ψ(n)² + (L−⌊L⌋)·ψ(⌊L⌋+1)² )^{1/2}.
    pub fn norm_l(&self, length: f64) -> Result<f64> {
        if !(length > 0.0) || length > self.max_length() {
            return Err(Error::OutOfRange {
                requested: length,
                max: self.max_length(),
            });
        }
        let whole = length.floor();
        let idx = whole as usize;
        let fraction = length - whole;
        let tail = self.samples[idx + 1];
        Ok((self.cumulative_norms_sq[idx] + fraction * tail * tail).sqrt())
    }

    /// CSV export with columns `n,psi,cumulative_norm_sq`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["n", "psi", "cumulative_norm_sq"])
            .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        for (n, (psi, cum)) in self
            .samples
            .iter()
            .zip(&self.cumulative_norms_sq)
            .enumerate()
        {
            w.write_record([n.to_string(), format!("{psi}"), format!("{cum}")])
                .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Solve the recursion ψ(n+1) = (E − V(n))ψ(n) − ψ(n−1) for n = 1..=N
/// given `values[n-1] = V(n)`.
pub fn solve_on_values(
    values: &[f64],
    energy: f64,
    initial: (f64, f64),
) -> Result<SolutionTrajectory> {
    if initial.0 == 0.0 && initial.1 == 0.0 {
        return Err(Error::InvalidArgument(
            "initial data must not both be zero".into(),
        ));
    }
    let n_steps = values.len();
    let mut samples = Vec::with_capacity(n_steps + 2);
    let mut cum = Vec::with_capacity(n_steps + 2);
    samples.push(initial.0);
    samples.push(initial.1);
    cum.push(initial.0 * initial.0);
    cum.push(cum[0] + initial.1 * initial.1);
    let (mut prev, mut here) = initial;
    for (i, v) in values.iter().enumerate() {
        let next = (energy - v) * here - prev;
        if !next.is_finite() || next.abs() > AMPLITUDE_LIMIT {
            return Err(Error::Overflow {
                reached: i + 1,
                limit: AMPLITUDE_LIMIT,
            });
        }
        samples.push(next);
        cum.push(cum.last().unwrap() + next * next);
        prev = here;
        here = next;
    }
    Ok(SolutionTrajectory {
        energy,
        initial,
        samples,
        cumulative_norms_sq: cum,
    })
}

/// Solve over sites 1..=n_steps of `spec`.
pub fn solve(
    spec: &PotentialSpec,
    energy: f64,
    initial: (f64, f64),
    n_steps: usize,
) -> Result<SolutionTrajectory> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let window = spec.window(1, n_steps as i64)?;
    solve_on_values(&window.values, energy, initial)
}

/// The orthonormal solution pair of a boundary-condition angle φ:
/// ψ¹(0) = sin φ, ψ¹(1) = cos φ and ψ²(0) = −cos φ, ψ²(1) = sin φ.
#[derive(Debug, Clone)]
pub struct PhiPair {
    pub phi: f64,
    pub psi1: SolutionTrajectory,
    pub psi2: SolutionTrajectory,
}

impl PhiPair {
    /// Wronskian ψ¹(n+1)ψ²(n) − ψ¹(n)ψ²(n+1); constantly −1 for exact
    /// arithmetic.
    pub fn wronskian(&self, n: usize) -> f64 {
        self.psi1.samples[n + 1] * self.psi2.samples[n]
            - self.psi1.samples[n] * self.psi2.samples[n + 1]
    }

    /// |ψ¹(n)|² + |ψ²(n)|², a φ-independent frame invariant.
    pub fn frame_weight(&self, n: usize) -> f64 {
        let a = self.psi1.samples[n];
        let b = self.psi2.samples[n];
        a * a + b * b
    }
}

pub fn phi_pair_on_values(values: &[f64], energy: f64, phi: f64) -> Result<PhiPair> {
    let (s, c) = phi.sin_cos();
    Ok(PhiPair {
        phi,
        psi1: solve_on_values(values, energy, (s, c))?,
        psi2: solve_on_values(values, energy, (-c, s))?,
    })
}

pub fn phi_pair(spec: &PotentialSpec, energy: f64, phi: f64, n_steps: usize) -> Result<PhiPair> {
    let window = spec.window(1, n_steps.max(1) as i64)?;
    phi_pair_on_values(&window.values, energy, phi)
}

/// How the growth exponent is extracted from norm samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Least-squares slope of log‖ψ‖_L against log L.
    LeastSquares,
    /// Largest γ with C·L^γ ≤ ‖ψ‖_L at every sample, anchored at the
    /// first grid point (the steepest line through it that minorizes the
    /// rest of the data).
    LowerEnvelope,
}

/// Fitted power-law growth ‖ψ‖_L ≈ C·L^γ.
#[derive(Debug, Clone, Copy)]
pub struct GrowthFit {
    pub gamma: f64,
    pub amplitude: f64,
    /// RMS residual of the log-log least-squares line.
    pub residual: f64,
    /// True when a power law describes the data better than an
    /// exponential (log-log residual below semi-log residual).
    pub power_law_valid: bool,
}

/// Fit the growth exponent of the normalized-solution infimum
/// min_φ ‖ψ_φ¹‖_L over the given L grid.
///
/// With a single φ this fits that one normalized solution; with several
/// it fits the pointwise minimum over the φ family, which is the object
/// a uniform lower bound must minorize.
pub fn fit_growth_exponent(
    spec: &PotentialSpec,
    energy: f64,
    l_grid: &[f64],
    phis: &[f64],
    mode: FitMode,
) -> Result<GrowthFit> {
    validate_l_grid(l_grid)?;
    if phis.is_empty() {
        return Err(Error::InvalidArgument("need at least one phi".into()));
    }
    let n_steps = l_grid.last().unwrap().ceil() as usize + 1;
    let window = spec.window(1, n_steps as i64)?;
    let mut min_norms = vec![f64::INFINITY; l_grid.len()];
    for &phi in phis {
        let pair = phi_pair_on_values(&window.values, energy, phi)?;
        for (slot, &length) in min_norms.iter_mut().zip(l_grid) {
            let norm = pair.psi1.norm_l(length)?;
            if norm < *slot {
                *slot = norm;
            }
        }
    }
    fit_norm_samples(l_grid, &min_norms, mode)
}

/// Fit presampled (L, ‖ψ‖_L) data.
pub fn fit_norm_samples(l_grid: &[f64], norms: &[f64], mode: FitMode) -> Result<GrowthFit> {
    validate_l_grid(l_grid)?;
    if norms.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::DegenerateFit("nonpositive norm sample".into()));
    }
    let log_l: Vec<f64> = l_grid.iter().map(|l| l.ln()).collect();
    let log_n: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let loglog = line_fit(&log_l, &log_n)?;
    let semilog = line_fit(l_grid, &log_n)?;
    let power_law_valid = loglog.rms_residual <= semilog.rms_residual;
    match mode {
        FitMode::LeastSquares => Ok(GrowthFit {
            gamma: loglog.slope,
            amplitude: loglog.intercept.exp(),
            residual: loglog.rms_residual,
            power_law_valid,
        }),
        FitMode::LowerEnvelope => {
            let gamma = log_l
                .iter()
                .zip(&log_n)
                .skip(1)
                .map(|(x, y)| (y - log_n[0]) / (x - log_l[0]))
                .fold(f64::INFINITY, f64::min);
            let amplitude = (log_n[0] - gamma * log_l[0]).exp();
            Ok(GrowthFit {
                gamma,
                amplitude,
                residual: loglog.rms_residual,
                power_law_valid,
            })
        }
    }
}

fn validate_l_grid(l_grid: &[f64]) -> Result<()> {
    if l_grid.len() < 8 {
        return Err(Error::DegenerateFit(format!(
            "need >= 8 grid lengths, have {}",
            l_grid.len()
        )));
    }
    if l_grid.windows(2).any(|w| w[1] <= w[0]) || l_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "L grid must be positive and strictly increasing".into(),
        ));
    }
    if l_grid.last().unwrap() / l_grid[0] < 100.0 {
        return Err(Error::DegenerateFit(
            "L grid must span at least two decades".into(),
        ));
    }
    Ok(())
}

/// Log-spaced grid helper (inclusive endpoints).
pub fn log_grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    assert!(from > 0.0 && to > from && count >= 2);
    let step = (to / from).ln() / (count - 1) as f64;
    (0..count).map(|i| from * (step * i as f64).exp()).collect()
}
