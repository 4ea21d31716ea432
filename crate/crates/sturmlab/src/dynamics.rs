//! Schrödinger time evolution on a finite box, survival probability,
//! position moments, time averages, and log-scaling fits.
//!
//! The propagator e^{−itH} is expanded in Chebyshev polynomials of the
//! rescaled operator H̃ = H/r over the spectral interval [−r, r],
//! r = 2 + max|V|, with Bessel-function coefficients truncated once their
//! magnitude falls below tolerance. Dense eigensolves stay in the test
//! suite as the independent propagation oracle: desk-scale boxes here run
//! to 2^13 sites and horizons of 10^4, far beyond O(N³) comfort.

use num_complex::Complex64;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::sturmian::PotentialSpec;

/// Probability share on the outermost 1% of sites that invalidates a run.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Default fraction of the horizon allowed between quadrature samples.
pub const DEFAULT_MAX_GAP_FRACTION: f64 = 0.1;

/// Tridiagonal operator on sites `offset ..= offset + diagonal.len() - 1`
/// with unit off-diagonals and Dirichlet ends.
#[derive(Debug, Clone)]
pub struct BoxOperator {
    pub offset: i64,
    pub diagonal: Vec<f64>,
    max_abs_v: f64,
}

impl BoxOperator {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Gershgorin bound: ‖H‖ ≤ 2 + max|V|.
    pub fn spectral_radius(&self) -> f64 {
        2.0 + self.max_abs_v
    }

    pub fn max_abs_v(&self) -> f64 {
        self.max_abs_v
    }

    /// y = Hx.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = x[i] * self.diagonal[i];
            if i > 0 {
                acc += x[i - 1];
            }
            if i + 1 < n {
                acc += x[i + 1];
            }
            y[i] = acc;
        }
    }
}

/// Operator on the centered box [−half_width, half_width].
pub fn build_box(spec: &PotentialSpec, half_width: usize) -> Result<BoxOperator> {
    if half_width < 8 {
        return Err(Error::InvalidArgument(format!(
            "half_width = {half_width} too small (need >= 8)"
        )));
    }
    let n = half_width as i64;
    let window = spec.window(-n, n)?;
    let max_abs_v = window.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(BoxOperator {
        offset: -n,
        diagonal: window.values,
        max_abs_v,
    })
}

/// A normalized wavepacket on the box at a given time.
#[derive(Debug, Clone)]
pub struct LatticeState {
    pub offset: i64,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl LatticeState {
    /// δ_site as an initial state.
    pub fn delta(op: &BoxOperator, site: i64) -> Result<Self> {
        let idx = site - op.offset;
        if idx < 0 || idx as usize >= op.len() {
            return Err(Error::InvalidArgument(format!(
                "site {site} outside the box"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); op.len()];
        amplitudes[idx as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            offset: op.offset,
            amplitudes,
            time: 0.0,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Probability share on the outermost 1% of sites (both ends).
    pub fn edge_mass(&self) -> f64 {
        let n = self.amplitudes.len();
        let per_side = (n / 200).max(1);
        let left: f64 = self.amplitudes[..per_side].iter().map(|a| a.norm_sqr()).sum();
        let right: f64 = self.amplitudes[n - per_side..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        left + right
    }
}

/// |⟨state_0, state_t⟩|².
pub fn survival(state_t: &LatticeState, state_0: &LatticeState) -> Result<f64> {
    if state_t.offset != state_0.offset || state_t.amplitudes.len() != state_0.amplitudes.len() {
        return Err(Error::InvalidArgument("states on different boxes".into()));
    }
    let inner: Complex64 = state_0
        .amplitudes
        .iter()
        .zip(&state_t.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(inner.norm_sqr())
}

/// Σ_n |n|^m |ψ(n)|².
pub fn moment(state: &LatticeState, order: f64) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let site = (state.offset + i as i64) as f64;
            site.abs().powf(order) * a.norm_sqr()
        })
        .sum()
}

/// Re⟨ψ, Hψ⟩.
pub fn energy_expectation(op: &BoxOperator, state: &LatticeState) -> f64 {
    let mut h_psi = vec![Complex64::new(0.0, 0.0); op.len()];
    op.apply(&state.amplitudes, &mut h_psi);
    state
        .amplitudes
        .iter()
        .zip(&h_psi)
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// J_0(x), …, J_{n_max}(x) by Miller's backward recurrence, normalized
/// with J_0 + 2ΣJ_{2k} = 1.
pub fn bessel_j_sequence(x: f64, n_max: usize) -> Vec<f64> {
    assert!(x >= 0.0, "argument must be nonnegative");
    if x < 1e-6 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0 - 0.25 * x * x;
        if n_max >= 1 {
            out[1] = 0.5 * x;
        }
        if n_max >= 2 {
            out[2] = 0.125 * x * x;
        }
        return out;
    }
    let start = n_max + ((40.0 * (n_max as f64 + 10.0)).sqrt() as usize) + 20;
    let mut next = 0.0f64;
    let mut here = 1e-30f64;
    let mut out = vec![0.0; n_max + 1];
    let mut norm = 0.0f64;
    for k in (0..start).rev() {
        let prev = (2.0 * (k as f64 + 1.0) / x) * here - next;
        next = here;
        here = prev;
        if k <= n_max {
            out[k] = here;
        }
        if k % 2 == 0 {
            norm += if k == 0 { here } else { 2.0 * here };
        }
        if here.abs() > 1e250 {
            let scale = 1e-250;
            here *= scale;
            next *= scale;
            norm *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Fixed-step Chebyshev propagator for e^{−i·dt·H}.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    radius: f64,
    dt: f64,
    coeffs: Vec<Complex64>,
}

impl ChebyshevPropagator {
    pub fn new(op: &BoxOperator, dt: f64, tol: f64) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid dt = {dt}")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!("invalid tolerance {tol}")));
        }
        let radius = op.spectral_radius() * (1.0 + 1e-10);
        let x = dt.abs() * radius;
        let generous = (x + 30.0 * (x + 10.0).powf(1.0 / 3.0) + 20.0).ceil() as usize;
        let bessel = bessel_j_sequence(x, generous);
        // truncate once coefficients stay below tol/100
        let cut = bessel
            .iter()
            .rposition(|j| j.abs() > tol * 1e-2)
            .unwrap_or(0)
            + 1;
        let phase = Complex64::new(0.0, -dt.signum());
        let mut coeffs = Vec::with_capacity(cut + 1);
        let mut rot = Complex64::new(1.0, 0.0);
        for (k, j) in bessel.iter().take(cut + 1).enumerate() {
            let weight = if k == 0 { 1.0 } else { 2.0 };
            coeffs.push(rot * (weight * j));
            rot *= phase;
        }
        Ok(Self { radius, dt, coeffs })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// One step: returns the state at `state.time + dt`.
    pub fn apply(&self, op: &BoxOperator, state: &LatticeState) -> LatticeState {
        let n = op.len();
        debug_assert_eq!(state.amplitudes.len(), n);
        let inv_r = 1.0 / self.radius;
        let mut t_prev = state.amplitudes.clone(); // T_0 ψ
        let mut t_cur = vec![Complex64::new(0.0, 0.0); n]; // T_1 ψ
        op.apply(&t_prev, &mut t_cur);
        for v in t_cur.iter_mut() {
            *v *= inv_r;
        }
        let mut acc: Vec<Complex64> = t_prev
            .iter()
            .zip(&t_cur)
            .map(|(a, b)| a * self.coeffs[0] + b * self.coeffs.get(1).copied().unwrap_or_default())
            .collect();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for c in self.coeffs.iter().skip(2) {
            // T_{k+1} = 2 H̃ T_k − T_{k−1}
            op.apply(&t_cur, &mut scratch);
            for i in 0..n {
                scratch[i] = scratch[i] * (2.0 * inv_r) - t_prev[i];
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut scratch);
            for (a, t) in acc.iter_mut().zip(&t_cur) {
                *a += t * c;
            }
        }
        LatticeState {
            offset: state.offset,
            amplitudes: acc,
            time: state.time + self.dt,
        }
    }
}

/// Evolve for `steps` fixed steps of size `dt`; returns the states at
/// t = state.time + k·dt for k = 0..=steps (index 0 is the input).
/// Errors with `BoundaryContamination` once the edge mass passes 1e−6.
pub fn evolve(
    op: &BoxOperator,
    state: &LatticeState,
    dt: f64,
    steps: usize,
    tol: f64,
) -> Result<Vec<LatticeState>> {
    if (state.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "state norm {} not 1",
            state.norm()
        )));
    }
    if state.offset != op.offset || state.amplitudes.len() != op.len() {
        return Err(Error::InvalidArgument("state does not match the box".into()));
    }
    let prop = ChebyshevPropagator::new(op, dt, tol)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.clone());
    for _ in 0..steps {
        let next = prop.apply(op, out.last().unwrap());
        let mass = next.edge_mass();
        if mass > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryContamination {
                time: next.time,
                mass,
            });
        }
        out.push(next);
    }
    Ok(out)
}

/// Trapezoidal (1/T)∫₀ᵀ f dt on an increasing sample grid starting at 0.
pub fn time_average(samples: &[(f64, f64)], horizon: f64, max_gap_fraction: f64) -> Result<f64> {
    if samples.is_empty() || samples[0].0 != 0.0 {
        return Err(Error::InvalidArgument(
            "samples must start at t = 0".into(),
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("bad horizon {horizon}")));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument(
            "sample times must be strictly increasing".into(),
        ));
    }
    if samples.last().unwrap().0 < horizon {
        return Err(Error::CoverageGap {
            gap: horizon - samples.last().unwrap().0,
            allowed: 0.0,
            horizon,
        });
    }
    let allowed = max_gap_fraction * horizon;
    let mut integral = 0.0;
    for w in samples.windows(2) {
        let (t0, f0) = w[0];
        let (t1, f1) = w[1];
        if t0 >= horizon {
            break;
        }
        let gap = t1 - t0;
        if gap > allowed {
            return Err(Error::CoverageGap {
                gap,
                allowed,
                horizon,
            });
        }
        if t1 <= horizon {
            integral += 0.5 * (f0 + f1) * gap;
        } else {
            // cut the final panel at the horizon
            let f_cut = f0 + (f1 - f0) * (horizon - t0) / gap;
            integral += 0.5 * (f0 + f_cut) * (horizon - t0);
        }
    }
    Ok(integral / horizon)
}

/// Time-averaged observables up to one horizon T.
#[derive(Debug, Clone)]
pub struct TransportRecord {
    pub horizon: f64,
    pub survival_avg: f64,
    /// (order, ⟨⟨|X|^order⟩⟩_T) pairs, in the order requested.
    pub moments: Vec<(f64, f64)>,
}

/// Driver options for `transport_run`.
#[derive(Debug, Clone)]
pub struct TransportOptions {
    /// Uniform quadrature step for the running time averages.
    pub fine_step: f64,
    /// Chebyshev truncation tolerance.
    pub tol: f64,
    /// Position-moment orders to track.
    pub moment_orders: Vec<f64>,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            fine_step: 0.25,
            tol: 1e-12,
            moment_orders: vec![1.0, 2.0],
        }
    }
}

/// Result of a transport run; `contaminated_at` marks early truncation.
#[derive(Debug, Clone)]
pub struct TransportRun {
    pub records: Vec<TransportRecord>,
    pub contaminated_at: Option<f64>,
}

/// Evolve from `initial` with a uniform fine step, accumulating running
/// trapezoid averages of the survival probability and position moments,
/// and emit one record per requested horizon (snapped to the fine grid).
pub fn transport_run(
    op: &BoxOperator,
    initial: &LatticeState,
    horizons: &[f64],
    opts: &TransportOptions,
) -> Result<TransportRun> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("need at least one horizon".into()));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "horizons must be positive and strictly increasing".into(),
        ));
    }
    if !(opts.fine_step > 0.0) {
        return Err(Error::InvalidArgument("fine_step must be positive".into()));
    }
    let dt = opts.fine_step;
    let weights: Vec<Vec<f64>> = opts
        .moment_orders
        .iter()
        .map(|m| {
            (0..op.len())
                .map(|i| ((op.offset + i as i64) as f64).abs().powf(*m))
                .collect()
        })
        .collect();
    let weighted = |state: &LatticeState, w: &[f64]| -> f64 {
        state
            .amplitudes
            .iter()
            .zip(w)
            .map(|(a, wi)| wi * a.norm_sqr())
            .sum()
    };

    let prop = ChebyshevPropagator::new(op, dt, opts.tol)?;
    let mut state = initial.clone();
    let mut surv_prev = survival(&state, initial)?;
    let mut mom_prev: Vec<f64> = weights.iter().map(|w| weighted(&state, w)).collect();
    let mut surv_integral = 0.0f64;
    let mut mom_integral = vec![0.0f64; weights.len()];
    let mut records = Vec::with_capacity(horizons.len());
    let mut next_horizon = 0usize;
    let steps_per: Vec<u64> = horizons
        .iter()
        .map(|t| (t / dt).round().max(1.0) as u64)
        .collect();
    let total_steps = *steps_per.last().unwrap();

    for k in 1..=total_steps {
        state = prop.apply(op, &state);
        let mass = state.edge_mass();
        if mass > BOUNDARY_MASS_LIMIT {
            return Ok(TransportRun {
                records,
                contaminated_at: Some(state.time),
            });
        }
        let surv = survival(&state, initial)?;
        surv_integral += 0.5 * (surv_prev + surv) * dt;
        surv_prev = surv;
        for (j, w) in weights.iter().enumerate() {
            let m = weighted(&state, w);
            mom_integral[j] += 0.5 * (mom_prev[j] + m) * dt;
            mom_prev[j] = m;
        }
        while next_horizon < steps_per.len() && steps_per[next_horizon] == k {
            let t = k as f64 * dt;
            records.push(TransportRecord {
                horizon: t,
                survival_avg: surv_integral / t,
                moments: opts
                    .moment_orders
                    .iter()
                    .zip(&mom_integral)
                    .map(|(m, i)| (*m, i / t))
                    .collect(),
            });
            next_horizon += 1;
        }
    }
    Ok(TransportRun {
        records,
        contaminated_at: None,
    })
}

/// Which observable a scaling fit targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingTarget {
    /// ⟨⟨|X|^m⟩⟩_T ~ (log T)^κ (κ compares with b·m).
    Moment(f64),
    /// ⟨|μ̂|²⟩_T ~ (log T)^{−κ}.
    Survival,
}

/// Fitted log-scaling law; positive exponents mean growth for moments and
/// decay for survival.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub residual: f64,
    /// Exponent of the competing plain power law in T.
    pub power_exponent: f64,
    /// True when the (log T)-power model fits at least as well as the
    /// plain power law (ballistic data prefers the latter).
    pub log_model_preferred: bool,
}

/// Least-squares fit of log(observable) against log log T.
pub fn fit_log_scaling(records: &[TransportRecord], target: ScalingTarget) -> Result<ScalingFit> {
    if records.len() < 8 {
        return Err(Error::DegenerateFit(format!(
            "need >= 8 records, have {}",
            records.len()
        )));
    }
    let t_min = records.iter().map(|r| r.horizon).fold(f64::INFINITY, f64::min);
    let t_max = records.iter().map(|r| r.horizon).fold(0.0f64, f64::max);
    if t_min <= std::f64::consts::E {
        return Err(Error::DegenerateFit(
            "horizons must exceed e for log-log-T fits".into(),
        ));
    }
    if t_max / t_min < 999.9 {
        return Err(Error::DegenerateFit(
            "horizons must span at least three decades".into(),
        ));
    }
    let values: Vec<f64> = records
        .iter()
        .map(|r| match target {
            ScalingTarget::Survival => Ok(r.survival_avg),
            ScalingTarget::Moment(m) => r
                .moments
                .iter()
                .find(|(order, _)| (*order - m).abs() < 1e-12)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("order {m} not tracked in records"))
                }),
        })
        .collect::<Result<_>>()?;
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateFit("nonpositive observable".into()));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.horizon.ln().ln()).collect();
    let xs_pow: Vec<f64> = records.iter().map(|r| r.horizon.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let log_fit = line_fit(&xs, &ys)?;
    let pow_fit = line_fit(&xs_pow, &ys)?;
    let sign = match target {
        ScalingTarget::Moment(_) => 1.0,
        ScalingTarget::Survival => -1.0,
    };
    Ok(ScalingFit {
        exponent: sign * log_fit.slope,
        amplitude: log_fit.intercept.exp(),
        residual: log_fit.rms_residual,
        power_exponent: sign * pow_fit.slope,
        log_model_preferred: log_fit.rms_residual <= pow_fit.rms_residual,
    })
}

/// CSV export: `T,survival_avg,moment_avg_m<order>…`.
pub fn write_transport_csv<W: Write>(records: &[TransportRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let orders: Vec<f64> = records
        .first()
        .map(|r| r.moments.iter().map(|(m, _)| *m).collect())
        .unwrap_or_default();
    let mut header = vec!["T".to_string(), "survival_avg".to_string()];
    for m in &orders {
        header.push(format!("moment_avg_m{m}"));
    }
    w.write_record(&header)
        .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    for r in records {
        let mut row = vec![format!("{}", r.horizon), format!("{}", r.survival_avg)];
        for (_, v) in &r.moments {
            row.push(format!("{v}"));
        }
        w.write_record(&row)
            .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(4.0, 8);
        // frozen reference values of J_0(4), J_1(4)
        assert_relative_eq!(j[0], -0.3971498098638474, epsilon = 1e-12);
        assert_relative_eq!(j[1], -0.06604332802354914, epsilon = 1e-12);
        let j = bessel_j_sequence(2.0, 4);
        assert_relative_eq!(j[1], 0.5767248077568734, epsilon = 1e-12);
        let j = bessel_j_sequence(0.0, 3);
        assert_relative_eq!(j[0], 1.0);
        assert_relative_eq!(j[1], 0.0);
    }

    #[test]
    fn build_box_examples() {
        let op = build_box(&PotentialSpec::free(), 8).unwrap();
        assert_eq!(op.len(), 17);
        assert!(op.diagonal.iter().all(|v| *v == 0.0));
        assert_relative_eq!(op.spectral_radius(), 2.0);

        let theta = crate::cfrac::RotationNumber::golden(crate::highprec::DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(1.0, theta, 0.0).unwrap();
        let op = build_box(&spec, 16).unwrap();
        assert!(op.diagonal.iter().all(|v| *v == 0.0 || *v == 1.0));
        assert_relative_eq!(op.spectral_radius(), 3.0);
    }

    #[test]
    fn evolve_keeps_input_at_t0_and_unitarity() {
        let op = build_box(&PotentialSpec::free(), 64).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let states = evolve(&op, &psi0, 0.5, 8, 1e-12).unwrap();
        assert_eq!(states.len(), 9);
        assert_eq!(states[0].amplitudes, psi0.amplitudes);
        for s in &states {
            assert!((s.norm() - 1.0).abs() < 1e-10, "t = {}", s.time);
        }
    }

    #[test]
    fn free_survival_is_bessel_squared() {
        let op = build_box(&PotentialSpec::free(), 128).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let states = evolve(&op, &psi0, 2.0, 1, 1e-13).unwrap();
        let surv = survival(&states[1], &psi0).unwrap();
        // |J_0(4)|² with J_0(4) = -0.3971498098638475
        assert_relative_eq!(surv, 0.15772797147489018, max_relative = 1e-6);
    }

    #[test]
    fn free_second_moment_is_ballistic() {
        let op = build_box(&PotentialSpec::free(), 128).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let states = evolve(&op, &psi0, 3.0, 1, 1e-13).unwrap();
        let m2 = moment(&states[1], 2.0);
        assert_relative_eq!(m2, 18.0, max_relative = 1e-8);
    }

    #[test]
    fn moment_examples() {
        let op = build_box(&PotentialSpec::free(), 8).unwrap();
        let delta = LatticeState::delta(&op, 0).unwrap();
        for m in [0.5, 1.0, 2.0, 3.5] {
            assert_eq!(moment(&delta, m), 0.0);
        }
        let mut pair = LatticeState::delta(&op, 0).unwrap();
        pair.amplitudes.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        pair.amplitudes[7] = c; // site -1
        pair.amplitudes[9] = c; // site +1
        assert_relative_eq!(moment(&pair, 2.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn time_reversal_returns_initial() {
        let theta = crate::cfrac::RotationNumber::golden(crate::highprec::DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(2.0, theta, 0.0).unwrap();
        let op = build_box(&spec, 64).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let forward = evolve(&op, &psi0, 1.5, 4, 1e-13).unwrap();
        let back = evolve(&op, forward.last().unwrap(), -1.5, 4, 1e-13).unwrap();
        let err: f64 = back
            .last()
            .unwrap()
            .amplitudes
            .iter()
            .zip(&psi0.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-7, "ℓ² error {err}");
    }

    #[test]
    fn energy_is_conserved() {
        let theta = crate::cfrac::RotationNumber::golden(crate::highprec::DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(1.0, theta, 0.3).unwrap();
        let op = build_box(&spec, 64).unwrap();
        let psi0 = LatticeState::delta(&op, 2).unwrap();
        let states = evolve(&op, &psi0, 0.7, 10, 1e-12).unwrap();
        let e0 = energy_expectation(&op, &states[0]);
        for s in &states {
            let e = energy_expectation(&op, s);
            assert!((e - e0).abs() <= 1e-8 * e0.abs().max(1.0), "t = {}", s.time);
        }
    }

    #[test]
    fn boundary_contamination_fires() {
        let op = build_box(&PotentialSpec::free(), 24).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        match evolve(&op, &psi0, 2.0, 40, 1e-12) {
            Err(Error::BoundaryContamination { time, .. }) => {
                assert!(time < 40.0, "fired at t = {time}")
            }
            other => panic!("expected contamination, got {:?}", other.map(|s| s.len())),
        }
    }

    #[test]
    fn trapezoid_examples() {
        let constant: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, 3.25)).collect();
        assert_relative_eq!(
            time_average(&constant, 10.0, DEFAULT_MAX_GAP_FRACTION).unwrap(),
            3.25
        );
        let linear: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, i as f64)).collect();
        assert_relative_eq!(
            time_average(&linear, 10.0, DEFAULT_MAX_GAP_FRACTION).unwrap(),
            5.0
        );
        let tau = 2.0 * std::f64::consts::PI;
        let cosine: Vec<(f64, f64)> = (0..=1000)
            .map(|i| {
                let t = tau * i as f64 / 1000.0;
                (t, t.cos())
            })
            .collect();
        assert!(time_average(&cosine, tau, DEFAULT_MAX_GAP_FRACTION).unwrap().abs() < 1e-5);
    }

    #[test]
    fn coverage_gap_detected() {
        let sparse = vec![(0.0, 1.0), (9.0, 1.0), (10.0, 1.0)];
        assert!(matches!(
            time_average(&sparse, 10.0, 0.1),
            Err(Error::CoverageGap { .. })
        ));
        let short = vec![(0.0, 1.0), (0.5, 1.0)];
        assert!(matches!(
            time_average(&short, 10.0, 0.9),
            Err(Error::CoverageGap { .. })
        ));
    }

    #[test]
    fn scaling_fit_recovers_synthetic_log_model() {
        let records: Vec<TransportRecord> = (0..12)
            .map(|i| {
                let t = 10f64.powf(1.0 + 0.3 * i as f64);
                TransportRecord {
                    horizon: t,
                    survival_avg: 2.0 * t.ln().powf(-1.5),
                    moments: vec![(2.0, 0.3 * t.ln().powf(4.0))],
                }
            })
            .collect();
        let fit = fit_log_scaling(&records, ScalingTarget::Moment(2.0)).unwrap();
        assert_relative_eq!(fit.exponent, 4.0, epsilon = 1e-6);
        assert!(fit.log_model_preferred);
        let fit = fit_log_scaling(&records, ScalingTarget::Survival).unwrap();
        assert_relative_eq!(fit.exponent, 1.5, epsilon = 1e-6);
    }

    #[test]
    fn ballistic_data_prefers_power_law() {
        // ⟨⟨X²⟩⟩_T = (2/3)T² for the free lattice.
        let records: Vec<TransportRecord> = (0..12)
            .map(|i| {
                let t = 10f64.powf(1.0 + 0.3 * i as f64);
                TransportRecord {
                    horizon: t,
                    survival_avg: 1.0 / t,
                    moments: vec![(2.0, 2.0 / 3.0 * t * t)],
                }
            })
            .collect();
        let fit = fit_log_scaling(&records, ScalingTarget::Moment(2.0)).unwrap();
        assert!(!fit.log_model_preferred);
        assert_relative_eq!(fit.power_exponent, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn transport_run_matches_direct_evolution() {
        let op = build_box(&PotentialSpec::free(), 96).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let opts = TransportOptions {
            fine_step: 0.25,
            tol: 1e-12,
            moment_orders: vec![2.0],
        };
        let run = transport_run(&op, &psi0, &[4.0, 8.0], &opts).unwrap();
        assert!(run.contaminated_at.is_none());
        assert_eq!(run.records.len(), 2);
        // For the free lattice ⟨X²⟩ = 2t², so the T-average is (2/3)T².
        let r = &run.records[1];
        assert_relative_eq!(r.moments[0].1, 2.0 / 3.0 * 64.0, max_relative = 0.01);
        // survival average stays in [0, 1]
        assert!(r.survival_avg > 0.0 && r.survival_avg <= 1.0);
    }

    #[test]
    fn transport_run_truncates_on_contamination() {
        let op = build_box(&PotentialSpec::free(), 32).unwrap();
        let psi0 = LatticeState::delta(&op, 0).unwrap();
        let run = transport_run(&op, &psi0, &[4.0, 400.0], &TransportOptions::default()).unwrap();
        assert!(run.contaminated_at.is_some());
        assert_eq!(run.records.len(), 1);
    }

    #[test]
    fn transport_csv_shape() {
        let records = vec![TransportRecord {
            horizon: 10.0,
            survival_avg: 0.25,
            moments: vec![(1.0, 3.0), (2.0, 11.0)],
        }];
        let mut buf = Vec::new();
        write_transport_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,survival_avg,moment_avg_m1,moment_avg_m2\n"));
        assert!(text.contains("10,0.25,3,11"));
    }
}
