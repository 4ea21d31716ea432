//! Half-line Weyl functions m±(z), the whole-line 2×2 matrix M and its
//! trace, the φ-Möbius family, and the disk-parameterized closed forms.
//!
//! m⁺ is evaluated by the backward continued fraction
//! m⁺ = 1/(V(1) − z − 1/(V(2) − z − ⋯)) with a zero tail seed, doubling
//! the depth until successive values agree below tolerance. The truncated
//! fraction at depth d is exactly the (1,1) resolvent entry of the
//! d-site Dirichlet truncation, which is what the independent linear-solve
//! oracle computes.

use num_complex::Complex64;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sturmian::PotentialSpec;

/// Hard depth cap for the doubling ladder.
pub const DEPTH_CAP: usize = 1 << 22;

/// Below this imaginary part the required depth explodes; refuse rather
/// than return unconverged values.
pub const EPSILON_FLOOR: f64 = 1e-6;

/// A complex value constrained to the open upper half-plane, tagged with
/// its evaluation point z = E + iε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerglotzValue {
    pub value: Complex64,
    pub at_z: Complex64,
}

impl HerglotzValue {
    pub fn new(value: Complex64, at_z: Complex64) -> Result<Self> {
        if at_z.im <= 0.0 {
            return Err(Error::InvalidZ(format!("Im z = {} not positive", at_z.im)));
        }
        if value.im <= 0.0 {
            return Err(Error::InvalidZ(format!(
                "Herglotz violation: Im m = {} at z = {}",
                value.im, at_z
            )));
        }
        Ok(Self { value, at_z })
    }
}

/// The whole-line 2×2 resolvent matrix at sites {0, 1} and its trace.
#[derive(Debug, Clone, Copy)]
pub struct WholeLineM {
    pub matrix: [[Complex64; 2]; 2],
    pub trace: Complex64,
}

/// Truncated continued fraction at an exact depth:
/// 1/(values[0] − z − 1/(values[1] − z − ⋯ − 1/(values[depth-1] − z))).
pub fn m_continued_fraction_at_depth(values: &[f64], z: Complex64, depth: usize) -> Complex64 {
    assert!(depth >= 1 && depth <= values.len());
    let mut tail = Complex64::new(0.0, 0.0);
    for v in values[..depth].iter().rev() {
        tail = (Complex64::new(*v, 0.0) - z - tail).inv();
    }
    tail
}

fn check_z(z: Complex64) -> Result<()> {
    if z.im <= 0.0 {
        return Err(Error::InvalidZ(format!("Im z = {} not positive", z.im)));
    }
    if z.im < EPSILON_FLOOR {
        return Err(Error::InvalidZ(format!(
            "Im z = {} below the {EPSILON_FLOOR:e} floor",
            z.im
        )));
    }
    Ok(())
}

/// Doubling-ladder evaluation over a pre-generated value slice (the slice
/// length caps the depth).
pub fn m_on_values(
    values: &[f64],
    z: Complex64,
    depth: usize,
    tol: f64,
) -> Result<HerglotzValue> {
    check_z(z)?;
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty potential values".into()));
    }
    let mut depth = depth.min(values.len());
    let mut current = m_continued_fraction_at_depth(values, z, depth);
    loop {
        if depth == values.len() {
            // No deeper data available; accept only if the ladder already
            // proved convergence at a shallower depth.
            return Err(Error::NoConvergence {
                depth,
                last_delta: f64::NAN,
                tol,
            });
        }
        let next_depth = (depth * 2).min(values.len());
        let next = m_continued_fraction_at_depth(values, z, next_depth);
        let delta = (next - current).norm();
        if delta < tol {
            return HerglotzValue::new(next, z);
        }
        if next_depth == values.len() {
            return Err(Error::NoConvergence {
                depth: next_depth,
                last_delta: delta,
                tol,
            });
        }
        depth = next_depth;
        current = next;
    }
}

/// m⁺(z) = ⟨δ₁|(H₊−z)⁻¹δ₁⟩: continued fraction over V(1), V(2), ….
pub fn m_plus(spec: &PotentialSpec, z: Complex64, depth: usize, tol: f64) -> Result<HerglotzValue> {
    check_z(z)?;
    m_half_line(spec, z, depth, tol, true)
}

/// m⁻(z) = ⟨δ₀|(H₋−z)⁻¹δ₀⟩: continued fraction over V(0), V(−1), ….
pub fn m_minus(spec: &PotentialSpec, z: Complex64, depth: usize, tol: f64) -> Result<HerglotzValue> {
    check_z(z)?;
    m_half_line(spec, z, depth, tol, false)
}

fn m_half_line(
    spec: &PotentialSpec,
    z: Complex64,
    depth: usize,
    tol: f64,
    plus: bool,
) -> Result<HerglotzValue> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    let mut budget = depth.max(64);
    let mut values = half_line_values(spec, budget, plus)?;
    loop {
        match m_on_values(&values, z, depth, tol) {
            Ok(v) => return Ok(v),
            Err(Error::NoConvergence { last_delta, .. }) => {
                if budget >= DEPTH_CAP {
                    return Err(Error::NoConvergence {
                        depth: budget,
                        last_delta,
                        tol,
                    });
                }
                budget = (budget * 4).min(DEPTH_CAP);
                values = half_line_values(spec, budget, plus)?;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Potential values in continued-fraction order: V(1..=n) for the right
/// half line, V(0), V(−1), …, V(1−n) for the left.
pub fn half_line_values(spec: &PotentialSpec, n: usize, plus: bool) -> Result<Vec<f64>> {
    if plus {
        Ok(spec.window(1, n as i64)?.values)
    } else {
        let mut v = spec.window(1 - n as i64, 0)?.values;
        v.reverse();
        Ok(v)
    }
}

/// Assemble M = (1/(1−m⁺m⁻))·[[m⁻, −m⁺m⁻], [−m⁺m⁻, m⁺]] and its trace.
pub fn whole_line(mp: &HerglotzValue, mm: &HerglotzValue) -> Result<WholeLineM> {
    if mp.at_z != mm.at_z {
        return Err(Error::InvalidArgument(format!(
            "m-functions evaluated at different points: {} vs {}",
            mp.at_z, mm.at_z
        )));
    }
    let product = mp.value * mm.value;
    let denom = Complex64::new(1.0, 0.0) - product;
    if denom.norm() <= 1e-12 {
        return Err(Error::NearSingular {
            magnitude: denom.norm(),
        });
    }
    let matrix = [
        [mm.value / denom, -product / denom],
        [-product / denom, mp.value / denom],
    ];
    Ok(WholeLineM {
        matrix,
        trace: (mp.value + mm.value) / denom,
    })
}

/// Boundary-condition rotation of the half-line m-function:
/// m_φ⁺ = (sin φ + cos φ·m⁺)/(cos φ − sin φ·m⁺).
pub fn m_phi(mp: &HerglotzValue, phi: f64) -> Complex64 {
    let (s, c) = phi.sin_cos();
    (Complex64::new(s, 0.0) + mp.value * c) / (Complex64::new(c, 0.0) - mp.value * s)
}

/// Closed form of sup_φ |m_φ⁺|: with μ = (m⁺−i)/(m⁺+i) the family traces
/// the circle i·(1+μz)/(1−μz), |z| = 1, whose modulus peaks at
/// (1+|μ|)/(1−|μ|).
pub fn moebius_sup(mp: &HerglotzValue) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    let mu = (mp.value - i) / (mp.value + i);
    let r = mu.norm();
    (1.0 + r) / (1.0 - r)
}

/// Both sides of the trace identity
/// (m⁺+m⁻)/(1−m⁺m⁻) = i·(1+μw)/(1−μw), μ = (m⁺−i)/(m⁺+i),
/// w = (i−m⁻)/(i+m⁻).
#[derive(Debug, Clone, Copy)]
pub struct MoebiusIdentity {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub delta: f64,
}

pub fn verify_moebius_identity(mp: &HerglotzValue, mm: &HerglotzValue) -> MoebiusIdentity {
    let i = Complex64::new(0.0, 1.0);
    let lhs = (mp.value + mm.value) / (Complex64::new(1.0, 0.0) - mp.value * mm.value);
    let mu = (mp.value - i) / (mp.value + i);
    let w = (i - mm.value) / (i + mm.value);
    let rhs = i * (Complex64::new(1.0, 0.0) + mu * w) / (Complex64::new(1.0, 0.0) - mu * w);
    MoebiusIdentity {
        lhs,
        rhs,
        delta: (lhs - rhs).norm(),
    }
}

/// Upper bound 2ε·Im m(E+iε) for the Λ-mass of [E−ε, E+ε].
pub fn lambda_interval_bound(trace_value: Complex64, eps: f64) -> f64 {
    2.0 * eps * trace_value.im
}

/// One row of the m-function scan export.
#[derive(Debug, Clone, Copy)]
pub struct MScanRow {
    pub energy: f64,
    pub eps: f64,
    pub m_plus: Complex64,
    pub m_minus: Complex64,
    pub trace: Complex64,
    pub sup_phi: f64,
    pub lambda_bound: f64,
}

/// CSV emitter with columns
/// `E,eps,re_m_plus,im_m_plus,re_m_minus,im_m_minus,re_tr_m,im_tr_m,sup_phi,lambda_bound`.
pub fn write_scan_csv<W: Write>(rows: &[MScanRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "E",
        "eps",
        "re_m_plus",
        "im_m_plus",
        "re_m_minus",
        "im_m_minus",
        "re_tr_m",
        "im_tr_m",
        "sup_phi",
        "lambda_bound",
    ])
    .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    for r in rows {
        w.write_record([
            format!("{}", r.energy),
            format!("{}", r.eps),
            format!("{}", r.m_plus.re),
            format!("{}", r.m_plus.im),
            format!("{}", r.m_minus.re),
            format!("{}", r.m_minus.im),
            format!("{}", r.trace.re),
            format!("{}", r.trace.im),
            format!("{}", r.sup_phi),
            format!("{}", r.lambda_bound),
        ])
        .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::RotationNumber;
    use crate::highprec::DEFAULT_PRECISION;
    use approx::assert_relative_eq;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_m_is_golden_fixed_point() {
        // Herglotz root of m² + zm + 1 = 0 at z = i.
        let m = m_plus(&PotentialSpec::free(), z(0.0, 1.0), 16, 1e-12).unwrap();
        let expected = (5.0f64.sqrt() - 1.0) / 2.0;
        assert_relative_eq!(m.value.im, expected, epsilon = 1e-10);
        assert!(m.value.re.abs() < 1e-10);
    }

    #[test]
    fn constant_potential_is_energy_shift() {
        let c = 0.8;
        let zz = z(0.3, 0.05);
        let shifted = m_plus(&PotentialSpec::constant(c), zz, 16, 1e-12).unwrap();
        let free = m_plus(&PotentialSpec::free(), zz - Complex64::new(c, 0.0), 16, 1e-12).unwrap();
        assert!((shifted.value - free.value).norm() < 1e-10);
    }

    #[test]
    fn free_m_minus_equals_m_plus() {
        let zz = z(-0.7, 0.02);
        let plus = m_plus(&PotentialSpec::free(), zz, 16, 1e-12).unwrap();
        let minus = m_minus(&PotentialSpec::free(), zz, 16, 1e-12).unwrap();
        assert!((plus.value - minus.value).norm() < 1e-10);
    }

    #[test]
    fn sturmian_lambda_zero_matches_free() {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(0.0, theta, 0.4).unwrap();
        let zz = z(0.5, 0.01);
        let a = m_minus(&spec, zz, 16, 1e-12).unwrap();
        let b = m_minus(&PotentialSpec::free(), zz, 16, 1e-12).unwrap();
        assert!((a.value - b.value).norm() < 1e-10);
    }

    #[test]
    fn herglotz_property_on_grid() {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(1.0, theta, 0.0).unwrap();
        for &e in &[-2.0, -0.5, 0.0, 1.3, 2.7] {
            for &eps in &[1e-3, 1e-2, 0.1, 1.0] {
                let m = m_plus(&spec, z(e, eps), 64, 1e-10).unwrap();
                assert!(m.value.im > 0.0, "E={e} eps={eps}");
            }
        }
    }

    #[test]
    fn depth_doubling_deltas_shrink() {
        let theta = RotationNumber::golden(DEFAULT_PRECISION);
        let spec = PotentialSpec::sturmian_f64(1.0, theta, 0.0).unwrap();
        let zz = z(0.2, 0.05);
        let values = half_line_values(&spec, 1 << 14, true).unwrap();
        let mut deltas = Vec::new();
        let mut depth = 64;
        let mut prev = m_continued_fraction_at_depth(&values, zz, depth);
        while depth * 2 <= values.len() {
            depth *= 2;
            let next = m_continued_fraction_at_depth(&values, zz, depth);
            deltas.push((next - prev).norm());
            prev = next;
        }
        for w in deltas.windows(2) {
            assert!(w[1] <= w[0].max(1e-15), "{deltas:?}");
        }
    }

    #[test]
    fn whole_line_symmetric_point() {
        let i = z(0.0, 1.0);
        let mp = HerglotzValue::new(i, i).unwrap();
        let mm = HerglotzValue::new(i, i).unwrap();
        let m = whole_line(&mp, &mm).unwrap();
        assert!((m.trace - i).norm() < 1e-15);
        assert!((m.matrix[0][0] - i / 2.0).norm() < 1e-15);
        assert!((m.matrix[0][1] - z(0.5, 0.0)).norm() < 1e-15);
        assert!((m.matrix[1][0] - z(0.5, 0.0)).norm() < 1e-15);
        assert!((m.matrix[1][1] - i / 2.0).norm() < 1e-15);
    }

    #[test]
    fn whole_line_free_trace() {
        let zz = z(0.0, 1.0);
        let mp = m_plus(&PotentialSpec::free(), zz, 16, 1e-13).unwrap();
        let mm = m_minus(&PotentialSpec::free(), zz, 16, 1e-13).unwrap();
        let m = whole_line(&mp, &mm).unwrap();
        // 2 m_f/(1 - m_f²) with m_f = i(√5−1)/2 equals 2i/√5.
        assert_relative_eq!(m.trace.im, 2.0 / 5.0f64.sqrt(), epsilon = 1e-9);
        assert!(m.trace.re.abs() < 1e-10);
        assert!(m.trace.im > 0.0);
    }

    #[test]
    fn m_phi_special_angles() {
        let mp = HerglotzValue::new(z(0.4, 1.7), z(0.0, 1.0)).unwrap();
        assert!((m_phi(&mp, 0.0) - mp.value).norm() < 1e-15);
        let quarter = m_phi(&mp, std::f64::consts::FRAC_PI_2);
        assert!((quarter + mp.value.inv()).norm() < 1e-14);
        // m⁺ = i keeps the whole family on the unit circle.
        let unit = HerglotzValue::new(z(0.0, 1.0), z(0.0, 1.0)).unwrap();
        for k in 0..32 {
            let phi = k as f64 * 0.1;
            assert_relative_eq!(m_phi(&unit, phi).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn moebius_sup_closed_forms() {
        let at = z(0.0, 1.0);
        let sup = moebius_sup(&HerglotzValue::new(z(0.0, 1.0), at).unwrap());
        assert_relative_eq!(sup, 1.0, epsilon = 1e-14);
        let sup = moebius_sup(&HerglotzValue::new(z(0.0, 2.0), at).unwrap());
        assert_relative_eq!(sup, 2.0, epsilon = 1e-12);
        let sup = moebius_sup(&HerglotzValue::new(z(1.0, 1.0), at).unwrap());
        let expected = (5.0f64.sqrt() + 1.0) / (5.0f64.sqrt() - 1.0);
        assert_relative_eq!(sup, expected, epsilon = 1e-12);
    }

    #[test]
    fn moebius_sup_dominates_phi_grid() {
        let mp = HerglotzValue::new(z(-0.3, 0.8), z(0.0, 1.0)).unwrap();
        let sup = moebius_sup(&mp);
        let mut best = 0.0f64;
        for k in 0..10_000 {
            let phi = k as f64 * std::f64::consts::PI / 10_000.0;
            best = best.max(m_phi(&mp, phi).norm());
        }
        assert!(best <= sup * (1.0 + 1e-9));
        assert!(sup - best < 1e-6 * sup, "sup {sup} grid {best}");
    }

    #[test]
    fn identity_hand_checked_values() {
        let at = z(0.0, 1.0);
        let mp = HerglotzValue::new(z(0.0, 1.0), at).unwrap();
        let mm = HerglotzValue::new(z(0.0, 1.0), at).unwrap();
        let id = verify_moebius_identity(&mp, &mm);
        assert!(id.delta < 1e-15);
        assert!((id.lhs - z(0.0, 1.0)).norm() < 1e-15);

        let mp = HerglotzValue::new(z(0.0, 2.0), at).unwrap();
        let mm = HerglotzValue::new(z(0.0, 0.5), at).unwrap();
        let id = verify_moebius_identity(&mp, &mm);
        assert!((id.lhs - z(0.0, 1.25)).norm() < 1e-14);
        assert!(id.delta < 1e-14);
    }

    #[test]
    fn interval_bound_arithmetic() {
        assert_relative_eq!(lambda_interval_bound(z(0.3, 1.0), 0.1), 0.2);
        // grows linearly, never negative for Herglotz traces
        assert!(lambda_interval_bound(z(-2.0, 0.7), 5.0) > 0.0);
    }

    #[test]
    fn epsilon_floor_is_enforced() {
        let res = m_plus(&PotentialSpec::free(), z(0.0, 1e-8), 16, 1e-10);
        assert!(matches!(res, Err(Error::InvalidZ(_))));
        let res = m_plus(&PotentialSpec::free(), z(0.0, -1.0), 16, 1e-10);
        assert!(matches!(res, Err(Error::InvalidZ(_))));
    }
}
