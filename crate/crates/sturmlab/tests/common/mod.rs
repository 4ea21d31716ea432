//! Shared oracles for the integration suite. Everything here is an
//! independent computation path: direct linear solves and dense
//! eigendecompositions that never touch the continued-fraction,
//! discriminant, or Chebyshev code they are used to check.

#![allow(dead_code)]

use num_complex::Complex64;
use sturmlab::{BigFixed, PotentialSpec, RotationNumber, DEFAULT_PRECISION};

pub fn golden() -> RotationNumber {
    RotationNumber::golden(DEFAULT_PRECISION)
}

pub fn silver() -> RotationNumber {
    RotationNumber::silver(DEFAULT_PRECISION)
}

pub fn golden_spec(lambda: f64, beta: f64) -> PotentialSpec {
    PotentialSpec::sturmian_f64(lambda, golden(), beta).unwrap()
}

pub fn beta_zero() -> BigFixed {
    BigFixed::zero(DEFAULT_PRECISION)
}

/// Solve (A − z)u = δ_source for a tridiagonal A with the given diagonal
/// and unit off-diagonals (Dirichlet ends), by the Thomas algorithm.
pub fn resolvent_column(diagonal: &[f64], z: Complex64, source: usize) -> Vec<Complex64> {
    let n = diagonal.len();
    assert!(source < n);
    let mut sub = vec![Complex64::new(1.0, 0.0); n]; // a_i (below)
    let mut main: Vec<Complex64> = diagonal
        .iter()
        .map(|d| Complex64::new(*d, 0.0) - z)
        .collect();
    let mut sup = vec![Complex64::new(1.0, 0.0); n]; // c_i (above)
    sub[0] = Complex64::new(0.0, 0.0);
    sup[n - 1] = Complex64::new(0.0, 0.0);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[source] = Complex64::new(1.0, 0.0);

    // forward sweep
    for i in 1..n {
        let w = sub[i] / main[i - 1];
        main[i] -= w * sup[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= w * prev;
    }
    // back substitution
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[n - 1] = rhs[n - 1] / main[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - sup[i] * u[i + 1]) / main[i];
    }
    u
}

/// Full dense eigendecomposition (nalgebra, QR-based): returns ascending
/// eigenvalues and the orthonormal eigenvector matrix (columns).
pub fn dense_eigensolve(diagonal: &[f64]) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let n = diagonal.len();
    let mut mat = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = diagonal[i];
        if i + 1 < n {
            mat[(i, i + 1)] = 1.0;
            mat[(i + 1, i)] = 1.0;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence, unit
/// off-diagonals).
pub fn sturm_count(diagonal: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diagonal[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for d in &diagonal[1..] {
        let safe = if q.abs() < 1e-300 {
            if q >= 0.0 { 1e-300 } else { -1e-300 }
        } else {
            q
        };
        q = (d - x) - 1.0 / safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues inside [lo, hi] by Sturm bisection.
pub fn sturm_eigenvalues_in(diagonal: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let k_lo = sturm_count(diagonal, lo);
    let k_hi = sturm_count(diagonal, hi);
    let mut out = Vec::with_capacity(k_hi - k_lo);
    for k in k_lo..k_hi {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if b - a < 1e-13 * mid.abs().max(1.0) {
                break;
            }
            if sturm_count(diagonal, mid) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// One eigenvector by inverse iteration at an already-located eigenvalue.
pub fn inverse_iteration(diagonal: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = diagonal.len();
    let shift = eigenvalue + 1e-11;
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i * 2654435761 + 12345) % 1000) as f64 / 1000.0 - 0.5)
        .collect();
    for _ in 0..4 {
        // real Thomas solve of (A - shift) w = v
        let mut main: Vec<f64> = diagonal.iter().map(|d| d - shift).collect();
        let mut rhs = v.clone();
        for i in 1..n {
            let denom = if main[i - 1].abs() < 1e-300 {
                1e-300f64.copysign(main[i - 1])
            } else {
                main[i - 1]
            };
            let w = 1.0 / denom;
            main[i] -= w;
            let prev = rhs[i - 1];
            rhs[i] -= w * prev;
        }
        let mut w = vec![0.0; n];
        let denom_last = if main[n - 1].abs() < 1e-300 {
            1e-300f64.copysign(main[n - 1])
        } else {
            main[n - 1]
        };
        w[n - 1] = rhs[n - 1] / denom_last;
        for i in (0..n - 1).rev() {
            let denom = if main[i].abs() < 1e-300 {
                1e-300f64.copysign(main[i])
            } else {
                main[i]
            };
            w[i] = (rhs[i] - w[i + 1]) / denom;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    v
}
