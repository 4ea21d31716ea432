//! Band spectra of periodic approximants via the Floquet discriminant.
//!
//! The discriminant D(E) is the trace of the transfer product over one
//! period; the approximant spectrum is {E : |D(E)| ≤ 2}. Band edges are
//! roots of D = ±2, located by sign-change scanning plus bisection, with
//! extremum refinement to catch tangencies and sub-resolution gaps. Dense
//! eigensolves are reserved for cross-checks in tests; the production path
//! is O(q) per energy.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::cfrac::{Convergent, RotationNumber};
use crate::error::{Error, Result};
use crate::highprec::BigFixed;
use crate::sturmian::approximant_period;
use crate::transfer::TransferMatrix;

/// Tolerance for band-edge bisection.
const EDGE_TOL: f64 = 1e-10;
/// How far beyond ±2 an extremum must poke to count as a hidden crossing.
const LEVEL_MARGIN: f64 = 1e-9;

/// Disjoint closed bands of one periodic approximant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSet {
    pub lambda: f64,
    pub p: i64,
    pub q: i64,
    pub beta: f64,
    /// Sorted, disjoint closed intervals.
    pub bands: Vec<(f64, f64)>,
}

impl BandSet {
    pub fn total_bandwidth(&self) -> f64 {
        self.bands.iter().map(|(l, u)| u - l).sum()
    }

    pub fn contains(&self, energy: f64, slack: f64) -> bool {
        self.bands
            .iter()
            .any(|(l, u)| energy >= l - slack && energy <= u + slack)
    }

    /// JSON export `{lambda, p, q, beta, bands, total_bandwidth}`.
    pub fn write_json<W: Write>(&self, mut sink: W) -> Result<()> {
        #[derive(Serialize)]
        struct BandSetJson<'a> {
            lambda: f64,
            p: i64,
            q: i64,
            beta: f64,
            bands: &'a [(f64, f64)],
            total_bandwidth: f64,
        }
        let doc = BandSetJson {
            lambda: self.lambda,
            p: self.p,
            q: self.q,
            beta: self.beta,
            bands: &self.bands,
            total_bandwidth: self.total_bandwidth(),
        };
        serde_json::to_writer_pretty(&mut sink, &doc)
            .map_err(|e| Error::InvalidArgument(format!("json write failed: {e}")))?;
        sink.write_all(b"\n")
            .map_err(|e| Error::InvalidArgument(format!("json write failed: {e}")))?;
        Ok(())
    }
}

/// Trace of the ordered one-step product over one explicit period.
pub fn discriminant_from_period(period: &[f64], energy: f64) -> f64 {
    let mut m = TransferMatrix::identity();
    for v in period {
        m = TransferMatrix::one_step(energy, *v).mul(&m);
    }
    m.trace()
}

/// Floquet discriminant of the approximant θ → p/q at one energy.
pub fn discriminant(
    lambda: f64,
    convergent: &Convergent,
    beta: &BigFixed,
    energy: f64,
) -> Result<f64> {
    let period = approximant_period(lambda, convergent, beta)?;
    Ok(discriminant_from_period(&period, energy))
}

/// Default scan resolution: 1e−4·(4+2|λ|)/q.
pub fn default_resolution(lambda: f64, q: i64) -> f64 {
    1e-4 * (4.0 + 2.0 * lambda.abs()) / q as f64
}

/// Assemble the band set of an approximant by discriminant scanning.
pub fn band_set(
    lambda: f64,
    convergent: &Convergent,
    beta: &BigFixed,
    resolution: f64,
) -> Result<BandSet> {
    let period = approximant_period(lambda, convergent, beta)?;
    let bands = bands_from_period(&period, lambda, resolution)?;
    Ok(BandSet {
        lambda,
        p: convergent.p_i64()?,
        q: convergent.q_i64()?,
        beta: beta.to_f64(),
        bands,
    })
}

/// Band assembly for an explicit period (also used with synthetic data).
pub fn bands_from_period(period: &[f64], lambda: f64, resolution: f64) -> Result<Vec<(f64, f64)>> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let radius = 2.0 + lambda.abs().max(period.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let lo = -radius - 0.5;
    let hi = radius + 0.5;
    let count = ((hi - lo) / resolution).ceil() as usize + 1;
    let step = (hi - lo) / (count - 1) as f64;
    let disc = |e: f64| discriminant_from_period(period, e);
    let samples: Vec<f64> = (0..count).map(|i| disc(lo + step * i as f64)).collect();
    let grid = |i: usize| lo + step * i as f64;

    // Crossings of the two levels, refined by bisection.
    let mut edges: Vec<f64> = Vec::new();
    for level in [2.0f64, -2.0] {
        for i in 0..count - 1 {
            let a = samples[i] - level;
            let b = samples[i + 1] - level;
            if a == 0.0 {
                edges.push(grid(i));
                continue;
            }
            if a * b < 0.0 {
                edges.push(bisect_level(&disc, grid(i), grid(i + 1), level));
            }
        }
        if samples[count - 1] == level {
            edges.push(grid(count - 1));
        }
    }

    // Extremum pass: refine interior slope reversals and flag gaps or
    // spikes that the sampling cannot see.
    for i in 1..count - 1 {
        let left = samples[i] - samples[i - 1];
        let right = samples[i + 1] - samples[i];
        if left * right < 0.0 {
            let maximum = left > 0.0;
            let (e_star, d_star) = ternary_extremum(&disc, grid(i - 1), grid(i + 1), maximum);
            let hidden = if maximum {
                d_star > 2.0 + LEVEL_MARGIN && samples[i - 1] < 2.0 && samples[i + 1] < 2.0
            } else {
                d_star < -2.0 - LEVEL_MARGIN && samples[i - 1] > -2.0 && samples[i + 1] > -2.0
            };
            if hidden {
                return Err(Error::ResolutionTooCoarse {
                    near: e_star,
                    resolution,
                });
            }
        }
    }

    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < EDGE_TOL);

    // Classify the segments between consecutive boundary points by the
    // discriminant at their midpoints, then merge adjacent in-band runs.
    let mut cuts = vec![lo];
    cuts.extend(edges.iter().copied());
    cuts.push(hi);
    let mut bands: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < EDGE_TOL {
            continue;
        }
        if disc(0.5 * (a + b)).abs() <= 2.0 {
            match bands.last_mut() {
                Some(last) if (last.1 - a).abs() < 10.0 * EDGE_TOL => last.1 = b,
                _ => bands.push((a, b)),
            }
        }
    }
    if bands.is_empty() {
        return Err(Error::EmptyBands);
    }
    Ok(bands)
}

fn bisect_level(disc: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, level: f64) -> f64 {
    let fa = disc(a) - level;
    debug_assert!(fa * (disc(b) - level) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a < EDGE_TOL {
            return mid;
        }
        let fm = disc(mid) - level;
        if fm == 0.0 {
            return mid;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn ternary_extremum(disc: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximum: bool) -> (f64, f64) {
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let f1 = disc(m1);
        let f2 = disc(m2);
        let keep_left = if maximum { f1 > f2 } else { f1 < f2 };
        if keep_left {
            b = m2;
        } else {
            a = m1;
        }
    }
    let e = 0.5 * (a + b);
    (e, disc(e))
}

/// Deterministic interior energies distributed proportionally to band
/// lengths (largest-remainder apportionment).
pub fn sample_energies(bands: &BandSet, count: usize) -> Result<Vec<f64>> {
    if bands.bands.is_empty() {
        return Err(Error::EmptyBands);
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let widths: Vec<f64> = bands.bands.iter().map(|(l, u)| u - l).collect();
    let total: f64 = widths.iter().sum();
    let mut alloc: Vec<usize> = Vec::with_capacity(widths.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(widths.len());
    let mut assigned = 0usize;
    for (i, w) in widths.iter().enumerate() {
        let share = if total > 0.0 {
            count as f64 * w / total
        } else {
            count as f64 / widths.len() as f64
        };
        let base = share.floor() as usize;
        alloc.push(base);
        assigned += base;
        remainders.push((share - base as f64, i));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for (_, i) in remainders.iter().take(count.saturating_sub(assigned)) {
        alloc[*i] += 1;
    }
    let mut out = Vec::with_capacity(count);
    for ((l, u), k) in bands.bands.iter().zip(&alloc) {
        for j in 0..*k {
            out.push(l + (u - l) * (j as f64 + 1.0) / (*k as f64 + 1.0));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Project an energy onto the approximant band set by a local scan: the
/// nearest in-band point is polished to the midpoint of its micro-band.
/// Returns None when no band intersects the scan window.
pub fn refine_energy(
    period: &[f64],
    e0: f64,
    half_window: f64,
    n_scan: usize,
) -> Option<f64> {
    let disc = |e: f64| discriminant_from_period(period, e);
    let lo = e0 - half_window;
    let step = 2.0 * half_window / n_scan as f64;
    let samples: Vec<f64> = (0..=n_scan).map(|i| disc(lo + step * i as f64)).collect();
    let inside = |d: f64| d.abs() <= 2.0;
    let nearest = (0..=n_scan)
        .filter(|&i| inside(samples[i]))
        .min_by(|&a, &b| {
            let da = (lo + step * a as f64 - e0).abs();
            let db = (lo + step * b as f64 - e0).abs();
            da.partial_cmp(&db).unwrap()
        })?;
    // Walk to the local band edges.
    let mut left = nearest;
    while left > 0 && inside(samples[left - 1]) {
        left -= 1;
    }
    let mut right = nearest;
    while right < n_scan && inside(samples[right + 1]) {
        right += 1;
    }
    let grid = |i: usize| lo + step * i as f64;
    let left_edge = if left == 0 {
        grid(0)
    } else {
        let level = if samples[left - 1] > 2.0 { 2.0 } else { -2.0 };
        bisect_level(&disc, grid(left - 1), grid(left), level)
    };
    let right_edge = if right == n_scan {
        grid(n_scan)
    } else {
        let level = if samples[right + 1] > 2.0 { 2.0 } else { -2.0 };
        bisect_level(&disc, grid(right), grid(right + 1), level)
    };
    Some(0.5 * (left_edge + right_edge))
}

/// Sample energies from a base approximant band set and refine them down
/// a ladder of deeper approximants, yielding points that stay inside the
/// band set of `target_index`. Energies whose micro-band is lost along
/// the way are dropped.
pub fn in_spectrum_energies(
    lambda: f64,
    theta: &RotationNumber,
    beta: &BigFixed,
    base_index: usize,
    target_index: usize,
    count: usize,
) -> Result<Vec<f64>> {
    if target_index < base_index {
        return Err(Error::InvalidArgument(
            "target index below base index".into(),
        ));
    }
    let base_conv = theta.convergent(base_index)?;
    let base = band_set(
        lambda,
        &base_conv,
        beta,
        default_resolution(lambda, base_conv.q_i64()?),
    )?;
    let seeds = sample_energies(&base, count)?;
    let mut ladder = Vec::new();
    let mut idx = base_index + 2;
    while idx < target_index {
        ladder.push(idx);
        idx += 2;
    }
    ladder.push(target_index);

    let periods: Vec<(i64, Vec<f64>)> = {
        let mut out = Vec::new();
        let mut q_prev = base_conv.q_i64()?;
        for &i in &ladder {
            let conv = theta.convergent(i)?;
            out.push((q_prev, approximant_period(lambda, &conv, beta)?));
            q_prev = conv.q_i64()?;
        }
        out
    };

    use rayon::prelude::*;
    let refined: Vec<Option<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut e = seed;
            for (q_prev, period) in &periods {
                let half = 2.5 / *q_prev as f64;
                match refine_energy(period, e, half, 4000)
                    .or_else(|| refine_energy(period, e, 4.0 * half, 16_000))
                {
                    Some(next) => e = next,
                    None => return None,
                }
            }
            Some(e)
        })
        .collect();
    Ok(refined.into_iter().flatten().collect())
}

/// Hausdorff distance between two finite unions of closed intervals.
pub fn hausdorff_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    fn point_distance(x: f64, set: &[(f64, f64)]) -> f64 {
        set.iter()
            .map(|(l, u)| {
                if x < *l {
                    l - x
                } else if x > *u {
                    x - u
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
    fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        // The supremum over an interval of the distance-to-b function is
        // attained at interval endpoints or at midpoints of b's gaps.
        let mut candidates: Vec<f64> = a.iter().flat_map(|(l, u)| [*l, *u]).collect();
        for w in b.windows(2) {
            let gap_mid = 0.5 * (w[0].1 + w[1].0);
            if a.iter().any(|(l, u)| gap_mid >= *l && gap_mid <= *u) {
                candidates.push(gap_mid);
            }
        }
        candidates
            .into_iter()
            .map(|x| point_distance(x, b))
            .fold(0.0f64, f64::max)
    }
    directed(a, b).max(directed(b, a))
}
