//! Numerical laboratory for one-dimensional quasiperiodic Schrödinger
//! operators (Hφ)(n) = φ(n+1) + φ(n−1) + V(n)φ(n) with Sturmian
//! potentials V(n) = λ·χ_{[1−θ,1)}(nθ + β mod 1).
//!
//! The crate covers the full desk-scale toolchain:
//!
//! - [`cfrac`] — continued fractions of rotation numbers, convergents
//!   p_n/q_n, and Diophantine diagnostics (bounded density, q_n ≤ Bⁿ);
//! - [`sturmian`] — potential generation over integer windows with
//!   guarded boundary classification, plus word combinatorics;
//! - [`transfer`] — solutions of the difference equation, SL(2,ℝ)
//!   transfer products, interpolated truncated norms, growth-exponent
//!   fits;
//! - [`weyl`] — half-line Weyl functions m±(z) by continued fraction,
//!   the whole-line 2×2 matrix M and its trace, the φ-Möbius family and
//!   its closed-form supremum;
//! - [`jl`] — the norm-scale L_φ(ε), the two-sided norm-ratio inequality,
//!   dimension functions, and log-Lipschitz continuity fits;
//! - [`spectrum`] — periodic-approximant band sets via the Floquet
//!   discriminant, band sampling, and in-spectrum energy refinement;
//! - [`dynamics`] — Chebyshev time propagation on finite boxes, survival
//!   probability, position moments, time averages, log-scaling fits.
//!
//! Everything is pure and re-entrant; parameter grids parallelize with
//! rayon at the call sites.

pub mod cfrac;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod highprec;
pub mod jl;
pub mod spectrum;
pub mod sturmian;
pub mod transfer;
pub mod weyl;

pub use cfrac::{Convergent, RotationNumber};
pub use error::{Error, Result};
pub use highprec::{BigFixed, DEFAULT_PRECISION};
pub use jl::DimensionFunction;
pub use spectrum::BandSet;
pub use sturmian::{PotentialSpec, PotentialWindow};
pub use transfer::{PhiPair, SolutionTrajectory, TransferMatrix};
pub use weyl::HerglotzValue;
