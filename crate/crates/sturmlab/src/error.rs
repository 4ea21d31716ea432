//! Error taxonomy shared by every module.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Guard digits are insufficient to resolve a quantity (continued
    /// fraction term, boundary classification) at the requested site.
    #[error("precision exhausted: {context}")]
    PrecisionExhausted { context: String },

    /// A continued-fraction expansion terminated because the input is
    /// rational; carries the terms extracted before termination.
    #[error("rational input: expansion terminated after {} terms", terms.len())]
    RationalInput { terms: Vec<u64> },

    /// Malformed numeric input (parse failures, zero denominators).
    #[error("invalid number: {0}")]
    InvalidNumber(String),

    /// Generic precondition violation with the offending parameter.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Window shorter than an operation requires.
    #[error("window too short: need {needed} sites, have {available}")]
    WindowTooShort { needed: usize, available: usize },

    /// A trajectory or matrix product exceeded the representable range.
    #[error("overflow at step {reached} (|value| > {limit:e})")]
    Overflow { reached: usize, limit: f64 },

    /// Requested length exceeds the stored trajectory.
    #[error("L = {requested} out of range (trajectory supports L <= {max})")]
    OutOfRange { requested: f64, max: f64 },

    /// A regression lacked the span or sample count needed for a fit.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// m-function continued fraction failed to meet tolerance at depth cap.
    #[error("no convergence at depth {depth}: last delta {last_delta:e} > tol {tol:e}")]
    NoConvergence { depth: usize, last_delta: f64, tol: f64 },

    /// Evaluation point not in the open upper half-plane.
    #[error("invalid z: {0}")]
    InvalidZ(String),

    /// `1 - m+ m-` too close to zero for the whole-line assembly.
    #[error("near-singular whole-line assembly: |1 - m+ m-| = {magnitude:e}")]
    NearSingular { magnitude: f64 },

    /// Norm product never reached its target below the length cap.
    #[error("cap exceeded at L = {cap}: product reached {attained:e}, target {target:e}")]
    CapExceeded { cap: f64, attained: f64, target: f64 },

    /// Dimension function evaluated outside its domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Band scan too coarse to separate adjacent band edges.
    #[error("resolution too coarse near E = {near}: refine below {resolution:e}")]
    ResolutionTooCoarse { near: f64, resolution: f64 },

    /// Band set contains no bands.
    #[error("empty band set")]
    EmptyBands,

    /// Wavepacket mass reached the box edge; later times are invalid.
    #[error("boundary contamination at t = {time}: edge mass {mass:e}")]
    BoundaryContamination { time: f64, mass: f64 },

    /// Quadrature samples leave a gap larger than the configured fraction.
    #[error("coverage gap: spacing {gap} exceeds {allowed} on [0, {horizon}]")]
    CoverageGap { gap: f64, allowed: f64, horizon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
