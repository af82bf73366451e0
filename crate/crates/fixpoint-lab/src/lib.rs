//! fixpoint-lab: a desk-scale numerical laboratory for fixed-point iteration
//! of uniformly local (asymptotically) nonexpansive and contractive self-maps
//! on truncated sequence spaces.
//!
//! The crate is organised around five subsystems plus a batch runner:
//!
//! * [`space`] — truncated `l^p` vectors, feasible sets with projections, and
//!   the exact Hilbert two-point convexity identity.
//! * [`operators`] — the operator abstraction (self-map + locality radius +
//!   per-iterate Lipschitz schedule), a shift-style quadratic example map with
//!   closed-form orbits, and empirical Lipschitz probing.
//! * [`iterate`] — Picard and Schu-type iteration engines, residual
//!   diagnostics, and finite-chain contraction bounds.
//! * [`center`] — asymptotic radius/center estimation over orbit tails:
//!   smallest enclosing balls and a projected-subgradient minimax solver.
//! * [`verify`] — property sweeps that turn checkable inequalities into
//!   self-certifying reports.
//! * [`cli`] — config-driven experiment runner with CSV/JSON emission.
//!
//! Everything is plain immutable data; operations are pure and deterministic
//! given their seeds, so values can be shared freely across threads.

pub mod center;
pub mod cli;
pub mod iterate;
pub mod operators;
pub mod space;
pub mod tol;
pub mod verify;

pub use center::{
    asymptotic_center, radius_gate, smallest_enclosing_ball, CenterResult, OrbitSample,
};
pub use iterate::{picard, schu, IterationTrace, StepSchedule, StopReason};
pub use operators::{BetaSchedule, ExampleParams, OperatorSpec};
pub use space::{FeasibleSet, LpVec};

/// Errors shared across the crate's subsystems.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("norm exponent mismatch: {left} vs {right}")]
    ExponentMismatch { left: f64, right: f64 },
    #[error("point lies outside the operator domain (distance to set {distance:.3e})")]
    OutsideDomain { distance: f64 },
    #[error("projection is only defined for convex feasible sets")]
    NonConvexProjection,
    #[error("operation requires a convex feasible set")]
    NonConvexDomain,
    #[error("operation requires norm exponent 2, got {got}")]
    NotHilbert { got: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("schedule index {index} is outside the stored coefficient range (max {max})")]
    ScheduleRange { index: usize, max: usize },
    #[error("schedule limit {limit} is not a contraction (needs limit < 1)")]
    ScheduleNotContractive { limit: f64 },
    #[error("domain sampling failed after {retries} rejections")]
    SamplingFailed { retries: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("unknown operator {0:?}; run `fixpoint-lab list` for the catalog")]
    UnknownOperator(String),
    #[error("unknown suite {0:?}; run `fixpoint-lab list` for the catalog")]
    UnknownSuite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
