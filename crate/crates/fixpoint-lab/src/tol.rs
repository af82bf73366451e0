//! Numerical tolerances used by the library and its verification sweeps.
//!
//! Each constant records where the slack comes from so that no check carries
//! an undocumented magic number.

/// Identities that are exact in real arithmetic (Hilbert two-point identity,
/// closed-form orbit values, trace recomputation). f64 rounding in a handful
/// of multiply-adds stays far below this.
pub const EXACT_IDENTITY: f64 = 1e-12;

/// Slack added to certified inequality checks whose two sides are computed
/// through different floating-point routes (probe vs schedule, chain bound vs
/// direct iteration, propagation bounds).
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// Membership slack for feasible-set containment checks. Projections and
/// convex combinations land on boundaries up to rounding.
pub const MEMBERSHIP: f64 = 1e-9;

/// Convergence tolerance for the iterative convex-hull projection.
pub const HULL_PROJECTION: f64 = 1e-10;

/// Radius agreement between the exact enclosing-ball path and brute force.
pub const ENCLOSING_BALL: f64 = 1e-9;

/// Tail agreement demanded of an `Explicit` schedule's stored values against
/// its declared limit.
pub const SCHEDULE_TAIL: f64 = 1e-9;

/// Divergence guard for iteration engines: a run is flagged as diverged when
/// an iterate's norm exceeds this multiple of the domain diameter.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Retry budget per accepted sample in rejection sampling.
pub const SAMPLING_RETRIES: usize = 10_000;
