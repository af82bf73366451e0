//! Asymptotic radius and center machinery over orbit tails.
//!
//! The tail-window stand-in for `limsup_n ‖q_n − q‖` is the max distance from
//! `q` to a finite window of orbit points. Its unconstrained minimiser in the
//! Euclidean case is the Chebyshev center of the window (computed exactly by
//! a Welzl-style recursion in low dimension), and the constrained minimiser
//! over a feasible set is found by a projected subgradient descent that the
//! enclosing-ball oracle cross-checks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::operators::OperatorSpec;
use crate::space::{FeasibleSet, LpVec};
use crate::{Error, Result};

/// A finite window of an orbit: the points `Tⁿ q₀` for
/// `n = burn_in … burn_in + window − 1`.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    points: Vec<LpVec>,
    burn_in: usize,
}

impl OrbitSample {
    pub fn from_orbit(
        op: &OperatorSpec,
        q0: &LpVec,
        burn_in: usize,
        window: usize,
    ) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParam("window must hold at least one point".into()));
        }
        let mut current = op.iterate_n(q0, burn_in)?;
        let mut points = Vec::with_capacity(window);
        for _ in 0..window - 1 {
            let next = op.apply(&current)?;
            points.push(current);
            current = next;
        }
        points.push(current);
        Ok(Self { points, burn_in })
    }

    /// Wraps an explicit point list (all sharing dimension and exponent).
    pub fn from_points(points: Vec<LpVec>, burn_in: usize) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParam("window must hold at least one point".into()))?;
        for p in &points[1..] {
            if p.dim() != first.dim() {
                return Err(Error::DimensionMismatch { left: first.dim(), right: p.dim() });
            }
            if p.p_exp() != first.p_exp() {
                return Err(Error::ExponentMismatch { left: first.p_exp(), right: p.p_exp() });
            }
        }
        Ok(Self { points, burn_in })
    }

    pub fn points(&self) -> &[LpVec] {
        &self.points
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn window(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn p_exp(&self) -> f64 {
        self.points[0].p_exp()
    }
}

/// Tail-window type function: `max_{x in window} ‖x − q‖`.
pub fn type_function(sample: &OrbitSample, q: &LpVec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in sample.points() {
        worst = worst.max(x.distance(q)?);
    }
    Ok(worst)
}

/// Farthest sample point from `q`; ties break to the lowest index.
fn farthest_point<'a>(sample: &'a OrbitSample, q: &LpVec) -> Result<(&'a LpVec, f64)> {
    let mut best = (&sample.points()[0], f64::NEG_INFINITY);
    for x in sample.points() {
        let d = x.distance(q)?;
        if d > best.1 {
            best = (x, d);
        }
    }
    Ok(best)
}

/// Dimension cutoff for the exact recursive enclosing-ball path.
pub const EXACT_BALL_MAX_DIM: usize = 8;

/// Smallest ball enclosing the points (Euclidean only).
///
/// Up to [`EXACT_BALL_MAX_DIM`] dimensions this runs a randomized Welzl-style
/// recursion and is exact up to roundoff; above that a point-dragging
/// iteration supplies an approximation with no exactness claim.
pub fn smallest_enclosing_ball(points: &[LpVec]) -> Result<(LpVec, f64)> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParam("enclosing ball needs at least one point".into()))?;
    if first.p_exp() != 2.0 {
        return Err(Error::NotHilbert { got: first.p_exp() });
    }
    let dim = first.dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
        }
    }
    // Exact duplicates contribute nothing and break the boundary solves.
    let mut unique: Vec<&LpVec> = Vec::with_capacity(points.len());
    for p in points {
        if !unique.iter().any(|u| u.coords() == p.coords()) {
            unique.push(p);
        }
    }
    if dim <= EXACT_BALL_MAX_DIM {
        let (center, radius) = welzl_ball(&unique, dim)?;
        Ok((LpVec::new(center, 2.0)?, radius))
    } else {
        badoiu_clarkson(&unique)
    }
}

struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    fn empty() -> Self {
        Self { center: Vec::new(), radius: -1.0 }
    }

    fn covers(&self, p: &LpVec) -> bool {
        if self.radius < 0.0 {
            return false;
        }
        let d2: f64 = self
            .center
            .iter()
            .zip(p.coords())
            .map(|(c, x)| (c - x) * (c - x))
            .sum();
        d2.sqrt() <= self.radius + 1e-10 * (1.0 + self.radius)
    }
}

fn welzl_ball(points: &[&LpVec], dim: usize) -> Result<(Vec<f64>, f64)> {
    // Fixed shuffle seed keeps the whole pipeline reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eb);
    let mut order: Vec<&LpVec> = points.to_vec();
    order.shuffle(&mut rng);
    let mut boundary: Vec<&LpVec> = Vec::with_capacity(dim + 1);
    let ball = welzl_recurse(&order, order.len(), &mut boundary, dim);
    if ball.radius < 0.0 {
        // Single input point: the recursion bottoms out before any boundary
        // forms only when there is nothing to cover.
        let p = points[0];
        return Ok((p.coords().to_vec(), 0.0));
    }
    Ok((ball.center, ball.radius))
}

fn welzl_recurse<'a>(
    points: &[&'a LpVec],
    n: usize,
    boundary: &mut Vec<&'a LpVec>,
    dim: usize,
) -> Ball {
    if n == 0 || boundary.len() == dim + 1 {
        return circumscribe(boundary);
    }
    let p = points[n - 1];
    let ball = welzl_recurse(points, n - 1, boundary, dim);
    if ball.covers(p) {
        return ball;
    }
    boundary.push(p);
    let ball = welzl_recurse(points, n - 1, boundary, dim);
    boundary.pop();
    ball
}

/// Minimal ball with every boundary point on its sphere: the center sits in
/// the boundary's affine hull, found from the Gram system of edge vectors.
fn circumscribe(boundary: &[&LpVec]) -> Ball {
    match boundary.len() {
        0 => Ball::empty(),
        1 => Ball { center: boundary[0].coords().to_vec(), radius: 0.0 },
        _ => {
            let base = boundary[0].coords();
            let edges: Vec<Vec<f64>> = boundary[1..]
                .iter()
                .map(|p| p.coords().iter().zip(base).map(|(a, b)| a - b).collect())
                .collect();
            let k = edges.len();
            let mut gram = vec![vec![0.0; k + 1]; k];
            for i in 0..k {
                for j in 0..k {
                    gram[i][j] =
                        2.0 * edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum::<f64>();
                }
                gram[i][k] = edges[i].iter().map(|e| e * e).sum();
            }
            let Some(lambda) = crate::space::solve_dense(&mut gram) else {
                return Ball::empty(); // affinely dependent boundary; caller keeps searching
            };
            let mut center = base.to_vec();
            for (l, edge) in lambda.iter().zip(&edges) {
                for (c, e) in center.iter_mut().zip(edge) {
                    *c += l * e;
                }
            }
            let radius = boundary
                .iter()
                .map(|p| {
                    p.coords()
                        .iter()
                        .zip(&center)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            Ball { center, radius }
        }
    }
}

/// Point-dragging approximation for dimensions past the exact path: start at
/// the mean and repeatedly move a shrinking fraction toward the farthest
/// point.
fn badoiu_clarkson(points: &[&LpVec]) -> Result<(LpVec, f64)> {
    let dim = points[0].dim();
    let mut center = vec![0.0; dim];
    for p in points {
        for (c, x) in center.iter_mut().zip(p.coords()) {
            *c += x / points.len() as f64;
        }
    }
    let iters = 5_000;
    for k in 1..=iters {
        let mut far = 0;
        let mut far_d2 = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d2: f64 = p
                .coords()
                .iter()
                .zip(&center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            if d2 > far_d2 {
                far_d2 = d2;
                far = i;
            }
        }
        let step = 1.0 / (k as f64 + 1.0);
        for (c, x) in center.iter_mut().zip(points[far].coords()) {
            *c += step * (x - *c);
        }
    }
    let center = LpVec::new(center, 2.0)?;
    let mut radius: f64 = 0.0;
    for p in points {
        radius = radius.max(p.distance(&center)?);
    }
    Ok((center, radius))
}

/// Solver knobs for the constrained center search.
#[derive(Debug, Clone, Copy)]
pub struct CenterSolver {
    /// Initial step; defaults to half the feasible set's diameter.
    pub step0: Option<f64>,
    /// Total subgradient-step budget.
    pub iters: usize,
    /// Target accuracy; also the threshold the certified gap is judged by.
    pub tol: f64,
}

impl Default for CenterSolver {
    fn default() -> Self {
        Self { step0: None, iters: 20_000, tol: 1e-6 }
    }
}

/// Approximate constrained minimiser of the type function with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CenterResult {
    pub center: LpVec,
    pub radius: f64,
    pub iterations: usize,
    /// Optimality diagnostic: last-round improvement plus the final step
    /// size. Values above the solver tolerance flag an exhausted budget.
    pub certified_gap: f64,
}

/// Projected subgradient descent for `min_{q ∈ Q} max_i ‖x_i − q‖`.
///
/// Steps start at `step0` and halve between rounds until they fall below the
/// tolerance floor; each step moves against the unit direction toward the
/// farthest point (lowest index on ties) and projects back onto `Q`. The best
/// visited point is returned, with the radius recomputed at it exactly.
pub fn asymptotic_center(
    sample: &OrbitSample,
    q_set: &FeasibleSet,
    solver: &CenterSolver,
) -> Result<CenterResult> {
    if !q_set.is_convex() {
        return Err(Error::NonConvexDomain);
    }
    if q_set.dim() != sample.dim() {
        return Err(Error::DimensionMismatch { left: q_set.dim(), right: sample.dim() });
    }
    if solver.iters == 0 {
        return Err(Error::InvalidParam("solver budget must be at least 1".into()));
    }
    if !(solver.tol.is_finite() && solver.tol > 0.0) {
        return Err(Error::InvalidParam(format!("solver tol must be > 0, got {}", solver.tol)));
    }
    let step0 = match solver.step0 {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return Err(Error::InvalidParam(format!("step0 must be > 0, got {s}"))),
        None => q_set.diameter() / 2.0,
    };

    let mut mean = LpVec::zero(sample.dim(), sample.p_exp())?;
    for p in sample.points() {
        mean = mean.add(&p.scale(1.0 / sample.window() as f64))?;
    }
    let mut q = q_set.project(&mean)?;
    let mut best_q = q.clone();
    let mut best_f = type_function(sample, &q)?;

    let inner = (solver.iters / 32).clamp(50, 2_000).min(solver.iters);
    let floor = solver.tol / 8.0;
    let mut used = 0;
    let mut step = step0;
    let mut last_round_gain = 0.0;
    let mut last_step = 0.0;
    while used < solver.iters && step >= floor && best_f > 0.0 {
        let round_start_best = best_f;
        for _ in 0..inner.min(solver.iters - used) {
            let (far, dist) = farthest_point(sample, &q)?;
            if dist == 0.0 {
                break;
            }
            let grad = p_norm_gradient(&q, far)?;
            q = q_set.project(&q.sub(&grad.scale(step))?)?;
            let f = type_function(sample, &q)?;
            if f < best_f {
                best_f = f;
                best_q = q.clone();
            }
            used += 1;
        }
        last_round_gain = round_start_best - best_f;
        last_step = step;
        step /= 2.0;
        // restart each round from the incumbent
        q = best_q.clone();
    }

    Ok(CenterResult {
        radius: type_function(sample, &best_q)?,
        center: best_q,
        iterations: used,
        certified_gap: last_round_gain + last_step,
    })
}

/// Gradient of `q ↦ ‖q − x‖_p` (the max-distance subgradient direction). For
/// `p = 2` this is the unit vector from `x` toward `q`.
fn p_norm_gradient(q: &LpVec, x: &LpVec) -> Result<LpVec> {
    let diff = q.sub(x)?;
    let norm = diff.norm();
    if norm == 0.0 {
        return LpVec::zero(q.dim(), q.p_exp());
    }
    let p = q.p_exp();
    if p == 2.0 {
        return Ok(diff.scale(1.0 / norm));
    }
    let coords = diff
        .coords()
        .iter()
        .map(|d| d.signum() * (d.abs() / norm).powf(p - 1.0))
        .collect();
    LpVec::new(coords, p)
}

/// Outcome of the asymptotic-radius hypothesis gate.
#[derive(Debug, Clone, Serialize)]
pub struct GateResult {
    pub passes: bool,
    pub rho_hat: f64,
    pub center: CenterResult,
}

/// Estimates the tail radius over `Q` and compares it against the locality
/// radius `r`. The estimate is the windowed stand-in for the true asymptotic
/// radius; interpretation stays with the experimenter.
pub fn radius_gate(
    sample: &OrbitSample,
    q_set: &FeasibleSet,
    r: f64,
    solver: &CenterSolver,
) -> Result<GateResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParam(format!("gate radius must be > 0, got {r}")));
    }
    let center = asymptotic_center(sample, q_set, solver)?;
    Ok(GateResult { passes: center.radius < r, rho_hat: center.radius, center })
}
