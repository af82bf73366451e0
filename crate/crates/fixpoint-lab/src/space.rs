//! Truncated sequence-space arithmetic, feasible sets, and the Hilbert
//! two-point convexity identity.
//!
//! Infinite sequences are represented by their first `D` coordinates; every
//! construction used downstream touches only finitely many coordinates per
//! iterate, so the truncation is the carrier, not an approximation layer.

use crate::tol;
use crate::{Error, Result};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// A point of a truncated `l^p` space: finite coordinates plus the norm
/// exponent they are measured with.
///
/// Two vectors may only be combined when they share both dimension and
/// exponent; binary operations enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct LpVec {
    coords: Vec<f64>,
    p_exp: f64,
}

impl LpVec {
    pub fn new(coords: Vec<f64>, p_exp: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParam("vector needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParam("vector coordinates must be finite".into()));
        }
        if !(p_exp.is_finite() && p_exp >= 1.0) {
            return Err(Error::InvalidParam(format!("norm exponent must be >= 1, got {p_exp}")));
        }
        Ok(Self { coords, p_exp })
    }

    pub fn zero(dim: usize, p_exp: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], p_exp)
    }

    /// Standard basis vector `e_i` (1-based index, matching sequence-space
    /// notation).
    pub fn basis(dim: usize, i: usize, p_exp: f64) -> Result<Self> {
        if i == 0 || i > dim {
            return Err(Error::InvalidParam(format!("basis index {i} outside 1..={dim}")));
        }
        let mut coords = vec![0.0; dim];
        coords[i - 1] = 1.0;
        Self::new(coords, p_exp)
    }

    /// Builds a vector from a (possibly shorter) coordinate prefix, padding
    /// with zeros up to `dim`. Coordinates beyond `dim` are rejected rather
    /// than silently dropped.
    pub fn from_prefix(prefix: &[f64], dim: usize, p_exp: f64) -> Result<Self> {
        if prefix.len() > dim {
            return Err(Error::InvalidParam(format!(
                "{} coordinates exceed the configured dimension {dim}",
                prefix.len()
            )));
        }
        let mut coords = prefix.to_vec();
        coords.resize(dim, 0.0);
        Self::new(coords, p_exp)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn p_exp(&self) -> f64 {
        self.p_exp
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate by 1-based index.
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i - 1]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        if self.p_exp != other.p_exp {
            return Err(Error::ExponentMismatch { left: self.p_exp, right: other.p_exp });
        }
        Ok(())
    }

    /// The `l^p` norm `(Σ|v_i|^p)^(1/p)`; zero exactly on the zero vector.
    /// Coordinates are scaled by their max before exponentiation so that the
    /// powers neither underflow nor overflow.
    pub fn norm(&self) -> f64 {
        if self.p_exp == 1.0 {
            return self.coords.iter().map(|c| c.abs()).sum();
        }
        let peak = self.coords.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        if self.p_exp == 2.0 {
            let sum: f64 = self
                .coords
                .iter()
                .map(|c| {
                    let s = c / peak;
                    s * s
                })
                .sum();
            peak * sum.sqrt()
        } else {
            let sum: f64 = self.coords.iter().map(|c| (c.abs() / peak).powf(self.p_exp)).sum();
            peak * sum.powf(1.0 / self.p_exp)
        }
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(Self { coords, p_exp: self.p_exp })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        Ok(Self { coords, p_exp: self.p_exp })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| factor * c).collect(),
            p_exp: self.p_exp,
        }
    }

    /// Euclidean inner product. Exposed for the Hilbert-specific machinery in
    /// [`crate::center`]; meaningful as an inner product only when `p_exp == 2`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum())
    }

    /// Largest coordinatewise absolute difference; handy for oracle checks.
    pub fn max_coord_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Vectors serialize as bare JSON arrays of numbers; the exponent travels in
/// the surrounding configuration.
impl Serialize for LpVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coords.len()))?;
        for c in &self.coords {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

/// `c·p + (1−c)·q`, coordinatewise. `c` must lie in `[0, 1]`.
pub fn convex_combination(c: f64, p: &LpVec, q: &LpVec) -> Result<LpVec> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParam(format!("combination weight {c} outside [0, 1]")));
    }
    p.scale(c).add(&q.scale(1.0 - c))
}

/// Two sides of the Hilbert two-point inequality, reported as computed.
///
/// `gap = rhs − lhs`; with exponent 2 the inequality is an identity with
/// `φ(t) = t²`, so the gap is zero up to rounding.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulusGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Evaluates `‖cp+(1−c)q‖²` against `c‖p‖² + (1−c)‖q‖² − c(1−c)‖p−q‖²`.
///
/// Only the Hilbert case is supported: for other exponents no closed modulus
/// is wired in, and the check is rejected rather than approximated.
pub fn modulus_check(p: &LpVec, q: &LpVec, c: f64) -> Result<ModulusGap> {
    if p.p_exp() != 2.0 {
        return Err(Error::NotHilbert { got: p.p_exp() });
    }
    let combo = convex_combination(c, p, q)?;
    let lhs = combo.norm().powi(2);
    let rhs = c * p.norm().powi(2) + (1.0 - c) * q.norm().powi(2)
        - c * (1.0 - c) * p.distance(q)?.powi(2);
    Ok(ModulusGap { lhs, rhs, gap: rhs - lhs })
}

/// The feasible domain `Q`: a ball, a box, a convex hull of finitely many
/// points, or (the one non-convex variant) a ball together with finitely many
/// isolated extra points.
#[derive(Debug, Clone)]
pub enum FeasibleSet {
    Ball { center: LpVec, radius: f64 },
    Box { lower: LpVec, upper: LpVec },
    Hull { points: Vec<LpVec> },
    BallPlusPoints { center: LpVec, radius: f64, extras: Vec<LpVec> },
}

impl FeasibleSet {
    pub fn ball(center: LpVec, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParam(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn bounding_box(lower: LpVec, upper: LpVec) -> Result<Self> {
        lower.check_compatible(&upper)?;
        if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParam("box lower bound exceeds upper bound".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn hull(points: Vec<LpVec>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParam("hull needs at least one point".into()))?;
        for p in &points[1..] {
            first.check_compatible(p)?;
        }
        Ok(Self::Hull { points })
    }

    pub fn ball_plus_points(center: LpVec, radius: f64, extras: Vec<LpVec>) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParam(format!("ball radius must be > 0, got {radius}")));
        }
        for e in &extras {
            center.check_compatible(e)?;
        }
        Ok(Self::BallPlusPoints { center, radius, extras })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.dim(),
            Self::Box { lower, .. } => lower.dim(),
            Self::Hull { points } => points[0].dim(),
            Self::BallPlusPoints { center, .. } => center.dim(),
        }
    }

    pub fn p_exp(&self) -> f64 {
        match self {
            Self::Ball { center, .. } => center.p_exp(),
            Self::Box { lower, .. } => lower.p_exp(),
            Self::Hull { points } => points[0].p_exp(),
            Self::BallPlusPoints { center, .. } => center.p_exp(),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::BallPlusPoints { .. })
    }

    /// Membership with slack [`tol::MEMBERSHIP`], so boundary points produced
    /// by projections and convex combinations do not flap.
    pub fn contains(&self, v: &LpVec) -> bool {
        self.distance_to_set(v).map(|d| d <= tol::MEMBERSHIP).unwrap_or(false)
    }

    /// Distance from `v` to the set (0 inside). For hulls this runs the same
    /// iterative minimisation as [`FeasibleSet::project`].
    pub fn distance_to_set(&self, v: &LpVec) -> Result<f64> {
        match self {
            Self::Ball { center, radius } => Ok((v.distance(center)? - radius).max(0.0)),
            Self::Box { lower, upper } => {
                lower.check_compatible(v)?;
                let clamped = clamp_to_box(v, lower, upper);
                v.distance(&clamped)
            }
            Self::Hull { points } => {
                points[0].check_compatible(v)?;
                let proj = project_onto_hull(points, v)?;
                v.distance(&proj)
            }
            Self::BallPlusPoints { center, radius, extras } => {
                let mut best = (v.distance(center)? - radius).max(0.0);
                for e in extras {
                    best = best.min(v.distance(e)?);
                }
                Ok(best)
            }
        }
    }

    /// Nearest point of the set (convex variants only). Idempotent, and the
    /// identity on members.
    ///
    /// Box and hull projections are exact Euclidean projections for any
    /// exponent; the ball projection is the radial retraction in the set's
    /// own norm, which coincides with the Euclidean projection when
    /// `p_exp == 2`.
    pub fn project(&self, v: &LpVec) -> Result<LpVec> {
        match self {
            Self::Ball { center, radius } => {
                center.check_compatible(v)?;
                let offset = v.sub(center)?;
                let dist = offset.norm();
                if dist <= *radius {
                    Ok(v.clone())
                } else {
                    center.add(&offset.scale(radius / dist))
                }
            }
            Self::Box { lower, upper } => {
                lower.check_compatible(v)?;
                Ok(clamp_to_box(v, lower, upper))
            }
            Self::Hull { points } => {
                points[0].check_compatible(v)?;
                if self.contains_hull_member(v)? {
                    return Ok(v.clone());
                }
                project_onto_hull(points, v)
            }
            Self::BallPlusPoints { .. } => Err(Error::NonConvexProjection),
        }
    }

    fn contains_hull_member(&self, v: &LpVec) -> Result<bool> {
        match self {
            Self::Hull { points } => {
                let proj = project_onto_hull(points, v)?;
                Ok(v.distance(&proj)? <= tol::MEMBERSHIP)
            }
            _ => Ok(false),
        }
    }

    /// Exact for balls and boxes; max pairwise vertex distance for hulls.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => 2.0 * radius,
            Self::Box { lower, upper } => upper.sub(lower).expect("validated at construction").norm(),
            Self::Hull { points } => max_pairwise_distance(points),
            Self::BallPlusPoints { center, radius, extras } => {
                // sup distance between the ball and an isolated point e is
                // ‖e − c‖ + radius.
                let mut d = 2.0 * radius;
                for e in extras {
                    d = d.max(e.distance(center).expect("validated at construction") + radius);
                }
                d.max(max_pairwise_distance(extras))
            }
        }
    }
}

fn clamp_to_box(v: &LpVec, lower: &LpVec, upper: &LpVec) -> LpVec {
    let coords = v
        .coords()
        .iter()
        .zip(lower.coords().iter().zip(upper.coords()))
        .map(|(c, (l, u))| c.max(*l).min(*u))
        .collect();
    LpVec { coords, p_exp: v.p_exp() }
}

/// Gaussian elimination with partial pivoting on an augmented k×(k+1)
/// system; `None` on (near-)singular input.
pub(crate) fn solve_dense(system: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let k = system.len();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|a, b| system[*a][col].abs().total_cmp(&system[*b][col].abs()))
            .unwrap();
        if system[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        system.swap(col, pivot_row);
        for row in col + 1..k {
            let factor = system[row][col] / system[col][col];
            let (pivot, rest) = system.split_at_mut(col + 1);
            for (a, b) in rest[row - col - 1][col..].iter_mut().zip(&pivot[col][col..]) {
                *a -= factor * b;
            }
        }
    }
    let mut solution = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = system[row][k];
        for col in row + 1..k {
            acc -= system[row][col] * solution[col];
        }
        solution[row] = acc / system[row][row];
    }
    Some(solution)
}

fn max_pairwise_distance(points: &[LpVec]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.distance(b).expect("validated at construction"));
        }
    }
    best
}

/// Euclidean projection onto `conv(points)`: pairwise weight transfer
/// (Frank–Wolfe steps paired with away steps over the simplex of vertex
/// weights) locates the optimal face, then the face's normal equations are
/// solved exactly and certified through the optimality conditions.
fn project_onto_hull(points: &[LpVec], v: &LpVec) -> Result<LpVec> {
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    // Start from the nearest vertex.
    let mut weights = vec![0.0; points.len()];
    let mut nearest = 0;
    let mut nearest_dist = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = v.distance(p)?;
        if d < nearest_dist {
            nearest_dist = d;
            nearest = i;
        }
    }
    weights[nearest] = 1.0;
    let mut x = points[nearest].clone();

    let scale = 1.0 + nearest_dist + max_pairwise_distance(points);
    let gap_tol = tol::HULL_PROJECTION * scale * scale;
    let max_iters = 50_000;

    for _ in 0..max_iters {
        let residual = x.sub(v)?;
        // Gradient of ½‖x − v‖² in the weight of vertex i is ⟨x − v, p_i⟩.
        let mut toward = 0;
        let mut toward_score = f64::INFINITY;
        let mut away = 0;
        let mut away_score = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let score = residual.dot(p)?;
            if score < toward_score {
                toward_score = score;
                toward = i;
            }
            if weights[i] > 0.0 && score > away_score {
                away_score = score;
                away = i;
            }
        }
        // Frank–Wolfe dual gap certifies near-optimality over the hull.
        let gap = residual.dot(&x)? - toward_score;
        if gap <= gap_tol {
            break;
        }
        let direction = points[toward].sub(&points[away])?;
        let denom = direction.dot(&direction)?;
        if denom == 0.0 {
            break;
        }
        let step = (-residual.dot(&direction)? / denom).clamp(0.0, weights[away]);
        if step == 0.0 {
            break;
        }
        weights[toward] += step;
        weights[away] -= step;
        x = x.add(&direction.scale(step))?;
    }

    if let Some(polished) = polish_on_active_face(points, v, &weights)? {
        if v.distance(&polished)? <= v.distance(&x)? + gap_tol {
            return Ok(polished);
        }
    }
    Ok(x)
}

/// Exact minimisation over the face the iterative phase settled on: solve the
/// affine least-squares system on the active vertices, dropping vertices that
/// come back with negative weight, and accept the point only if it satisfies
/// the projection optimality test against every vertex.
fn polish_on_active_face(
    points: &[LpVec],
    v: &LpVec,
    weights: &[f64],
) -> Result<Option<LpVec>> {
    let mut active: Vec<usize> =
        (0..points.len()).filter(|i| weights[*i] > 1e-10).collect();
    if active.is_empty() {
        return Ok(None);
    }
    let scale = 1.0 + max_pairwise_distance(points) + v.norm();
    loop {
        let base = &points[active[0]];
        let candidate = if active.len() == 1 {
            base.clone()
        } else {
            let edges: Vec<LpVec> = active[1..]
                .iter()
                .map(|i| points[*i].sub(base))
                .collect::<Result<_>>()?;
            let rhs_vec = v.sub(base)?;
            let k = edges.len();
            let mut system = vec![vec![0.0; k + 1]; k];
            for i in 0..k {
                for j in 0..k {
                    system[i][j] = edges[i].dot(&edges[j])?;
                }
                system[i][k] = edges[i].dot(&rhs_vec)?;
            }
            match solve_dense(&mut system) {
                Some(mu) => {
                    let tail_sum: f64 = mu.iter().sum();
                    let face_weights: Vec<f64> =
                        std::iter::once(1.0 - tail_sum).chain(mu.iter().copied()).collect();
                    if let Some(worst) = face_weights
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| **w < -1e-9)
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i)
                    {
                        active.remove(worst);
                        continue;
                    }
                    let mut x = base.clone();
                    for (mu_i, edge) in mu.iter().zip(&edges) {
                        x = x.add(&edge.scale(*mu_i))?;
                    }
                    x
                }
                None => {
                    // dependent edge directions; retry on a smaller face
                    if active.len() <= 2 {
                        return Ok(None);
                    }
                    active.pop();
                    continue;
                }
            }
        };
        // Optimality over the whole hull: the residual must not point toward
        // any vertex.
        let residual = v.sub(&candidate)?;
        for p in points {
            if residual.dot(&p.sub(&candidate)?)? > 1e-11 * scale * scale {
                return Ok(None);
            }
        }
        return Ok(Some(candidate));
    }
}
