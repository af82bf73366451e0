//! Self-maps with locality radii and per-iterate Lipschitz schedules.
//!
//! The operator abstraction bundles a map `T : Q → Q` with the radius `r`
//! inside which pairs are compared and a schedule `β_n` bounding
//! `‖Tⁿu − Tⁿv‖ / ‖u − v‖` for pairs with `‖u − v‖ < r`. The flagship example
//! is a quadratic-then-shift map on the truncated `l²` ball with an isolated
//! extra point, for which the n-fold orbit of that point has a closed form.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::space::{FeasibleSet, LpVec};
use crate::tol;
use crate::{Error, Result};

/// Largest f64 strictly below 1. The default coefficient generator rounds to
/// 1.0 in f64 past index ~53, but stored coefficients must stay below 1.
const B_SUP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Coefficients are materialised at least this far so that schedule products
/// (which consume odd indices up to `2n+1`) are available for `n ≤ 64`.
const B_MIN_LEN_INDEX: usize = 129;

/// Parameters of the example map: the truncation dimension `D` and the
/// coefficient sequence `b_2, …` with every `b_j ∈ (0, 1)`.
#[derive(Debug, Clone)]
pub struct ExampleParams {
    dimension: usize,
    /// `b[j - 2]` holds `b_j`.
    b: Vec<f64>,
}

impl ExampleParams {
    /// Default coefficients `b_j = exp(−2^(−j))`: nondecreasing in `(0, 1)`
    /// with `∏_{j≥1} b_{2j+1} = e^(−1/6)`.
    pub fn with_default_b(dimension: usize) -> Result<Self> {
        Self::validate_dimension(dimension)?;
        let top = dimension.max(B_MIN_LEN_INDEX);
        let b = (2..=top)
            .map(|j| f64::exp(-2.0_f64.powi(-(j as i32))).min(B_SUP))
            .collect();
        Ok(Self { dimension, b })
    }

    /// Caller-supplied coefficients `b_2..`, which must at least cover the
    /// map's own needs (`b_2 … b_{D−2}`).
    pub fn with_explicit_b(dimension: usize, b: Vec<f64>) -> Result<Self> {
        Self::validate_dimension(dimension)?;
        if b.len() + 2 < dimension {
            return Err(Error::InvalidParam(format!(
                "need coefficients b_2..b_{} for dimension {dimension}, got {} values",
                dimension - 2,
                b.len()
            )));
        }
        if b.iter().any(|x| !(x.is_finite() && *x > 0.0 && *x < 1.0)) {
            return Err(Error::InvalidParam("every coefficient must lie in (0, 1)".into()));
        }
        Ok(Self { dimension, b })
    }

    fn validate_dimension(dimension: usize) -> Result<()> {
        if dimension < 4 {
            return Err(Error::InvalidParam(format!("dimension must be >= 4, got {dimension}")));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `b_j` by its sequence index (`j ≥ 2`).
    pub fn b(&self, j: usize) -> Result<f64> {
        if j < 2 || j - 2 >= self.b.len() {
            return Err(Error::ScheduleRange { index: j, max: self.b.len() + 1 });
        }
        Ok(self.b[j - 2])
    }

    pub fn max_b_index(&self) -> usize {
        self.b.len() + 1
    }

    /// `∏_{j=1}^{n} b_{2j+1}` — the per-iterate product consumed by the
    /// product schedule and the closed-form orbit.
    pub fn odd_product(&self, n: usize) -> Result<f64> {
        let mut acc = 1.0;
        for j in 1..=n {
            acc *= self.b(2 * j + 1)?;
        }
        Ok(acc)
    }
}

/// A per-iterate Lipschitz bound sequence `{β_n}`.
#[derive(Debug, Clone)]
pub enum BetaSchedule {
    /// `β_n ≡ θ` with `θ ∈ [0, 1)`: a uniform local contraction bound.
    Constant { theta: f64 },
    /// `β_n = ∏_{j=1}^{n} b_{2j+1}` from the example coefficients.
    ProductOfB { params: ExampleParams },
    /// Stored values for `n = 1, 2, …`, extended past the stored range by the
    /// declared limit. The last stored value must already agree with the
    /// declared limit to within [`tol::SCHEDULE_TAIL`].
    Explicit { values: Vec<f64>, limit: f64 },
}

impl BetaSchedule {
    pub fn constant(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && (0.0..1.0).contains(&theta)) {
            return Err(Error::InvalidParam(format!("theta must lie in [0, 1), got {theta}")));
        }
        Ok(Self::Constant { theta })
    }

    pub fn product_of_b(params: ExampleParams) -> Self {
        Self::ProductOfB { params }
    }

    pub fn explicit(values: Vec<f64>, limit: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("explicit schedule needs at least one value".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParam("explicit schedule values must be > 0".into()));
        }
        if !(limit.is_finite() && limit >= 0.0) {
            return Err(Error::InvalidParam(format!("schedule limit must be >= 0, got {limit}")));
        }
        let last = *values.last().expect("nonempty");
        if (last - limit).abs() > tol::SCHEDULE_TAIL {
            return Err(Error::InvalidParam(format!(
                "declared limit {limit} disagrees with stored tail {last}"
            )));
        }
        Ok(Self::Explicit { values, limit })
    }

    /// The bound for the n-th iterate (`n ≥ 1`).
    pub fn beta_at(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParam("schedule index starts at n = 1".into()));
        }
        match self {
            Self::Constant { theta } => Ok(*theta),
            Self::ProductOfB { params } => params.odd_product(n),
            Self::Explicit { values, limit } => {
                Ok(values.get(n - 1).copied().unwrap_or(*limit))
            }
        }
    }

    /// The schedule's limiting value: for the product schedule this is the
    /// deepest computable partial product (the factors beyond it round to 1).
    pub fn limit(&self) -> f64 {
        match self {
            Self::Constant { theta } => *theta,
            Self::ProductOfB { params } => {
                let n_max = (params.max_b_index() - 1) / 2;
                params.odd_product(n_max).expect("within stored range")
            }
            Self::Explicit { limit, .. } => *limit,
        }
    }
}

pub type PointwiseRule = Arc<dyn Fn(&LpVec, usize) -> f64 + Send + Sync>;
pub type PointwiseLimit = Arc<dyn Fn(&LpVec) -> f64 + Send + Sync>;

/// A pointwise schedule `α_n(q)` with its pointwise limit rule.
#[derive(Clone)]
pub struct PointwiseSchedule {
    pub evaluate: PointwiseRule,
    pub limit_rule: PointwiseLimit,
}

impl PointwiseSchedule {
    pub fn new(
        evaluate: impl Fn(&LpVec, usize) -> f64 + Send + Sync + 'static,
        limit_rule: impl Fn(&LpVec) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { evaluate: Arc::new(evaluate), limit_rule: Arc::new(limit_rule) }
    }

    /// Empirical convergence check: the largest `|α_n(q) − limit(q)|` at
    /// `n = n_max` over the sampled points.
    pub fn max_limit_deviation(&self, samples: &[LpVec], n_max: usize) -> f64 {
        samples
            .iter()
            .map(|q| ((self.evaluate)(q, n_max) - (self.limit_rule)(q)).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for PointwiseSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointwiseSchedule {{ .. }}")
    }
}

/// Either a plain sequence bound or a pointwise one.
#[derive(Debug, Clone)]
pub enum Schedule {
    Beta(BetaSchedule),
    Pointwise(PointwiseSchedule),
}

impl Schedule {
    /// The bound value for the n-th iterate; pointwise schedules require the
    /// evaluation point.
    pub fn beta_at(&self, n: usize, q: Option<&LpVec>) -> Result<f64> {
        match self {
            Self::Beta(b) => b.beta_at(n),
            Self::Pointwise(p) => {
                let q = q.ok_or_else(|| {
                    Error::InvalidParam("pointwise schedule needs an evaluation point".into())
                })?;
                Ok((p.evaluate)(q, n))
            }
        }
    }

    pub fn limit(&self, q: Option<&LpVec>) -> Result<f64> {
        match self {
            Self::Beta(b) => Ok(b.limit()),
            Self::Pointwise(p) => {
                let q = q.ok_or_else(|| {
                    Error::InvalidParam("pointwise schedule needs an evaluation point".into())
                })?;
                Ok((p.limit_rule)(q))
            }
        }
    }
}

/// The map itself.
#[derive(Clone)]
pub enum OperatorRule {
    /// `T(u₁, u₂, …) = (0, 0, u₁², b₂u₂, b₃u₃, …)`, truncated at `D`, with the
    /// isolated point `(1, 0, …)` sent to `(½, 0, …)`.
    Example32(ExampleParams),
    /// `T v = θ·v`.
    Scale { theta: f64 },
    /// `T v = θ·v + shift`.
    Affine { theta: f64, shift: LpVec },
    /// Isometric rotation of the first two coordinates.
    Rotate { angle: f64 },
    /// Arbitrary caller-supplied rule (tests, ad-hoc experiments).
    Custom(Arc<dyn Fn(&LpVec) -> LpVec + Send + Sync>),
}

impl fmt::Debug for OperatorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Example32(p) => write!(f, "Example32(D={})", p.dimension()),
            Self::Scale { theta } => write!(f, "Scale(theta={theta})"),
            Self::Affine { theta, .. } => write!(f, "Affine(theta={theta})"),
            Self::Rotate { angle } => write!(f, "Rotate(angle={angle})"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A self-map of a feasible set together with its locality radius and its
/// per-iterate Lipschitz schedule.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub name: String,
    pub domain: FeasibleSet,
    pub rule: OperatorRule,
    pub locality_radius: f64,
    pub schedule: Schedule,
}

impl OperatorSpec {
    pub fn new(
        name: impl Into<String>,
        domain: FeasibleSet,
        rule: OperatorRule,
        locality_radius: f64,
        schedule: Schedule,
    ) -> Result<Self> {
        if !(locality_radius.is_finite() && locality_radius > 0.0) {
            return Err(Error::InvalidParam(format!(
                "locality radius must be > 0, got {locality_radius}"
            )));
        }
        Ok(Self { name: name.into(), domain, rule, locality_radius, schedule })
    }

    /// One application of the map. The input must belong to the domain.
    pub fn apply(&self, v: &LpVec) -> Result<LpVec> {
        let dist = self.domain.distance_to_set(v)?;
        if dist > tol::MEMBERSHIP {
            return Err(Error::OutsideDomain { distance: dist });
        }
        match &self.rule {
            OperatorRule::Example32(params) => apply_example(params, v),
            OperatorRule::Scale { theta } => Ok(v.scale(*theta)),
            OperatorRule::Affine { theta, shift } => v.scale(*theta).add(shift),
            OperatorRule::Rotate { angle } => {
                let mut coords = v.coords().to_vec();
                let (s, c) = angle.sin_cos();
                let (x, y) = (coords[0], coords[1]);
                coords[0] = c * x - s * y;
                coords[1] = s * x + c * y;
                LpVec::new(coords, v.p_exp())
            }
            OperatorRule::Custom(rule) => Ok(rule(v)),
        }
    }

    /// `Tⁿ v` by n-fold composition; `n = 0` is the identity.
    pub fn iterate_n(&self, v: &LpVec, n: usize) -> Result<LpVec> {
        let dist = self.domain.distance_to_set(v)?;
        if dist > tol::MEMBERSHIP {
            return Err(Error::OutsideDomain { distance: dist });
        }
        let mut out = v.clone();
        for _ in 0..n {
            out = self.apply(&out)?;
        }
        Ok(out)
    }
}

fn apply_example(params: &ExampleParams, v: &LpVec) -> Result<LpVec> {
    let d = params.dimension();
    if v.dim() != d {
        return Err(Error::DimensionMismatch { left: v.dim(), right: d });
    }
    let far = LpVec::basis(d, 1, v.p_exp())?;
    if v.distance(&far)? <= tol::EXACT_IDENTITY {
        return LpVec::from_prefix(&[0.5], d, v.p_exp());
    }
    let mut coords = vec![0.0; d];
    coords[2] = v.coord(1) * v.coord(1);
    // u_k lands at position k + 2 with factor b_k; mass shifted past the
    // truncation window is dropped.
    for k in 2..=d.saturating_sub(2) {
        coords[k + 1] = params.b(k)? * v.coord(k);
    }
    LpVec::new(coords, v.p_exp())
}

/// Closed form of the n-th iterate of the isolated point `(1, 0, …)`: a single
/// nonzero coordinate `(∏_{k=3,5,…,2n−3} b_k) / 4` at position `2n − 1`.
///
/// Defined for `n ≥ 2` (the product is empty at `n = 2`) and only while the
/// nonzero position stays inside the truncation window.
pub fn example_closed_form(params: &ExampleParams, n: usize) -> Result<LpVec> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("closed form starts at n = 2, got {n}")));
    }
    let position = 2 * n - 1;
    if position > params.dimension() {
        return Err(Error::InvalidParam(format!(
            "iterate {n} puts mass at position {position}, past the truncation window {}",
            params.dimension()
        )));
    }
    let mut value = 0.25;
    let mut k = 3;
    while k <= 2 * n - 3 {
        value *= params.b(k)?;
        k += 2;
    }
    let mut coords = vec![0.0; params.dimension()];
    coords[position - 1] = value;
    LpVec::new(coords, 2.0)
}

/// The exact per-iterate Lipschitz bound of the truncated example map over
/// ball pairs, as an explicit schedule.
///
/// After `n` steps the surviving difference coefficients are the coordinate
/// products `∏_{i<n} b_{k+2i}` (for source coordinates that have not shifted
/// past the window) and `|u₁+v₁| · ∏_{j<n} b_{2j+1}` on the squared slot, so
/// the supremum over admissible pairs is their maximum with `|u₁+v₁| ≤ 1` on
/// the radius-½ ball. Stored values stop at the last positive entry; beyond
/// it every iterate annihilates ball differences, so the stored tail itself
/// is the declared limit.
pub fn certified_example_schedule(params: &ExampleParams) -> Result<BetaSchedule> {
    let d = params.dimension();
    let mut values = Vec::new();
    for n in 1.. {
        let quad = if 2 * n < d { params.odd_product(n - 1)? } else { 0.0 };
        let mut lin: f64 = 0.0;
        let mut k = 2;
        while k + 2 * n <= d {
            let mut prod = 1.0;
            for i in 0..n {
                prod *= params.b(k + 2 * i)?;
            }
            lin = lin.max(prod);
            k += 1;
        }
        let bound = quad.max(lin);
        if bound == 0.0 {
            break;
        }
        values.push(bound);
    }
    let limit = *values.last().expect("dimension >= 4 gives at least one positive bound");
    BetaSchedule::explicit(values, limit)
}

/// The example map on its full domain: the closed ball of radius ½ together
/// with the isolated point `(1, 0, …)`. Locality radius ½.
pub fn example32_operator(params: ExampleParams) -> Result<OperatorSpec> {
    let d = params.dimension();
    let schedule = certified_example_schedule(&params)?;
    let domain = FeasibleSet::ball_plus_points(
        LpVec::zero(d, 2.0)?,
        0.5,
        vec![LpVec::basis(d, 1, 2.0)?],
    )?;
    OperatorSpec::new("example32", domain, OperatorRule::Example32(params), 0.5, Schedule::Beta(schedule))
}

/// The example map restricted to its convex ball component; usable by the
/// averaged iteration scheme.
pub fn example32_ball_operator(params: ExampleParams) -> Result<OperatorSpec> {
    let d = params.dimension();
    let schedule = certified_example_schedule(&params)?;
    let domain = FeasibleSet::ball(LpVec::zero(d, 2.0)?, 0.5)?;
    OperatorSpec::new(
        "example32_ball",
        domain,
        OperatorRule::Example32(params),
        0.5,
        Schedule::Beta(schedule),
    )
}

/// `T v = θ v` on a ball around the origin.
pub fn scale_operator(theta: f64, dim: usize, p_exp: f64, domain_radius: f64) -> Result<OperatorSpec> {
    let schedule = BetaSchedule::constant(theta)?;
    let domain = FeasibleSet::ball(LpVec::zero(dim, p_exp)?, domain_radius)?;
    let radius = 2.0 * domain_radius + 1.0; // every pair in the domain counts as local
    OperatorSpec::new("scale", domain, OperatorRule::Scale { theta }, radius, Schedule::Beta(schedule))
}

/// `T v = θ v + shift` on a ball around the origin; the shift must be small
/// enough that the ball maps into itself.
pub fn affine_operator(theta: f64, shift: LpVec, domain_radius: f64) -> Result<OperatorSpec> {
    let schedule = BetaSchedule::constant(theta)?;
    if shift.norm() > (1.0 - theta) * domain_radius {
        return Err(Error::InvalidParam(format!(
            "shift of norm {} pushes the radius-{domain_radius} ball outside itself",
            shift.norm()
        )));
    }
    let domain = FeasibleSet::ball(LpVec::zero(shift.dim(), shift.p_exp())?, domain_radius)?;
    let radius = 2.0 * domain_radius + 1.0;
    OperatorSpec::new("affine", domain, OperatorRule::Affine { theta, shift }, radius, Schedule::Beta(schedule))
}

/// Rotation of the first two coordinates: an isometry with schedule
/// identically 1 (nonexpansive, no contraction).
pub fn rotate_operator(angle: f64, dim: usize, domain_radius: f64) -> Result<OperatorSpec> {
    if dim < 2 {
        return Err(Error::InvalidParam("rotation needs at least two coordinates".into()));
    }
    let schedule = BetaSchedule::explicit(vec![1.0], 1.0)?;
    let domain = FeasibleSet::ball(LpVec::zero(dim, 2.0)?, domain_radius)?;
    let radius = 2.0 * domain_radius + 1.0;
    OperatorSpec::new("rotate", domain, OperatorRule::Rotate { angle }, radius, Schedule::Beta(schedule))
}

/// Empirical local Lipschitz estimate: the largest `‖Tⁿu − Tⁿv‖ / ‖u − v‖`
/// over `samples` random domain pairs with `0 < ‖u − v‖ <` locality radius.
/// Deterministic for a given seed.
pub fn local_lipschitz_probe(
    op: &OperatorSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParam("probe needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (u, v) = sample_local_pair(&op.domain, op.locality_radius, &mut rng)?;
        let ratio = op.iterate_n(&u, n)?.distance(&op.iterate_n(&v, n)?)? / u.distance(&v)?;
        worst = worst.max(ratio);
    }
    Ok(worst)
}

fn sample_local_pair(
    domain: &FeasibleSet,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(LpVec, LpVec)> {
    for _ in 0..tol::SAMPLING_RETRIES {
        let u = sample_point(domain, rng)?;
        let v = sample_point(domain, rng)?;
        let d = u.distance(&v)?;
        if d > 0.0 && d < radius {
            return Ok((u, v));
        }
    }
    Err(Error::SamplingFailed { retries: tol::SAMPLING_RETRIES })
}

/// Draws a point of the set. Balls are sampled uniformly (in the Euclidean
/// case); boxes coordinatewise; hulls by random vertex weights. The isolated
/// extras of the non-convex variant are never drawn — they sit at least a
/// locality radius away from the ball, so no admissible pair involves them.
pub(crate) fn sample_point(domain: &FeasibleSet, rng: &mut ChaCha8Rng) -> Result<LpVec> {
    match domain {
        FeasibleSet::Ball { center, radius }
        | FeasibleSet::BallPlusPoints { center, radius, .. } => {
            sample_in_ball(center, *radius, rng)
        }
        FeasibleSet::Box { lower, upper } => {
            let coords = lower
                .coords()
                .iter()
                .zip(upper.coords())
                .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                .collect();
            LpVec::new(coords, lower.p_exp())
        }
        FeasibleSet::Hull { points } => {
            let mut weights: Vec<f64> = (0..points.len())
                .map(|_| -(rng.gen::<f64>().max(f64::MIN_POSITIVE)).ln())
                .collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            let mut acc = LpVec::zero(points[0].dim(), points[0].p_exp())?;
            for (w, p) in weights.iter().zip(points) {
                acc = acc.add(&p.scale(*w))?;
            }
            Ok(acc)
        }
    }
}

pub(crate) fn sample_in_ball(center: &LpVec, radius: f64, rng: &mut ChaCha8Rng) -> Result<LpVec> {
    let dim = center.dim();
    let mut direction = Vec::with_capacity(dim);
    loop {
        direction.clear();
        for _ in 0..dim {
            direction.push(standard_normal(rng));
        }
        if direction.iter().any(|g| *g != 0.0) {
            break;
        }
    }
    let dir = LpVec::new(direction, center.p_exp())?;
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    center.add(&dir.scale(r / dir.norm()))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; only the cosine branch is used.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ExampleParams {
        ExampleParams::with_default_b(32).unwrap()
    }

    #[test]
    fn default_coefficients() {
        let p = params();
        assert!((p.b(3).unwrap() - f64::exp(-0.125)).abs() < 1e-15);
        assert!(p.b(2).unwrap() < p.b(3).unwrap());
        assert!(p.max_b_index() >= 129);
        // partial products of the odd coefficients settle at e^(-1/6)
        assert!((p.odd_product(64).unwrap() - f64::exp(-1.0 / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn explicit_coefficients_validated() {
        assert!(ExampleParams::with_explicit_b(8, vec![0.5; 2]).is_err());
        assert!(ExampleParams::with_explicit_b(8, vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0]).is_err());
        let p = ExampleParams::with_explicit_b(8, vec![0.9; 7]).unwrap();
        assert_eq!(p.b(2).unwrap(), 0.9);
        assert!(p.b(10).is_err());
    }

    #[test]
    fn apply_fixes_zero_and_halves_the_far_point() {
        let op = example32_operator(params()).unwrap();
        let zero = LpVec::zero(32, 2.0).unwrap();
        assert_eq!(op.apply(&zero).unwrap(), zero);
        let far = LpVec::basis(32, 1, 2.0).unwrap();
        let image = op.apply(&far).unwrap();
        assert_eq!(image, LpVec::from_prefix(&[0.5], 32, 2.0).unwrap());
    }

    #[test]
    fn apply_coordinate_formula() {
        let op = example32_operator(params()).unwrap();
        let v = LpVec::from_prefix(&[0.1, 0.2], 32, 2.0).unwrap();
        let image = op.apply(&v).unwrap();
        let b2 = params().b(2).unwrap();
        assert!((image.coord(3) - 0.01).abs() < 1e-15);
        assert!((image.coord(4) - b2 * 0.2).abs() < 1e-15);
        assert_eq!(image.coord(1), 0.0);
        assert_eq!(image.coord(2), 0.0);
        assert!(image.coords()[4..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn apply_rejects_points_outside_the_domain() {
        let op = example32_operator(params()).unwrap();
        let outside = LpVec::from_prefix(&[0.9], 32, 2.0).unwrap();
        assert!(matches!(op.apply(&outside), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn iterate_examples() {
        let op = example32_operator(params()).unwrap();
        let far = LpVec::basis(32, 1, 2.0).unwrap();
        assert_eq!(op.iterate_n(&far, 0).unwrap(), far);

        let two = op.iterate_n(&far, 2).unwrap();
        assert!((two.coord(3) - 0.25).abs() < 1e-15);
        assert_eq!(two.coords().iter().filter(|c| **c != 0.0).count(), 1);

        let three = op.iterate_n(&far, 3).unwrap();
        let expected = f64::exp(-0.125) / 4.0; // b_3 / 4 ≈ 0.22062
        assert!((three.coord(5) - expected).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let p = params();
        let n2 = example_closed_form(&p, 2).unwrap();
        assert_eq!(n2.coord(3), 0.25);
        let n3 = example_closed_form(&p, 3).unwrap();
        assert!((n3.coord(5) - f64::exp(-0.125) / 4.0).abs() < 1e-15);
        assert!(example_closed_form(&p, 1).is_err());
        assert!(example_closed_form(&p, 17).is_err()); // would leave the window
    }

    #[test]
    fn closed_form_matches_direct_iteration() {
        let p = params();
        let op = example32_operator(p.clone()).unwrap();
        let far = LpVec::basis(32, 1, 2.0).unwrap();
        for n in 2..=16 {
            let direct = op.iterate_n(&far, n).unwrap();
            let formula = example_closed_form(&p, n).unwrap();
            assert!(direct.max_coord_diff(&formula).unwrap() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn beta_at_examples() {
        let constant = BetaSchedule::constant(0.5).unwrap();
        assert_eq!(constant.beta_at(7).unwrap(), 0.5);

        let product = BetaSchedule::product_of_b(params());
        assert!((product.beta_at(1).unwrap() - f64::exp(-1.0 / 8.0)).abs() < 1e-15);
        assert!((product.beta_at(2).unwrap() - f64::exp(-5.0 / 32.0)).abs() < 1e-15);
        assert!(product.beta_at(0).is_err());
    }

    #[test]
    fn explicit_schedule_tail_must_match_limit() {
        assert!(BetaSchedule::explicit(vec![1.0, 0.9], 0.5).is_err());
        let s = BetaSchedule::explicit(vec![1.0, 0.9], 0.9).unwrap();
        assert_eq!(s.beta_at(5).unwrap(), 0.9); // extended by the limit
    }

    #[test]
    fn certified_schedule_dominates_the_probe() {
        let op = example32_operator(params()).unwrap();
        for n in [1usize, 2, 5] {
            let probe = local_lipschitz_probe(&op, n, 300, 7).unwrap();
            let bound = op.schedule.beta_at(n, None).unwrap();
            assert!(probe <= bound + 1e-9, "n={n}: probe {probe} vs bound {bound}");
        }
    }

    #[test]
    fn probe_is_exact_on_a_linear_contraction() {
        let op = scale_operator(0.5, 4, 2.0, 10.0).unwrap();
        for n in [1usize, 3] {
            let probe = local_lipschitz_probe(&op, n, 64, 99).unwrap();
            assert_eq!(probe, 0.5f64.powi(n as i32));
        }
    }

    #[test]
    fn probe_is_seed_deterministic() {
        let op = example32_operator(params()).unwrap();
        let a = local_lipschitz_probe(&op, 2, 50, 1234).unwrap();
        let b = local_lipschitz_probe(&op, 2, 50, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn far_pair_ratio_stays_far_from_one() {
        let op = example32_operator(params()).unwrap();
        let far = LpVec::basis(32, 1, 2.0).unwrap();
        let zero = LpVec::zero(32, 2.0).unwrap();
        for n in 2..=16 {
            let num = op.iterate_n(&far, n).unwrap().distance(&op.iterate_n(&zero, n).unwrap()).unwrap();
            let ratio = num / far.distance(&zero).unwrap();
            assert!(ratio <= 0.25, "n={n}: ratio {ratio}");
            let expected = params().odd_product(n - 2).unwrap() / 4.0;
            assert!((num - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn pointwise_schedule_converges_at_samples() {
        let sched = PointwiseSchedule::new(
            |q, n| 1.0 + q.norm() / n as f64,
            |_| 1.0,
        );
        let samples = vec![
            LpVec::from_prefix(&[0.3], 4, 2.0).unwrap(),
            LpVec::from_prefix(&[0.0, 0.5], 4, 2.0).unwrap(),
        ];
        assert!(sched.max_limit_deviation(&samples, 1000) < 1e-3);
    }

    #[test]
    fn affine_rejects_leaky_shift() {
        let shift = LpVec::from_prefix(&[6.0], 2, 2.0).unwrap();
        assert!(affine_operator(0.5, shift, 10.0).is_err());
    }
}
