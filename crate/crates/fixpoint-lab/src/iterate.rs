//! Iteration engines: Picard, the averaged (Schu-type) scheme with n-fold
//! iterates, residual diagnostics, and finite-chain contraction bounds.

use crate::operators::{OperatorSpec, Schedule};
use crate::space::{convex_combination, LpVec};
use crate::tol;
use crate::{Error, Result};

/// Step-size rule `γ_n` for the averaged scheme.
///
/// The bounded regime keeps `γ_n` inside `[a, b] ⊂ (0, 1)`; the summable
/// regime lets `γ_n` decay (so `Σ γ_n < ∞`) and records that choice in the
/// flag. The two regimes are deliberately separate: no single sequence
/// satisfies both a positive lower bound and summability.
#[derive(Debug, Clone)]
pub struct StepSchedule {
    rule: StepRule,
    pub lower: f64,
    pub upper: f64,
    pub summable: bool,
}

#[derive(Debug, Clone)]
enum StepRule {
    Constant(f64),
    /// `γ_n = min(cap, scale / n²)`.
    InverseSquare { cap: f64, scale: f64 },
}

impl StepSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParam(format!("step must lie in (0, 1), got {gamma}")));
        }
        Ok(Self { rule: StepRule::Constant(gamma), lower: gamma, upper: gamma, summable: false })
    }

    pub fn inverse_square(cap: f64, scale: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0 && cap < 1.0) {
            return Err(Error::InvalidParam(format!("step cap must lie in (0, 1), got {cap}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParam(format!("step scale must be > 0, got {scale}")));
        }
        Ok(Self {
            rule: StepRule::InverseSquare { cap, scale },
            lower: f64::MIN_POSITIVE,
            upper: cap,
            summable: true,
        })
    }

    /// `γ_n`, `n ≥ 1`.
    pub fn gamma(&self, n: usize) -> f64 {
        match self.rule {
            StepRule::Constant(g) => g,
            StepRule::InverseSquare { cap, scale } => cap.min(scale / ((n * n) as f64)),
        }
    }
}

/// Why an iteration run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ToleranceMet,
    MaxIter,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ToleranceMet => "tolerance_met",
            Self::MaxIter => "max_iter",
            Self::Diverged => "diverged",
        }
    }
}

/// Full record of an iteration run. `residuals[k]` is always `‖q_k − T q_k‖`
/// (first power), recomputable from `iterates[k]`; `steps` holds the `γ_n`
/// used for each transition (empty for Picard).
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iterates: Vec<LpVec>,
    pub residuals: Vec<f64>,
    pub steps: Vec<f64>,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn final_iterate(&self) -> &LpVec {
        self.iterates.last().expect("traces hold at least the start point")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("traces hold at least the start point")
    }

    pub fn min_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `‖q − Tq‖`: zero exactly at fixed points (up to arithmetic noise).
pub fn residual(op: &OperatorSpec, q: &LpVec) -> Result<f64> {
    q.distance(&op.apply(q)?)
}

/// Successive application `q_{k+1} = T q_k` until the residual drops below
/// `tol` or the iteration budget runs out. Never errors on non-convergence;
/// the stop reason records it.
pub fn picard(op: &OperatorSpec, q0: &LpVec, tol: f64, max_iter: usize) -> Result<IterationTrace> {
    run_iteration(op, q0, tol, max_iter, |_, q| op.apply(q))
}

/// The averaged scheme `q_{n+1} = (1 − γ_n) q_n + γ_n Tⁿ q_n` with the n-fold
/// iterate at step n. Needs a convex domain to keep the combination feasible.
pub fn schu(
    op: &OperatorSpec,
    q0: &LpVec,
    steps: &StepSchedule,
    tol: f64,
    max_iter: usize,
) -> Result<IterationTrace> {
    if !op.domain.is_convex() {
        return Err(Error::NonConvexDomain);
    }
    run_iteration(op, q0, tol, max_iter, |n, q| {
        let gamma = steps.gamma(n);
        let iterated = op.iterate_n(q, n)?;
        let next = convex_combination(1.0 - gamma, q, &iterated)?;
        if !op.domain.contains(&next) {
            return Err(Error::Precondition("averaged combination left the domain".into()));
        }
        Ok(next)
    })
    .map(|mut trace| {
        trace.steps = (1..trace.iterates.len()).map(|n| steps.gamma(n)).collect();
        trace
    })
}

fn run_iteration(
    op: &OperatorSpec,
    q0: &LpVec,
    tol: f64,
    max_iter: usize,
    mut next: impl FnMut(usize, &LpVec) -> Result<LpVec>,
) -> Result<IterationTrace> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance must be > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParam("max_iter must be at least 1".into()));
    }
    let escape = tol::DIVERGENCE_FACTOR * op.domain.diameter();
    let mut trace = IterationTrace {
        iterates: vec![q0.clone()],
        residuals: vec![residual(op, q0)?],
        steps: Vec::new(),
        stop_reason: StopReason::MaxIter,
    };
    if trace.residuals[0] < tol {
        trace.stop_reason = StopReason::ToleranceMet;
        return Ok(trace);
    }
    for n in 1..=max_iter {
        let q = next(n, trace.final_iterate())?;
        let res = residual(op, &q)?;
        trace.iterates.push(q);
        trace.residuals.push(res);
        if trace.final_iterate().norm() > escape {
            trace.stop_reason = StopReason::Diverged;
            return Ok(trace);
        }
        if res < tol {
            trace.stop_reason = StopReason::ToleranceMet;
            return Ok(trace);
        }
    }
    trace.stop_reason = StopReason::MaxIter;
    Ok(trace)
}

/// `‖T^m q − q‖` across a family of points: the m-fold residual whose decay
/// tracks the plain residual with constant `1 + Σ_{j<m} β_j`.
pub fn residual_m(op: &OperatorSpec, qs: &[LpVec], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidParam("m starts at 1".into()));
    }
    qs.iter().map(|q| op.iterate_n(q, m)?.distance(q)).collect()
}

/// A finite path of points joining two endpoints with every consecutive gap
/// strictly below the locality radius used to build it.
#[derive(Debug, Clone)]
pub struct Chain {
    pub nodes: Vec<LpVec>,
    pub segment_bound: f64,
}

impl Chain {
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[0].distance(&w[1]).expect("nodes share dimension"))
            .sum()
    }
}

/// Splits the segment `[u, v]` into `⌊‖u−v‖ / r⌋ + 1` equal pieces so each
/// piece is strictly shorter than `r`. Degenerate endpoints give a two-node
/// chain of length zero.
pub fn chain(u: &LpVec, v: &LpVec, r: f64) -> Result<Chain> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParam(format!("chain radius must be > 0, got {r}")));
    }
    let d = u.distance(v)?;
    let mut pieces = (d / r).floor() as usize + 1;
    // Guard against the quotient rounding to an exact integer from below.
    while d / pieces as f64 >= r {
        pieces += 1;
    }
    let offset = v.sub(u)?;
    let mut nodes = Vec::with_capacity(pieces + 1);
    nodes.push(u.clone());
    for i in 1..pieces {
        nodes.push(u.add(&offset.scale(i as f64 / pieces as f64))?);
    }
    nodes.push(v.clone());
    Ok(Chain { nodes, segment_bound: d / pieces as f64 })
}

/// The chain-propagated contraction bound `(β + ε)^m · Σ_i ‖z_{i−1} − z_i‖`,
/// valid once `n` is deep enough that the schedule has entered the
/// `β + ε < 1` regime. Defaults `ε = (1 − β)/2`.
pub fn chain_contract_bound(
    op: &OperatorSpec,
    ch: &Chain,
    n: usize,
    m: usize,
    epsilon: Option<f64>,
) -> Result<f64> {
    let schedule = match &op.schedule {
        Schedule::Beta(b) => b,
        Schedule::Pointwise(_) => {
            return Err(Error::InvalidParam(
                "chain bounds need a plain (non-pointwise) schedule".into(),
            ))
        }
    };
    let beta = schedule.limit();
    if beta >= 1.0 {
        return Err(Error::ScheduleNotContractive { limit: beta });
    }
    let eps = epsilon.unwrap_or((1.0 - beta) / 2.0);
    if !(eps > 0.0 && beta + eps < 1.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon {eps} must satisfy 0 < epsilon < 1 - beta = {}",
            1.0 - beta
        )));
    }
    let beta_n = schedule.beta_at(n)?;
    if beta_n >= beta + eps {
        return Err(Error::Precondition(format!(
            "schedule value {beta_n} at n = {n} has not entered the beta + epsilon = {} regime",
            beta + eps
        )));
    }
    Ok((beta + eps).powi(m as i32) * ch.length())
}

/// Outcome of multi-start fixed-point probing.
#[derive(Debug, Clone)]
pub enum UniquenessVerdict {
    /// Every start converged and all limits agree pairwise within `10 · tol`.
    UniqueWithinTol(LpVec),
    /// Every start converged but the limits disagree.
    Inconsistent(Vec<LpVec>),
    /// At least one start failed to converge.
    Inconclusive,
}

/// Runs Picard from each start and compares the limits.
pub fn uniqueness_probe(
    op: &OperatorSpec,
    starts: &[LpVec],
    tol: f64,
    max_iter: usize,
) -> Result<UniquenessVerdict> {
    if starts.is_empty() {
        return Err(Error::InvalidParam("uniqueness probe needs at least one start".into()));
    }
    let mut limits = Vec::with_capacity(starts.len());
    for q0 in starts {
        let trace = picard(op, q0, tol, max_iter)?;
        if trace.stop_reason != StopReason::ToleranceMet {
            return Ok(UniquenessVerdict::Inconclusive);
        }
        limits.push(trace.final_iterate().clone());
    }
    for (i, a) in limits.iter().enumerate() {
        for b in &limits[i + 1..] {
            if a.distance(b)? > 10.0 * tol {
                return Ok(UniquenessVerdict::Inconsistent(limits));
            }
        }
    }
    Ok(UniquenessVerdict::UniqueWithinTol(limits.swap_remove(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        affine_operator, example32_ball_operator, example32_operator, rotate_operator,
        scale_operator, ExampleParams,
    };

    fn scale_op() -> OperatorSpec {
        scale_operator(0.5, 2, 2.0, 10.0).unwrap()
    }

    #[test]
    fn residual_examples() {
        let op = scale_op();
        assert_eq!(residual(&op, &LpVec::zero(2, 2.0).unwrap()).unwrap(), 0.0);
        let e1 = LpVec::from_prefix(&[1.0], 2, 2.0).unwrap();
        assert_eq!(residual(&op, &e1).unwrap(), 0.5);

        let ex = example32_operator(ExampleParams::with_default_b(32).unwrap()).unwrap();
        assert_eq!(residual(&ex, &LpVec::zero(32, 2.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn picard_geometric_decay() {
        let op = scale_op();
        let q0 = LpVec::from_prefix(&[1.0], 2, 2.0).unwrap();
        let trace = picard(&op, &q0, 1e-8, 200).unwrap();
        assert_eq!(trace.stop_reason, StopReason::ToleranceMet);
        for w in trace.residuals.windows(2) {
            assert!((w[1] - 0.5 * w[0]).abs() < 1e-15);
        }
        assert!(trace.final_iterate().norm() < 1e-7);
    }

    #[test]
    fn picard_affine_limit() {
        let shift = LpVec::from_prefix(&[0.1], 2, 2.0).unwrap();
        let op = affine_operator(0.5, shift, 10.0).unwrap();
        let trace = picard(&op, &LpVec::zero(2, 2.0).unwrap(), 1e-12, 200).unwrap();
        let expected = LpVec::from_prefix(&[0.2], 2, 2.0).unwrap();
        assert!(trace.final_iterate().distance(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn picard_example_orbit_dies_out() {
        let op = example32_operator(ExampleParams::with_default_b(32).unwrap()).unwrap();
        let far = LpVec::basis(32, 1, 2.0).unwrap();
        let trace = picard(&op, &far, 1e-10, 64).unwrap();
        assert_eq!(trace.stop_reason, StopReason::ToleranceMet);
        assert_eq!(trace.final_iterate().norm(), 0.0);
    }

    #[test]
    fn schu_fixed_point_is_stationary() {
        let op = scale_op();
        let q0 = LpVec::zero(2, 2.0).unwrap();
        let steps = StepSchedule::constant(0.5).unwrap();
        let trace = schu(&op, &q0, &steps, 1e-12, 16).unwrap();
        assert!(trace.iterates.iter().all(|q| *q == q0));
    }

    #[test]
    fn schu_single_step_arithmetic() {
        let op = example32_ball_operator(ExampleParams::with_default_b(32).unwrap()).unwrap();
        let q0 = LpVec::from_prefix(&[0.5], 32, 2.0).unwrap();
        let steps = StepSchedule::constant(0.5).unwrap();
        let trace = schu(&op, &q0, &steps, 1e-30, 1).unwrap();
        let q1 = &trace.iterates[1];
        assert!((q1.coord(1) - 0.25).abs() < 1e-15);
        assert!((q1.coord(3) - 0.125).abs() < 1e-15);
        assert_eq!(q1.coord(2), 0.0);
        assert!(q1.coords()[3..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn schu_transition_identity() {
        let op = scale_op();
        let q0 = LpVec::from_prefix(&[1.0], 2, 2.0).unwrap();
        let steps = StepSchedule::constant(0.5).unwrap();
        let trace = schu(&op, &q0, &steps, 1e-10, 50).unwrap();
        for n in 1..trace.len() {
            let lhs = trace.iterates[n].distance(&trace.iterates[n - 1]).unwrap();
            let iterated = op.iterate_n(&trace.iterates[n - 1], n).unwrap();
            let rhs = trace.steps[n - 1] * trace.iterates[n - 1].distance(&iterated).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "step {n}");
        }
    }

    #[test]
    fn schu_rejects_nonconvex_domain() {
        let op = example32_operator(ExampleParams::with_default_b(32).unwrap()).unwrap();
        let q0 = LpVec::zero(32, 2.0).unwrap();
        let steps = StepSchedule::constant(0.5).unwrap();
        assert!(matches!(schu(&op, &q0, &steps, 1e-8, 4), Err(Error::NonConvexDomain)));
    }

    #[test]
    fn residual_m_base_case_matches_residual() {
        let op = scale_op();
        let qs: Vec<LpVec> = [(1.0, 0.0), (0.25, -0.5), (0.0, 0.0)]
            .iter()
            .map(|(x, y)| LpVec::new(vec![*x, *y], 2.0).unwrap())
            .collect();
        let ones = residual_m(&op, &qs, 1).unwrap();
        for (q, r) in qs.iter().zip(&ones) {
            assert_eq!(*r, residual(&op, q).unwrap());
        }
        let zeros = residual_m(&op, &[LpVec::zero(2, 2.0).unwrap()], 5).unwrap();
        assert_eq!(zeros, vec![0.0]);
    }

    #[test]
    fn chain_subdivision_examples() {
        let u = LpVec::new(vec![0.0, 0.0], 2.0).unwrap();
        let v = LpVec::new(vec![1.0, 0.0], 2.0).unwrap();
        let ch = chain(&u, &v, 0.3).unwrap();
        assert_eq!(ch.segments(), 4);
        assert!((ch.segment_bound - 0.25).abs() < 1e-15);
        assert_eq!(ch.nodes.first().unwrap(), &u);
        assert_eq!(ch.nodes.last().unwrap(), &v);

        let degenerate = chain(&u, &u, 0.3).unwrap();
        assert_eq!(degenerate.nodes.len(), 2);
        assert_eq!(degenerate.segment_bound, 0.0);

        let w = LpVec::new(vec![0.6, 0.0], 2.0).unwrap();
        let ch = chain(&u, &w, 0.3).unwrap();
        assert_eq!(ch.segments(), 3);
        assert!(ch.segment_bound < 0.3);
    }

    #[test]
    fn chain_segments_stay_strictly_local() {
        let u = LpVec::new(vec![0.0, 0.0], 2.0).unwrap();
        for steps in 1..40 {
            let v = LpVec::new(vec![0.07 * steps as f64, 0.01], 2.0).unwrap();
            let ch = chain(&u, &v, 0.07).unwrap();
            for w in ch.nodes.windows(2) {
                assert!(w[0].distance(&w[1]).unwrap() < 0.07);
            }
        }
    }

    #[test]
    fn chain_bound_examples() {
        let op = scale_op(); // beta = 0.5, default eps = 0.25
        let u = LpVec::new(vec![0.0, 0.0], 2.0).unwrap();
        let v = LpVec::new(vec![1.0, 0.0], 2.0).unwrap();
        let ch = chain(&u, &v, 0.4).unwrap();

        let at_zero = chain_contract_bound(&op, &ch, 1, 0, None).unwrap();
        assert!((at_zero - ch.length()).abs() < 1e-15);

        // beta + eps = 0.5 with an explicit epsilon on a theta = 0.25 map
        let tight = scale_operator(0.25, 2, 2.0, 10.0).unwrap();
        let bound = chain_contract_bound(&tight, &ch, 1, 10, Some(0.25)).unwrap();
        assert!((bound - 2f64.powi(-10) * ch.length()).abs() < 1e-12);
    }

    #[test]
    fn chain_bound_dominates_direct_iteration() {
        let op = scale_op();
        let u = LpVec::new(vec![1.0, 0.0], 2.0).unwrap();
        let v = LpVec::new(vec![0.0, 1.0], 2.0).unwrap();
        let ch = chain(&u, &v, 0.5).unwrap();
        for m in 0..=10 {
            let bound = chain_contract_bound(&op, &ch, 1, m, None).unwrap();
            let direct = op
                .iterate_n(&u, m)
                .unwrap()
                .distance(&op.iterate_n(&v, m).unwrap())
                .unwrap();
            assert!(direct <= bound + 1e-9, "m = {m}: {direct} vs {bound}");
        }
    }

    #[test]
    fn chain_bound_rejects_nonexpansive_schedules() {
        let op = rotate_operator(1.0, 2, 10.0).unwrap();
        let u = LpVec::new(vec![0.0, 0.0], 2.0).unwrap();
        let ch = chain(&u, &u, 0.5).unwrap();
        assert!(matches!(
            chain_contract_bound(&op, &ch, 1, 3, None),
            Err(Error::ScheduleNotContractive { .. })
        ));
    }

    #[test]
    fn uniqueness_probe_verdicts() {
        let op = scale_op();
        let starts = vec![
            LpVec::new(vec![1.0, 0.0], 2.0).unwrap(),
            LpVec::new(vec![-1.0, 0.0], 2.0).unwrap(),
            LpVec::new(vec![0.0, 1.0], 2.0).unwrap(),
        ];
        match uniqueness_probe(&op, &starts, 1e-9, 500).unwrap() {
            UniquenessVerdict::UniqueWithinTol(limit) => assert!(limit.norm() < 1e-8),
            other => panic!("expected a unique verdict, got {other:?}"),
        }

        let iso = rotate_operator(1.0, 2, 10.0).unwrap();
        let circle: Vec<LpVec> = (0..4)
            .map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_2;
                LpVec::new(vec![a.cos(), a.sin()], 2.0).unwrap()
            })
            .collect();
        assert!(matches!(
            uniqueness_probe(&iso, &circle, 1e-9, 200).unwrap(),
            UniquenessVerdict::Inconclusive
        ));
    }
}
