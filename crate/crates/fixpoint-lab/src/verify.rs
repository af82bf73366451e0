//! Theorem-shaped verification sweeps.
//!
//! Each suite samples or replays a checkable inequality and reports the worst
//! signed violation together with the inputs that produced it, so a report
//! can always be re-evaluated from its own payload.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::center::{radius_gate, CenterSolver, OrbitSample};
use crate::iterate::{residual, IterationTrace, StopReason};
use crate::operators::{sample_in_ball, OperatorSpec};
use crate::space::{modulus_check, LpVec};
use crate::tol;
use crate::{Error, Result};

/// Outcome of one verification sweep. `passed` holds exactly when
/// `max_violation` stays at or below the suite's tolerance, and `worst_case`
/// carries enough of the offending inputs to recompute `max_violation`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite_name: String,
    pub cases_run: u64,
    pub max_violation: f64,
    pub worst_case: Value,
    pub passed: bool,
}

/// Samples the Euclidean two-point identity
/// `‖cp+(1−c)q‖² ≤ c‖p‖² + (1−c)‖q‖² − c(1−c)‖p−q‖²`
/// over random pairs in the unit ball, with endpoint weights and degenerate
/// pairs folded into the sweep. In the Euclidean case the two sides agree, so
/// any positive violation beyond roundoff is a failure.
pub fn lemma22_suite(dim: usize, samples: usize, seed: u64) -> Result<SuiteReport> {
    if dim == 0 {
        return Err(Error::InvalidParam("dimension must be at least 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = LpVec::zero(dim, 2.0)?;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_case = Value::Null;
    for i in 0..samples {
        let p = sample_in_ball(&origin, 1.0, &mut rng)?;
        let mut q = sample_in_ball(&origin, 1.0, &mut rng)?;
        let c = match i % 8 {
            0 => 0.0,
            1 => 1.0,
            2 => {
                q = p.clone();
                rng.gen::<f64>()
            }
            _ => rng.gen::<f64>(),
        };
        let gap = modulus_check(&p, &q, c)?;
        let violation = gap.lhs - gap.rhs;
        if violation > worst {
            worst = violation;
            worst_case = json!({ "p": p, "q": q, "c": c });
        }
    }
    Ok(SuiteReport {
        suite_name: "lemma22".into(),
        cases_run: samples as u64,
        max_violation: worst,
        worst_case,
        passed: worst <= tol::EXACT_IDENTITY,
    })
}

/// Recomputes a `lemma22` report's violation from its recorded worst case.
pub fn reevaluate_lemma22(report: &SuiteReport) -> Result<f64> {
    let case = &report.worst_case;
    let p = vec_from_json(&case["p"])?;
    let q = vec_from_json(&case["q"])?;
    let c = case["c"]
        .as_f64()
        .ok_or_else(|| Error::InvalidParam("worst case is missing the weight".into()))?;
    let gap = modulus_check(&p, &q, c)?;
    Ok(gap.lhs - gap.rhs)
}

/// Weak-limit demonstration on the canonical weakly-null sequence: the basis
/// vectors `e_n` drift to the zero vector, which must be a strictly better
/// center than any other candidate once the tail has left the candidate's
/// support. Candidates must be nonzero with support strictly inside `dim`.
pub fn opial_demo(dim: usize, candidates: &[LpVec]) -> Result<SuiteReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParam("need at least one candidate".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_case = Value::Null;
    for p in candidates {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { left: p.dim(), right: dim });
        }
        if p.norm() == 0.0 {
            return Err(Error::Precondition("candidates must be nonzero".into()));
        }
        let support = (1..=dim).rev().find(|i| p.coord(*i) != 0.0).expect("nonzero");
        if support >= dim {
            return Err(Error::Precondition(format!(
                "candidate support reaches {support}; no tail is left inside dimension {dim}"
            )));
        }
        let mut tail_to_zero: f64 = 0.0;
        let mut tail_to_p: f64 = 0.0;
        for n in support + 1..=dim {
            let e = LpVec::basis(dim, n, p.p_exp())?;
            tail_to_zero = tail_to_zero.max(e.norm());
            tail_to_p = tail_to_p.max(e.distance(p)?);
        }
        let violation = tail_to_zero - tail_to_p;
        if violation > worst {
            worst = violation;
            worst_case = json!({
                "candidate": p,
                "tail_to_zero": tail_to_zero,
                "tail_to_candidate": tail_to_p,
            });
        }
    }
    Ok(SuiteReport {
        suite_name: "opial".into(),
        cases_run: candidates.len() as u64,
        max_violation: worst,
        worst_case,
        passed: worst <= 0.0,
    })
}

/// Recomputes an `opial` report's violation from its recorded candidate.
pub fn reevaluate_opial(report: &SuiteReport, dim: usize) -> Result<f64> {
    let candidate = vec_from_json(&report.worst_case["candidate"])?;
    let single = opial_demo(dim, &[candidate])?;
    Ok(single.max_violation)
}

/// Limit-point residual check behind fixed-point-set closedness: feed a
/// convergent list of approximate fixed points and evaluate the residual at
/// its limit (the final element), which the triangle bound caps at
/// `(1 + β₁)·tol`.
pub fn closedness_demo(op: &OperatorSpec, fp_like: &[LpVec], tol_in: f64) -> Result<SuiteReport> {
    if fp_like.is_empty() {
        return Err(Error::InvalidParam("need at least one approximate fixed point".into()));
    }
    if !(tol_in.is_finite() && tol_in > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance must be > 0, got {tol_in}")));
    }
    for (i, x) in fp_like.iter().enumerate() {
        let r = residual(op, x)?;
        if r >= tol_in {
            return Err(Error::Precondition(format!(
                "element {i} has residual {r:.3e}, not below {tol_in:.3e}"
            )));
        }
    }
    if !cauchy_surrogate(fp_like)? {
        return Err(Error::Precondition("input list is not Cauchy".into()));
    }
    let limit = fp_like.last().expect("nonempty");
    let beta1 = op.schedule.beta_at(1, Some(limit))?;
    let bound = (1.0 + beta1) * tol_in + tol::INEQUALITY_SLACK;
    let at_limit = residual(op, limit)?;
    let violation = at_limit - bound;
    Ok(SuiteReport {
        suite_name: "closedness".into(),
        cases_run: fp_like.len() as u64,
        max_violation: violation,
        worst_case: json!({
            "limit": limit,
            "residual_at_limit": at_limit,
            "bound": bound,
            "beta1": beta1,
        }),
        passed: violation <= 0.0,
    })
}

/// Fixed-point conclusion at the strong limit of an approximate-fixed-point
/// run: the final iterate of a convergent trace must have residual at most
/// `(2 + β₁)·tol`. The tail's windowed radius against the locality radius is
/// recorded alongside (for convex domains) as the computable stand-in for the
/// radius hypothesis.
pub fn demiclosedness_demo(
    op: &OperatorSpec,
    trace: &IterationTrace,
    tol_in: f64,
) -> Result<SuiteReport> {
    if !(tol_in.is_finite() && tol_in > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance must be > 0, got {tol_in}")));
    }
    if trace.stop_reason == StopReason::Diverged {
        return Err(Error::Precondition("diverged trace: the hypothesis fails, not the claim".into()));
    }
    if trace.final_residual() >= tol_in {
        return Err(Error::Precondition(format!(
            "trace final residual {:.3e} has not dropped below {tol_in:.3e}",
            trace.final_residual()
        )));
    }
    if !cauchy_surrogate(&trace.iterates)? {
        return Err(Error::Precondition("trace iterates are not Cauchy".into()));
    }
    let w = trace.final_iterate();
    let beta1 = op.schedule.beta_at(1, Some(w))?;
    let bound = (2.0 + beta1) * tol_in;
    let at_limit = residual(op, w)?;
    let violation = at_limit - bound;

    let tail_gate = if op.domain.is_convex() && trace.len() >= 2 {
        let start = trace.len() - (trace.len() / 4).max(1);
        let sample = OrbitSample::from_points(trace.iterates[start..].to_vec(), start)?;
        let gate = radius_gate(&sample, &op.domain, op.locality_radius, &CenterSolver::default())?;
        json!({ "rho_hat": gate.rho_hat, "r": op.locality_radius, "passes": gate.passes })
    } else {
        Value::Null
    };

    Ok(SuiteReport {
        suite_name: "demiclosedness".into(),
        cases_run: trace.len() as u64,
        max_violation: violation,
        worst_case: json!({
            "limit": w,
            "residual_at_limit": at_limit,
            "bound": bound,
            "beta1": beta1,
            "tail_radius_gate": tail_gate,
        }),
        passed: violation <= 0.0,
    })
}

/// Recomputes a closedness/demiclosedness report's violation from its
/// recorded limit point.
pub fn reevaluate_limit_residual(op: &OperatorSpec, report: &SuiteReport) -> Result<f64> {
    let limit = vec_from_json(&report.worst_case["limit"])?;
    let bound = report.worst_case["bound"]
        .as_f64()
        .ok_or_else(|| Error::InvalidParam("worst case is missing the bound".into()))?;
    Ok(residual(op, &limit)? - bound)
}

/// Finite stand-in for "the sequence is Cauchy": over the last few
/// transitions the successive gaps must not grow and must have decayed
/// overall (or already sit at rounding scale).
fn cauchy_surrogate(points: &[LpVec]) -> Result<bool> {
    if points.len() < 2 {
        return Ok(true);
    }
    let take = (points.len() - 1).min(8);
    let tail = &points[points.len() - take - 1..];
    let mut diffs = Vec::with_capacity(take);
    for w in tail.windows(2) {
        diffs.push(w[0].distance(&w[1])?);
    }
    let scale = points.iter().map(LpVec::norm).fold(0.0, f64::max);
    let settled = tol::EXACT_IDENTITY * (1.0 + scale);
    if diffs.iter().all(|d| *d <= settled) {
        return Ok(true);
    }
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + settled);
    let decayed = *diffs.last().expect("nonempty") <= 0.9 * diffs[0] + settled;
    Ok(monotone && decayed)
}

fn vec_from_json(value: &Value) -> Result<LpVec> {
    let coords: Vec<f64> = value
        .as_array()
        .ok_or_else(|| Error::InvalidParam("expected a coordinate array".into()))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::InvalidParam("non-numeric coordinate".into())))
        .collect::<Result<_>>()?;
    LpVec::new(coords, 2.0)
}
