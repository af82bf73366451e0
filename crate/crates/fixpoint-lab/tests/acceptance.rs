//! Acceptance suite: every release-gating check, one test per criterion,
//! each printing a single PASS/FAIL line (run with `--nocapture` to see the
//! lines for passing tests too).

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fixpoint_lab::center::{asymptotic_center, radius_gate, CenterSolver, OrbitSample};
use fixpoint_lab::cli::{run_experiment, ExperimentConfig, Overrides};
use fixpoint_lab::iterate::{
    chain, chain_contract_bound, picard, residual, schu, uniqueness_probe, IterationTrace,
    StepSchedule, StopReason, UniquenessVerdict,
};
use fixpoint_lab::operators::{
    affine_operator, example32_ball_operator, example32_operator, example_closed_form,
    local_lipschitz_probe, scale_operator, BetaSchedule, ExampleParams, OperatorSpec,
};
use fixpoint_lab::space::{FeasibleSet, LpVec};
use fixpoint_lab::smallest_enclosing_ball;
use fixpoint_lab::verify::{closedness_demo, demiclosedness_demo, lemma22_suite};

const DIM: usize = 32;
const PROBE_SEED: u64 = 20_240_811;

fn params() -> ExampleParams {
    ExampleParams::with_default_b(DIM).unwrap()
}

fn report(name: &str, passed: bool, detail: &str) {
    println!("acceptance {name}: {} ({detail})", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "acceptance {name} failed: {detail}");
}

fn criterion5_trace() -> (OperatorSpec, IterationTrace) {
    let op = example32_ball_operator(params()).unwrap();
    let q0 = LpVec::from_prefix(&[0.5], DIM, 2.0).unwrap();
    let steps = StepSchedule::constant(0.5).unwrap();
    let trace = schu(&op, &q0, &steps, 1e-6, 500).unwrap();
    (op, trace)
}

#[test]
fn a01_closed_form_orbit_equivalence() {
    let started = Instant::now();
    let p = params();
    let op = example32_operator(p.clone()).unwrap();
    let far = LpVec::basis(DIM, 1, 2.0).unwrap();
    let mut worst = (0usize, 0.0f64);
    for n in 2..=16 {
        let direct = op.iterate_n(&far, n).unwrap();
        let formula = example_closed_form(&p, n).unwrap();
        let err = direct.max_coord_diff(&formula).unwrap();
        if err > worst.1 {
            worst = (n, err);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "01 closed-form orbit equivalence",
        worst.1 <= 1e-12 && elapsed < 1.0,
        &format!("max coordinate error {:.3e} at n={} <= 1e-12; {elapsed:.3} s", worst.1, worst.0),
    );
}

#[test]
fn a02_locality_bound_against_the_product_schedule() {
    let started = Instant::now();
    let op = example32_operator(params()).unwrap();
    let schedule = BetaSchedule::product_of_b(params());
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 1..=8usize {
        let probe = local_lipschitz_probe(&op, n, 10_000, PROBE_SEED).unwrap();
        let bound = schedule.beta_at(n).unwrap();
        ok &= probe <= bound + 1e-9;
        rows.push(format!("n={n}: probe {probe:.9} vs product bound {bound:.9}"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "02 locality bound against the product schedule",
        ok && elapsed < 10.0,
        &format!("{}; {elapsed:.2} s", rows.join("; ")),
    );
}

#[test]
fn a03_far_pair_ratio_stays_below_a_quarter() {
    let op = example32_operator(params()).unwrap();
    let far = LpVec::basis(DIM, 1, 2.0).unwrap();
    let zero = LpVec::zero(DIM, 2.0).unwrap();
    let denom = far.distance(&zero).unwrap();
    let mut worst = (0usize, 0.0f64);
    for n in 2..=16 {
        let num = op
            .iterate_n(&far, n)
            .unwrap()
            .distance(&op.iterate_n(&zero, n).unwrap())
            .unwrap();
        let ratio = num / denom;
        if ratio > worst.1 {
            worst = (n, ratio);
        }
    }
    report(
        "03 far-pair ratio stays below a quarter",
        worst.1 <= 0.25,
        &format!("max ratio {:.6} at n={} <= 0.25", worst.1, worst.0),
    );
}

#[test]
fn a04_euclidean_two_point_identity_sweep() {
    let mut worst = (0usize, f64::NEG_INFINITY);
    for dim in [2usize, 8, 32, 64] {
        let reportp = lemma22_suite(dim, 10_000, 7 + dim as u64).unwrap();
        if reportp.max_violation > worst.1 {
            worst = (dim, reportp.max_violation);
        }
        assert!(reportp.passed, "dim {dim}");
    }
    report(
        "04 two-point identity sweep",
        worst.1 <= 1e-12,
        &format!("max violation {:.3e} at dim {} <= 1e-12", worst.1, worst.0),
    );
}

#[test]
fn a05_averaged_scheme_reaches_an_approximate_fixed_point() {
    let started = Instant::now();
    let (_, trace) = criterion5_trace();
    let running_min: Vec<f64> = trace
        .residuals
        .iter()
        .scan(f64::INFINITY, |acc, r| {
            *acc = acc.min(*r);
            Some(*acc)
        })
        .collect();
    let nonincreasing = running_min.windows(2).all(|w| w[1] <= w[0]);
    let reached = *running_min.last().unwrap() < 1e-6;
    let within_budget = trace.len() <= 501;
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "05 averaged scheme reaches an approximate fixed point",
        nonincreasing && reached && within_budget && elapsed < 5.0,
        &format!(
            "residual {:.3e} after {} steps (stop: {}); {elapsed:.2} s",
            trace.final_residual(),
            trace.len() - 1,
            trace.stop_reason.as_str()
        ),
    );
}

#[test]
fn a06_averaged_scheme_transition_identity() {
    let (op, trace) = criterion5_trace();
    let mut worst = 0.0f64;
    for n in 1..trace.len() {
        let lhs = trace.iterates[n].distance(&trace.iterates[n - 1]).unwrap();
        let iterated = op.iterate_n(&trace.iterates[n - 1], n).unwrap();
        let rhs = trace.steps[n - 1] * trace.iterates[n - 1].distance(&iterated).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    report(
        "06 averaged transition identity",
        worst <= 1e-12,
        &format!("max |lhs - rhs| {worst:.3e} over {} steps <= 1e-12", trace.len() - 1),
    );
}

#[test]
fn a07_residual_propagation_to_deeper_iterates() {
    let (op, trace) = criterion5_trace();
    let tail_start = trace.len().saturating_sub(12);
    let tail = &trace.iterates[tail_start..];
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for m in [2usize, 3, 4, 8] {
        let mut constant = 1.0;
        for j in 1..m {
            constant += op.schedule.beta_at(j, None).unwrap();
        }
        for q in tail {
            let lifted = op.iterate_n(q, m).unwrap().distance(q).unwrap();
            let base = residual(&op, q).unwrap();
            let slack = lifted - (constant * base + 1e-9);
            worst = worst.max(slack);
            ok &= slack <= 0.0;
        }
    }
    report(
        "07 residual propagation to deeper iterates",
        ok,
        &format!("max excess over (1 + sum beta_j) * residual + 1e-9: {worst:.3e}"),
    );
}

#[test]
fn a08_enclosing_ball_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let q_set = FeasibleSet::ball(LpVec::zero(2, 2.0).unwrap(), 10.0).unwrap();
    let solver = CenterSolver::default();
    let mut worst_ball = 0.0f64;
    let mut worst_center = 0.0f64;
    for _ in 0..1_000 {
        let count = rng.gen_range(3..=12);
        let points: Vec<LpVec> = (0..count)
            .map(|_| LpVec::new(vec![rng.gen::<f64>(), rng.gen::<f64>()], 2.0).unwrap())
            .collect();
        let (_, radius) = smallest_enclosing_ball(&points).unwrap();
        let brute = brute_force_ball_radius(&points);
        worst_ball = worst_ball.max((radius - brute).abs());

        let sample = OrbitSample::from_points(points, 0).unwrap();
        let solved = asymptotic_center(&sample, &q_set, &solver).unwrap();
        worst_center = worst_center.max((solved.radius - radius).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "08 enclosing-ball oracle equivalence",
        worst_ball <= 1e-9 && worst_center <= 1e-6 && elapsed < 30.0,
        &format!(
            "welzl vs brute {worst_ball:.3e} <= 1e-9; subgradient vs welzl {worst_center:.3e} <= 1e-6; {elapsed:.2} s"
        ),
    );
}

#[test]
fn a09_constrained_center_on_the_boundary() {
    let sample = OrbitSample::from_points(
        vec![
            LpVec::new(vec![0.0, 0.0], 2.0).unwrap(),
            LpVec::new(vec![2.0, 0.0], 2.0).unwrap(),
        ],
        0,
    )
    .unwrap();
    let q_set = FeasibleSet::ball(LpVec::zero(2, 2.0).unwrap(), 0.5).unwrap();
    let result = asymptotic_center(&sample, &q_set, &CenterSolver::default()).unwrap();

    // 1-D scan oracle over the segment the optimum must lie on
    let mut oracle = f64::INFINITY;
    let steps = 200_000;
    for i in 0..=steps {
        let t = -0.5 + i as f64 / steps as f64;
        let q = LpVec::new(vec![t, 0.0], 2.0).unwrap();
        let f = sample
            .points()
            .iter()
            .map(|p| p.distance(&q).unwrap())
            .fold(0.0f64, f64::max);
        oracle = oracle.min(f);
    }

    let target = LpVec::new(vec![0.5, 0.0], 2.0).unwrap();
    let center_err = result.center.distance(&target).unwrap();
    let radius_err = (result.radius - 1.5).abs();
    let oracle_err = (result.radius - oracle).abs();
    report(
        "09 constrained center on the boundary",
        center_err <= 1e-4 && radius_err <= 1e-4 && oracle_err <= 1e-4,
        &format!(
            "center off by {center_err:.3e}, radius off by {radius_err:.3e}, scan oracle off by {oracle_err:.3e} (<= 1e-4)"
        ),
    );
}

#[test]
fn a10_unique_fixed_points_and_chain_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let shift = LpVec::from_prefix(&[0.1], 2, 2.0).unwrap();
    let ops = [
        scale_operator(0.5, 2, 2.0, 10.0).unwrap(),
        affine_operator(0.5, shift, 10.0).unwrap(),
    ];
    let expected = [
        LpVec::zero(2, 2.0).unwrap(),
        LpVec::from_prefix(&[0.2], 2, 2.0).unwrap(),
    ];
    let tol = 1e-9;
    let mut detail = Vec::new();
    let mut ok = true;
    for (op, fixed_point) in ops.iter().zip(&expected) {
        let starts: Vec<LpVec> = (0..8)
            .map(|_| {
                LpVec::new(vec![rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0)], 2.0).unwrap()
            })
            .collect();
        let limits: Vec<LpVec> = starts
            .iter()
            .map(|q0| picard(op, q0, tol, 2_000).unwrap().final_iterate().clone())
            .collect();
        let mut spread = 0.0f64;
        for (i, a) in limits.iter().enumerate() {
            for b in &limits[i + 1..] {
                spread = spread.max(a.distance(b).unwrap());
            }
        }
        let verdict = uniqueness_probe(op, &starts, tol, 2_000).unwrap();
        let unique = match verdict {
            UniquenessVerdict::UniqueWithinTol(ref limit) => {
                limit.distance(fixed_point).unwrap() <= 1e-8
            }
            _ => false,
        };
        ok &= unique && spread < 1e-8;
        detail.push(format!("{}: spread {spread:.3e}", op.name));

        // chain bound: geometric decrease that dominates direct iteration
        let u = LpVec::new(vec![1.0, 0.0], 2.0).unwrap();
        let v = LpVec::new(vec![0.0, 1.0], 2.0).unwrap();
        let ch = chain(&u, &v, 0.4).unwrap();
        let mut previous = f64::INFINITY;
        for m in 0..=10usize {
            let bound = chain_contract_bound(op, &ch, 1, m, None).unwrap();
            let direct = op
                .iterate_n(&u, m)
                .unwrap()
                .distance(&op.iterate_n(&v, m).unwrap())
                .unwrap();
            ok &= direct <= bound + 1e-9;
            if m > 0 {
                ok &= bound <= 0.75 * previous + 1e-15;
            }
            previous = bound;
        }
    }
    report(
        "10 unique fixed points and chain bounds",
        ok,
        &format!("{}; chain bounds decrease at 0.75 and dominate direct iteration", detail.join("; ")),
    );
}

#[test]
fn a11_closedness_and_demiclosedness_demos() {
    let mut ok = true;
    let mut detail = Vec::new();

    let scale = scale_operator(0.5, DIM, 2.0, 10.0).unwrap();
    let q0 = LpVec::from_prefix(&[1.0], DIM, 2.0).unwrap();
    let tol = 1e-8;
    let trace = picard(&scale, &q0, tol, 500).unwrap();
    assert_eq!(trace.stop_reason, StopReason::ToleranceMet);
    let fp_like: Vec<LpVec> = trace
        .iterates
        .iter()
        .filter(|q| residual(&scale, q).unwrap() < tol)
        .cloned()
        .collect();
    let closed = closedness_demo(&scale, &fp_like, tol).unwrap();
    let demi = demiclosedness_demo(&scale, &trace, tol).unwrap();
    ok &= closed.passed && demi.passed;
    detail.push(format!(
        "scale: closedness {:.3e}, demiclosedness {:.3e}",
        closed.max_violation, demi.max_violation
    ));

    let example = example32_operator(params()).unwrap();
    let far = LpVec::basis(DIM, 1, 2.0).unwrap();
    let tol = 1e-9;
    let trace = picard(&example, &far, tol, 64).unwrap();
    assert_eq!(trace.stop_reason, StopReason::ToleranceMet);
    let fp_like: Vec<LpVec> = trace
        .iterates
        .iter()
        .filter(|q| residual(&example, q).unwrap() < tol)
        .cloned()
        .collect();
    let closed = closedness_demo(&example, &fp_like, tol).unwrap();
    let demi = demiclosedness_demo(&example, &trace, tol).unwrap();
    ok &= closed.passed && demi.passed;
    detail.push(format!(
        "example32 picard: closedness {:.3e}, demiclosedness {:.3e}",
        closed.max_violation, demi.max_violation
    ));

    let (ball_op, schu_trace) = criterion5_trace();
    let demi = demiclosedness_demo(&ball_op, &schu_trace, 1e-6).unwrap();
    ok &= demi.passed;
    detail.push(format!("example32 averaged: demiclosedness {:.3e}", demi.max_violation));

    report("11 closedness and demiclosedness demos", ok, &detail.join("; "));
}

#[test]
fn a12_cli_runs_are_byte_deterministic() {
    let cases = [
        serde_json::json!({
            "schema": 1,
            "space": { "dimension": 32, "p_exp": 2.0 },
            "operator": { "name": "scale", "params": { "theta": 0.5 } },
            "run": "picard",
            "run_params": { "q0": [1.0, 0.25], "tol": 1e-9, "max_iter": 200 },
            "output": { "format": "csv" }
        }),
        serde_json::json!({
            "schema": 1,
            "space": { "dimension": 32, "p_exp": 2.0 },
            "operator": { "name": "example32_ball" },
            "run": "schu",
            "run_params": { "q0": [0.5], "tol": 1e-6, "max_iter": 500,
                             "steps": { "kind": "constant", "gamma": 0.5 } },
            "output": { "format": "json", "full": true }
        }),
        serde_json::json!({
            "schema": 1,
            "space": { "dimension": 8, "p_exp": 2.0 },
            "operator": { "name": "scale", "params": { "theta": 0.5 } },
            "run": "center",
            "run_params": { "q0": [8.0, -3.0], "burn_in": 16, "window": 8 },
            "output": { "format": "json" }
        }),
        serde_json::json!({
            "schema": 1,
            "space": { "dimension": 32, "p_exp": 2.0 },
            "operator": { "name": "example32_ball" },
            "run": "gate",
            "run_params": { "q0": [0.5], "burn_in": 4, "window": 16, "r": 0.5 },
            "output": { "format": "json" }
        }),
        serde_json::json!({
            "schema": 1,
            "run": "suite",
            "run_params": { "suite": "lemma22", "dim": 8, "samples": 2000,
                             "seeds": [3, 1, 2] },
            "output": {}
        }),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, doc) in cases.iter().enumerate() {
        let cfg = ExperimentConfig::from_json(&doc.to_string()).unwrap();
        let mut bytes = Vec::new();
        for round in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let overrides = Overrides {
                out_dir: Some(dir.path().to_path_buf()),
                jobs: if round == 0 { Some(2) } else { None },
                ..Overrides::default()
            };
            let outcome = run_experiment(&cfg, &overrides).unwrap();
            assert_eq!(outcome.exit_code, 0, "case {i}");
            bytes.push(std::fs::read(&outcome.artifacts[0]).unwrap());
        }
        let same = bytes[0] == bytes[1];
        ok &= same;
        detail.push(format!("case {i} ({}): identical={same}", cfg.run.as_str()));
    }
    report("12 CLI runs are byte deterministic", ok, &detail.join("; "));
}

/// Brute-force 2-D minimal enclosing radius over pair diameters and triple
/// circumcircles.
fn brute_force_ball_radius(points: &[LpVec]) -> f64 {
    let covers = |cx: f64, cy: f64| -> f64 {
        points
            .iter()
            .map(|p| ((p.coord(1) - cx).powi(2) + (p.coord(2) - cy).powi(2)).sqrt())
            .fold(0.0, f64::max)
    };
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(covers(
                (a.coord(1) + b.coord(1)) / 2.0,
                (a.coord(2) + b.coord(2)) / 2.0,
            ));
        }
    }
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            for c in &points[j + 1..] {
                let (ax, ay) = (a.coord(1), a.coord(2));
                let (bx, by) = (b.coord(1), b.coord(2));
                let (cx, cy) = (c.coord(1), c.coord(2));
                let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
                if d.abs() < 1e-12 {
                    continue;
                }
                let ux = ((ax * ax + ay * ay) * (by - cy)
                    + (bx * bx + by * by) * (cy - ay)
                    + (cx * cx + cy * cy) * (ay - by))
                    / d;
                let uy = ((ax * ax + ay * ay) * (cx - bx)
                    + (bx * bx + by * by) * (ax - cx)
                    + (cx * cx + cy * cy) * (bx - ax))
                    / d;
                best = best.min(covers(ux, uy));
            }
        }
    }
    best
}
