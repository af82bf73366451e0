//! Artifact emission. All floats in CSV are written with 17 significant
//! digits so that files round-trip bit-exactly; JSON relies on serde_json's
//! shortest-exact float encoding.

use serde_json::{json, Value};

use crate::center::{CenterResult, GateResult, OrbitSample};
use crate::iterate::IterationTrace;
use crate::verify::SuiteReport;

/// 17 significant digits: enough to reconstruct the exact f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trace CSV. Columns are fixed per run type:
/// `n,residual,dist_to_final` for plain iteration,
/// `n,residual,step_gamma,dist_to_final` for the averaged scheme (the step
/// column holds the gamma applied when leaving row `n`; the final row has
/// none).
pub fn trace_csv(trace: &IterationTrace, with_steps: bool) -> String {
    let mut out = String::new();
    if with_steps {
        out.push_str("n,residual,step_gamma,dist_to_final\n");
    } else {
        out.push_str("n,residual,dist_to_final\n");
    }
    let last = trace.final_iterate();
    for (n, q) in trace.iterates.iter().enumerate() {
        let dist = q.distance(last).expect("trace iterates share the space");
        if with_steps {
            let gamma = trace.steps.get(n).map(|g| format_f64(*g)).unwrap_or_default();
            out.push_str(&format!(
                "{n},{},{gamma},{}\n",
                format_f64(trace.residuals[n]),
                format_f64(dist)
            ));
        } else {
            out.push_str(&format!(
                "{n},{},{}\n",
                format_f64(trace.residuals[n]),
                format_f64(dist)
            ));
        }
    }
    out
}

pub fn trace_json(trace: &IterationTrace, full: bool) -> Value {
    let last = trace.final_iterate();
    let dist_to_final: Vec<f64> = trace
        .iterates
        .iter()
        .map(|q| q.distance(last).expect("trace iterates share the space"))
        .collect();
    let mut doc = json!({
        "stop_reason": trace.stop_reason.as_str(),
        "residuals": trace.residuals,
        "steps": trace.steps,
        "dist_to_final": dist_to_final,
    });
    if full {
        doc["iterates"] = json!(trace.iterates);
    }
    doc
}

/// One summary row per orbit.
pub fn center_csv(sample: &OrbitSample, result: &CenterResult) -> String {
    format!(
        "burn_in,window,radius,iterations,certified_gap\n{},{},{},{},{}\n",
        sample.burn_in(),
        sample.window(),
        format_f64(result.radius),
        result.iterations,
        format_f64(result.certified_gap),
    )
}

pub fn center_json(sample: &OrbitSample, result: &CenterResult) -> Value {
    json!({
        "burn_in": sample.burn_in(),
        "window": sample.window(),
        "center": result.center,
        "radius": result.radius,
        "iterations": result.iterations,
        "certified_gap": result.certified_gap,
    })
}

pub fn gate_json(sample: &OrbitSample, gate: &GateResult, r: f64) -> Value {
    json!({
        "burn_in": sample.burn_in(),
        "window": sample.window(),
        "r": r,
        "rho_hat": gate.rho_hat,
        "passes": gate.passes,
        "center": gate.center,
    })
}

pub fn gate_csv(sample: &OrbitSample, gate: &GateResult, r: f64) -> String {
    format!(
        "burn_in,window,r,rho_hat,passes\n{},{},{},{},{}\n",
        sample.burn_in(),
        sample.window(),
        format_f64(r),
        format_f64(gate.rho_hat),
        gate.passes,
    )
}

/// Machine-readable verdict over a batch of suite reports.
pub fn verdict_json(reports: &[SuiteReport]) -> Value {
    json!({
        "passed": reports.iter().all(|r| r.passed),
        "suites": reports,
    })
}

/// Human-readable companion table.
pub fn verdict_table(reports: &[SuiteReport]) -> String {
    let mut out = format!("{:<16} {:>10} {:>14} {:>7}\n", "suite", "cases", "max_violation", "pass");
    for r in reports {
        out.push_str(&format!(
            "{:<16} {:>10} {:>14.3e} {:>7}\n",
            r.suite_name, r.cases_run, r.max_violation, r.passed
        ));
    }
    out
}
