//! Experiment execution: one config in, artifacts on disk out.
//!
//! Exit status contract: 0 for convergence / all-pass, 2 for a failed gate,
//! failed suite, or non-convergent run; config errors surface as `Err` and
//! the binary maps them to exit 1.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::catalog::{build_operator, is_known_suite};
use super::config::{
    coords_field, f64_field, str_field, u64_field, usize_field, ExperimentConfig, Format, RunKind,
};
use super::output;
use crate::center::{asymptotic_center, radius_gate, CenterSolver, OrbitSample};
use crate::iterate::{picard, residual, schu, IterationTrace, StepSchedule, StopReason};
use crate::operators::OperatorSpec;
use crate::space::LpVec;
use crate::verify::{closedness_demo, demiclosedness_demo, lemma22_suite, opial_demo, SuiteReport};
use crate::{Error, Result};

/// Command-line overrides layered on top of the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub full: Option<bool>,
    pub jobs: Option<usize>,
}

/// The runner's verdict: what it wrote and how the process should exit.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

pub const OUT_DIR_ENV: &str = "FIXPOINT_LAB_OUT";

pub fn run_experiment(cfg: &ExperimentConfig, overrides: &Overrides) -> Result<RunOutcome> {
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let full = overrides.full.unwrap_or(cfg.output.full);
    let artifact = artifact_path(cfg, &out_dir);

    match cfg.run {
        RunKind::Picard | RunKind::Schu => run_iteration(cfg, overrides, &artifact, full),
        RunKind::Center => run_center(cfg, &artifact),
        RunKind::Gate => run_gate(cfg, &artifact),
        RunKind::Suite => run_suite(cfg, overrides, &out_dir, &artifact),
    }
}

fn artifact_path(cfg: &ExperimentConfig, out_dir: &Path) -> PathBuf {
    let name = match cfg.output.path {
        Some(ref p) if p.is_absolute() => return p.clone(),
        Some(ref p) => p.clone(),
        None => {
            let ext = match (cfg.run, cfg.output.format) {
                (RunKind::Suite, _) => "json", // verdicts are JSON documents
                (_, Format::Csv) => "csv",
                (_, Format::Json) => "json",
            };
            PathBuf::from(format!("{}.{ext}", cfg.run.as_str()))
        }
    };
    out_dir.join(name)
}

fn write_artifact(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn required_operator(cfg: &ExperimentConfig) -> Result<OperatorSpec> {
    let op_cfg = cfg.operator.as_ref().ok_or_else(|| Error::Config {
        path: "operator".into(),
        message: format!("run kind {:?} needs an operator", cfg.run.as_str()),
    })?;
    build_operator(&op_cfg.name, &op_cfg.params, &cfg.space)
}

fn q0_from_params(cfg: &ExperimentConfig, path: &str) -> Result<LpVec> {
    let coords = coords_field(&cfg.run_params, path, "q0", None)?;
    LpVec::from_prefix(&coords, cfg.space.dimension, cfg.space.p_exp)
}

fn step_schedule_from_params(params: &Value, path: &str) -> Result<StepSchedule> {
    match params.get("steps") {
        None | Some(Value::Null) => StepSchedule::constant(0.5),
        Some(steps) => {
            let spath = format!("{path}.steps");
            match str_field(steps, &spath, "kind", Some("constant"))? {
                "constant" => StepSchedule::constant(f64_field(steps, &spath, "gamma", Some(0.5))?),
                "inverse_square" => StepSchedule::inverse_square(
                    f64_field(steps, &spath, "cap", Some(0.5))?,
                    f64_field(steps, &spath, "scale", Some(1.0))?,
                ),
                other => Err(Error::Config {
                    path: format!("{spath}.kind"),
                    message: format!("unknown step rule {other:?}"),
                }),
            }
        }
    }
}

fn run_iteration(
    cfg: &ExperimentConfig,
    _overrides: &Overrides,
    artifact: &Path,
    full: bool,
) -> Result<RunOutcome> {
    let path = "run_params";
    let op = required_operator(cfg)?;
    let q0 = q0_from_params(cfg, path)?;
    let tol = f64_field(&cfg.run_params, path, "tol", Some(1e-8))?;
    let max_iter = usize_field(&cfg.run_params, path, "max_iter", Some(1_000))?;

    let (trace, with_steps) = match cfg.run {
        RunKind::Picard => (picard(&op, &q0, tol, max_iter)?, false),
        RunKind::Schu => {
            // each averaged step applies the map n times, so the budget is
            // capped to keep total work quadratic at worst
            if max_iter > 1_000 {
                return Err(Error::Config {
                    path: format!("{path}.max_iter"),
                    message: "averaged runs are capped at 1000 steps".into(),
                });
            }
            let steps = step_schedule_from_params(&cfg.run_params, path)?;
            (schu(&op, &q0, &steps, tol, max_iter)?, true)
        }
        _ => unreachable!("dispatched on run kind"),
    };

    let bytes = match cfg.output.format {
        Format::Csv => output::trace_csv(&trace, with_steps).into_bytes(),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&output::trace_json(&trace, full))?;
            text.push('\n');
            text.into_bytes()
        }
    };
    write_artifact(artifact, &bytes)?;

    let converged = trace.stop_reason == StopReason::ToleranceMet;
    Ok(RunOutcome {
        exit_code: if converged { 0 } else { 2 },
        summary: format!(
            "{}: operator={} steps={} stop={} final_residual={:.3e} -> {}",
            cfg.run.as_str(),
            op.name,
            trace.len() - 1,
            trace.stop_reason.as_str(),
            trace.final_residual(),
            artifact.display()
        ),
        artifacts: vec![artifact.to_path_buf()],
    })
}

fn orbit_and_solver(cfg: &ExperimentConfig, op: &OperatorSpec) -> Result<(OrbitSample, CenterSolver)> {
    let path = "run_params";
    let q0 = q0_from_params(cfg, path)?;
    let burn_in = usize_field(&cfg.run_params, path, "burn_in", Some(8))?;
    let window = usize_field(&cfg.run_params, path, "window", Some(32))?;
    let sample = OrbitSample::from_orbit(op, &q0, burn_in, window)?;

    let defaults = CenterSolver::default();
    let solver = match cfg.run_params.get("solver") {
        None | Some(Value::Null) => defaults,
        Some(sv) => CenterSolver {
            step0: match sv.get("step0") {
                None | Some(Value::Null) => None,
                Some(_) => Some(f64_field(sv, "run_params.solver", "step0", None)?),
            },
            iters: usize_field(sv, "run_params.solver", "iters", Some(defaults.iters))?,
            tol: f64_field(sv, "run_params.solver", "tol", Some(defaults.tol))?,
        },
    };
    Ok((sample, solver))
}

fn run_center(cfg: &ExperimentConfig, artifact: &Path) -> Result<RunOutcome> {
    let op = required_operator(cfg)?;
    if !op.domain.is_convex() {
        return Err(Error::Config {
            path: "operator.name".into(),
            message: format!(
                "center solves need a convex domain; {} is not (try its ball restriction)",
                op.name
            ),
        });
    }
    let (sample, solver) = orbit_and_solver(cfg, &op)?;
    let result = asymptotic_center(&sample, &op.domain, &solver)?;
    let bytes = match cfg.output.format {
        Format::Csv => output::center_csv(&sample, &result).into_bytes(),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&output::center_json(&sample, &result))?;
            text.push('\n');
            text.into_bytes()
        }
    };
    write_artifact(artifact, &bytes)?;
    let solved = result.certified_gap <= solver.tol;
    Ok(RunOutcome {
        exit_code: if solved { 0 } else { 2 },
        summary: format!(
            "center: operator={} radius={:.6e} gap={:.3e} iterations={} -> {}",
            op.name,
            result.radius,
            result.certified_gap,
            result.iterations,
            artifact.display()
        ),
        artifacts: vec![artifact.to_path_buf()],
    })
}

fn run_gate(cfg: &ExperimentConfig, artifact: &Path) -> Result<RunOutcome> {
    let op = required_operator(cfg)?;
    let q_set = if op.domain.is_convex() {
        op.domain.clone()
    } else {
        return Err(Error::Config {
            path: "operator.name".into(),
            message: format!(
                "the radius gate minimises over a convex set; {} is not (try its ball restriction)",
                op.name
            ),
        });
    };
    let (sample, solver) = orbit_and_solver(cfg, &op)?;
    let r = f64_field(&cfg.run_params, "run_params", "r", Some(op.locality_radius))?;
    let gate = radius_gate(&sample, &q_set, r, &solver)?;
    let bytes = match cfg.output.format {
        Format::Csv => output::gate_csv(&sample, &gate, r).into_bytes(),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&output::gate_json(&sample, &gate, r))?;
            text.push('\n');
            text.into_bytes()
        }
    };
    write_artifact(artifact, &bytes)?;
    Ok(RunOutcome {
        exit_code: if gate.passes { 0 } else { 2 },
        summary: format!(
            "gate: operator={} rho_hat={:.6e} r={r:.6e} passes={} -> {}",
            op.name,
            gate.rho_hat,
            gate.passes,
            artifact.display()
        ),
        artifacts: vec![artifact.to_path_buf()],
    })
}

fn run_suite(
    cfg: &ExperimentConfig,
    overrides: &Overrides,
    _out_dir: &Path,
    artifact: &Path,
) -> Result<RunOutcome> {
    let path = "run_params";
    let suite = str_field(&cfg.run_params, path, "suite", None)?.to_string();
    if !is_known_suite(&suite) {
        return Err(Error::UnknownSuite(suite));
    }
    let reports: Vec<SuiteReport> = match suite.as_str() {
        "lemma22" => {
            let dim = usize_field(&cfg.run_params, path, "dim", Some(cfg.space.dimension))?;
            let samples = usize_field(&cfg.run_params, path, "samples", Some(10_000))?;
            let seeds = seed_list(cfg, overrides)?;
            let jobs = overrides.jobs.unwrap_or(1).max(1);
            run_seeded(&seeds, jobs, |seed| lemma22_suite(dim, samples, seed))?
        }
        "opial" => {
            let dim = usize_field(&cfg.run_params, path, "dim", Some(cfg.space.dimension))?;
            let candidates: Vec<LpVec> = match cfg.run_params.get("candidates") {
                None | Some(Value::Null) => {
                    vec![LpVec::from_prefix(&[0.5], dim, 2.0)?]
                }
                Some(Value::Array(items)) => items
                    .iter()
                    .enumerate()
                    .map(|(i, item)| {
                        let coords = super::config::coords_from(
                            item,
                            &format!("{path}.candidates[{i}]"),
                        )?;
                        LpVec::from_prefix(&coords, dim, 2.0)
                    })
                    .collect::<Result<_>>()?,
                Some(other) => {
                    return Err(Error::Config {
                        path: format!("{path}.candidates"),
                        message: format!("expected an array of arrays, got {other}"),
                    })
                }
            };
            vec![opial_demo(dim, &candidates)?]
        }
        "closedness" => {
            let op = required_operator(cfg)?;
            let q0 = q0_from_params(cfg, path)?;
            let tol = f64_field(&cfg.run_params, path, "tol", Some(1e-8))?;
            let max_iter = usize_field(&cfg.run_params, path, "max_iter", Some(1_000))?;
            let trace = picard(&op, &q0, tol, max_iter)?;
            let fp_like: Vec<LpVec> = trace
                .iterates
                .iter()
                .filter(|q| residual(&op, q).map(|r| r < tol).unwrap_or(false))
                .cloned()
                .collect();
            if fp_like.is_empty() {
                return Err(Error::Precondition(
                    "the run produced no approximate fixed points below tol".into(),
                ));
            }
            vec![closedness_demo(&op, &fp_like, tol)?]
        }
        "demiclosedness" => {
            let op = required_operator(cfg)?;
            let q0 = q0_from_params(cfg, path)?;
            let tol = f64_field(&cfg.run_params, path, "tol", Some(1e-8))?;
            let max_iter = usize_field(&cfg.run_params, path, "max_iter", Some(1_000))?;
            let trace: IterationTrace = match str_field(&cfg.run_params, path, "engine", Some("picard"))? {
                "picard" => picard(&op, &q0, tol, max_iter)?,
                "schu" => {
                    let steps = step_schedule_from_params(&cfg.run_params, path)?;
                    schu(&op, &q0, &steps, tol, max_iter.min(1_000))?
                }
                other => {
                    return Err(Error::Config {
                        path: format!("{path}.engine"),
                        message: format!("unknown engine {other:?}"),
                    })
                }
            };
            vec![demiclosedness_demo(&op, &trace, tol)?]
        }
        _ => unreachable!("checked against the catalog"),
    };

    let mut text = serde_json::to_string_pretty(&output::verdict_json(&reports))?;
    text.push('\n');
    write_artifact(artifact, text.as_bytes())?;

    let passed = reports.iter().all(|r| r.passed);
    Ok(RunOutcome {
        exit_code: if passed { 0 } else { 2 },
        summary: format!(
            "suite {suite}: {} report(s), passed={passed} -> {}\n{}",
            reports.len(),
            artifact.display(),
            output::verdict_table(&reports).trim_end()
        ),
        artifacts: vec![artifact.to_path_buf()],
    })
}

/// Checks a config end to end without executing it or touching the
/// filesystem: operator lookup, parameter ranges, suite names.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    let path = "run_params";
    match cfg.run {
        RunKind::Picard | RunKind::Schu => {
            required_operator(cfg)?;
            q0_from_params(cfg, path)?;
            let tol = f64_field(&cfg.run_params, path, "tol", Some(1e-8))?;
            let max_iter = usize_field(&cfg.run_params, path, "max_iter", Some(1_000))?;
            check_tol_and_budget(tol, max_iter)?;
            if cfg.run == RunKind::Schu {
                step_schedule_from_params(&cfg.run_params, path)?;
                if max_iter > 1_000 {
                    return Err(Error::Config {
                        path: format!("{path}.max_iter"),
                        message: "averaged runs are capped at 1000 steps".into(),
                    });
                }
            }
        }
        RunKind::Center | RunKind::Gate => {
            let op = required_operator(cfg)?;
            if !op.domain.is_convex() {
                return Err(Error::Config {
                    path: "operator.name".into(),
                    message: format!("{} needs a convex domain for center solves", op.name),
                });
            }
            q0_from_params(cfg, path)?;
            usize_field(&cfg.run_params, path, "burn_in", Some(8))?;
            let window = usize_field(&cfg.run_params, path, "window", Some(32))?;
            if window == 0 {
                return Err(Error::Config {
                    path: format!("{path}.window"),
                    message: "window must hold at least one point".into(),
                });
            }
            if let Some(sv) = cfg.run_params.get("solver").filter(|v| !v.is_null()) {
                let iters = usize_field(sv, "run_params.solver", "iters", Some(1))?;
                let tol = f64_field(sv, "run_params.solver", "tol", Some(1e-6))?;
                check_tol_and_budget(tol, iters)?;
            }
            if cfg.run == RunKind::Gate {
                let r = f64_field(&cfg.run_params, path, "r", Some(op.locality_radius))?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::Config {
                        path: format!("{path}.r"),
                        message: format!("gate radius must be > 0, got {r}"),
                    });
                }
            }
        }
        RunKind::Suite => {
            let suite = str_field(&cfg.run_params, path, "suite", None)?;
            if !is_known_suite(suite) {
                return Err(Error::UnknownSuite(suite.to_string()));
            }
            match suite {
                "lemma22" => {
                    let samples = usize_field(&cfg.run_params, path, "samples", Some(10_000))?;
                    if samples == 0 {
                        return Err(Error::Config {
                            path: format!("{path}.samples"),
                            message: "need at least one sample".into(),
                        });
                    }
                    seed_list(cfg, &Overrides::default())?;
                }
                "closedness" | "demiclosedness" => {
                    required_operator(cfg)?;
                    q0_from_params(cfg, path)?;
                    let tol = f64_field(&cfg.run_params, path, "tol", Some(1e-8))?;
                    let max_iter = usize_field(&cfg.run_params, path, "max_iter", Some(1_000))?;
                    check_tol_and_budget(tol, max_iter)?;
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn check_tol_and_budget(tol: f64, budget: usize) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Config {
            path: "run_params.tol".into(),
            message: format!("tolerance must be > 0, got {tol}"),
        });
    }
    if budget == 0 {
        return Err(Error::Config {
            path: "run_params.max_iter".into(),
            message: "iteration budget must be at least 1".into(),
        });
    }
    Ok(())
}

/// Seed set for fan-out runs: an explicit `seeds` array, else the single
/// `seed` (default 0), with the command-line seed overriding the latter.
fn seed_list(cfg: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<u64>> {
    if let Some(Value::Array(items)) = cfg.run_params.get("seeds") {
        let seeds = items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_u64().ok_or_else(|| Error::Config {
                    path: format!("run_params.seeds[{i}]"),
                    message: format!("expected a non-negative integer, got {v}"),
                })
            })
            .collect::<Result<Vec<u64>>>()?;
        if seeds.is_empty() {
            return Err(Error::Config {
                path: "run_params.seeds".into(),
                message: "seed list must not be empty".into(),
            });
        }
        return Ok(seeds);
    }
    if cfg.run_params.get("seeds").is_some_and(|v| !v.is_null()) {
        return Err(Error::Config {
            path: "run_params.seeds".into(),
            message: "expected an array of seeds".into(),
        });
    }
    let seed = match overrides.seed {
        Some(s) => s,
        None => u64_field(&cfg.run_params, "run_params", "seed", Some(0))?,
    };
    Ok(vec![seed])
}

/// Runs one job per seed, fanning out across up to `jobs` workers. Results
/// are merged in seed order regardless of completion order.
fn run_seeded(
    seeds: &[u64],
    jobs: usize,
    job: impl Fn(u64) -> Result<SuiteReport> + Sync,
) -> Result<Vec<SuiteReport>> {
    if jobs <= 1 || seeds.len() <= 1 {
        return seeds.iter().map(|s| job(*s)).collect();
    }
    let chunk = seeds.len().div_ceil(jobs);
    let chunks: Vec<Result<Vec<SuiteReport>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(|s| job(*s)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite worker panicked")).collect()
    });
    let mut merged = Vec::with_capacity(seeds.len());
    for part in chunks {
        merged.extend(part?);
    }
    Ok(merged)
}
