//! The operator and suite catalog addressable by name from configs.

use serde_json::Value;

use super::config::{coords_field, f64_field, SpaceCfg};
use crate::operators::{
    affine_operator, example32_ball_operator, example32_operator, rotate_operator, scale_operator,
    ExampleParams, OperatorSpec,
};
use crate::space::LpVec;
use crate::{Error, Result};

struct CatalogEntry {
    name: &'static str,
    summary: &'static str,
    params: &'static str,
}

// Kept alphabetized; `list_catalog` prints in this order.
const OPERATORS: &[CatalogEntry] = &[
    CatalogEntry {
        name: "affine",
        summary: "T v = theta*v + shift on a ball around the origin",
        params: "theta in [0,1) (default 0.5), shift array (default [0.1]), domain_radius (default 10)",
    },
    CatalogEntry {
        name: "example32",
        summary: "quadratic-then-shift map on the radius-1/2 ball plus the isolated point (1,0,...)",
        params: "b array of coefficients in (0,1) (default exp(-2^-j)); dimension comes from space",
    },
    CatalogEntry {
        name: "example32_ball",
        summary: "the same map restricted to its convex ball component",
        params: "as example32",
    },
    CatalogEntry {
        name: "rotate",
        summary: "isometric rotation of the first two coordinates (no contraction)",
        params: "angle in radians (default 1.0), domain_radius (default 10)",
    },
    CatalogEntry {
        name: "scale",
        summary: "T v = theta*v on a ball around the origin",
        params: "theta in [0,1) (default 0.5), domain_radius (default 10)",
    },
];

const SUITES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "closedness",
        summary: "residual at the limit of a convergent approximate-fixed-point list stays within (1+beta_1)*tol",
        params: "operator required; q0 array, tol, max_iter",
    },
    CatalogEntry {
        name: "demiclosedness",
        summary: "final iterate of a convergent run is a fixed point up to (2+beta_1)*tol",
        params: "operator required; engine picard|schu, q0 array, tol, max_iter, gamma for schu",
    },
    CatalogEntry {
        name: "lemma22",
        summary: "Euclidean two-point convexity identity sampled over random pairs",
        params: "dim (default space.dimension), samples (default 10000), seed or seeds array",
    },
    CatalogEntry {
        name: "opial",
        summary: "drifting basis sequence prefers its weak limit over any other candidate center",
        params: "dim (default space.dimension), candidates array of arrays (default [[0.5]])",
    },
];

/// Stable, alphabetized listing of operators and suites.
pub fn list_catalog() -> String {
    let mut text = String::from("operators:\n");
    for entry in OPERATORS {
        text.push_str(&format!("  {:<16} {}\n", entry.name, entry.summary));
        text.push_str(&format!("  {:<16}   params: {}\n", "", entry.params));
    }
    text.push_str("suites:\n");
    for entry in SUITES {
        text.push_str(&format!("  {:<16} {}\n", entry.name, entry.summary));
        text.push_str(&format!("  {:<16}   params: {}\n", "", entry.params));
    }
    text
}

pub fn is_known_suite(name: &str) -> bool {
    SUITES.iter().any(|s| s.name == name)
}

/// Instantiates a catalog operator for the configured space.
pub fn build_operator(name: &str, params: &Value, space: &SpaceCfg) -> Result<OperatorSpec> {
    let path = "operator.params";
    match name {
        "example32" | "example32_ball" => {
            if space.p_exp != 2.0 {
                return Err(Error::Config {
                    path: "space.p_exp".into(),
                    message: "the example map lives in the Euclidean sequence space".into(),
                });
            }
            let ex_params = match params.get("b") {
                None | Some(Value::Null) => ExampleParams::with_default_b(space.dimension)?,
                Some(_) => {
                    let b = coords_field(params, path, "b", None)?;
                    ExampleParams::with_explicit_b(space.dimension, b)?
                }
            };
            if name == "example32" {
                example32_operator(ex_params)
            } else {
                example32_ball_operator(ex_params)
            }
        }
        "scale" => {
            let theta = f64_field(params, path, "theta", Some(0.5))?;
            let radius = f64_field(params, path, "domain_radius", Some(10.0))?;
            scale_operator(theta, space.dimension, space.p_exp, radius)
        }
        "affine" => {
            let theta = f64_field(params, path, "theta", Some(0.5))?;
            let radius = f64_field(params, path, "domain_radius", Some(10.0))?;
            let shift = coords_field(params, path, "shift", Some(&[0.1]))?;
            let shift = LpVec::from_prefix(&shift, space.dimension, space.p_exp)?;
            affine_operator(theta, shift, radius)
        }
        "rotate" => {
            if space.p_exp != 2.0 {
                return Err(Error::Config {
                    path: "space.p_exp".into(),
                    message: "rotation is an isometry only in the Euclidean norm".into(),
                });
            }
            let angle = f64_field(params, path, "angle", Some(1.0))?;
            let radius = f64_field(params, path, "domain_radius", Some(10.0))?;
            rotate_operator(angle, space.dimension, radius)
        }
        other => Err(Error::UnknownOperator(other.to_string())),
    }
}
