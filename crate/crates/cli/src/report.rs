use landscape_core::matrix::{symm_eig, DEFAULT_EIG_TOL};
use landscape_core::Matrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

/// Largest dimension still inlined in a report.
pub const INLINE_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            value: f64::from(u8::from(pass)),
            limit: 1.0,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub payload: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, payload: Value, checks: Vec<Check>, wall_time_secs: f64) -> Self {
        RunReport {
            passed: checks.iter().all(|c| c.pass),
            config,
            payload: summarize_matrices(payload),
            checks,
            wall_time_secs,
        }
    }
}

fn matrix_summary(m: &Matrix) -> Value {
    let mut out = Map::new();
    out.insert("rows".into(), json!(m.rows()));
    out.insert("cols".into(), json!(m.cols()));
    out.insert("summarized".into(), json!(true));
    out.insert("frobenius_norm".into(), json!(m.frobenius_norm()));
    out.insert("max_abs".into(), json!(m.max_abs()));
    if m.is_square() && m.asymmetry() <= 1e-10 * (1.0 + m.frobenius_norm()) {
        if let Ok(eig) = symm_eig(m, DEFAULT_EIG_TOL) {
            out.insert("min_eigenvalue".into(), json!(eig.min()));
            out.insert("max_eigenvalue".into(), json!(eig.max()));
        }
    }
    Value::Object(out)
}

fn looks_like_matrix(map: &Map<String, Value>) -> bool {
    map.len() == 3 && map.contains_key("rows") && map.contains_key("cols") && map.contains_key("data")
}

/// Replaces every serialized matrix larger than [`INLINE_LIMIT`] in either
/// dimension by a norm / eigenvalue summary.
pub fn summarize_matrices(value: Value) -> Value {
    match value {
        Value::Object(map) if looks_like_matrix(&map) => {
            let big = ["rows", "cols"]
                .iter()
                .any(|k| map[*k].as_u64().is_some_and(|v| v as usize > INLINE_LIMIT));
            if !big {
                return Value::Object(map);
            }
            match serde_json::from_value::<Matrix>(Value::Object(map.clone())) {
                Ok(m) => matrix_summary(&m),
                Err(_) => Value::Object(map),
            }
        }
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, summarize_matrices(v))).collect()),
        Value::Array(items) => Value::Array(items.into_iter().map(summarize_matrices).collect()),
        other => other,
    }
}
