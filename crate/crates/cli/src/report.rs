//! Machine-readable reports.
//!
//! Every report embeds the exact run configuration that produced it plus a
//! tool-version string, so a report is sufficient to rerun the computation.
//! Computed numbers are rounded to 12 significant digits (round-half-even,
//! which is what Rust's float formatting does) before serialization so
//! emitted JSON and CSV are stable golden-test targets; the embedded
//! `run_config` keeps its inputs bit-exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use bisep::family::{CertificationRecord, Weights};

pub const TOOL_NAME: &str = "bisep";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

/// Exact inputs of a run, echoed verbatim into its report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Reproduce {
        which: String,
        tol_psd: Option<f64>,
        tol_herm: Option<f64>,
    },
    Certify {
        alpha: f64,
        beta: f64,
        gamma: f64,
        omega: Option<f64>,
        branch: Option<usize>,
        theta1: f64,
        theta2: f64,
        tol_psd: Option<f64>,
        tol_herm: Option<f64>,
    },
    Optimize {
        seed: u64,
        starts: usize,
        max_iters: usize,
        init: Option<[f64; 5]>,
        radius: Option<f64>,
        tol_psd: Option<f64>,
        tol_herm: Option<f64>,
    },
    Scan {
        grid: String,
        theta_steps: usize,
    },
    LocalBound {
        expression: String,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointSummary {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub branch: Option<usize>,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    pub biseparable_premise_passed: bool,
    pub bell_violated: bool,
}

/// Full certification + violation report for one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub tool: ToolInfo,
    pub run_config: RunConfig,
    pub point: PointSummary,
    pub omega_branches: Vec<f64>,
    pub weights: Weights,
    pub certification: CertificationRecord,
    pub correlation_tensor: BTreeMap<String, f64>,
    pub s_value: f64,
    pub local_bound: f64,
    pub verdicts: Verdicts,
}

impl ViolationReport {
    /// JSON value with every computed number rounded to 12 significant
    /// digits; the `run_config` subtree is left untouched.
    pub fn to_rounded_json(&self) -> Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut value {
            for (key, subtree) in map.iter_mut() {
                if key != "run_config" {
                    round_numbers(subtree);
                }
            }
        }
        value
    }
}

/// Report emitted when the requested point admits no valid state.
#[derive(Debug, Clone, Serialize)]
pub struct InfeasibilityReport {
    pub tool: ToolInfo,
    pub run_config: RunConfig,
    pub infeasible: String,
}

/// Rounds to 12 significant digits, ties to even.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Fixed-format number for CSV cells: 12 significant digits, scientific.
pub fn csv_number(x: f64) -> String {
    format!("{x:.11e}")
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig12(f)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}
