//! JSON report shapes; `schema/report.schema.json` describes them.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Params {
    pub r: f64,
    pub eps: f64,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub tol: f64,
}

#[derive(Serialize, Default)]
pub struct Residuals {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin_d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin_d2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin_const_d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin_const_d2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hc_d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hc_d2: Option<f64>,
    pub flux_d1: f64,
    pub flux_d2: f64,
    pub decay_product: f64,
}

#[derive(Serialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub kind: &'static str,
    pub params: Params,
    pub rho: f64,
    pub beta: f64,
    pub mu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda_i: f64,
    pub lambda_e: f64,
    pub tail_bound: f64,
    pub sup_grad: f64,
    /// `None` for perfect bonding, which has no estimate.
    pub grad_bound: Option<f64>,
    pub residuals: Residuals,
}

#[derive(Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub r: f64,
    pub gamma: f64,
    pub eps: Vec<f64>,
    pub sup_grad: Vec<f64>,
    pub slope: f64,
    pub max_min_ratio: f64,
    pub all_within_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_sup_grad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_slope: Option<f64>,
}

#[derive(Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Observed quantity. For a coefficient family, its worst normalized
    /// margin `(rhs - lhs + slack)/scale` against a limit of 0.
    pub value: f64,
    pub limit: f64,
    /// Distance to failure; negative means the check failed.
    pub margin: f64,
}

#[derive(Serialize)]
pub struct ConfigCheck {
    pub r: f64,
    pub eps: f64,
    pub gamma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub passed: bool,
    pub checks: Vec<CheckEntry>,
}

#[derive(Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub kind: &'static str,
    pub mode: &'static str,
    pub passed: bool,
    pub configurations: Vec<ConfigCheck>,
}
