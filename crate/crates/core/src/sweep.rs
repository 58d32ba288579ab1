//! Parameter sweeps of the field maximum against the gradient estimate.

use serde::Serialize;

use crate::bounds::{compute_bounds, gradient_sup_bound};
use crate::error::{invalid, Result};
use crate::field::{sup_grad_with, ComplexPotential};
use crate::geometry::ConformalFrame;
use crate::operator::solve;
use crate::parallel::{map_slice, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub r: f64,
    pub eps: f64,
    pub gamma: f64,
}

impl SweepConfig {
    pub fn new(r: f64, eps: f64, gamma: f64) -> Self {
        Self { r, eps, gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub eps: f64,
    pub gamma: f64,
    pub order: usize,
    pub sup_grad: f64,
    /// Infinite for the perfect-bonding baseline, which has no estimate.
    pub grad_bound: f64,
}

impl SweepRow {
    pub fn within_bound(&self) -> bool {
        self.sup_grad <= self.grad_bound
    }
}

/// `r ∈ {0.5, 1, 2} × ε ∈ {1, 1e-2, 1e-4, 1e-6} × γ ∈ {r/4, r, 4r}`.
pub fn acceptance_sweep() -> Vec<SweepConfig> {
    let mut out = Vec::with_capacity(36);
    for r in [0.5, 1.0, 2.0] {
        for eps in [1.0, 1e-2, 1e-4, 1e-6] {
            for gamma in [r / 4.0, r, 4.0 * r] {
                out.push(SweepConfig::new(r, eps, gamma));
            }
        }
    }
    out
}

pub fn sweep_row(cfg: &SweepConfig, tol: f64, exec: Execution) -> Result<SweepRow> {
    let frame = ConformalFrame::from_params(cfg.r, cfg.eps)?;
    let sol = solve(&frame, cfg.gamma, tol)?;
    let order = sol.order();
    let pot = ComplexPotential::new(sol);
    let grad_bound = if cfg.gamma > 0.0 {
        gradient_sup_bound(&compute_bounds(&frame, cfg.gamma)?)
    } else {
        f64::INFINITY
    };
    Ok(SweepRow {
        r: cfg.r,
        eps: cfg.eps,
        gamma: cfg.gamma,
        order,
        sup_grad: sup_grad_with(&pot, exec),
        grad_bound,
    })
}

/// One row per configuration, in input order under either policy.
pub fn run_sweep_with(configs: &[SweepConfig], tol: f64, exec: Execution) -> Result<Vec<SweepRow>> {
    map_slice(configs, exec, |c| sweep_row(c, tol, exec))
        .into_iter()
        .collect()
}

pub fn run_sweep(configs: &[SweepConfig], tol: f64) -> Result<Vec<SweepRow>> {
    run_sweep_with(configs, tol, Execution::default())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("points", format!("need two or more pairs, got {}/{}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("points", "log-log fit needs finite positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all abscissae are equal"));
    }
    Ok(sxy / sxx)
}
