//! The HC problem read off the same complex potential.
//!
//! If `W` solves the LC problem with bonding parameter `gamma`, then
//! `v = Im W` solves the HC problem with `alpha = gamma`: the Robin condition
//! on `Re W` turns into the surface-Laplacian condition on the harmonic
//! conjugate through Cauchy-Riemann. Only the reading of `W` changes.

use serde::Serialize;

use crate::ddouble::{ComplexDd, DoubleDouble as Dd};
use crate::error::{invalid, require_nonnegative, Result};
use crate::field::{ComplexPotential, FieldMode};
use crate::geometry::ConformalFrame;
use crate::operator::solve;
use crate::verify::{flux_integral, FluxReport};

pub const HC_TOL: f64 = 1e-8;
pub const HC_MIN_SAMPLES: usize = 64;

/// The HC potential `Im W` with `alpha = gamma` of an LC potential.
pub fn conjugate_potential(pot: &ComplexPotential) -> ComplexPotential {
    pot.as_hc(pot.gamma())
}

/// Solves directly for the HC potential with parameter `alpha`.
pub fn hc_potential(frame: &ConformalFrame, alpha: f64, tol: f64) -> Result<ComplexPotential> {
    require_nonnegative("alpha", alpha)?;
    let sol = solve(frame, alpha, tol)?;
    Ok(conjugate_potential(&ComplexPotential::new(sol)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HcResidual {
    /// `max |-d_nu v - alpha d_s^2 v|` on `∂D_1`, `∂D_2`.
    pub residual: [f64; 2],
    /// Largest `|W'|` over the samples of both circles.
    pub max_boundary_grad: f64,
    pub samples: usize,
}

impl HcResidual {
    pub fn worst(&self) -> f64 {
        self.residual[0].max(self.residual[1])
    }

    pub fn passed(&self) -> bool {
        self.worst() <= HC_TOL * self.max_boundary_grad.max(1.0)
    }
}

/// Residual of `-d_nu v = alpha d_s^2 v` at `m` equiangular points of each
/// boundary circle, `v = Im W`.
///
/// The circles are the images of `|zeta| = rho^{±1}` for the frame the
/// coefficients were solved in, and all evaluation runs in double-double:
/// the second tangential derivative magnifies coefficient noise by `n^2`.
pub fn hc_boundary_residual(pot: &ComplexPotential, alpha: f64, m: usize) -> Result<HcResidual> {
    require_nonnegative("alpha", alpha)?;
    if m < HC_MIN_SAMPLES {
        return Err(invalid("m", format!("need at least {HC_MIN_SAMPLES} samples, got {m}")));
    }
    let frame = pot.frame();
    let rho = Dd::ONE - Dd::from(frame.one_minus_rho());
    let beta = Dd::from(frame.beta());
    let rho2 = rho * rho;
    let denom = Dd::ONE - rho2;
    let radius = beta * rho / denom;
    let offset = beta.mul_f64(0.5) * (Dd::ONE + rho2) / denom;
    let radius_sq = radius * radius;

    let mut residual = [0.0f64; 2];
    let mut max_grad = 0.0f64;
    for (j, center) in [-offset, offset].into_iter().enumerate() {
        for k in 0..m {
            let theta = std::f64::consts::TAU * k as f64 / m as f64;
            let (s, c) = theta.sin_cos();
            let (c, s) = (Dd::from(c), Dd::from(s));
            let norm = (c * c + s * s).sqrt();
            let w = ComplexDd::new(c / norm, s / norm).scale(radius);
            let z = w.add_real(center);
            let (dw, ddw) = pot.derivatives_dd(z);
            let dn = (dw * w).im / radius;
            let dtt = (-(ddw * w * w) - dw * w).im;
            let res = -dn - (dtt / radius_sq).mul_f64(alpha);
            residual[j] = residual[j].max(res.to_f64().abs());
            max_grad = max_grad.max(dw.to_complex64().norm());
        }
    }
    Ok(HcResidual {
        residual,
        max_boundary_grad: max_grad,
        samples: m,
    })
}

/// Flux of `v` through both boundaries.
pub fn hc_flux(pot: &ComplexPotential, m: usize) -> Result<FluxReport> {
    if pot.mode() != FieldMode::HcX2 {
        return flux_integral(&conjugate_potential(pot), m);
    }
    flux_integral(pot, m)
}
