//! A-posteriori checks of a constructed potential: interface conditions,
//! flux balance, far-field decay, and a dense-solver oracle for the
//! coefficients.
//!
//! Boundary quantities are evaluated on the image circles `|zeta| = rho` and
//! `|zeta| = 1/rho` at equally spaced annulus angles. On such a circle every
//! series term is a single Fourier mode, so `F`, `F'` at all nodes come from
//! one FFT each. The node count is at least `N + 1`, so no mode aliases, and
//! the trapezoid rule is spectrally accurate for the periodic flux integrand.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{ComplexPotential, FieldMode};
use crate::geometry::ConformalFrame;
use crate::operator::assemble_system;

type C64 = Complex64;

/// Largest system the dense oracle will factor.
pub const ORACLE_MAX: usize = 4000;

pub const ROBIN_TOL: f64 = 1e-8;
pub const FLUX_TOL: f64 = 1e-10;
/// Allowed growth of `|z| |u - h|` from radius `1e2 r` to `1e4 r`.
pub const DECAY_GROWTH: f64 = 2.0;

/// Field data at one boundary node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TraceNode {
    #[cfg_attr(not(test), allow(dead_code))]
    pub z: C64,
    pub w: C64,
    pub dw: C64,
    /// Unit normal pointing from the inclusion into the matrix.
    pub normal: C64,
    /// Arclength weight of the node, `|dz/dphi| * 2 pi / M`.
    pub weight: f64,
}

/// Field data at `M >= max(m, N + 1)` nodes on `∂D_which`.
pub(crate) fn boundary_trace(pot: &ComplexPotential, which: u8, m: usize) -> Vec<TraceNode> {
    let frame = pot.frame();
    let c = pot.solution().c();
    let n = c.len();
    let len = m.max(n + 1).next_power_of_two();
    let ln_r0 = if which == 1 { frame.ln_rho() } else { -frame.ln_rho() };
    let r0 = if which == 1 { frame.rho() } else { 1.0 / frame.rho() };

    // Fourier data of F(zeta), zeta F'(zeta) on |zeta| = r0 (modes +n) and of
    // F(1/zeta), zeta^{-1} F'(1/zeta) (modes -n).
    let mut f_in = vec![C64::new(0.0, 0.0); len];
    let mut h_in = vec![C64::new(0.0, 0.0); len];
    let mut f_out = vec![C64::new(0.0, 0.0); len];
    let mut h_out = vec![C64::new(0.0, 0.0); len];
    for (k, &ck) in c.iter().enumerate() {
        let j = (k + 1) as f64;
        let up = ck * (j * ln_r0).exp();
        let down = ck * (-j * ln_r0).exp();
        f_in[k + 1] = C64::new(up, 0.0);
        h_in[k + 1] = C64::new(j * up, 0.0);
        f_out[k + 1] = C64::new(down, 0.0);
        h_out[k + 1] = C64::new(j * down, 0.0);
    }
    let mut planner = FftPlanner::<f64>::new();
    let inverse = planner.plan_fft_inverse(len);
    let forward = planner.plan_fft_forward(len);
    inverse.process(&mut f_in);
    inverse.process(&mut h_in);
    forward.process(&mut f_out);
    forward.process(&mut h_out);

    let beta = frame.beta();
    let sign = if which == 1 { -1.0 } else { 1.0 };
    let dphi = std::f64::consts::TAU / len as f64;
    (0..len)
        .map(|k| {
            let phi = dphi * k as f64;
            let p = frame.boundary_point(which, phi);
            let z = frame.physical(&p);
            let wm1 = p.zeta_minus_one;
            let g1 = (h_in[k] + h_out[k]) * p.inv_zeta;
            let dw = 1.0 - wm1 * wm1 / beta * g1;
            let w = z + f_in[k] - f_out[k];
            let dist2 = wm1.norm_sqr();
            let unit = C64::from_polar(1.0, phi);
            let normal = sign * (wm1 * wm1).conj() / dist2 * unit;
            TraceNode {
                z,
                w,
                dw,
                normal,
                weight: beta * r0 / dist2 * dphi,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinCircle {
    /// `max |g - mean(g)|` with `g = u - gamma d_nu u`.
    pub residual: f64,
    /// `mean(g)`, the interface constant.
    pub constant: f64,
}

impl RobinCircle {
    pub fn passed(&self) -> bool {
        self.residual <= ROBIN_TOL * (1.0 + self.constant.abs())
    }
}

/// `u - gamma d_nu u` on both boundaries, `u = Re W`.
///
/// Sampled at the trace nodes, which number at least `m`.
pub fn robin_residual(pot: &ComplexPotential, gamma: f64, m: usize) -> Result<[RobinCircle; 2]> {
    if m < 256 {
        return Err(invalid("m", format!("need at least 256 samples, got {m}")));
    }
    let circle = |which| {
        let trace = boundary_trace(pot, which, m);
        let g: Vec<f64> = trace
            .iter()
            .map(|t| t.w.re - gamma * (t.dw * t.normal).re)
            .collect();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let residual = g.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        RobinCircle {
            residual,
            constant: mean,
        }
    };
    Ok([circle(1), circle(2)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxReport {
    /// `∫_{∂D_j} d_nu u dσ` for `j = 1, 2` (`v` for an HC potential).
    pub flux: [f64; 2],
    /// Largest `|grad u|` on each boundary.
    pub max_boundary_grad: [f64; 2],
    pub r: f64,
}

impl FluxReport {
    pub fn passed(&self) -> bool {
        (0..2).all(|j| self.flux[j].abs() <= FLUX_TOL * self.r * self.max_boundary_grad[j].max(1.0))
    }
}

/// Trapezoid-rule flux through each boundary with at least `m` nodes.
pub fn flux_integral(pot: &ComplexPotential, m: usize) -> Result<FluxReport> {
    if m < 1024 {
        return Err(invalid("m", format!("need at least 1024 nodes, got {m}")));
    }
    let mut flux = [0.0; 2];
    let mut max_grad = [0.0f64; 2];
    for which in [1u8, 2] {
        let trace = boundary_trace(pot, which, m);
        let j = (which - 1) as usize;
        for t in &trace {
            let dn = t.dw * t.normal;
            let dn = match pot.mode() {
                FieldMode::LcX1 => dn.re,
                FieldMode::HcX2 => dn.im,
            };
            flux[j] += dn * t.weight;
            max_grad[j] = max_grad[j].max(t.dw.norm());
        }
    }
    Ok(FluxReport {
        flux,
        max_boundary_grad: max_grad,
        r: pot.frame().radius(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    /// `max_rays |z| |u(z) - h(z)|` at each radius.
    pub products: Vec<f64>,
}

impl DecayReport {
    pub fn max_product(&self) -> f64 {
        self.products.iter().copied().fold(0.0, f64::max)
    }

    /// Product at the largest radius is at most twice the product at the
    /// smallest radius.
    pub fn bounded(&self) -> bool {
        match (self.products.first(), self.products.last()) {
            (Some(&first), Some(&last)) => last <= DECAY_GROWTH * first || last <= 1e-14,
            _ => true,
        }
    }
}

pub const DECAY_RAYS: usize = 16;

/// `|z| |u - h|` along 16 rays at each radius (each `>= 10 r`).
pub fn decay_check(pot: &ComplexPotential, radii: &[f64]) -> Result<DecayReport> {
    let frame = pot.frame();
    let r = frame.radius();
    let mut products = Vec::with_capacity(radii.len());
    for &rad in radii {
        if !(rad >= 10.0 * r) || !rad.is_finite() {
            return Err(invalid("radii", format!("radius {rad} is below 10 r = {}", 10.0 * r)));
        }
        let mut worst = 0.0f64;
        for k in 0..DECAY_RAYS {
            let t = std::f64::consts::TAU * (k as f64 + 0.25) / DECAY_RAYS as f64;
            let z = C64::from_polar(rad, t);
            let p = frame.annulus_point(z)?;
            // u - h is the series part of W; no cancellation against z.
            let w = pot.series_difference(&p);
            let d = match pot.mode() {
                FieldMode::LcX1 => w.re,
                FieldMode::HcX2 => w.im,
            };
            worst = worst.max(rad * d.abs());
        }
        products.push(worst);
    }
    Ok(DecayReport {
        radii: radii.to_vec(),
        products,
    })
}

/// Solves the truncated system by dense LU with partial pivoting.
///
/// A brute-force reference for tests. It runs in plain binary64, so its own
/// error grows like `r/eps` ulps; at `eps/r <= 1e-4` it is the less accurate
/// of the two routes.
pub fn dense_oracle(frame: &ConformalFrame, gamma: f64, n: usize) -> Result<Vec<f64>> {
    if n > ORACLE_MAX {
        return Err(Error::OracleTooLarge {
            size: n,
            max: ORACLE_MAX,
        });
    }
    let sys = assemble_system(frame, gamma, n)?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = sys.diag()[k];
        if k + 1 < n {
            m[(k, k + 1)] = sys.off();
            m[(k + 1, k)] = sys.off();
        }
    }
    let rhs = DVector::from_column_slice(sys.rhs());
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| invalid("system", "dense factorization is singular"))?;
    Ok(x.iter().copied().collect())
}

/// Largest componentwise relative difference `|a - b| / |b|`.
pub fn oracle_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub robin_samples: usize,
    pub flux_nodes: usize,
    pub decay_radii: [f64; 3],
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            robin_samples: 256,
            flux_nodes: 1024,
            decay_radii: [1e2, 1e3, 1e4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub robin_residual_d1: f64,
    pub robin_residual_d2: f64,
    pub robin_const_d1: f64,
    pub robin_const_d2: f64,
    pub flux_d1: f64,
    pub flux_d2: f64,
    pub decay_product: f64,
    pub robin_passed: bool,
    pub flux_passed: bool,
    pub decay_passed: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.robin_passed && self.flux_passed && self.decay_passed
    }
}

/// Runs the interface, flux and decay checks on an LC potential. Decay radii
/// are in units of `r`.
pub fn verify(pot: &ComplexPotential, opts: &VerifyOptions) -> Result<VerificationReport> {
    let gamma = pot.gamma();
    let robin = robin_residual(pot, gamma, opts.robin_samples)?;
    let flux = flux_integral(pot, opts.flux_nodes)?;
    let r = pot.frame().radius();
    let radii: Vec<f64> = opts.decay_radii.iter().map(|k| k * r).collect();
    let decay = decay_check(pot, &radii)?;
    Ok(VerificationReport {
        robin_residual_d1: robin[0].residual,
        robin_residual_d2: robin[1].residual,
        robin_const_d1: robin[0].constant,
        robin_const_d2: robin[1].constant,
        flux_d1: flux.flux[0],
        flux_d2: flux.flux[1],
        decay_product: decay.max_product(),
        robin_passed: robin.iter().all(RobinCircle::passed),
        flux_passed: flux.passed(),
        decay_passed: decay.bounded(),
    })
}
