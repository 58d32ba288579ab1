//! Evaluation of the complex potential and the fields derived from it.
//!
//! In the annulus frame the solution is the real (LC) or imaginary (HC) part
//! of `Phi(zeta) = beta/2 + beta/(zeta - 1) + F(zeta) - F(1/zeta)` with
//! `F(zeta) = sum c(n) zeta^n`. Pulled back to the physical plane,
//! `W(z) = Phi(T(z)) = z + F(zeta) - F(1/zeta)` and
//! `W'(z) = 1 - ((zeta - 1)^2/beta) (F'(zeta) + zeta^-2 F'(1/zeta))`.
//! Gradients are always taken from `W'`, never by differencing.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::ddouble::{ComplexDd, DoubleDouble as Dd};
use crate::error::{invalid, Error, Result};
use crate::geometry::{AnnulusPoint, ConformalFrame, ANNULUS_SLACK};
use crate::operator::SpectralSolution;
use crate::parallel::{map_range, Execution};

type C64 = Complex64;

/// Which boundary-value problem the potential represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldMode {
    /// LC problem with `h = x1`; the field is `u = Re W`.
    LcX1,
    /// HC problem with `h = x2`; the field is `v = Im W`.
    HcX2,
}

/// Tail targets for the series cutoff, relative to `beta`.
const TAIL_F64: f64 = 5.421010862427522e-20; // 2^-64
const TAIL_DD: f64 = 7.703719777548943e-34; // 2^-110
const CUTOFF_LEVELS: usize = 64;

/// Picks, per evaluation point, how many terms of the series matter.
///
/// The discarded tail `sum_{n>m} n^2 |c(n)| s^n` grows with `s`, so it is
/// tabulated exactly at moduli `s_0 < ... < s_L` spanning the annulus and a
/// query at `s` uses the next level up. Coefficients that vanish to rounding
/// (the neutral case) need no terms at all.
#[derive(Debug)]
struct SeriesCutoff {
    ln_lo: f64,
    step: f64,
    len: usize,
    /// Per level: terms needed for the binary64 and the extended target.
    levels: Vec<(usize, usize)>,
}

impl SeriesCutoff {
    fn new(sol: &SpectralSolution) -> Self {
        let ln_rho = sol.frame().ln_rho();
        let beta = sol.frame().beta();
        let c = sol.c();
        let ln_lo = ln_rho;
        let ln_hi = -ln_rho + 4.0 * ANNULUS_SLACK;
        let step = (ln_hi - ln_lo) / (CUTOFF_LEVELS - 1) as f64;
        // Half the target absorbs rounding in the running powers.
        let f64_target = 0.5 * TAIL_F64 * beta;
        let dd_target = 0.5 * TAIL_DD * beta;
        let levels = (0..CUTOFF_LEVELS)
            .map(|j| {
                let s = (ln_lo + step * j as f64).exp();
                let mut terms = Vec::with_capacity(c.len());
                let mut pow = 1.0;
                for (k, ck) in c.iter().enumerate() {
                    pow *= s;
                    let n = (k + 1) as f64;
                    terms.push(n * n * ck.abs() * pow);
                }
                // Walking down from the top, `tail` is what keeping the
                // first m coefficients discards.
                let (mut need_f64, mut need_dd) = (None, None);
                let mut tail = 0.0;
                for m in (0..c.len()).rev() {
                    tail += terms[m];
                    if tail > f64_target && need_f64.is_none() {
                        need_f64 = Some(m + 1);
                    }
                    if tail > dd_target && need_dd.is_none() {
                        need_dd = Some(m + 1);
                    }
                }
                (need_f64.unwrap_or(0), need_dd.unwrap_or(0))
            })
            .collect();
        Self {
            ln_lo,
            step,
            len: c.len(),
            levels,
        }
    }

    /// Number of leading coefficients needed at modulus `s`.
    fn terms(&self, s: f64, extended: bool) -> usize {
        let pos = ((s.ln() - self.ln_lo) / self.step).ceil();
        if !(pos < CUTOFF_LEVELS as f64) {
            return self.len;
        }
        let (a, b) = self.levels[pos.max(0.0) as usize];
        if extended {
            b
        } else {
            a
        }
    }
}

/// `Phi` together with its evaluation policy.
#[derive(Debug, Clone)]
pub struct ComplexPotential {
    sol: Arc<SpectralSolution>,
    mode: FieldMode,
    alpha: f64,
    cutoff: Arc<SeriesCutoff>,
}

impl ComplexPotential {
    /// The LC potential (`h = x1`) of a solved configuration.
    pub fn new(sol: SpectralSolution) -> Self {
        let cutoff = Arc::new(SeriesCutoff::new(&sol));
        Self {
            sol: Arc::new(sol),
            mode: FieldMode::LcX1,
            alpha: 0.0,
            cutoff,
        }
    }

    /// Same coefficients, HC reading with parameter `alpha`.
    pub(crate) fn as_hc(&self, alpha: f64) -> Self {
        Self {
            sol: Arc::clone(&self.sol),
            mode: FieldMode::HcX2,
            alpha,
            cutoff: Arc::clone(&self.cutoff),
        }
    }

    pub fn frame(&self) -> &ConformalFrame {
        self.sol.frame()
    }

    pub fn solution(&self) -> &SpectralSolution {
        &self.sol
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    /// LC parameter `gamma` of the underlying solve.
    pub fn gamma(&self) -> f64 {
        self.sol.gamma()
    }

    /// HC parameter; zero for an LC potential.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn terms(&self, s: f64) -> usize {
        self.cutoff.terms(s, false)
    }

    fn terms_dd(&self, s: f64) -> usize {
        self.cutoff.terms(s, true)
    }

    /// `F(zeta)` with `w = zeta - 1` supplied separately; see [`horner_shifted`].
    fn f_at(&self, zeta: C64, w: C64) -> C64 {
        horner_shifted(self.sol.c(), self.terms(zeta.norm()), w)
    }

    fn df(&self, zeta: C64) -> C64 {
        horner_df(self.sol.c(), self.terms(zeta.norm()), zeta)
    }

    /// `W'(z)` at an annulus point.
    pub(crate) fn derivative_at(&self, p: &AnnulusPoint) -> C64 {
        let m = self.terms(p.zeta.norm()).max(self.terms(p.inv_zeta.norm()));
        let (d_in, d_out) = horner_df2(self.sol.c(), m, p.zeta, p.inv_zeta);
        let g1 = d_in + p.inv_zeta * p.inv_zeta * d_out;
        let w = p.zeta_minus_one;
        1.0 - w * w / self.frame().beta() * g1
    }

    /// `(W(z), W'(z))` at an annulus point with physical image `z`.
    pub(crate) fn value_and_derivative_at(&self, p: &AnnulusPoint, z: C64) -> (C64, C64) {
        let dw = self.derivative_at(p);
        (z + self.series_difference(p), dw)
    }

    /// `F(zeta) - F(1/zeta) = W(z) - z`.
    pub(crate) fn series_difference(&self, p: &AnnulusPoint) -> C64 {
        let w = p.zeta_minus_one;
        // 1/zeta - 1 = -(zeta - 1)/zeta
        let w_inv = -w * p.inv_zeta;
        self.f_at(p.zeta, w) - self.f_at(p.inv_zeta, w_inv)
    }

    fn read(&self, w: C64) -> f64 {
        match self.mode {
            FieldMode::LcX1 => w.re,
            FieldMode::HcX2 => w.im,
        }
    }

    fn grad_from(&self, dw: C64) -> (f64, f64) {
        match self.mode {
            FieldMode::LcX1 => (dw.re, -dw.im),
            FieldMode::HcX2 => (dw.im, dw.re),
        }
    }

    /// `(W', W'')` at a physical point, in double-double.
    pub(crate) fn derivatives_dd(&self, z: ComplexDd) -> (ComplexDd, ComplexDd) {
        let beta = Dd::from(self.frame().beta());
        let half = ComplexDd::real(beta.mul_f64(0.5));
        let zm = z - half;
        let zp = z + half;
        let w = ComplexDd::real(beta) / zm; // zeta - 1
        let zeta = w.add_real(Dd::ONE);
        let inv = zm / zp;
        let c = self.sol.c_extended();
        let (d1_in, d2_in) = horner_dd(c, self.terms_dd(zeta.to_complex64().norm()), zeta);
        let (d1_out, d2_out) = horner_dd(c, self.terms_dd(inv.to_complex64().norm()), inv);
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let g1 = d1_in + inv2 * d1_out;
        let g2 = d2_in - (inv3 * d1_out).scale_f64(2.0) - inv2 * inv2 * d2_out;
        let w2 = w * w;
        let w3 = w2 * w;
        let inv_beta = beta.recip();
        let dw = ComplexDd::ONE - (w2 * g1).scale(inv_beta);
        let ddw = (w3 * w * g2 + (w3 * g1).scale_f64(2.0)).scale(inv_beta * inv_beta);
        (dw, ddw)
    }
}

/// `F(1 + w) = sum_{n<=m} c(n) (1 + w)^n`.
///
/// Near `|zeta| = 1` the series has tens of thousands of slowly decaying
/// terms, and plain Horner in binary64 loses about `sqrt(m)` ulps of `|F|`,
/// plus `|F'| ulp` from rounding `zeta` itself. Stepping as
/// `p <- p + (p w + c)` with `w` exact and `p` carried in double-double
/// keeps the value accurate to a few ulps at about four times the cost.
fn horner_shifted(c: &[f64], m: usize, w: C64) -> C64 {
    if m == 0 {
        return C64::new(0.0, 0.0);
    }
    let mut re = Dd::from(c[m - 1]);
    let mut im = Dd::ZERO;
    let step = |re: Dd, im: Dd, add: f64| {
        let (hr, lr, hi, li) = (re.hi(), re.lo(), im.hi(), im.lo());
        let tr = (hr * w.re - hi * w.im) + (lr * w.re - li * w.im) + add;
        let ti = (hr * w.im + hi * w.re) + (lr * w.im + li * w.re);
        (re.add_f64(tr), im.add_f64(ti))
    };
    for k in (0..m - 1).rev() {
        (re, im) = step(re, im, c[k]);
    }
    let (re, im) = step(re, im, 0.0);
    C64::new(re.to_f64(), im.to_f64())
}

/// `F(z) = sum_{n<=m} c(n) z^n` and `F'(z)`.
#[cfg(test)]
fn horner_f_df(c: &[f64], m: usize, z: C64) -> (C64, C64) {
    if m == 0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    let mut p = C64::new(c[m - 1], 0.0);
    let mut q = C64::new(m as f64 * c[m - 1], 0.0);
    for k in (0..m - 1).rev() {
        p = p * z + c[k];
        q = q * z + (k + 1) as f64 * c[k];
    }
    (p * z, q)
}

/// `F'` at two points in one pass; the two Horner chains are independent,
/// which roughly halves the latency-bound cost of the loop.
fn horner_df2(c: &[f64], m: usize, z1: C64, z2: C64) -> (C64, C64) {
    if m == 0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    // Lane j holds the chain for z_j; written over [f64; 2] so that the
    // compiler keeps both chains in one vector register.
    let zr = [z1.re, z2.re];
    let zi = [z1.im, z2.im];
    let top = m as f64 * c[m - 1];
    let mut pr = [top; 2];
    let mut pi = [0.0; 2];
    for k in (0..m - 1).rev() {
        let a = (k + 1) as f64 * c[k];
        let mut nr = [0.0; 2];
        let mut ni = [0.0; 2];
        for j in 0..2 {
            nr[j] = pr[j] * zr[j] - pi[j] * zi[j] + a;
            ni[j] = pr[j] * zi[j] + pi[j] * zr[j];
        }
        pr = nr;
        pi = ni;
    }
    (C64::new(pr[0], pi[0]), C64::new(pr[1], pi[1]))
}

fn horner_df(c: &[f64], m: usize, z: C64) -> C64 {
    if m == 0 {
        return C64::new(0.0, 0.0);
    }
    let mut q = C64::new(m as f64 * c[m - 1], 0.0);
    for k in (0..m - 1).rev() {
        q = q * z + (k + 1) as f64 * c[k];
    }
    q
}

/// `F'(z)` and `F''(z)` in double-double.
fn horner_dd(c: &[Dd], m: usize, z: ComplexDd) -> (ComplexDd, ComplexDd) {
    let mut d1 = ComplexDd::ZERO;
    let mut d2 = ComplexDd::ZERO;
    for k in (0..m).rev() {
        let n = (k + 1) as f64;
        // d2 accumulates sum n(n-1) c(n) z^{n-2}; its Horner step runs one
        // index behind d1's.
        if k + 1 < m {
            d2 = d2 * z + ComplexDd::real(c[k + 1].mul_f64((n + 1.0) * n));
        }
        d1 = d1 * z + ComplexDd::real(c[k].mul_f64(n));
    }
    (d1, d2)
}

fn check_annulus(frame: &ConformalFrame, zeta: C64) -> Result<()> {
    let m = zeta.norm();
    let inner = frame.rho();
    let outer = 1.0 / frame.rho();
    if !(m >= inner * (1.0 - ANNULUS_SLACK) && m <= outer * (1.0 + ANNULUS_SLACK)) {
        return Err(Error::AnnulusDomain {
            modulus: m,
            inner,
            outer,
        });
    }
    Ok(())
}

/// `F(zeta)`; defined on `|zeta| <= 1/rho`.
pub fn series_f(pot: &ComplexPotential, zeta: C64) -> Result<C64> {
    let outer = 1.0 / pot.frame().rho();
    let m = zeta.norm();
    if !(m <= outer * (1.0 + ANNULUS_SLACK)) {
        return Err(Error::AnnulusDomain {
            modulus: m,
            inner: 0.0,
            outer,
        });
    }
    Ok(pot.f_at(zeta, zeta - 1.0))
}

/// `F'(zeta)`; defined on `|zeta| <= 1/rho`.
pub fn series_df(pot: &ComplexPotential, zeta: C64) -> Result<C64> {
    series_f(pot, zeta)?;
    Ok(pot.df(zeta))
}

/// The annulus-frame potential: `Re Phi(zeta)` (LC) or `Im Phi(zeta)` (HC).
pub fn annulus_potential(pot: &ComplexPotential, zeta: C64) -> Result<f64> {
    check_annulus(pot.frame(), zeta)?;
    let w = zeta - 1.0;
    if w.norm() < 1e-14 {
        return Err(Error::SingularPoint);
    }
    let beta = pot.frame().beta();
    let inv = zeta.inv();
    let phi = 0.5 * beta + beta / w + pot.f_at(zeta, w) - pot.f_at(inv, -w * inv);
    Ok(pot.read(phi))
}

/// The field (`u` for LC, `v` for HC) at a physical point of the closed matrix.
pub fn eval_u(pot: &ComplexPotential, z: C64) -> Result<f64> {
    let p = pot.frame().annulus_point(z)?;
    Ok(pot.read(z + pot.series_difference(&p)))
}

/// `W'(z)`; `|grad u| = |W'|` in both modes.
pub fn eval_derivative(pot: &ComplexPotential, z: C64) -> Result<C64> {
    let p = pot.frame().annulus_point(z)?;
    Ok(pot.derivative_at(&p))
}

/// `(u_x, u_y)` for LC, `(v_x, v_y) = (Im W', Re W')` for HC.
pub fn eval_grad(pot: &ComplexPotential, z: C64) -> Result<(f64, f64)> {
    Ok(pot.grad_from(eval_derivative(pot, z)?))
}

/// `W''(z)` via double-double evaluation.
pub fn eval_second_derivative(pot: &ComplexPotential, z: C64) -> Result<C64> {
    pot.frame().annulus_point(z)?;
    Ok(pot.derivatives_dd(z.into()).1.to_complex64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
    pub grad_norm: f64,
}

pub fn eval_sample(pot: &ComplexPotential, z: C64) -> Result<FieldSample> {
    let p = pot.frame().annulus_point(z)?;
    let (w, dw) = pot.value_and_derivative_at(&p, z);
    let (ux, uy) = pot.grad_from(dw);
    Ok(FieldSample {
        x: z.re,
        y: z.im,
        u: pot.read(w),
        ux,
        uy,
        grad_norm: ux.hypot(uy),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0;
        if !ok {
            return Err(invalid(
                "bbox",
                format!("need finite x0 < x1 and y0 < y1, got ({x0}, {y0}, {x1}, {y1})"),
            ));
        }
        Ok(Self { x0, y0, x1, y1 })
    }
}

/// Samples on an `nx x ny` lattice, row-major with `y` outer; nodes inside an
/// inclusion are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub bbox: BoundingBox,
    pub samples: Vec<Option<FieldSample>>,
}

impl FieldGrid {
    pub fn present(&self) -> impl Iterator<Item = &FieldSample> {
        self.samples.iter().flatten()
    }
}

fn lattice(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    if k + 1 == n {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (n - 1) as f64
    }
}

pub fn field_grid(pot: &ComplexPotential, bbox: BoundingBox, nx: usize, ny: usize) -> Result<FieldGrid> {
    field_grid_with(pot, bbox, nx, ny, Execution::default())
}

pub fn field_grid_with(
    pot: &ComplexPotential,
    bbox: BoundingBox,
    nx: usize,
    ny: usize,
    exec: Execution,
) -> Result<FieldGrid> {
    if nx < 2 || ny < 2 {
        return Err(invalid("grid", format!("need nx, ny >= 2, got {nx} x {ny}")));
    }
    let samples = map_range(nx * ny, exec, |k| {
        let (i, j) = (k % nx, k / nx);
        let z = C64::new(lattice(bbox.x0, bbox.x1, i, nx), lattice(bbox.y0, bbox.y1, j, ny));
        eval_sample(pot, z).ok()
    });
    Ok(FieldGrid {
        nx,
        ny,
        bbox,
        samples,
    })
}

/// Gap points sampled by [`sup_grad`].
pub const SUP_GAP_POINTS: usize = 512;
/// Angles per offset circle sampled by [`sup_grad`].
pub const SUP_CIRCLE_POINTS: usize = 1024;
/// Lattice side sampled by [`sup_grad`].
pub const SUP_GRID_SIDE: usize = 64;
/// Offset of the sampling circles, relative to `r`.
pub const SUP_OFFSET: f64 = 1e-3;

/// Sampling points used by [`sup_grad`]: the gap segment, two circles just
/// outside the inclusions and a coarse lattice on `[-2r, 2r]^2`.
pub fn sup_sample_points(frame: &ConformalFrame) -> Vec<C64> {
    let r = frame.radius();
    let eps = frame.gap();
    let mut pts = Vec::with_capacity(SUP_GAP_POINTS + 2 * SUP_CIRCLE_POINTS + SUP_GRID_SIDE.pow(2));
    for k in 0..SUP_GAP_POINTS {
        let x = -0.5 * eps + eps * (k as f64 + 0.5) / SUP_GAP_POINTS as f64;
        pts.push(C64::new(x, 0.0));
    }
    let rad = r * (1.0 + SUP_OFFSET);
    let cx = r + 0.5 * eps;
    for center in [-cx, cx] {
        for k in 0..SUP_CIRCLE_POINTS {
            let t = std::f64::consts::TAU * k as f64 / SUP_CIRCLE_POINTS as f64;
            pts.push(C64::new(center + rad * t.cos(), rad * t.sin()));
        }
    }
    for j in 0..SUP_GRID_SIDE {
        for i in 0..SUP_GRID_SIDE {
            pts.push(C64::new(
                lattice(-2.0 * r, 2.0 * r, i, SUP_GRID_SIDE),
                lattice(-2.0 * r, 2.0 * r, j, SUP_GRID_SIDE),
            ));
        }
    }
    pts
}

/// Sampled estimate (a lower estimate) of `sup |grad u|` over the matrix.
pub fn sup_grad(pot: &ComplexPotential) -> f64 {
    sup_grad_with(pot, Execution::default())
}

pub fn sup_grad_with(pot: &ComplexPotential, exec: Execution) -> f64 {
    let pts = sup_sample_points(pot.frame());
    let vals = map_range(pts.len(), exec, |k| {
        pot.frame()
            .annulus_point(pts[k])
            .map(|p| pot.derivative_at(&p).norm())
            .unwrap_or(0.0)
    });
    vals.into_iter().fold(0.0, f64::max)
}
