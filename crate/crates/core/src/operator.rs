//! The discrete Schrödinger system `H a = f` on the truncated half-line and
//! the coefficient sequences derived from its solution.
//!
//! `H = (gamma/beta^2)(-Δ_D + mu I) + V` with the Dirichlet convention
//! `a(0) = 0` and the cutoff `a(N+1) = 0`. The matrix is tridiagonal, symmetric
//! and strictly diagonally dominant, so it is eliminated without pivoting.
//!
//! The elimination and the conversion `a -> c` run in double-double
//! arithmetic. `H` has condition number of order `1/mu ~ r/eps`, and the
//! boundary residual checks differentiate the series twice, so binary64
//! coefficients carry too much noise at small gaps. Both the rounded binary64
//! sequences and the extended ones are kept.

use serde::Serialize;

use crate::ddouble::DoubleDouble as Dd;
use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};
use crate::geometry::ConformalFrame;

/// Default tail tolerance, in units of `beta`.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Largest truncation order accepted by [`choose_truncation`].
pub const TRUNCATION_CAP: usize = 2_000_000;
/// Smallest truncation order ever used.
pub const MIN_TRUNCATION: usize = 16;

/// Imperfect-bonding parameters; `gamma` drives the LC problem, `alpha` the
/// HC problem obtained by conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BondingConfig {
    pub gamma: f64,
    pub alpha: f64,
}

impl BondingConfig {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            gamma: require_nonnegative("gamma", gamma)?,
            alpha: require_nonnegative("alpha", alpha)?,
        })
    }

    pub fn lc(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0)
    }

    pub fn hc(alpha: f64) -> Result<Self> {
        Self::new(0.0, alpha)
    }
}

fn require_index(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::IndexOutOfRange {
            index: 0,
            lo: 1,
            hi: usize::MAX,
        })
    } else {
        Ok(())
    }
}

/// `V(n) = (1 - rho^{2n}) / (beta n (1 + rho^{2n}))`.
pub fn potential_v(frame: &ConformalFrame, n: usize) -> Result<f64> {
    require_index(n)?;
    let t = 2.0 * n as f64 * frame.ln_rho();
    // 1 - rho^{2n} via expm1 keeps full accuracy when rho is close to one.
    let one_minus = -t.exp_m1();
    Ok(one_minus / (frame.beta() * n as f64 * (1.0 + t.exp())))
}

/// `f(n) = 2 rho^n / (1 + rho^{2n})`.
pub fn source_f(frame: &ConformalFrame, n: usize) -> Result<f64> {
    require_index(n)?;
    let p = (n as f64 * frame.ln_rho()).exp();
    Ok(2.0 * p / (1.0 + p * p))
}

/// The envelope constant `C_D = 1/(1 - rho + gamma/r)`; `gamma = 0` gives
/// `1/(1 - rho)`.
pub fn envelope_constant(frame: &ConformalFrame, gamma: f64) -> f64 {
    1.0 / (frame.one_minus_rho() + gamma / frame.radius())
}

/// The truncated operator in binary64, mainly for inspection and for the
/// dense oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    diag: Vec<f64>,
    off: f64,
    rhs: Vec<f64>,
    margin_shift: f64,
}

pub fn assemble_system(frame: &ConformalFrame, gamma: f64, n: usize) -> Result<TridiagonalSystem> {
    let gamma = require_positive("gamma", gamma)?;
    if n == 0 {
        return Err(invalid("N", "truncation order must be at least 1"));
    }
    let g = gamma / (frame.beta() * frame.beta());
    let shift = g * (2.0 + frame.mu());
    let mut diag = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for k in 1..=n {
        diag.push(shift + potential_v(frame, k)?);
        rhs.push(source_f(frame, k)?);
    }
    Ok(TridiagonalSystem {
        diag,
        off: -g,
        rhs,
        margin_shift: g * frame.mu(),
    })
}

impl TridiagonalSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Diagonal entries, `diag()[n-1]` for row `n`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// The constant sub/super-diagonal entry `-gamma/beta^2`.
    pub fn off(&self) -> f64 {
        self.off
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `gamma mu / beta^2`, the lower bound on the spectrum.
    pub fn spectral_floor(&self) -> f64 {
        self.margin_shift
    }

    /// `diag(n) - 2|off|`, which equals `gamma mu/beta^2 + V(n)`.
    pub fn dominance_margin(&self, n: usize) -> f64 {
        self.diag[n - 1] - 2.0 * self.off.abs()
    }

    /// `H x` with `x(0) = x(N+1) = 0`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len(), "dimension mismatch");
        let n = x.len();
        (0..n)
            .map(|k| {
                let left = if k > 0 { x[k - 1] } else { 0.0 };
                let right = if k + 1 < n { x[k + 1] } else { 0.0 };
                self.diag[k] * x[k] + self.off * (left + right)
            })
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(h, v)| h * v).sum()
    }

    /// Row-sum norm `||H||_inf`.
    pub fn norm_inf(&self) -> f64 {
        self.diag
            .iter()
            .map(|d| d.abs() + 2.0 * self.off.abs())
            .fold(0.0, f64::max)
    }

    /// Thomas elimination in binary64.
    pub fn solve(&self) -> Vec<f64> {
        let n = self.len();
        let mut inv_m = vec![0.0; n];
        let mut y = vec![0.0; n];
        let o2 = self.off * self.off;
        let mut prev_inv = 0.0;
        let mut prev_y = 0.0;
        for k in 0..n {
            let m = self.diag[k] - o2 * prev_inv;
            inv_m[k] = 1.0 / m;
            y[k] = self.rhs[k] - self.off * prev_y * prev_inv;
            prev_inv = inv_m[k];
            prev_y = y[k];
        }
        let mut x = vec![0.0; n];
        let mut next = 0.0;
        for k in (0..n).rev() {
            x[k] = (y[k] - self.off * next) * inv_m[k];
            next = x[k];
        }
        x
    }
}

/// Frame quantities in double-double, with `rho = 1 - (1 - rho)` taken from
/// the accurately computed `1 - rho`.
struct FrameDd {
    rho: Dd,
    beta: Dd,
    mu: Dd,
}

impl FrameDd {
    fn new(frame: &ConformalFrame) -> Self {
        let omr = frame.one_minus_rho();
        let rho = Dd::sum_f64(1.0, -omr);
        Self {
            rho,
            beta: Dd::from(frame.beta()),
            mu: Dd::prod_f64(omr, omr) / rho,
        }
    }

    /// `rho^0, rho^1, ..., rho^len`.
    fn powers(&self, len: usize) -> Vec<Dd> {
        let mut p = Vec::with_capacity(len + 1);
        let mut acc = Dd::ONE;
        p.push(acc);
        for _ in 0..len {
            acc = acc * self.rho;
            p.push(acc);
        }
        p
    }

    /// `r beta = beta^2 / (1/rho - rho)`.
    fn r_beta(&self, frame: &ConformalFrame) -> Dd {
        let omr = Dd::from(frame.one_minus_rho());
        let gap = omr * (Dd::ONE + self.rho) / self.rho;
        self.beta.square() / gap
    }
}

/// Truncated coefficient sequences `a(n)`, `c(n)`, `n = 1..=N`, and the
/// interface constants.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    frame: ConformalFrame,
    gamma: f64,
    a: Vec<f64>,
    c: Vec<f64>,
    a_ext: Vec<Dd>,
    c_ext: Vec<Dd>,
    lambda_i: f64,
    lambda_e: f64,
    tail_bound: f64,
    residual_norm: f64,
    residual_scale: f64,
}

impl SpectralSolution {
    pub fn frame(&self) -> &ConformalFrame {
        &self.frame
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_perfect_bonding(&self) -> bool {
        self.gamma == 0.0
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// Flux coefficients; `a()[n-1]` is `a(n)`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Potential coefficients; `c()[n-1]` is `c(n)`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a_extended(&self) -> &[Dd] {
        &self.a_ext
    }

    pub fn c_extended(&self) -> &[Dd] {
        &self.c_ext
    }

    pub fn lambda_i(&self) -> f64 {
        self.lambda_i
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    /// Certified bound on `sup_{n>N} |a(n)|`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `||H a - f||_inf` for the stored binary64 `a`.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// `max(||f||_inf, ||a||_inf ||H||_inf)`, the scale `residual_norm` is
    /// measured against.
    pub fn residual_scale(&self) -> f64 {
        self.residual_scale
    }

    fn check_index(&self, n: usize) -> Result<usize> {
        if n == 0 || n > self.order() {
            Err(Error::IndexOutOfRange {
                index: n,
                lo: 1,
                hi: self.order(),
            })
        } else {
            Ok(n - 1)
        }
    }

    /// Adds `delta` to the stored `a(n)` only, leaving `c` untouched.
    /// Intended for negative controls.
    pub fn perturb_a(&mut self, n: usize, delta: f64) -> Result<()> {
        let k = self.check_index(n)?;
        self.a_ext[k] = self.a_ext[k].add_f64(delta);
        self.a[k] = self.a_ext[k].to_f64();
        Ok(())
    }

    /// Adds `delta` to the stored `c(n)` only. Intended for negative controls.
    pub fn perturb_c(&mut self, n: usize, delta: f64) -> Result<()> {
        let k = self.check_index(n)?;
        self.c_ext[k] = self.c_ext[k].add_f64(delta);
        self.c[k] = self.c_ext[k].to_f64();
        Ok(())
    }
}

fn tol_check(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(tol)
    } else {
        Err(invalid("tol", format!("must lie in (0, 1), got {tol}")))
    }
}

/// `sup_{n >= k} n rho^n`.
fn sup_n_rho_n_from(frame: &ConformalFrame, k: usize) -> f64 {
    let ln_rho = frame.ln_rho();
    let g = |n: f64| n.ln() + n * ln_rho;
    let peak = 1.0 / -ln_rho;
    let k = k.max(1) as f64;
    let best = if k >= peak {
        g(k)
    } else {
        g(peak.floor().max(k)).max(g(peak.ceil()))
    };
    best.exp()
}

/// Least `N >= 16` such that the certified tail
/// `2 C_D beta sup_{n>N} n rho^n / (1 - rho)` is at most `tol * beta`.
///
/// `gamma = 0` is accepted and uses `C_D = 1/(1 - rho)`.
pub fn choose_truncation(frame: &ConformalFrame, gamma: f64, tol: f64) -> Result<usize> {
    let gamma = require_nonnegative("gamma", gamma)?;
    let tol = tol_check(tol)?;
    let c_d = envelope_constant(frame, gamma);
    let ln_thr = (tol * frame.one_minus_rho() / (2.0 * c_d)).ln();
    let ln_rho = frame.ln_rho();
    let g = |k: usize| (k as f64).ln() + k as f64 * ln_rho;
    let peak = (1.0 / -ln_rho).ceil().max(1.0);
    let clamp = |k: usize| -> Result<usize> {
        let n = (k - 1).max(MIN_TRUNCATION);
        if n > TRUNCATION_CAP {
            Err(Error::TruncationCap { cap: TRUNCATION_CAP })
        } else {
            Ok(n)
        }
    };
    if peak > (TRUNCATION_CAP + 1) as f64 {
        return Err(Error::TruncationCap { cap: TRUNCATION_CAP });
    }
    let start = peak as usize;
    // Below the peak of n rho^n the tail sup is the peak value itself.
    if sup_n_rho_n_from(frame, 1).ln() <= ln_thr {
        return clamp(1);
    }
    if g(start) <= ln_thr {
        return clamp(start);
    }
    let mut lo = start;
    let mut hi = start.saturating_mul(2);
    while g(hi) > ln_thr {
        if hi > TRUNCATION_CAP + 1 {
            return Err(Error::TruncationCap { cap: TRUNCATION_CAP });
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if g(mid) <= ln_thr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    clamp(hi)
}

/// `2 C_D beta sup_{n>N} n rho^n`.
pub fn certified_tail(frame: &ConformalFrame, gamma: f64, n: usize) -> f64 {
    2.0 * envelope_constant(frame, gamma) * frame.beta() * sup_n_rho_n_from(frame, n + 1)
}

/// Solves the truncated system at the order chosen by [`choose_truncation`].
pub fn solve_coefficients(frame: &ConformalFrame, gamma: f64, tol: f64) -> Result<SpectralSolution> {
    let gamma = require_positive("gamma", gamma)?;
    let n = choose_truncation(frame, gamma, tol)?;
    solve_truncated(frame, gamma, n)
}

/// Solves `H a = f` with the cutoff at a caller-chosen order `N`.
pub fn solve_truncated(frame: &ConformalFrame, gamma: f64, n: usize) -> Result<SpectralSolution> {
    let gamma = require_positive("gamma", gamma)?;
    if n == 0 {
        return Err(invalid("N", "truncation order must be at least 1"));
    }
    let fd = FrameDd::new(frame);
    let p = fd.powers(n);
    let gdd = Dd::from(gamma);
    // Rows are scaled by beta^2/gamma: diagonal 2 + mu + beta^2 V/gamma,
    // off-diagonal -1.
    let shift = fd.mu.add_f64(2.0);
    let mut diag = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let scale = fd.beta.square() / gdd;
    for k in 1..=n {
        let pk = p[k];
        let p2 = pk.square();
        let one_plus = p2.add_f64(1.0);
        let one_minus = Dd::ONE - p2;
        // beta^2 V / gamma = beta (1 - p^2) / (gamma k (1 + p^2))
        let v_scaled = fd.beta * one_minus / (gdd.mul_f64(k as f64) * one_plus);
        diag.push(shift + v_scaled);
        rhs.push(scale * pk.mul_f64(2.0) / one_plus);
    }

    let mut inv_m = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut prev_inv = Dd::ZERO;
    let mut prev_y = Dd::ZERO;
    for k in 0..n {
        let m = diag[k] - prev_inv;
        let im = m.recip();
        let yk = rhs[k] + prev_y * prev_inv;
        inv_m.push(im);
        y.push(yk);
        prev_inv = im;
        prev_y = yk;
    }
    let mut a_ext = vec![Dd::ZERO; n];
    let mut next = Dd::ZERO;
    for k in (0..n).rev() {
        a_ext[k] = (y[k] + next) * inv_m[k];
        next = a_ext[k];
    }

    let c_ext = c_from_a(&fd, &p, &a_ext);
    let a: Vec<f64> = a_ext.iter().map(|x| x.to_f64()).collect();

    // Residual of the stored binary64 a, unscaled back by gamma/beta^2.
    let unscale = gdd / fd.beta.square();
    let mut residual = 0.0f64;
    let mut f_max = 0.0f64;
    let mut h_max = 0.0f64;
    let g = gamma / (frame.beta() * frame.beta());
    for k in 0..n {
        let left = if k > 0 { a[k - 1] } else { 0.0 };
        let right = if k + 1 < n { a[k + 1] } else { 0.0 };
        let row = diag[k].mul_f64(a[k]) - Dd::sum_f64(left, right) - rhs[k];
        residual = residual.max((row * unscale).to_f64().abs());
        f_max = f_max.max((rhs[k] * unscale).to_f64().abs());
        h_max = h_max.max((diag[k] * unscale).to_f64().abs() + 2.0 * g);
    }
    let a_max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let beta = frame.beta();
    let a1 = a[0];
    Ok(SpectralSolution {
        frame: *frame,
        gamma,
        c: c_ext.iter().map(|x| x.to_f64()).collect(),
        a,
        a_ext,
        c_ext,
        lambda_i: -0.5 * beta - gamma / beta * a1,
        lambda_e: 0.5 * beta + gamma / beta * a1,
        tail_bound: certified_tail(frame, gamma, n),
        residual_norm: residual,
        residual_scale: f_max.max(a_max * h_max),
    })
}

/// `c(n) = (beta rho^{2n} - rho^n a(n)/n) / (1 + rho^{2n})`.
fn c_from_a(fd: &FrameDd, p: &[Dd], a: &[Dd]) -> Vec<Dd> {
    a.iter()
        .enumerate()
        .map(|(k, &ak)| {
            let n = (k + 1) as f64;
            let pk = p[k + 1];
            let p2 = pk.square();
            let num = fd.beta * p2 - pk * ak / Dd::from(n);
            num / p2.add_f64(1.0)
        })
        .collect()
}

/// Closed-form `gamma = 0` coefficients: `a(n) = f(n)/V(n)`.
///
/// The interface constants take their `gamma -> 0` limits `-beta/2`, `beta/2`.
pub fn perfect_bonding_coefficients(frame: &ConformalFrame, n: usize) -> Result<SpectralSolution> {
    if n == 0 {
        return Err(invalid("N", "truncation order must be at least 1"));
    }
    let fd = FrameDd::new(frame);
    let p = fd.powers(n);
    let mut a_ext = Vec::with_capacity(n);
    let mut c_ext = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    let mut f_max = 0.0f64;
    let mut v_max = 0.0f64;
    let mut a_max = 0.0f64;
    for k in 1..=n {
        let pk = p[k];
        let p2 = pk.square();
        let one_minus = Dd::ONE - p2;
        let one_plus = p2.add_f64(1.0);
        let ak = fd.beta.mul_f64(2.0 * k as f64) * pk / one_minus;
        a_ext.push(ak);
        c_ext.push(-(fd.beta * p2 / one_minus));

        let v = one_minus / (fd.beta.mul_f64(k as f64) * one_plus);
        let f = pk.mul_f64(2.0) / one_plus;
        let a64 = ak.to_f64();
        residual = residual.max((v.mul_f64(a64) - f).to_f64().abs());
        f_max = f_max.max(f.to_f64());
        v_max = v_max.max(v.to_f64());
        a_max = a_max.max(a64.abs());
    }
    let beta = frame.beta();
    Ok(SpectralSolution {
        frame: *frame,
        gamma: 0.0,
        a: a_ext.iter().map(|x| x.to_f64()).collect(),
        c: c_ext.iter().map(|x| x.to_f64()).collect(),
        a_ext,
        c_ext,
        lambda_i: -0.5 * beta,
        lambda_e: 0.5 * beta,
        tail_bound: certified_tail(frame, 0.0, n),
        residual_norm: residual,
        residual_scale: f_max.max(a_max * v_max),
    })
}

/// Solves either path: the closed form for `gamma = 0`, the system otherwise.
pub fn solve(frame: &ConformalFrame, gamma: f64, tol: f64) -> Result<SpectralSolution> {
    let gamma = require_nonnegative("gamma", gamma)?;
    if gamma == 0.0 {
        let n = choose_truncation(frame, 0.0, tol)?;
        perfect_bonding_coefficients(frame, n)
    } else {
        solve_coefficients(frame, gamma, tol)
    }
}

/// Deviation of `a(n)` from the resummed representation
///
/// `a(n) = -(r beta rho^{-n}/gamma) sum_{k>=n} rho^k (Va - f)(k)
///        + (r beta rho^n/gamma) (sum_{k>=1} rho^k (Va - f)(k) - sum_{k<n} rho^{-k} (Va - f)(k))`
///
/// with the sums cut at `N`, plus a majorant of the discarded tails.
/// Requires `2 <= n <= N/2`.
pub fn fixed_point_residual(
    frame: &ConformalFrame,
    gamma: f64,
    sol: &SpectralSolution,
    n: usize,
) -> Result<f64> {
    let gamma = require_positive("gamma", gamma)?;
    let order = sol.order();
    if n < 2 || n > order / 2 {
        return Err(Error::IndexOutOfRange {
            index: n,
            lo: 2,
            hi: order / 2,
        });
    }
    let fd = FrameDd::new(frame);
    let p = fd.powers(order);
    let a = sol.a_extended();
    let mut q = Vec::with_capacity(order);
    for k in 1..=order {
        let pk = p[k];
        let p2 = pk.square();
        let one_plus = p2.add_f64(1.0);
        let v = (Dd::ONE - p2) / (fd.beta.mul_f64(k as f64) * one_plus);
        let f = pk.mul_f64(2.0) / one_plus;
        q.push(pk * (v * a[k - 1] - f));
    }
    let mut s_all = Dd::ZERO;
    let mut s_from_n = Dd::ZERO;
    for k in (1..=order).rev() {
        s_all = s_all + q[k - 1];
        if k == n {
            s_from_n = s_all;
        }
    }
    let mut head = Dd::ZERO;
    for k in 1..n {
        head = head + q[k - 1] / p[k].square();
    }
    let coef = fd.r_beta(frame) / Dd::from(gamma);
    let pn = p[n];
    let rhs = -(coef * s_from_n / pn) + coef * pn * (s_all - head);
    let deviation = (a[n - 1] - rhs).abs().to_f64();

    let rho = fd.rho.to_f64();
    let one_minus_sq = frame.one_minus_rho() * (1.0 + rho);
    let tail_sum = 6.0 * p[order].to_f64().powi(2) * rho * rho / one_minus_sq;
    let majorant = coef.to_f64() * (1.0 / pn.to_f64() + pn.to_f64()) * tail_sum;
    Ok(deviation + majorant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(r: f64, eps: f64) -> ConformalFrame {
        ConformalFrame::from_params(r, eps).unwrap()
    }

    #[test]
    fn potential_and_source_examples() {
        let f = frame(2.0, 1.0);
        assert!((potential_v(&f, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!((potential_v(&f, 2).unwrap() - 0.9375 / 6.375).abs() < 1e-15);
        assert!((source_f(&f, 1).unwrap() - 0.8).abs() < 1e-15);
        assert!((source_f(&f, 3).unwrap() - 0.25 / 1.015625).abs() < 1e-15);
        assert!(potential_v(&f, 0).is_err());
        assert!(source_f(&f, 0).is_err());
    }

    #[test]
    fn assembly_example() {
        let f = frame(2.0, 1.0);
        let sys = assemble_system(&f, 2.0, 3).unwrap();
        assert!((sys.diag()[0] - (2.0 / 9.0 * 2.5 + 0.2)).abs() < 1e-15);
        assert!((sys.off() + 2.0 / 9.0).abs() < 1e-16);
        for n in 1..=3 {
            let v = potential_v(&f, n).unwrap();
            assert!((sys.dominance_margin(n) - (sys.spectral_floor() + v)).abs() < 1e-15);
        }
        assert!(assemble_system(&f, 0.0, 3).is_err());
        assert!(assemble_system(&f, 1.0, 0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let f = frame(2.0, 1.0);
        // Direct evaluation of the inequality gives 47 * 2^-47 <= 3.75e-13 < 46 * 2^-46.
        assert_eq!(choose_truncation(&f, 2.0, 1e-12).unwrap(), 46);
        assert_eq!(choose_truncation(&f, 2.0, 0.5).unwrap(), 16);
        let n2 = choose_truncation(&frame(1.0, 1e-2), 1.0, 1e-12).unwrap();
        let n4 = choose_truncation(&frame(1.0, 1e-4), 1.0, 1e-12).unwrap();
        assert!(n4 > n2);
        assert!(choose_truncation(&f, 2.0, 0.0).is_err());
        assert!(choose_truncation(&f, 2.0, 1.0).is_err());
    }

    #[test]
    fn truncation_cap_is_enforced() {
        let f = frame(1.0, 1e-12);
        assert!(matches!(
            choose_truncation(&f, 1.0, 1e-300),
            Err(Error::TruncationCap { .. })
        ));
    }

    #[test]
    fn neutral_case_is_exact() {
        let f = frame(2.0, 1.0);
        let sol = solve_coefficients(&f, 2.0, DEFAULT_TOL).unwrap();
        let expect = [1.5, 1.5, 1.125];
        for (n, e) in expect.iter().enumerate() {
            assert!((sol.a()[n] - e).abs() < 1e-14, "a({}) = {}", n + 1, sol.a()[n]);
        }
        assert!(sol.c().iter().all(|c| c.abs() < 1e-15));
        assert!((sol.lambda_i() + 1.5 + 2.0 / 3.0 * 1.5).abs() < 1e-14);
        assert!((sol.lambda_e() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn sandwich_example() {
        let f = frame(2.0, 1.0);
        let sol = solve_coefficients(&f, 1.0, DEFAULT_TOL).unwrap();
        let a1 = sol.a()[0];
        assert!((2.0..=24.0 / 11.0).contains(&a1), "a(1) = {a1}");
        assert!(sol.residual_norm() <= 1e-12 * sol.residual_scale());
    }

    #[test]
    fn binary64_thomas_agrees_with_extended_solve() {
        let f = frame(2.0, 1.0);
        let sys = assemble_system(&f, 1.0, 60).unwrap();
        let x = sys.solve();
        let sol = solve_truncated(&f, 1.0, 60).unwrap();
        for (u, v) in x.iter().zip(sol.a()) {
            assert!((u - v).abs() <= 1e-14 * v.abs());
        }
    }

    #[test]
    fn perfect_bonding_examples() {
        let f = frame(2.0, 1.0);
        let sol = perfect_bonding_coefficients(&f, 20).unwrap();
        assert!((sol.a()[0] - 4.0).abs() < 1e-14);
        assert!((sol.a()[1] - 3.2).abs() < 1e-14);
        assert_eq!(sol.lambda_i(), -1.5);
        assert_eq!(sol.lambda_e(), 1.5);
        let imperfect = solve_coefficients(&f, 1.0, DEFAULT_TOL).unwrap();
        assert!(sol.a()[0] > imperfect.a()[0]);
        // c from the general relation agrees with the closed form.
        for n in 1..=20 {
            let p = 0.5f64.powi(n as i32);
            let a = sol.a()[n - 1];
            let c = (3.0 * p * p - p * a / n as f64) / (1.0 + p * p);
            assert!((c - sol.c()[n - 1]).abs() < 1e-14);
        }
        assert!(perfect_bonding_coefficients(&f, 0).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let f = frame(2.0, 1.0);
        let neutral = solve_coefficients(&f, 2.0, DEFAULT_TOL).unwrap();
        for n in 2..=neutral.order() / 2 {
            assert!(fixed_point_residual(&f, 2.0, &neutral, n).unwrap() <= 1e-12 * f.beta());
        }
        let mut sol = solve_coefficients(&f, 1.0, DEFAULT_TOL).unwrap();
        assert!(fixed_point_residual(&f, 1.0, &sol, 2).unwrap() <= 1e-10);
        assert!(fixed_point_residual(&f, 1.0, &sol, 1).is_err());
        assert!(fixed_point_residual(&f, 1.0, &sol, sol.order()).is_err());
        sol.perturb_a(2, 0.01).unwrap();
        assert!(fixed_point_residual(&f, 1.0, &sol, 2).unwrap() >= 0.009);
    }

    #[test]
    fn small_gap_solution_is_positive_and_resolved() {
        let f = frame(1.0, 1e-6);
        let sol = solve_coefficients(&f, 1.0, DEFAULT_TOL).unwrap();
        assert!(sol.a().iter().all(|&a| a >= 0.0));
        assert!(sol.residual_norm() <= 1e-12 * sol.residual_scale());
        assert!(sol.tail_bound() <= 1e-12 * f.beta() * (1.0 + 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quadratic_form_dominates_floor(
            log_eps in -4.0f64..1.0,
            gamma in 0.05f64..10.0,
            xs in proptest::collection::vec(-1.0f64..1.0, 40),
        ) {
            let f = frame(1.0, 10f64.powf(log_eps));
            let sys = assemble_system(&f, gamma, xs.len()).unwrap();
            let norm2: f64 = xs.iter().map(|x| x * x).sum();
            let q = sys.quadratic_form(&xs);
            prop_assert!(q >= sys.spectral_floor() * norm2 * (1.0 - 1e-12));
        }

        #[test]
        fn v_and_f_envelopes(log_eps in -8.0f64..1.0, n in 1usize..5000) {
            let f = frame(1.0, 10f64.powf(log_eps));
            let v = potential_v(&f, n).unwrap();
            let s = source_f(&f, n).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0 / (f.beta() * n as f64));
            let p = (n as f64 * f.ln_rho()).exp();
            // rho^n may underflow for large n; positivity is asserted where it is representable.
            prop_assert!(s >= 0.0 && (p == 0.0 || s > 0.0) && s <= 2.0 * p * (1.0 + 1e-15));
        }

        #[test]
        fn truncation_certificate_holds(log_eps in -6.0f64..1.0, gamma in 0.1f64..10.0) {
            let f = frame(1.0, 10f64.powf(log_eps));
            let n = choose_truncation(&f, gamma, 1e-12).unwrap();
            let c_d = envelope_constant(&f, gamma);
            let bound = 2.0 * c_d * sup_n_rho_n_from(&f, n + 1) / f.one_minus_rho();
            prop_assert!(bound <= 1e-12 * (1.0 + 1e-9));
            if n > MIN_TRUNCATION {
                let prev = 2.0 * c_d * ((n as f64).ln() + n as f64 * f.ln_rho()).exp() / f.one_minus_rho();
                prop_assert!(prev > 1e-12 * (1.0 - 1e-9));
            }
        }
    }
}
