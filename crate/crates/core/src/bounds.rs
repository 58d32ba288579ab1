//! Closed-form constants and coefficient-level certificates.
//!
//! Every check compares the truncated solution against an analytic right side
//! with a relative slack of `1e-10` for rounding. The cutoff `a(N+1) = 0`
//! perturbs the true sequence by a nonnegative error that the discrete maximum
//! principle bounds by `a(N+1) <= tail_bound`; the checks add that (times the
//! stencil weight for differences) as an absolute allowance.

use serde::Serialize;

use crate::error::{require_positive, Result};
use crate::geometry::ConformalFrame;
use crate::operator::{envelope_constant, SpectralSolution};

/// Relative slack applied to every analytic right side.
pub const REL_SLACK: f64 = 1e-10;
/// Allowed negativity of `a(n)`, in units of `beta`.
pub const POSITIVITY_SLACK: f64 = 1e-14;
const MAX_LISTED: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSet {
    pub b1: f64,
    pub b2: f64,
    pub c_d: f64,
    /// Offset `R` of the refined envelope; zero when `gamma >= r`.
    pub r_offset: f64,
    pub grad_bound: f64,
    gamma: f64,
    r: f64,
    beta: f64,
    one_minus_rho: f64,
    ln_rho: f64,
}

pub fn compute_bounds(frame: &ConformalFrame, gamma: f64) -> Result<BoundSet> {
    let gamma = require_positive("gamma", gamma)?;
    let r = frame.radius();
    let rho = frame.rho();
    let omr = frame.one_minus_rho();
    let t = gamma / r;
    let b1 = 2.0 / (1.0 + t);
    let b2 = 2.0 / (1.0 + t - rho * rho * (1.0 - t));
    let c_d = envelope_constant(frame, gamma);
    let r_offset = if gamma < r {
        2.0 * r * rho * (1.0 - t) / (1.0 + t)
    } else {
        0.0
    };
    let grad_bound =
        180.0 * (1.0 + (1.0 + (1.0 - t).abs()) / (omr + t) + (r + frame.gap()) / gamma);
    Ok(BoundSet {
        b1,
        b2,
        c_d,
        r_offset,
        grad_bound,
        gamma,
        r,
        beta: frame.beta(),
        one_minus_rho: omr,
        ln_rho: frame.ln_rho(),
    })
}

/// Right side of the gradient estimate; `sup |grad u|` may not exceed it.
pub fn gradient_sup_bound(bounds: &BoundSet) -> f64 {
    bounds.grad_bound
}

impl BoundSet {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn rho_pow(&self, n: f64) -> f64 {
        (n * self.ln_rho).exp()
    }

    /// `beta n rho^n`, the common scale of the coefficient bounds.
    pub fn scale(&self, n: usize) -> f64 {
        self.beta * n as f64 * self.rho_pow(n as f64)
    }

    /// Lower and upper sandwich bounds on `a(n)`.
    pub fn sandwich(&self, n: usize) -> (f64, f64) {
        let s = self.scale(n);
        (self.b1.min(self.b2) * s, self.b1.max(self.b2) * s)
    }

    /// `2 C_D beta n rho^n`.
    pub fn a_envelope(&self, n: usize) -> f64 {
        2.0 * self.c_d * self.scale(n)
    }

    /// `2 (beta n + r) rho^n`.
    pub fn a_envelope_offset(&self, n: usize) -> f64 {
        2.0 * (self.beta * n as f64 + self.r) * self.rho_pow(n as f64)
    }

    /// `beta rho^{2n}/(1 + rho^{2n})`.
    fn c_scale(&self, n: usize) -> f64 {
        let p2 = self.rho_pow(2.0 * n as f64);
        self.beta * p2 / (1.0 + p2)
    }

    /// `beta rho^{2n}/(1 + rho^{2n}) max(|1 - B1|, |1 - B2|)`.
    pub fn c_envelope(&self, n: usize) -> f64 {
        self.c_scale(n) * (1.0 - self.b1).abs().max((1.0 - self.b2).abs())
    }

    /// `2 C_D beta rho^{2n} |1 - gamma/r| / (1 + rho^{2n})`.
    pub fn c_envelope_rough(&self, n: usize) -> f64 {
        2.0 * self.c_d * self.c_scale(n) * (1.0 - self.gamma / self.r).abs()
    }

    /// Bound on `|Δ_D a(n)|`.
    pub fn lap_bound(&self, n: usize) -> f64 {
        let nf = n as f64;
        let omr = self.one_minus_rho;
        2.0 * omr * omr * (self.beta * nf + self.r) * self.rho_pow(nf - 1.0)
            + 6.0 * self.beta * self.beta * self.rho_pow(nf) / self.gamma
    }

    /// Bound on `|∇_D a(n)|`.
    pub fn diff_bound(&self, n: usize) -> f64 {
        let nf = n as f64;
        6.0 * self.r * self.beta / self.gamma
            * (self.one_minus_rho * nf + 4.0)
            * self.rho_pow(nf - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of one family of inequalities `lhs(n) <= rhs(n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    /// Smallest `(rhs - lhs + slack)/scale` over the checked indices; the
    /// family passes iff this is non-negative.
    pub worst_margin: f64,
    pub worst_n: usize,
    pub violation_count: usize,
    /// The first few violations.
    pub violations: Vec<Violation>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            passed: true,
            checked: 0,
            worst_margin: f64::INFINITY,
            worst_n: 0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    /// Records `lhs <= rhs` up to `REL_SLACK * scale + abs_slack`.
    fn record(&mut self, n: usize, lhs: f64, rhs: f64, scale: f64, abs_slack: f64) {
        self.checked += 1;
        let gap = rhs - lhs + REL_SLACK * scale + abs_slack;
        let margin = if scale > 0.0 { gap / scale } else { gap };
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
            self.worst_n = n;
        }
        if !(gap >= 0.0) {
            self.passed = false;
            self.violation_count += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(Violation { n, lhs, rhs });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SandwichCase {
    /// `gamma < r`: `B1 beta n rho^n <= a(n) <= B2 beta n rho^n`.
    Below,
    /// `gamma = r`: `a(n) = beta n rho^n`.
    Neutral,
    /// `gamma > r`: the inequalities reverse.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub case: SandwichCase,
    pub lower: CheckReport,
    pub upper: CheckReport,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.lower.passed && self.upper.passed
    }
}

pub fn check_sandwich(sol: &SpectralSolution, bounds: &BoundSet) -> SandwichReport {
    let case = if bounds.gamma < bounds.r {
        SandwichCase::Below
    } else if bounds.gamma > bounds.r {
        SandwichCase::Above
    } else {
        SandwichCase::Neutral
    };
    let mut lower = CheckReport::new("sandwich_lower");
    let mut upper = CheckReport::new("sandwich_upper");
    let t = sol.tail_bound();
    for (k, &a) in sol.a().iter().enumerate() {
        let n = k + 1;
        let (lo, hi) = bounds.sandwich(n);
        let scale = hi;
        lower.record(n, lo, a, scale, t);
        upper.record(n, a, hi, scale, 0.0);
    }
    SandwichReport { case, lower, upper }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// `0 <= a(n) <= 2 C_D beta n rho^n`.
    pub rough: CheckReport,
    /// `a(n) <= 2 (beta n + r) rho^n`.
    pub offset: CheckReport,
    /// `|c(n)|` against both forms of the c-envelope.
    pub c: CheckReport,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.rough.passed && self.offset.passed && self.c.passed
    }
}

pub fn check_envelopes(sol: &SpectralSolution, bounds: &BoundSet) -> EnvelopeReport {
    let mut rough = CheckReport::new("envelope_rough");
    let mut offset = CheckReport::new("envelope_offset");
    let mut c_rep = CheckReport::new("envelope_c");
    let t = sol.tail_bound();
    let beta = bounds.beta;
    for (k, (&a, &c)) in sol.a().iter().zip(sol.c()).enumerate() {
        let n = k + 1;
        rough.record(n, -a, POSITIVITY_SLACK * beta, beta, 0.0);
        let env = bounds.a_envelope(n);
        rough.record(n, a, env, env, 0.0);
        let env = bounds.a_envelope_offset(n);
        offset.record(n, a, env, env, 0.0);

        // An error e in a(n) moves c(n) by rho^n e / (n (1 + rho^{2n})).
        let p = bounds.rho_pow(n as f64);
        let c_slack = p * t / (n as f64 * (1.0 + p * p));
        let scale = bounds.c_scale(n);
        c_rep.record(n, c.abs(), bounds.c_envelope(n), scale, c_slack);
        c_rep.record(n, c.abs(), bounds.c_envelope_rough(n), scale, c_slack);
    }
    EnvelopeReport {
        rough,
        offset,
        c: c_rep,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport {
    pub laplacian: CheckReport,
    pub gradient: CheckReport,
}

impl DifferenceReport {
    pub fn passed(&self) -> bool {
        self.laplacian.passed && self.gradient.passed
    }
}

/// `|Δ_D a(n)|` for `n in [2, N-1]` and `|∇_D a(n)|` for `n in [1, N-1]`.
pub fn check_difference_bounds(sol: &SpectralSolution, bounds: &BoundSet) -> DifferenceReport {
    let mut lap = CheckReport::new("difference_laplacian");
    let mut grad = CheckReport::new("difference_gradient");
    let a = sol.a_extended();
    let t = sol.tail_bound();
    let n_max = a.len();
    for n in 1..n_max {
        let next = a[n];
        let here = a[n - 1];
        let d = (next - here).to_f64().abs();
        let rhs = bounds.diff_bound(n);
        grad.record(n, d, rhs, rhs, 2.0 * t);
        if n >= 2 {
            let prev = a[n - 2];
            let l = (next - here.mul_f64(2.0) + prev).to_f64().abs();
            let rhs = bounds.lap_bound(n);
            lap.record(n, l, rhs, rhs, 4.0 * t);
        }
    }
    DifferenceReport {
        laplacian: lap,
        gradient: grad,
    }
}

/// All coefficient-level certificates for one solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub sandwich: SandwichReport,
    pub envelopes: EnvelopeReport,
    pub differences: DifferenceReport,
}

impl CoefficientReport {
    pub fn passed(&self) -> bool {
        self.sandwich.passed() && self.envelopes.passed() && self.differences.passed()
    }
}

pub fn check_coefficients(sol: &SpectralSolution, bounds: &BoundSet) -> CoefficientReport {
    CoefficientReport {
        sandwich: check_sandwich(sol, bounds),
        envelopes: check_envelopes(sol, bounds),
        differences: check_difference_bounds(sol, bounds),
    }
}
