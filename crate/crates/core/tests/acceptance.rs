//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Run with `cargo test -p bondfield --test acceptance`. Exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use bondfield::bounds::{check_coefficients, compute_bounds};
use bondfield::duality::{conjugate_potential, hc_boundary_residual, hc_flux};
use bondfield::field::{eval_grad, eval_u, sup_sample_points};
use bondfield::geometry::{DiskPair, Region};
use bondfield::operator::{solve, solve_truncated, DEFAULT_TOL};
use bondfield::sweep::{acceptance_sweep, loglog_slope, run_sweep, SweepConfig};
use bondfield::verify::{dense_oracle, oracle_gap, verify, VerifyOptions};
use bondfield::{ComplexPotential, ConformalFrame};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn lc(cfg: &SweepConfig) -> ComplexPotential {
    let frame = ConformalFrame::from_params(cfg.r, cfg.eps).unwrap();
    ComplexPotential::new(solve(&frame, cfg.gamma, DEFAULT_TOL).unwrap())
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Matrix points in `[-3r, 3r]^2` at distance at least `clearance` from both
/// disks.
fn matrix_points(rng: &mut ChaCha8Rng, cfg: &SweepConfig, count: usize, clearance: f64) -> Vec<Complex64> {
    let pair = DiskPair::new(cfg.r, cfg.eps).unwrap();
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let z = Complex64::new(rng.gen_range(-3.0..3.0) * cfg.r, rng.gen_range(-3.0..3.0) * cfg.r);
        let d = pair.signed_distances(z);
        if pair.classify(z, 0.0) == Region::Matrix && d[0].min(d[1]) >= clearance {
            pts.push(z);
        }
    }
    pts
}

fn neutral_exactness() -> Outcome {
    let mut worst_grad = 0.0f64;
    let mut worst_c = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (r, eps) in [(2.0, 1.0), (1.0, 1e-4), (1.0, 1e-6)] {
        let t = Instant::now();
        let frame = ConformalFrame::from_params(r, eps).unwrap();
        let sol = solve(&frame, r, DEFAULT_TOL).unwrap();
        let beta = frame.beta();
        for c in sol.c() {
            worst_c = worst_c.max(c.abs() / beta);
        }
        let pot = ComplexPotential::new(sol);
        let pair = DiskPair::new(r, eps).unwrap();
        for z in sup_sample_points(&frame) {
            if pair.classify(z, 0.0) != Region::Matrix {
                continue;
            }
            let (ux, uy) = eval_grad(&pot, z).unwrap();
            worst_grad = worst_grad.max((ux - 1.0).hypot(uy));
        }
        slowest = slowest.max(t.elapsed());
    }
    outcome(
        worst_grad <= 1e-10 && worst_c <= 1e-12 && slowest < Duration::from_secs(1),
        format!("max |grad u - e1| = {worst_grad:.2e}, max |c|/beta = {worst_c:.2e}, slowest {slowest:.2?}"),
    )
}

fn coefficient_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = Instant::now();
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let r = log_uniform(&mut rng, 0.25, 4.0);
        let eps = log_uniform(&mut rng, 1e-6, 1.0);
        let gamma = r * log_uniform(&mut rng, 0.1, 10.0);
        let frame = ConformalFrame::from_params(r, eps).unwrap();
        let sol = solve(&frame, gamma, DEFAULT_TOL).unwrap();
        let bounds = compute_bounds(&frame, gamma).unwrap();
        let rep = check_coefficients(&sol, &bounds);
        if !rep.passed() {
            failures += 1;
        }
        worst = worst
            .min(rep.sandwich.lower.worst_margin)
            .min(rep.sandwich.upper.worst_margin);
    }
    let el = t.elapsed();
    outcome(
        failures == 0 && el < Duration::from_secs(30),
        format!("50 random configurations, {failures} failing, worst sandwich margin {worst:.2e}, {el:.2?}"),
    )
}

fn gradient_bound() -> Outcome {
    let t = Instant::now();
    let rows = run_sweep(&acceptance_sweep(), DEFAULT_TOL).unwrap();
    let el = t.elapsed();
    let bad = rows.iter().filter(|r| !r.within_bound()).count();
    let ratio = rows
        .iter()
        .map(|r| r.sup_grad / r.grad_bound)
        .fold(0.0, f64::max);
    outcome(
        bad == 0 && el < Duration::from_secs(120),
        format!("36 configurations, {bad} above bound, max sup_grad/bound = {ratio:.3e}, {el:.2?}"),
    )
}

fn uniform_boundedness() -> Outcome {
    let t = Instant::now();
    let cfgs: Vec<_> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&e| SweepConfig::new(1.0, e, 1.0))
        .collect();
    let rows = run_sweep(&cfgs, DEFAULT_TOL).unwrap();
    let el = t.elapsed();
    let g: Vec<f64> = rows.iter().map(|r| r.sup_grad).collect();
    let max = g.iter().copied().fold(0.0, f64::max);
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        max / min <= 3.0 && el < Duration::from_secs(60),
        format!("sup_grad {g:.4?}, max/min = {:.4}, {el:.2?}", max / min),
    )
}

fn blow_up_baseline() -> Outcome {
    let t = Instant::now();
    let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let cfgs: Vec<_> = eps.iter().map(|&e| SweepConfig::new(1.0, e, 0.0)).collect();
    let rows = run_sweep(&cfgs, DEFAULT_TOL).unwrap();
    let el = t.elapsed();
    let g: Vec<f64> = rows.iter().map(|r| r.sup_grad).collect();
    let slope = loglog_slope(&eps, &g).unwrap();
    outcome(
        (-0.55..=-0.45).contains(&slope) && el < Duration::from_secs(60),
        format!("slope {slope:.4}, sup_grad {g:.4?}, {el:.2?}"),
    )
}

fn boundary_residuals() -> Outcome {
    let mut failing = Vec::new();
    let mut worst_robin = 0.0f64;
    let mut worst_flux = 0.0f64;
    for cfg in acceptance_sweep() {
        let pot = lc(&cfg);
        let rep = verify(&pot, &VerifyOptions::default()).unwrap();
        worst_robin = worst_robin.max(rep.robin_residual_d1).max(rep.robin_residual_d2);
        worst_flux = worst_flux.max(rep.flux_d1.abs()).max(rep.flux_d2.abs());
        if !rep.passed() {
            failing.push((cfg.r, cfg.eps, cfg.gamma));
        }
    }
    outcome(
        failing.is_empty(),
        format!("max robin {worst_robin:.2e}, max |flux| {worst_flux:.2e}, failing {failing:?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let r = log_uniform(&mut rng, 0.25, 4.0);
        // rho^500 must stay a normal float for a componentwise comparison.
        let eps = r * log_uniform(&mut rng, 1e-3, 1.0);
        let gamma = r * log_uniform(&mut rng, 0.1, 10.0);
        let frame = ConformalFrame::from_params(r, eps).unwrap();
        let tri = solve_truncated(&frame, gamma, 500).unwrap();
        let dense = dense_oracle(&frame, gamma, 500).unwrap();
        worst = worst.max(oracle_gap(tri.a(), &dense));
    }
    let el = t.elapsed();
    outcome(
        worst <= 1e-12 && el < Duration::from_secs(10),
        format!("max componentwise gap {worst:.2e}, {el:.2?}"),
    )
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_res = 0.0f64;
    let mut worst_mod = 0.0f64;
    let mut worst_flux = 0.0f64;
    let mut failing = Vec::new();
    for cfg in acceptance_sweep() {
        let pot = lc(&cfg);
        let hc = conjugate_potential(&pot);
        let res = hc_boundary_residual(&hc, cfg.gamma, 256).unwrap();
        let flux = hc_flux(&hc, 1024).unwrap();
        let mut ok = res.passed() && flux.passed();
        worst_res = worst_res.max(res.worst() / res.max_boundary_grad.max(1.0));
        worst_flux = worst_flux.max(flux.flux[0].abs()).max(flux.flux[1].abs());
        for z in matrix_points(&mut rng, &cfg, 100, 0.0) {
            let (ux, uy) = eval_grad(&pot, z).unwrap();
            let (vx, vy) = eval_grad(&hc, z).unwrap();
            let gu = ux.hypot(uy);
            let d = (vx.hypot(vy) - gu).abs() / gu.max(1.0);
            worst_mod = worst_mod.max(d);
            ok &= d <= 1e-12;
        }
        if !ok {
            failing.push((cfg.r, cfg.eps, cfg.gamma));
        }
    }
    outcome(
        failing.is_empty(),
        format!(
            "max HC residual/scale {worst_res:.2e}, max ||grad v|-|grad u|| {worst_mod:.2e}, max |HC flux| {worst_flux:.2e}, failing {failing:?}"
        ),
    )
}

fn anti_symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for cfg in acceptance_sweep() {
        let pot = lc(&cfg);
        for z in matrix_points(&mut rng, &cfg, 100, 0.0) {
            let mirror = Complex64::new(-z.re, z.im);
            let s = eval_u(&pot, z).unwrap() + eval_u(&pot, mirror).unwrap();
            worst = worst.max(s.abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |u(-x1,x2) + u(x1,x2)| = {worst:.2e} over 3600 points"))
}

fn finite_differences() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for cfg in acceptance_sweep() {
        let pot = lc(&cfg);
        let u = |z: Complex64| eval_u(&pot, z).unwrap();
        for z in matrix_points(&mut rng, &cfg, 100, 1e-2 * cfg.r) {
            let (ux, uy) = eval_grad(&pot, z).unwrap();
            let dx = (u(z + H) - u(z - H)) / (2.0 * H);
            let dy = (u(z + Complex64::new(0.0, H)) - u(z - Complex64::new(0.0, H))) / (2.0 * H);
            worst = worst.max((ux - dx).abs()).max((uy - dy).abs());
        }
    }
    outcome(worst <= 1e-7, format!("max |grad - central difference| = {worst:.2e} over 3600 points"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("neutral inclusion exactness", neutral_exactness),
        ("coefficient sandwich", coefficient_sandwich),
        ("gradient bound over the sweep", gradient_bound),
        ("uniform boundedness in eps", uniform_boundedness),
        ("perfect-bonding blow-up rate", blow_up_baseline),
        ("boundary-condition residuals", boundary_residuals),
        ("dense oracle equivalence", oracle_equivalence),
        ("LC/HC duality", duality),
        ("anti-symmetry", anti_symmetry),
        ("gradient vs finite differences", finite_differences),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!("{tag} criterion {}: {name} -- {}", k + 1, o.detail);
    }
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
}
