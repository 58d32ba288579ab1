use bondfield::duality::conjugate_potential;
use bondfield::field::{eval_u, field_grid_with, sup_grad, BoundingBox};
use bondfield::geometry::Region;
use bondfield::operator::{solve, DEFAULT_TOL};
use bondfield::sweep::{run_sweep_with, SweepConfig};
use bondfield::verify::{decay_check, robin_residual};
use bondfield::{ComplexPotential, ConformalFrame, DiskPair, Execution};
use num_complex::Complex64;
use proptest::prelude::*;

fn lc(r: f64, eps: f64, gamma: f64, tol: f64) -> ComplexPotential {
    let f = ConformalFrame::from_params(r, eps).unwrap();
    ComplexPotential::new(solve(&f, gamma, tol).unwrap())
}

#[test]
fn field_is_harmonic() {
    let pot = lc(1.0, 1e-2, 0.5, DEFAULT_TOL);
    let h = 1e-3;
    for z in [Complex64::new(0.0, 0.4), Complex64::new(2.5, 1.5), Complex64::new(-1.0, -1.3)] {
        let u = |d: Complex64| eval_u(&pot, z + d).unwrap();
        let lap = (u(Complex64::new(h, 0.0)) + u(Complex64::new(-h, 0.0)) + u(Complex64::new(0.0, h))
            + u(Complex64::new(0.0, -h))
            - 4.0 * u(Complex64::new(0.0, 0.0)))
            / (h * h);
        assert!(lap.abs() < 1e-4, "{z}: {lap}");
    }
}

#[test]
fn looser_tolerance_moves_field_by_at_most_tolerance() {
    let tight = lc(1.0, 1e-3, 0.25, 1e-12);
    let loose = lc(1.0, 1e-3, 0.25, 1e-8);
    assert!(loose.solution().order() < tight.solution().order());
    for z in [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(3.0, 0.5)] {
        let d = (eval_u(&tight, z).unwrap() - eval_u(&loose, z).unwrap()).abs();
        assert!(d <= 1e-8, "{z}: {d}");
    }
}

#[test]
fn robin_residual_tracks_tolerance() {
    let loose = lc(2.0, 1e-2, 1.0, 1e-8);
    let tight = lc(2.0, 1e-2, 1.0, 1e-12);
    let worst = |pot: &ComplexPotential| {
        let [a, b] = robin_residual(pot, 1.0, 256).unwrap();
        a.residual.max(b.residual)
    };
    let (l, t) = (worst(&loose), worst(&tight));
    assert!(l >= 10.0 * t, "loose {l:.3e} tight {t:.3e}");
}

#[test]
fn gradient_stays_bounded_as_gap_closes() {
    for t in [0.5, 4.0] {
        let cfgs: Vec<_> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&e| SweepConfig::new(1.0, e, t))
            .collect();
        let rows = run_sweep_with(&cfgs, DEFAULT_TOL, Execution::default()).unwrap();
        let g: Vec<f64> = rows.iter().map(|r| r.sup_grad).collect();
        let max = g.iter().copied().fold(0.0, f64::max);
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 3.0, "gamma {t}: {g:?}");
        assert!(rows.iter().all(|r| r.within_bound()));
    }
}

#[test]
fn perfect_bonding_gradient_blows_up() {
    let a = sup_grad(&lc(1.0, 1e-2, 0.0, DEFAULT_TOL));
    let b = sup_grad(&lc(1.0, 1e-4, 0.0, DEFAULT_TOL));
    assert!(b / a > 9.0 && b / a < 11.0, "{a} {b}");
}

#[test]
fn sequential_and_parallel_agree() {
    let pot = lc(0.5, 1e-3, 2.0, DEFAULT_TOL);
    let bbox = BoundingBox::new(-1.5, -1.0, 1.5, 1.0).unwrap();
    let seq = field_grid_with(&pot, bbox, 31, 17, Execution::Sequential).unwrap();
    let par = field_grid_with(&pot, bbox, 31, 17, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let pair = DiskPair::new(0.5, 1e-3).unwrap();
    let interior = seq.samples.iter().filter(|s| s.is_none()).count();
    assert!(interior > 0);
    for s in seq.present() {
        assert_eq!(pair.classify(Complex64::new(s.x, s.y), 0.0), Region::Matrix);
    }

    let cfgs = [SweepConfig::new(1.0, 1e-3, 0.25), SweepConfig::new(2.0, 1e-4, 8.0)];
    assert_eq!(
        run_sweep_with(&cfgs, DEFAULT_TOL, Execution::Sequential).unwrap(),
        run_sweep_with(&cfgs, DEFAULT_TOL, Execution::Parallel).unwrap()
    );
}

#[test]
fn hc_field_decays_like_lc() {
    let pot = lc(2.0, 1.0, 1.0, DEFAULT_TOL);
    let hc = conjugate_potential(&pot);
    for p in [&pot, &hc] {
        let rep = decay_check(p, &[200.0, 2e3, 2e4]).unwrap();
        assert!(rep.bounded(), "{rep:?}");
        assert!(rep.max_product() > 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn field_is_odd_in_x1(
        log_eps in -5.0f64..0.0,
        t in 0.1f64..10.0,
        x in 0.0f64..3.0,
        y in -3.0f64..3.0,
    ) {
        let pot = lc(1.0, 10f64.powf(log_eps), t, DEFAULT_TOL);
        let z = Complex64::new(x, y);
        let pair = DiskPair::new(1.0, 10f64.powf(log_eps)).unwrap();
        prop_assume!(pair.classify(z, 0.0) == Region::Matrix);
        let s = eval_u(&pot, z).unwrap() + eval_u(&pot, Complex64::new(-x, y)).unwrap();
        prop_assert!(s.abs() <= 1e-12);
    }

    #[test]
    fn field_is_even_in_x2(
        t in 0.1f64..10.0,
        x in -3.0f64..3.0,
        y in 0.0f64..3.0,
    ) {
        let pot = lc(1.0, 1e-2, t, DEFAULT_TOL);
        let z = Complex64::new(x, y);
        let pair = DiskPair::new(1.0, 1e-2).unwrap();
        prop_assume!(pair.classify(z, 0.0) == Region::Matrix);
        let d = eval_u(&pot, z).unwrap() - eval_u(&pot, z.conj()).unwrap();
        prop_assert!(d.abs() <= 1e-12);
    }
}
