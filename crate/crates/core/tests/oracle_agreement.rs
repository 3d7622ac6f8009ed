use std::f64::consts::PI;
use std::sync::Arc;

use maeigen::oracles::{oracle_1d, oracle_pl_ma, oracle_radial, PLConvexFunction, RadialProblem, ShootOptions};
use maeigen::{discretize, inverse_iterate, ma_apply, ConvexDomain, EigenOptions, GridFunction, MeasureSpec};

/// Fixed-step RK4 shooting with bisection, written out independently of the
/// adaptive oracle. Starts at a small radius from the two-term series.
fn reference_disc_eigenvalue() -> f64 {
    let shoot = |lambda: f64| {
        let n = 20000;
        let r0 = 1e-4;
        let a = 0.5 * lambda;
        let dr = (1.0 - r0) / n as f64;
        let f = |r: f64, u: f64, du: f64| (du, lambda * lambda * u * u * r / du);
        let (mut r, mut u, mut du) = (r0, -1.0 + a * r0 * r0, 2.0 * a * r0);
        for _ in 0..n {
            let k1 = f(r, u, du);
            let k2 = f(r + dr / 2.0, u + dr / 2.0 * k1.0, du + dr / 2.0 * k1.1);
            let k3 = f(r + dr / 2.0, u + dr / 2.0 * k2.0, du + dr / 2.0 * k2.1);
            let k4 = f(r + dr, u + dr * k3.0, du + dr * k3.1);
            u += dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            du += dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            r += dr;
        }
        u
    };
    let (mut lo, mut hi) = (1.0, 5.0);
    assert!(shoot(lo) < 0.0 && shoot(hi) > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn radial_oracle_matches_independent_shooting() {
    let oracle = oracle_radial(&RadialProblem::constant(1.0, 1.0).unwrap(), &ShootOptions::default()).unwrap();
    let reference = reference_disc_eigenvalue();
    assert!((oracle.lambda1 / reference - 1.0).abs() < 1e-7, "{} vs {reference}", oracle.lambda1);
}

#[test]
fn radial_oracle_with_variable_density() {
    // f(r) = 1 + r^2 lies between f = 1 and f = 2, so lambda does too
    let o = ShootOptions::default();
    let var = oracle_radial(&RadialProblem::new(1.0, |r| 1.0 + r * r).unwrap(), &o).unwrap().lambda1;
    let one = oracle_radial(&RadialProblem::constant(1.0, 1.0).unwrap(), &o).unwrap().lambda1;
    assert!(var < one && var > one / 2f64.sqrt());
    let fine = oracle_radial(&RadialProblem::new(1.0, |r| 1.0 + r * r).unwrap(), &o.halved()).unwrap().lambda1;
    assert!((var / fine - 1.0).abs() <= 1e-6);
}

#[test]
fn disc_iteration_approaches_the_radial_value() {
    let oracle = oracle_radial(&RadialProblem::constant(1.0, 1.0).unwrap(), &ShootOptions::default()).unwrap().lambda1;
    let d = ConvexDomain::disc([0.0, 0.0], 1.0).unwrap();
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = Arc::new(discretize(&d, h, 2).unwrap());
        let r = inverse_iterate(&g, &MeasureSpec::lebesgue(), None, &EigenOptions::default()).unwrap();
        errs.push((r.lambda_hat / oracle - 1.0).abs());
    }
    assert!(errs[1] < 0.02 && errs[1] < errs[0], "{errs:?}");
}

#[test]
fn one_dimensional_scaling() {
    let g = Arc::new(discretize(&ConvexDomain::interval(0.0, 2.0).unwrap(), 1.0 / 256.0, 1).unwrap());
    let r = inverse_iterate(&g, &MeasureSpec::lebesgue(), None, &EigenOptions::default()).unwrap();
    let o = oracle_1d(2.0).unwrap();
    assert!((o.lambda1 - PI * PI / 4.0).abs() < 1e-15);
    assert!((r.lambda_hat / o.lambda1 - 1.0).abs() < 1e-4);
}

#[test]
fn cone_interpolant_mass_approaches_pi() {
    let disc = ConvexDomain::disc([0.0, 0.0], 1.0).unwrap();
    let atoms = oracle_pl_ma(&PLConvexFunction::cone(256).unwrap(), &disc).unwrap();
    let exact = 128.0 * (2.0 * PI / 256.0).sin();
    assert!((atoms[0].mass - exact).abs() < 1e-12);
    // the grid operator spreads the atom over nodes near the tip; report the total
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = Arc::new(discretize(&disc, h, 2).unwrap());
        let u = GridFunction::from_fn(&g, |p| p[0].hypot(p[1]) - 1.0);
        let m = ma_apply(&u).total_mass(&g);
        assert!(m > 0.0 && m.is_finite());
    }
}
