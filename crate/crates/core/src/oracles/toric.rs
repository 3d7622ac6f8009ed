//! The toric correspondence at n = 1. With `L(z) = log|z|`, the pullback
//! `phi = u o L` on the annulus `e^a < |z| < e^b` satisfies
//! `int chi(L) dd^c phi = int_a^b chi u''` once `dd^c` is normalized as
//! `Delta / (2 pi)`: in polar coordinates `Delta phi = u''(log r) / r^2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Factor turning the flat Laplacian into `dd^c` at n = 1.
pub const DDC_NORMALIZATION: f64 = 1.0 / (2.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToricReport {
    /// Polar-grid quadrature of `chi(log|z|) dd^c (u o log|z|)` over the annulus.
    pub lhs: f64,
    /// `int_a^b chi u''`.
    pub rhs: f64,
    pub abs_diff: f64,
}

/// The normalization that makes the identity exact for `u = x^2`, `chi = 1`:
/// `int u'' = 2` against the flat-Laplacian integral on a fine polar grid.
/// Agrees with `DDC_NORMALIZATION`, which is what the check uses.
pub fn calibrate_ddc() -> f64 {
    let flat = polar_integral(&|x| x * x, &|_| 1.0, 0.0, 1.0, 2048, 16);
    2.0 / flat
}

/// `u` must be defined slightly beyond `[a, b]` (one radial cell) since the
/// stencil reads ghost values there.
pub fn toric_check_1d(
    u: &dyn Fn(f64) -> f64,
    chi: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<ToricReport> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("need a < b, got ({a}, {b})")));
    }
    if n_r < 2 || n_theta < 3 {
        return Err(Error::InvalidInput("the polar grid needs at least 2 radial and 3 angular cells".into()));
    }
    let lhs = DDC_NORMALIZATION * polar_integral(u, chi, a, b, n_r, n_theta);
    let rhs = line_integral(u, chi, a, b);
    Ok(ToricReport { lhs, rhs, abs_diff: (lhs - rhs).abs() })
}

/// Cell-centered midpoint quadrature of `chi(log r) Delta(u(log r))` over the
/// annulus, with the 5-point polar Laplacian.
fn polar_integral(u: &dyn Fn(f64) -> f64, chi: &dyn Fn(f64) -> f64, a: f64, b: f64, n_r: usize, n_theta: usize) -> f64 {
    let (r0, r1) = (a.exp(), b.exp());
    let dr = (r1 - r0) / n_r as f64;
    let dt = 2.0 * PI / n_theta as f64;
    let phi = |r: f64, _theta: f64| u(r.ln());
    let mut total = 0.0;
    for i in 0..n_r {
        let r = r0 + (i as f64 + 0.5) * dr;
        let (rm, rp) = (r - 0.5 * dr, r + 0.5 * dr);
        let weight = chi(r.ln());
        if weight == 0.0 {
            continue;
        }
        for j in 0..n_theta {
            let t = (j as f64 + 0.5) * dt;
            let c = phi(r, t);
            let radial = (rp * (phi(r + dr, t) - c) - rm * (c - phi(r - dr, t))) / (r * dr * dr);
            let angular = (phi(r, t + dt) - 2.0 * c + phi(r, t - dt)) / (r * r * dt * dt);
            total += weight * (radial + angular) * r * dr * dt;
        }
    }
    total
}

/// Composite Simpson rule for `int chi u''`, with `u''` from a fourth-order
/// central difference.
fn line_integral(u: &dyn Fn(f64) -> f64, chi: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 4096;
    let dx = (b - a) / m as f64;
    let d = 1e-3 * (b - a).max(1e-3);
    let upp = |x: f64| (-u(x + 2.0 * d) + 16.0 * u(x + d) - 30.0 * u(x) + 16.0 * u(x - d) - u(x - 2.0 * d)) / (12.0 * d * d);
    let mut s = 0.0;
    for k in 0..=m {
        let x = a + k as f64 * dx;
        let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * chi(x) * upp(x);
    }
    s * dx / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64) -> f64 {
        if x <= 0.2 || x >= 0.8 {
            0.0
        } else {
            let t = (x - 0.5) / 0.3;
            (-1.0 / (1.0 - t * t)).exp()
        }
    }

    #[test]
    fn calibration_matches_the_constant() {
        assert!((calibrate_ddc() / DDC_NORMALIZATION - 1.0).abs() < 1e-5);
    }

    #[test]
    fn square_with_unit_test_function() {
        let sq = |x: f64| x * x;
        let one = |_: f64| 1.0;
        let r = toric_check_1d(&sq, &one, 0.0, 1.0, 256, 256).unwrap();
        assert!((r.rhs - 2.0).abs() < 1e-6);
        assert!(r.abs_diff <= 0.02 * 2.0, "{r:?}");
        let coarse = toric_check_1d(&sq, &one, 0.0, 1.0, 64, 64).unwrap();
        let mid = toric_check_1d(&sq, &one, 0.0, 1.0, 128, 128).unwrap();
        assert!((coarse.abs_diff / mid.abs_diff).log2() >= 1.0);
        assert!((mid.abs_diff / r.abs_diff).log2() >= 1.0);
    }

    #[test]
    fn affine_gives_zero() {
        // the polar stencil is exact only in the limit: lhs is O(dr^2)
        let coarse = toric_check_1d(&|x| 3.0 * x - 1.0, &|_| 1.0, 0.0, 1.0, 64, 64).unwrap();
        let fine = toric_check_1d(&|x| 3.0 * x - 1.0, &|_| 1.0, 0.0, 1.0, 128, 128).unwrap();
        assert!(fine.rhs.abs() < 1e-8, "{fine:?}");
        assert!(coarse.lhs.abs() < 1e-3 && (coarse.lhs / fine.lhs).abs().log2() >= 1.0, "{coarse:?} {fine:?}");
    }

    #[test]
    fn localized_test_function() {
        let r = toric_check_1d(&|x| x * x, &bump, 0.0, 1.0, 256, 256).unwrap();
        // int chi = 0.3 * int_{-1}^{1} exp(-1/(1-t^2)) dt
        let n = 20000;
        let mass: f64 = (0..n).map(|k| bump(0.2 + 0.6 * (k as f64 + 0.5) / n as f64) * 0.6 / n as f64).sum();
        assert!((r.rhs - 2.0 * mass).abs() < 1e-6 * mass);
        assert!(r.abs_diff <= 0.02 * r.rhs, "{r:?}");
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(toric_check_1d(&|x| x, &|_| 1.0, 1.0, 0.0, 8, 8).is_err());
    }
}
