//! Radial shooting for the first eigenvalue on a disc.
//!
//! For `u(x) = U(|x|)` the Monge-Ampere density is `U'' U' / r`, so the
//! eigenproblem becomes `U'' = lambda^2 U^2 f(r) r / U'` with `U(0) = -1`,
//! `U'(0) = 0`. Near the origin `U = -1 + (lambda sqrt(f(0)) / 2) r^2`. The
//! boundary value `U(R; lambda)` increases with `lambda`; the eigenvalue is
//! its zero.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type RadialDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RadialProblem {
    pub radius: f64,
    pub density: RadialDensity,
}

impl RadialProblem {
    /// Checks that `f` is finite and nonnegative on `(0, R]` and that its
    /// mass `int f 2 pi r dr` is finite and positive.
    pub fn new(radius: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("disc radius must be positive, got {radius}")));
        }
        let m = 4096;
        let mut mass = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) * radius / m as f64;
            let v = f(r);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMeasure(format!("radial density is {v} at r = {r}")));
            }
            mass += v * 2.0 * std::f64::consts::PI * r * radius / m as f64;
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure("radial density has no finite positive mass".into()));
        }
        Ok(Self { radius, density: Arc::new(f) })
    }

    pub fn constant(radius: f64, c: f64) -> Result<Self> {
        Self::new(radius, move |_| c)
    }
}

impl fmt::Debug for RadialProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProblem").field("radius", &self.radius).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    /// Relative tolerance of the integrator.
    pub rtol: f64,
    pub atol: f64,
    /// Relative tolerance on lambda.
    pub lambda_tol: f64,
    /// Number of profile samples, endpoints included.
    pub samples: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, lambda_tol: 1e-13, samples: 101 }
    }
}

impl ShootOptions {
    /// Every tolerance halved.
    pub fn halved(&self) -> Self {
        Self { rtol: 0.5 * self.rtol, atol: 0.5 * self.atol, lambda_tol: 0.5 * self.lambda_tol, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialEigen {
    pub lambda1: f64,
    /// `(r, U(r))`, normalized so `U(0) = -1`.
    pub profile: Vec<(f64, f64)>,
}

pub fn oracle_radial(p: &RadialProblem, opts: &ShootOptions) -> Result<RadialEigen> {
    let phi = |lambda: f64| shoot(p, lambda, opts, &[p.radius]).map(|v| v[0]);
    // U(R; lambda) is increasing in lambda: expand until the sign changes
    let mut lo = 1.0 / (p.radius * p.radius);
    let mut f_lo = phi(lo)?;
    let mut hi = lo;
    let mut f_hi = f_lo;
    let mut tries = 0;
    while f_lo > 0.0 {
        hi = lo;
        f_hi = f_lo;
        lo *= 0.5;
        f_lo = phi(lo)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoBracket { last_lambda: lo });
        }
    }
    while f_hi <= 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = phi(hi)?;
        tries += 1;
        if tries > 200 || !f_hi.is_finite() {
            return Err(Error::NoBracket { last_lambda: hi });
        }
    }
    // Illinois regula falsi, with a bisection step whenever it stalls
    let mut side = 0i32;
    for _ in 0..200 {
        if hi - lo <= opts.lambda_tol * hi {
            break;
        }
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = phi(x)?;
        if fx == 0.0 {
            lo = x;
            hi = x;
            break;
        }
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let lambda1 = 0.5 * (lo + hi);
    let m = opts.samples.max(2);
    let rs: Vec<f64> = (0..m).map(|i| p.radius * i as f64 / (m - 1) as f64).collect();
    let us = shoot(p, lambda1, opts, &rs)?;
    Ok(RadialEigen { lambda1, profile: rs.into_iter().zip(us).collect() })
}

/// Integrates the radial ODE for a given `lambda` and returns `U` at the
/// requested increasing radii.
fn shoot(p: &RadialProblem, lambda: f64, opts: &ShootOptions, at: &[f64]) -> Result<Vec<f64>> {
    let r0 = 10.0 * f64::EPSILON.powf(0.25) * p.radius;
    let f0 = (p.density)(r0);
    let a = 0.5 * lambda * f0.sqrt();
    let mut r = r0;
    let mut y = [-1.0 + a * r0 * r0, 2.0 * a * r0];
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] { [y[1], lambda * lambda * y[0] * y[0] * (p.density)(r) * r / y[1]] };
    let mut out = Vec::with_capacity(at.len());
    let mut step = 1e-3 * p.radius;
    for &target in at {
        if target <= r0 {
            out.push(-1.0 + a * target * target);
            continue;
        }
        while r < target {
            let h = step.min(target - r);
            let (next, err) = dopri_step(&rhs, r, y, h);
            let scale = [
                opts.atol + opts.rtol * y[0].abs().max(next[0].abs()),
                opts.atol + opts.rtol * y[1].abs().max(next[1].abs()),
            ];
            let e = ((err[0] / scale[0]).powi(2) + (err[1] / scale[1]).powi(2)).sqrt() / 2f64.sqrt();
            if !e.is_finite() {
                step = 0.25 * h;
                if step < 1e-14 * p.radius {
                    return Err(Error::NonConvergence {
                        context: "radial shooting integrator".into(),
                        step: None,
                        iterations: 0,
                        residual: f64::NAN,
                    });
                }
                continue;
            }
            if e <= 1.0 {
                r += h;
                y = next;
                if r >= target - 1e-15 * p.radius {
                    r = target;
                }
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            step = h * factor;
            if step < 1e-14 * p.radius {
                return Err(Error::NonConvergence {
                    context: "radial shooting integrator".into(),
                    step: None,
                    iterations: 0,
                    residual: e,
                });
            }
        }
        out.push(y[0]);
    }
    Ok(out)
}

/// One Dormand-Prince 5(4) step; returns the fifth-order solution and the
/// difference to the embedded fourth-order one.
fn dopri_step(f: &impl Fn(f64, [f64; 2]) -> [f64; 2], t: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = f(t + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[s] * k[s][c];
            err[c] += h * (B5[s] - B4[s]) * k[s][c];
        }
    }
    (y5, err)
}
