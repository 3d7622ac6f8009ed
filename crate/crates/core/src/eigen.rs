//! Inverse iteration `M(u_{k+1}) = R(u_k) (-u_k)^n nu`, its monotonicity
//! certificates, and the proportionality test used to compare eigenfunctions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dirichlet::{solve_dirichlet, solve_dirichlet_from, DirichletOptions};
use crate::error::{Error, Result};
use crate::functionals::{rayleigh_with, FunctionalReport};
use crate::grid::Grid;
use crate::grid_function::{same_layout, sup_diff, BoundaryData, GridFunction};
use crate::ma::ma_apply;
use crate::measure::MeasureSpec;

/// One step of an inverse iteration run. `energy` and `mass` belong to the
/// stored (possibly normalized) iterate; the unnormalized iterate is
/// `scale` times it, so its energy and mass are these times `scale^(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "I")]
    pub mass: f64,
    #[serde(rename = "R")]
    pub ratio: f64,
    pub lambda_hat: f64,
    /// `|u_k - u_{k-1}|_inf / |u_{k-1}|_inf`; absent for the initial record.
    pub sup_diff: Option<f64>,
    /// Residual of the Dirichlet solve producing `u_k`; absent for the initial record.
    pub residual: Option<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub dim: usize,
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    /// `(E, I)` of the unnormalized iterates.
    pub fn lifted(&self) -> Vec<(f64, f64)> {
        let p = self.dim as i32 + 1;
        self.records.iter().map(|r| (r.energy * r.scale.powi(p), r.mass * r.scale.powi(p))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol_diff: f64,
    pub tol_r: f64,
    pub max_iter: usize,
    /// Rescale every iterate to unit sup norm.
    pub normalize: bool,
    pub dirichlet: DirichletOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol_diff: 1e-6, tol_r: 1e-8, max_iter: 200, normalize: true, dirichlet: DirichletOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda_hat: f64,
    /// Final iterate, scaled to unit sup norm.
    pub u: GridFunction,
    pub trace: IterationTrace,
    pub converged: bool,
    pub certificate_violations: Vec<Violation>,
    /// `|M(u) - R(u) (-u)^n nu|_inf` for the returned `u`.
    pub fixed_point_residual: f64,
    pub iterations: usize,
}

/// Runs inverse iteration from `u0`, or from the solution of `M(u) = nu`
/// when `u0` is `None`.
pub fn inverse_iterate(
    grid: &Arc<Grid>,
    nu: &MeasureSpec,
    u0: Option<&GridFunction>,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    if !(opts.tol_diff > 0.0 && opts.tol_r > 0.0) {
        return Err(Error::InvalidInput("iteration tolerances must be positive".into()));
    }
    let density = nu.density_on(grid)?;
    let start = match u0 {
        Some(u) => {
            if !same_layout(u.grid(), grid) {
                return Err(Error::InvalidInput("starting function lives on a different grid".into()));
            }
            if !u.boundary().is_zero() {
                return Err(Error::InvalidInput("starting function must vanish on the boundary".into()));
            }
            if let Some(i) = u.values().iter().position(|&v| v > 0.0) {
                return Err(Error::InvalidInput(format!("starting function is positive at node {i}")));
            }
            u.clone()
        }
        None => solve_dirichlet(grid, &density, BoundaryData::Zero, &opts.dirichlet)?.u,
    };
    if start.is_zero() {
        return Err(Error::DegenerateStart);
    }
    let dim = grid.dim();
    let (mut u, mut scale) = if opts.normalize {
        let s = start.sup_norm();
        (start.scaled(1.0 / s), s)
    } else {
        (start, 1.0)
    };
    let mut current = rayleigh_with(&u, &density)?;
    let mut records = vec![record(0, &current, None, None, scale)];
    let mut converged = false;
    let mut k = 0;
    while k < opts.max_iter {
        k += 1;
        let (next, residual) = inverse_step_with(&u, &density, current.ratio, &opts.dirichlet).map_err(|e| e.at_step(k))?;
        let diff = sup_diff(next.values(), u.values()) / u.sup_norm();
        let (next, step_scale) = if opts.normalize {
            let s = next.sup_norm();
            if s == 0.0 {
                return Err(Error::ZeroFunction);
            }
            (next.scaled(1.0 / s), s)
        } else {
            (next, 1.0)
        };
        scale *= step_scale;
        let report = rayleigh_with(&next, &density)?;
        records.push(record(k, &report, Some(diff), Some(residual), scale));
        let dr = (report.ratio - current.ratio).abs();
        let done = diff < opts.tol_diff && dr < opts.tol_r * current.ratio;
        u = next;
        current = report;
        if done {
            converged = true;
            break;
        }
    }
    let trace = IterationTrace { dim, records };
    let certificate_violations = certify_monotone(&trace, 1e-6);
    let fixed_point_residual = fixed_point_residual(&u, &density, current.ratio);
    Ok(EigenResult {
        lambda_hat: current.lambda_hat,
        u,
        trace,
        converged,
        certificate_violations,
        fixed_point_residual,
        iterations: k,
    })
}

fn record(k: usize, r: &FunctionalReport, sup_diff: Option<f64>, residual: Option<f64>, scale: f64) -> TraceRecord {
    TraceRecord { k, energy: r.energy, mass: r.mass, ratio: r.ratio, lambda_hat: r.lambda_hat, sup_diff, residual, scale }
}

/// Right-hand side `R (-u)^n nu` of one iteration step.
fn step_density(u: &GridFunction, density: &[f64], ratio: f64) -> Vec<f64> {
    let n = u.grid().dim() as i32;
    u.values().iter().zip(density).map(|(v, d)| ratio * (-v).max(0.0).powi(n) * d).collect()
}

fn inverse_step_with(u: &GridFunction, density: &[f64], ratio: f64, opts: &DirichletOptions) -> Result<(GridFunction, f64)> {
    let g = step_density(u, density, ratio);
    let sol = solve_dirichlet_from(u, &g, opts)?;
    Ok((sol.u, sol.residual))
}

/// One unnormalized iteration step from `u`, warm-started at `u`. Returns
/// the new iterate and the residual of its Dirichlet solve.
pub fn inverse_step(u: &GridFunction, nu: &MeasureSpec, opts: &DirichletOptions) -> Result<(GridFunction, f64)> {
    let density = nu.density_on(u.grid())?;
    let r = rayleigh_with(u, &density)?;
    inverse_step_with(u, &density, r.ratio, opts)
}

/// `|M(u) - R (-u)^n nu|_inf`.
pub fn fixed_point_residual(u: &GridFunction, density: &[f64], ratio: f64) -> f64 {
    let m = ma_apply(u).values;
    let g = step_density(u, density, ratio);
    sup_diff(&m, &g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index `k + 1` of the step at which monotonicity broke.
    pub step: usize,
    /// One of `E`, `I`, `R`, `E/I^(1/(n+1))`.
    pub quantity: String,
}

/// Checks, on the unnormalized values, that `E_k` and `I_k` are
/// nondecreasing while `R_k` and `E_k / I_k^(1/(n+1))` are nonincreasing,
/// each up to a relative tolerance. An empty list means the certificate holds.
pub fn certify_monotone(trace: &IterationTrace, tol_cert: f64) -> Vec<Violation> {
    let lifted = trace.lifted();
    let q = 1.0 / (trace.dim as f64 + 1.0);
    let mut out = Vec::new();
    for (k, w) in lifted.windows(2).enumerate() {
        let ((e0, i0), (e1, i1)) = (w[0], w[1]);
        let (r0, r1) = (e0 / i0, e1 / i1);
        let (n0, n1) = (e0 / i0.powf(q), e1 / i1.powf(q));
        let mut flag = |broken: bool, name: &str| {
            if broken {
                out.push(Violation { step: k + 1, quantity: name.to_string() });
            }
        };
        flag(e1 < e0 * (1.0 - tol_cert), "E");
        flag(i1 < i0 * (1.0 - tol_cert), "I");
        flag(r1 > r0 * (1.0 + tol_cert), "R");
        flag(n1 > n0 * (1.0 + tol_cert), "E/I^(1/(n+1))");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportionality {
    /// Best positive `c` in `u ~ c v`.
    pub c: f64,
    /// `|u - c v|_inf / |u|_inf` at that `c`.
    pub dev: f64,
}

/// Finds the positive multiple of `v` closest to `u` in sup norm.
pub fn proportionality(u: &GridFunction, v: &GridFunction) -> Result<Proportionality> {
    u.same_grid(v)?;
    let (nu, nv) = (u.sup_norm(), v.sup_norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let dev = |c: f64| sup_diff_scaled(u.values(), v.values(), c) / nu;
    let c0 = nu / nv;
    // the deviation is convex in c
    let (mut a, mut b) = (0.5 * c0, 1.5 * c0);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (dev(x1), dev(x2));
    for _ in 0..100 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = dev(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = dev(x2);
        }
    }
    let refined = 0.5 * (a + b);
    let (d0, d1) = (dev(c0), dev(refined));
    Ok(if d1 < d0 { Proportionality { c: refined, dev: d1 } } else { Proportionality { c: c0, dev: d0 } })
}

fn sup_diff_scaled(u: &[f64], v: &[f64], c: f64) -> f64 {
    u.iter().zip(v).fold(0.0, |m, (a, b)| m.max((a - c * b).abs()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::discretize;

    fn grid(spec: &str, h: f64) -> Arc<Grid> {
        Arc::new(discretize(&spec.parse().unwrap(), h, 2).unwrap())
    }

    fn rec(k: usize, e: f64, i: f64) -> TraceRecord {
        TraceRecord { k, energy: e, mass: i, ratio: e / i, lambda_hat: e / i, sup_diff: None, residual: None, scale: 1.0 }
    }

    #[test]
    fn certificate_detector() {
        let flat = IterationTrace { dim: 1, records: (0..5).map(|k| rec(k, 2.0, 1.0)).collect() };
        assert!(certify_monotone(&flat, 1e-6).is_empty());
        // R goes up at step 3 (E grows, I shrinks)
        let records = vec![rec(0, 1.0, 0.1), rec(1, 2.0, 0.2), rec(2, 3.0, 0.4), rec(3, 3.0, 0.35), rec(4, 3.0, 0.4)];
        let bad = IterationTrace { dim: 1, records };
        let steps: Vec<usize> = certify_monotone(&bad, 1e-6).iter().filter(|v| v.quantity == "R").map(|v| v.step).collect();
        assert_eq!(steps, vec![3]);
    }

    #[test]
    fn proportional_functions() {
        let g = grid("interval 0 1", 1.0 / 64.0);
        let u = GridFunction::from_fn(&g, |p| -(PI * p[0]).sin());
        let p = proportionality(&u, &u.scaled(3.0)).unwrap();
        assert!((p.c - 1.0 / 3.0).abs() < 1e-12);
        assert!(p.dev <= 1e-12);
        // a bump where |u| is about 1/2 cannot be absorbed by rescaling
        let bumped = GridFunction::from_fn(&g, |p| {
            let x = p[0];
            -(PI * x).sin() - 0.1 * (-((x - 1.0 / 6.0) / 0.03).powi(2)).exp()
        });
        assert!(proportionality(&u, &bumped).unwrap().dev >= 0.05);
        assert_eq!(proportionality(&u, &GridFunction::zeros(&g)).unwrap_err(), Error::ZeroFunction);
    }

    #[test]
    fn one_dimensional_eigenpair() {
        let g = grid("interval 0 1", 1.0 / 256.0);
        let u0 = GridFunction::from_fn(&g, |p| p[0] * p[0] - p[0]);
        let r = inverse_iterate(&g, &MeasureSpec::lebesgue(), Some(&u0), &EigenOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.lambda_hat / (PI * PI) - 1.0).abs() < 1e-4);
        assert_eq!(r.trace.records.len(), r.iterations + 1);
        assert!(r.certificate_violations.is_empty(), "{:?}", r.certificate_violations);
        let err = g.nodes().iter().zip(r.u.values()).fold(0.0f64, |m, (p, v)| m.max((v + (PI * p[0]).sin()).abs()));
        assert!(err < 1e-3);
        // starting from the eigenfunction moves it by less than the tolerance
        let again = inverse_iterate(&g, &MeasureSpec::lebesgue(), Some(&r.u), &EigenOptions::default()).unwrap();
        assert!(again.trace.records[1].sup_diff.unwrap() < 1e-6);
    }

    #[test]
    fn rejects_bad_starts() {
        let g = grid("interval 0 1", 1.0 / 16.0);
        let o = EigenOptions::default();
        assert_eq!(
            inverse_iterate(&g, &MeasureSpec::lebesgue(), Some(&GridFunction::zeros(&g)), &o).unwrap_err(),
            Error::DegenerateStart
        );
        let pos = GridFunction::from_fn(&g, |p| p[0] - p[0] * p[0]);
        assert!(matches!(inverse_iterate(&g, &MeasureSpec::lebesgue(), Some(&pos), &o), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn inner_failure_carries_step() {
        let g = grid("disc 0 0 1", 1.0 / 16.0);
        let o = EigenOptions { dirichlet: DirichletOptions { max_newton: 1, ..Default::default() }, ..Default::default() };
        let u0 = GridFunction::from_fn(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0));
        match inverse_iterate(&g, &MeasureSpec::lebesgue(), Some(&u0), &o) {
            Err(Error::NonConvergence { step, .. }) => assert_eq!(step, Some(1)),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn one_step_is_scale_equivariant() {
        for spec in ["interval 0 1", "disc 0 0 1"] {
            let g = grid(spec, 1.0 / 32.0);
            let u0 = crate::samples::convex_sample(&g, 5).unwrap();
            let (u1, _) = inverse_step(&u0, &MeasureSpec::lebesgue(), &Default::default()).unwrap();
            for c in [0.1, 10.0] {
                let (uc, _) = inverse_step(&u0.scaled(c), &MeasureSpec::lebesgue(), &Default::default()).unwrap();
                assert!(sup_diff(uc.values(), u1.scaled(c).values()) <= 1e-8 * c * u1.sup_norm());
            }
        }
    }
}
