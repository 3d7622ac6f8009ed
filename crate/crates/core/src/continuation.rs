//! Semilinear problems `M(u) = F(x, u)^n nu` by Picard iteration, and the
//! continuation family `F = 1 - lambda t` used to bracket the first
//! eigenvalue from the blow-up of its solutions.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dirichlet::{solve_dirichlet, solve_dirichlet_from, DirichletOptions};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::grid_function::{sup_diff, BoundaryData, GridFunction};
use crate::ma::ma_apply;
use crate::measure::MeasureSpec;

pub type SemilinearFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Right-hand side `F(x, t)` for `t <= 0` together with the declared bound
/// `dF/dt >= -lipschitz_down`.
#[derive(Clone)]
pub struct SemilinearSpec {
    pub f: SemilinearFn,
    pub lipschitz_down: f64,
}

impl SemilinearSpec {
    pub fn new(f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static, lipschitz_down: f64) -> Self {
        Self { f: Arc::new(f), lipschitz_down }
    }

    /// `F = 1 - lambda t`, the continuation family.
    pub fn lions(lambda: f64) -> Self {
        Self::new(move |_, t| 1.0 - lambda * t, lambda)
    }

    /// Checks that `F(., 0)` is finite and nonnegative on the nodes and that
    /// finite-difference slopes at 100 seeded samples respect the declared
    /// bound within 5%.
    pub fn validate(&self, grid: &Grid, t_range: f64) -> Result<()> {
        if !(self.lipschitz_down >= 0.0 && self.lipschitz_down.is_finite()) {
            return Err(Error::InvalidInput(format!("lipschitz_down must be finite and >= 0, got {}", self.lipschitz_down)));
        }
        for (node, &p) in grid.nodes().iter().enumerate() {
            let v = (self.f)(p, 0.0);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("F(x, 0) = {v} at node {node}; must be finite and >= 0")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let bound = -1.05 * self.lipschitz_down;
        for _ in 0..100 {
            let p = grid.node(rng.gen_range(0..grid.len()));
            let t = -rng.gen_range(0.0..t_range.max(1e-6));
            let dt = 1e-6 * (1.0 + t.abs());
            let slope = ((self.f)(p, t + dt) - (self.f)(p, t - dt)) / (2.0 * dt);
            if slope < bound - 1e-6 * (1.0 + self.lipschitz_down) {
                return Err(Error::InvalidInput(format!(
                    "F decreases in t with slope {slope:.6} at x = ({}, {}), t = {t:.4}, steeper than the declared -{}",
                    p[0], p[1], self.lipschitz_down
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SemilinearSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearSpec").field("lipschitz_down", &self.lipschitz_down).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemilinearOptions {
    /// Picard stops once `|u_{j+1} - u_j|_inf <= tol * max(1, |u_{j+1}|_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Abort with `NonConvergence` once the sup norm passes this bound while
    /// still growing. `None` disables the guard.
    pub growth_guard: Option<f64>,
    pub dirichlet: DirichletOptions,
}

impl Default for SemilinearOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 2000, growth_guard: None, dirichlet: DirichletOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub u: GridFunction,
    /// `|M(u) - F(x, u)^n nu|_inf`.
    pub residual: f64,
    pub iterations: usize,
    /// Sup norm of every Picard iterate, `u_0 = 0` included.
    pub sup_history: Vec<f64>,
}

/// Picard iteration `M(u_{j+1}) = F(x, u_j)^n nu` from `u_0 = 0`.
pub fn solve_semilinear(
    grid: &Arc<Grid>,
    nu: &MeasureSpec,
    spec: &SemilinearSpec,
    opts: &SemilinearOptions,
) -> Result<SemilinearSolution> {
    let density = nu.density_on(grid)?;
    spec.validate(grid, 10.0)?;
    let mut picard = Picard::new(grid, &density, spec, &opts.dirichlet);
    let mut growing = 0usize;
    loop {
        let step = picard.step()?;
        let sup = picard.u.sup_norm();
        if step.diff <= opts.tol * sup.max(1.0) {
            let residual = semilinear_residual(&picard.u, &density, spec);
            return Ok(SemilinearSolution { u: picard.u, residual, iterations: picard.iterations, sup_history: picard.sups });
        }
        growing = if step.grew { growing + 1 } else { 0 };
        if let Some(guard) = opts.growth_guard {
            if sup > guard && growing >= 3 {
                return Err(Error::NonConvergence {
                    context: format!(
                        "Picard iteration (sup norm {sup:.3e} grew past the guard {guard:.3e}; lambda_0 may exceed lambda_1)"
                    ),
                    step: None,
                    iterations: picard.iterations,
                    residual: step.diff,
                });
            }
        }
        if picard.iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                context: "Picard iteration".into(),
                step: None,
                iterations: picard.iterations,
                residual: step.diff,
            });
        }
    }
}

/// `|M(u) - F(x, u)^n nu|_inf`.
pub fn semilinear_residual(u: &GridFunction, density: &[f64], spec: &SemilinearSpec) -> f64 {
    let g = rhs(u, density, spec);
    sup_diff(&ma_apply(u).values, &g)
}

fn rhs(u: &GridFunction, density: &[f64], spec: &SemilinearSpec) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.dim() as i32;
    grid.nodes()
        .iter()
        .zip(u.values())
        .zip(density)
        .map(|((&p, &v), &d)| (spec.f)(p, v.min(0.0)).max(0.0).powi(n) * d)
        .collect()
}

struct Picard<'a> {
    density: &'a [f64],
    spec: &'a SemilinearSpec,
    opts: &'a DirichletOptions,
    u: GridFunction,
    iterations: usize,
    sups: Vec<f64>,
    iterates: Option<Vec<GridFunction>>,
}

struct PicardStep {
    diff: f64,
    grew: bool,
}

impl<'a> Picard<'a> {
    fn new(grid: &Arc<Grid>, density: &'a [f64], spec: &'a SemilinearSpec, opts: &'a DirichletOptions) -> Self {
        Self { density, spec, opts, u: GridFunction::zeros(grid), iterations: 0, sups: vec![0.0], iterates: None }
    }

    fn step(&mut self) -> Result<PicardStep> {
        let g = rhs(&self.u, self.density, self.spec);
        let next = if self.u.is_zero() {
            solve_dirichlet(self.u.grid(), &g, BoundaryData::Zero, self.opts)?.u
        } else {
            solve_dirichlet_from(&self.u, &g, self.opts)?.u
        };
        let diff = sup_diff(next.values(), self.u.values());
        let sup = next.sup_norm();
        let grew = sup > *self.sups.last().unwrap_or(&0.0);
        self.iterations += 1;
        self.sups.push(sup);
        if let Some(list) = &mut self.iterates {
            list.push(next.clone());
        }
        self.u = next;
        Ok(PicardStep { diff, grew })
    }
}

/// All Picard iterates `u_0 = 0, u_1, ...` for `spec`, up to `count` steps
/// or convergence at `tol`. Used to inspect the monotone structure.
pub fn picard_iterates(
    grid: &Arc<Grid>,
    nu: &MeasureSpec,
    spec: &SemilinearSpec,
    count: usize,
    tol: f64,
    opts: &DirichletOptions,
) -> Result<Vec<GridFunction>> {
    let density = nu.density_on(grid)?;
    let mut picard = Picard::new(grid, &density, spec, opts);
    picard.iterates = Some(vec![GridFunction::zeros(grid)]);
    for _ in 0..count {
        let step = picard.step()?;
        if step.diff <= tol * picard.u.sup_norm().max(1.0) {
            break;
        }
    }
    Ok(picard.iterates.take().unwrap_or_default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LionsOptions {
    pub lambda_max: f64,
    /// A probe counts as blowing up once its sup norm exceeds this multiple
    /// of the sup norm of the `lambda = 0` solution.
    pub growth_guard: f64,
    /// Bisection stops once `hi - lo <= bisect_tol * hi`.
    pub bisect_tol: f64,
    /// Picard budget per probe.
    pub max_picard: usize,
    pub picard_tol: f64,
    pub dirichlet: DirichletOptions,
}

impl Default for LionsOptions {
    fn default() -> Self {
        Self {
            lambda_max: 50.0,
            growth_guard: 50.0,
            bisect_tol: 0.01,
            max_picard: 2000,
            picard_tol: 1e-10,
            dirichlet: DirichletOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    /// Sup norm of the solution; for probes classified before full
    /// convergence, the geometric extrapolation of the Picard sup norms.
    pub sup_norm: f64,
    pub converged: bool,
    pub subcritical: bool,
}

#[derive(Debug, Clone)]
pub struct BracketResult {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Last Picard iterate at `lambda_lo`.
    pub witness_lo: GridFunction,
    /// Every probe, sorted by lambda.
    pub sup_norm_curve: Vec<CurvePoint>,
}

struct Probe {
    point: CurvePoint,
    u: GridFunction,
}

/// Classifies `lambda` by running Picard on `F = 1 - lambda t`.
///
/// Subcritical: Picard converges, or its increments contract at a stable
/// ratio below 1. Supercritical: the sup norm passes the guard while the
/// increments stop contracting, or the Picard budget runs out.
fn probe(grid: &Arc<Grid>, density: &[f64], lambda: f64, guard: f64, opts: &LionsOptions) -> Result<Probe> {
    let spec = SemilinearSpec::lions(lambda);
    let mut picard = Picard::new(grid, density, &spec, &opts.dirichlet);
    let mut diffs: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let hard_cap = guard * 1e6;
    loop {
        let step = picard.step()?;
        let sup = picard.u.sup_norm();
        let done = |converged: bool, subcritical: bool, sup_norm: f64, u: GridFunction| Probe {
            point: CurvePoint { lambda, sup_norm, converged, subcritical },
            u,
        };
        if step.diff <= opts.picard_tol * sup.max(1.0) {
            return Ok(done(true, true, sup, picard.u));
        }
        if let Some(&prev) = diffs.last() {
            ratios.push(step.diff / prev);
        }
        diffs.push(step.diff);
        let m = ratios.len();
        let stable = m >= 3 && (ratios[m - 1] - ratios[m - 2]).abs() < 1e-4 && (ratios[m - 2] - ratios[m - 3]).abs() < 1e-4;
        if stable && ratios[m - 1] < 1.0 {
            let rho = ratios[m - 1];
            return Ok(done(false, true, sup + step.diff * rho / (1.0 - rho), picard.u));
        }
        let expanding = m >= 3 && ratios[m - 3..].iter().all(|&r| r >= 1.0);
        if (sup > guard && expanding) || sup > hard_cap || picard.iterations >= opts.max_picard {
            return Ok(done(false, false, sup, picard.u));
        }
    }
}

/// Brackets the first eigenvalue by bisection on the continuation parameter.
pub fn lions_bracket(grid: &Arc<Grid>, nu: &MeasureSpec, opts: &LionsOptions) -> Result<BracketResult> {
    if !(opts.lambda_max > 0.0 && opts.lambda_max.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda_max must be positive, got {}", opts.lambda_max)));
    }
    if !(opts.bisect_tol > 0.0 && opts.growth_guard > 1.0) {
        return Err(Error::InvalidInput("bisect_tol must be positive and growth_guard above 1".into()));
    }
    let density = nu.density_on(grid)?;
    let base = solve_dirichlet(grid, &density, BoundaryData::Zero, &opts.dirichlet)?.u;
    let guard = opts.growth_guard * base.sup_norm();
    let mut curve = vec![CurvePoint { lambda: 0.0, sup_norm: base.sup_norm(), converged: true, subcritical: true }];
    let top = probe(grid, &density, opts.lambda_max, guard, opts)?;
    curve.push(top.point);
    if top.point.subcritical {
        return Err(Error::AllSubcritical { lambda_max: opts.lambda_max });
    }
    let (mut lo, mut hi) = (0.0, opts.lambda_max);
    let mut witness = base;
    while hi - lo > opts.bisect_tol * hi {
        if hi < 1e-6 * opts.lambda_max {
            return Err(Error::AllSupercritical { lambda_min: hi });
        }
        let mid = 0.5 * (lo + hi);
        let p = probe(grid, &density, mid, guard, opts)?;
        curve.push(p.point);
        if p.point.subcritical {
            lo = mid;
            witness = p.u;
        } else {
            hi = mid;
        }
    }
    curve.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(BracketResult { lambda_lo: lo, lambda_hi: hi, witness_lo: witness, sup_norm_curve: curve })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::discretize;

    fn grid(spec: &str, h: f64) -> Arc<Grid> {
        Arc::new(discretize(&spec.parse().unwrap(), h, 2).unwrap())
    }

    #[test]
    fn zero_right_hand_side() {
        let g = grid("disc 0 0 1", 1.0 / 16.0);
        let s = solve_semilinear(&g, &MeasureSpec::lebesgue(), &SemilinearSpec::new(|_, _| 0.0, 0.0), &Default::default()).unwrap();
        assert!(s.u.sup_norm() <= 1e-8);
    }

    #[test]
    fn constant_right_hand_side_in_1d() {
        let g = grid("interval 0 1", 1.0 / 64.0);
        let s = solve_semilinear(&g, &MeasureSpec::lebesgue(), &SemilinearSpec::new(|_, _| 1.0, 0.0), &Default::default()).unwrap();
        let mid = g.nodes().iter().position(|p| p[0] == 0.5).unwrap();
        assert!((s.u.values()[mid] + 0.125).abs() < 1e-9);
    }

    #[test]
    fn zero_lambda_is_the_plain_problem() {
        let g = grid("disc 0 0 1", 1.0 / 16.0);
        let nu = MeasureSpec::expression(|p| 1.0 + p[0] * p[0]);
        let s = solve_semilinear(&g, &nu, &SemilinearSpec::lions(0.0), &Default::default()).unwrap();
        let d = nu.density_on(&g).unwrap();
        let plain = solve_dirichlet(&g, &d, BoundaryData::Zero, &Default::default()).unwrap();
        assert_eq!(s.u.values(), plain.u.values());
    }

    #[test]
    fn validation_catches_understated_slope() {
        let g = grid("interval 0 1", 1.0 / 16.0);
        assert!(SemilinearSpec::lions(3.0).validate(&g, 10.0).is_ok());
        assert!(SemilinearSpec::new(|_, t| 1.0 - 3.0 * t, 2.0).validate(&g, 10.0).is_err());
        assert!(SemilinearSpec::new(|_, _| -1.0, 0.0).validate(&g, 10.0).is_err());
    }

    #[test]
    fn picard_iterates_decrease() {
        let g = grid("interval 0 1", 1.0 / 64.0);
        let its = picard_iterates(&g, &MeasureSpec::lebesgue(), &SemilinearSpec::lions(5.0), 40, 1e-12, &Default::default()).unwrap();
        for w in its.windows(2) {
            for (a, b) in w[0].values().iter().zip(w[1].values()) {
                assert!(*b <= a + 1e-8);
            }
        }
    }

    #[test]
    fn guard_reports_blow_up() {
        let g = grid("interval 0 1", 1.0 / 32.0);
        let o = SemilinearOptions { growth_guard: Some(10.0), ..Default::default() };
        match solve_semilinear(&g, &MeasureSpec::lebesgue(), &SemilinearSpec::lions(12.0), &o) {
            Err(Error::NonConvergence { context, .. }) => assert!(context.contains("lambda_0 may exceed lambda_1")),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn bracket_in_1d() {
        let g = grid("interval 0 1", 1.0 / 256.0);
        let b = lions_bracket(&g, &MeasureSpec::lebesgue(), &LionsOptions { lambda_max: 40.0, ..Default::default() }).unwrap();
        assert!(b.lambda_lo < b.lambda_hi);
        assert!(b.lambda_hi - b.lambda_lo <= 0.01 * b.lambda_hi);
        let discrete = 4.0 * 256.0f64.powi(2) * (PI / 512.0).sin().powi(2);
        assert!(b.lambda_lo <= discrete && discrete <= b.lambda_hi, "{b:?}");
        let sub: Vec<&CurvePoint> = b.sup_norm_curve.iter().filter(|p| p.subcritical).collect();
        for w in sub.windows(2) {
            assert!(w[1].sup_norm >= w[0].sup_norm * 0.99);
        }
        assert!(matches!(
            lions_bracket(&g, &MeasureSpec::lebesgue(), &LionsOptions { lambda_max: 5.0, ..Default::default() }),
            Err(Error::AllSubcritical { .. })
        ));
        // a huge measure pushes the eigenvalue below any probe
        assert!(matches!(
            lions_bracket(&g, &MeasureSpec::Constant(1e16), &LionsOptions { lambda_max: 5.0, ..Default::default() }),
            Err(Error::AllSupercritical { .. })
        ));
    }
}
