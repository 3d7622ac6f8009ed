//! Dirichlet problem `M(u) = g` in the domain, `u = boundary data` on the
//! boundary.
//!
//! Two policies are available. [`SolverPolicy::Sweep`] is nonlinear
//! Gauss-Seidel: each node is moved to the closed-form center value that
//! makes its own equation exact, in symmetric (forward then backward)
//! lexicographic sweeps. [`SolverPolicy::Newton`] applies damped Newton to
//! the equation on the currently active direction pair, with a sparse LU
//! whose symbolic analysis is shared by every solve on the same grid. If the
//! line search stalls the solve falls back to Gauss-Seidel from the current
//! iterate.

use std::fmt;
use std::sync::Arc;

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::prelude::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ArmEnd, Grid};
use crate::grid_function::{BoundaryData, GridFunction};
use crate::ma::{local_solve, node_value, second_difference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverPolicy {
    Sweep,
    #[default]
    Newton,
}

impl std::str::FromStr for SolverPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(SolverPolicy::Sweep),
            "newton" => Ok(SolverPolicy::Newton),
            other => Err(Error::InvalidInput(format!("unknown solver policy '{other}' (sweep or newton)"))),
        }
    }
}

impl fmt::Display for SolverPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverPolicy::Sweep => "sweep",
            SolverPolicy::Newton => "newton",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletOptions {
    /// Relative tolerance: the solve stops once
    /// `|M(u) - g|_inf <= tol * max(1, |g|_inf)` and the convexity defect
    /// is above minus the same bound.
    pub tol: f64,
    /// Gauss-Seidel budget, counted in single sweeps.
    pub max_sweeps: usize,
    /// Newton budget.
    pub max_newton: usize,
    pub policy: SolverPolicy,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 100_000, max_newton: 50, policy: SolverPolicy::default() }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub u: GridFunction,
    /// Final `|M(u) - g|_inf`.
    pub residual: f64,
    /// Newton steps or Gauss-Seidel sweeps, whichever ran last.
    pub iterations: usize,
    pub policy_used: SolverPolicy,
    /// True when Newton handed over to Gauss-Seidel.
    pub fell_back: bool,
}

/// Solves `M(u) = g` with the given boundary data.
pub fn solve_dirichlet(
    grid: &Arc<Grid>,
    g: &[f64],
    boundary: BoundaryData,
    opts: &DirichletOptions,
) -> Result<DirichletSolution> {
    validate(grid, g, opts)?;
    boundary.check_len(grid)?;
    let initial = match opts.policy {
        SolverPolicy::Newton => poisson_guess(grid, g, &boundary),
        // above the solution: M(u0) <= g, so sweeps decrease monotonically
        SolverPolicy::Sweep => boundary_guess(grid, &boundary),
    };
    run(grid, initial, g, boundary, opts)
}

/// Same as [`solve_dirichlet`], warm-started from `initial` (whose boundary
/// data is used).
pub fn solve_dirichlet_from(initial: &GridFunction, g: &[f64], opts: &DirichletOptions) -> Result<DirichletSolution> {
    let grid = initial.grid();
    validate(grid, g, opts)?;
    run(grid, initial.values().to_vec(), g, initial.boundary().clone(), opts)
}

fn validate(grid: &Grid, g: &[f64], opts: &DirichletOptions) -> Result<()> {
    if g.len() != grid.len() {
        return Err(Error::InvalidInput(format!("density has {} values, grid has {} nodes", g.len(), grid.len())));
    }
    for (node, &value) in g.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("density is not finite at node {node}")));
        }
        if value < 0.0 {
            return Err(Error::NegativeDensity { node, value });
        }
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    Ok(())
}

fn run(
    grid: &Arc<Grid>,
    initial: Vec<f64>,
    g: &[f64],
    boundary: BoundaryData,
    opts: &DirichletOptions,
) -> Result<DirichletSolution> {
    let threshold = opts.tol * g.iter().copied().fold(1.0, f64::max);
    let (values, residual, iterations, policy_used, fell_back) = match opts.policy {
        SolverPolicy::Sweep => {
            let (v, r, it) = gauss_seidel(grid, initial, g, &boundary, threshold, opts.max_sweeps)?;
            (v, r, it, SolverPolicy::Sweep, false)
        }
        SolverPolicy::Newton => match newton(grid, initial, g, &boundary, threshold, opts.max_newton)? {
            NewtonOutcome::Converged(v, r, it) => (v, r, it, SolverPolicy::Newton, false),
            NewtonOutcome::Polish(v) => {
                let (v, r, it) = gauss_seidel(grid, v, g, &boundary, threshold, opts.max_sweeps)?;
                (v, r, it, SolverPolicy::Newton, false)
            }
            NewtonOutcome::Stalled(v, r, it) => {
                log::warn!(
                    "Newton line search stalled after {it} steps (residual {r:e}); falling back to Gauss-Seidel"
                );
                let (v, r, it) = gauss_seidel(grid, v, g, &boundary, threshold, opts.max_sweeps)?;
                (v, r, it, SolverPolicy::Sweep, true)
            }
        },
    };
    let u = GridFunction::from_values(grid, values)?.with_boundary(boundary)?;
    Ok(DirichletSolution { u, residual, iterations, policy_used, fell_back })
}

/// `(|M(u) - g|_inf, min convexity defect)`.
fn residual_and_defect(grid: &Grid, vals: &[f64], g: &[f64], bnd: &BoundaryData) -> (f64, f64) {
    let mut res: f64 = 0.0;
    let mut defect = f64::INFINITY;
    for i in 0..grid.len() {
        let (m, _, d) = node_value(grid, vals, bnd, i);
        res = res.max((m - g[i]).abs());
        defect = defect.min(d);
    }
    (res, defect)
}

const CHECK_EVERY: usize = 10;

fn gauss_seidel(
    grid: &Grid,
    mut vals: Vec<f64>,
    g: &[f64],
    bnd: &BoundaryData,
    threshold: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = grid.len();
    let mut sweeps = 0;
    loop {
        let (res, defect) = residual_and_defect(grid, &vals, g, bnd);
        if res <= threshold && defect >= -threshold {
            return Ok((vals, res, sweeps));
        }
        if sweeps >= max_sweeps {
            return Err(Error::NonConvergence {
                context: "Gauss-Seidel Dirichlet solve".into(),
                step: None,
                iterations: sweeps,
                residual: res,
            });
        }
        for s in 0..CHECK_EVERY.min(max_sweeps - sweeps) {
            if s % 2 == 0 {
                for i in 0..n {
                    vals[i] = local_solve(grid, &vals, bnd, i, g[i]);
                }
            } else {
                for i in (0..n).rev() {
                    vals[i] = local_solve(grid, &vals, bnd, i, g[i]);
                }
            }
            sweeps += 1;
        }
    }
}

/// Sparsity pattern of the Newton Jacobian (node plus every stencil
/// neighbor) and its symbolic LU analysis, built once per grid.
pub(crate) struct JacobianLayout {
    pattern: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
    /// Position of entry `(i, i)` in the value array.
    diag: Vec<usize>,
    /// Position of the entry for the node an arm ends at, per arm slot;
    /// `usize::MAX` for arms ending on the boundary.
    arm: Vec<usize>,
}

impl fmt::Debug for JacobianLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JacobianLayout").field("nnz", &self.pattern.row_idx().len()).finish()
    }
}

impl JacobianLayout {
    fn build(grid: &Grid) -> Result<Self> {
        let n = grid.len();
        let nd = grid.directions().len();
        let arms = grid.arms_raw();
        // rows having column j
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for i in 0..n {
            for s in 0..2 * nd {
                if let ArmEnd::Node(j) = arms[i * 2 * nd + s].end {
                    cols[j as usize].push(i);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let find = |row: usize, col: usize| -> usize {
            let start = col_ptr[col];
            start + row_idx[start..col_ptr[col + 1]].binary_search(&row).expect("entry in pattern")
        };
        let diag = (0..n).map(|i| find(i, i)).collect();
        let arm = (0..arms.len())
            .map(|s| match arms[s].end {
                ArmEnd::Node(j) => find(s / (2 * nd), j as usize),
                ArmEnd::Boundary(_) => usize::MAX,
            })
            .collect();
        let pattern = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let symbolic = SymbolicLu::try_new(pattern.as_ref())
            .map_err(|e| Error::InvalidGrid(format!("sparse analysis failed: {e:?}")))?;
        Ok(Self { pattern, symbolic, diag, arm })
    }

    fn get(grid: &Grid) -> Result<&JacobianLayout> {
        if let Some(l) = grid.newton_cache.get() {
            return Ok(l);
        }
        let layout = Self::build(grid)?;
        Ok(grid.newton_cache.get_or_init(|| layout))
    }

    /// Adds `scale * D_dir` (the linearization of the second difference)
    /// to row `node`; returns the contribution of boundary values.
    fn add_direction(&self, grid: &Grid, bnd: &BoundaryData, val: &mut [f64], node: usize, dir: usize, scale: f64) -> f64 {
        let s = grid.slot(node, dir);
        let w = grid.weights_raw();
        let arms = grid.arms_raw();
        let mut known = 0.0;
        for k in [s, s + 1] {
            val[self.diag[node]] -= scale * w[k];
            match arms[k].end {
                ArmEnd::Node(_) => val[self.arm[k]] += scale * w[k],
                ArmEnd::Boundary(b) => known += scale * w[k] * bnd.value(b as usize),
            }
        }
        known
    }

    fn solve(&self, val: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
        let n = rhs.len();
        let mat = SparseColMatRef::new(self.pattern.as_ref(), val);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat).ok()?;
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Solution of the axis-frame Poisson problem `D_x u + D_y u = 2 sqrt(g)`
/// (`D u = g` in 1D), the Newton starting point. Falls back to the boundary
/// interpolation if the linear solve fails.
fn poisson_guess(grid: &Grid, g: &[f64], bnd: &BoundaryData) -> Vec<f64> {
    let n = grid.len();
    if g.iter().all(|&x| x == 0.0) && bnd.is_zero() {
        return vec![0.0; n];
    }
    let Ok(layout) = JacobianLayout::get(grid) else {
        return boundary_guess(grid, bnd);
    };
    let mut val = vec![0.0; layout.pattern.row_idx().len()];
    let mut rhs = vec![0.0; n];
    let axis: &[usize] = if grid.dim() == 1 { &[0] } else { &grid.pairs()[0] };
    for i in 0..n {
        let mut known = 0.0;
        for &d in axis {
            known += layout.add_direction(grid, bnd, &mut val, i, d, 1.0);
        }
        let target = if grid.dim() == 1 { g[i] } else { 2.0 * g[i].sqrt() };
        rhs[i] = target - known;
    }
    layout.solve(&val, &rhs).unwrap_or_else(|| boundary_guess(grid, bnd))
}

/// Node values from the largest boundary value: a supersolution for any
/// `g >= 0` when the boundary data is zero.
fn boundary_guess(grid: &Grid, bnd: &BoundaryData) -> Vec<f64> {
    vec![if bnd.is_zero() { 0.0 } else { bnd.max_value() }; grid.len()]
}

enum NewtonOutcome {
    Converged(Vec<f64>, f64, usize),
    /// Residual met but the convexity defect is not; finish with sweeps.
    Polish(Vec<f64>),
    Stalled(Vec<f64>, f64, usize),
}

fn newton_residual(grid: &Grid, vals: &[f64], g: &[f64], bnd: &BoundaryData) -> (Vec<f64>, f64, f64) {
    let mut f = Vec::with_capacity(g.len());
    let mut sup: f64 = 0.0;
    let mut defect = f64::INFINITY;
    for i in 0..grid.len() {
        let (m, _, d) = node_value(grid, vals, bnd, i);
        let r = m - g[i];
        sup = sup.max(r.abs());
        defect = defect.min(d);
        f.push(r);
    }
    (f, sup, defect)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn newton(
    grid: &Grid,
    mut vals: Vec<f64>,
    g: &[f64],
    bnd: &BoundaryData,
    threshold: f64,
    max_newton: usize,
) -> Result<NewtonOutcome> {
    let n = grid.len();
    let layout = JacobianLayout::get(grid)?;
    let (mut f, mut sup, mut defect) = newton_residual(grid, &vals, g, bnd);
    let mut steps = 0;
    loop {
        if sup <= threshold {
            if defect >= -threshold {
                return Ok(NewtonOutcome::Converged(vals, sup, steps));
            }
            return Ok(NewtonOutcome::Polish(vals));
        }
        if steps >= max_newton {
            return Err(Error::NonConvergence {
                context: "Newton Dirichlet solve".into(),
                step: None,
                iterations: steps,
                residual: sup,
            });
        }
        let mut val = vec![0.0; layout.pattern.row_idx().len()];
        for i in 0..n {
            if grid.dim() == 1 {
                layout.add_direction(grid, bnd, &mut val, i, 0, 1.0);
                continue;
            }
            let (_, k, _) = node_value(grid, &vals, bnd, i);
            let [d1, d2] = grid.pairs()[k as usize];
            let eps = 1e-3 * g[i].sqrt() + 1e-10;
            let a = second_difference(grid, &vals, bnd, i, d1).max(eps);
            let b = second_difference(grid, &vals, bnd, i, d2).max(eps);
            layout.add_direction(grid, bnd, &mut val, i, d1, b);
            layout.add_direction(grid, bnd, &mut val, i, d2, a);
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let Some(delta) = layout.solve(&val, &rhs) else {
            return Ok(NewtonOutcome::Stalled(vals, sup, steps));
        };
        steps += 1;
        let norm0 = l2(&f);
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = vals.iter().zip(&delta).map(|(u, d)| u + t * d).collect();
            let (ft, st, dt) = newton_residual(grid, &trial, g, bnd);
            if l2(&ft) <= (1.0 - 1e-4 * t) * norm0 {
                break Some((trial, ft, st, dt));
            }
            t *= 0.5;
            if t < 1.0 / 4096.0 {
                break None;
            }
        };
        match accepted {
            Some((v, ft, st, dt)) => {
                vals = v;
                f = ft;
                sup = st;
                defect = dt;
            }
            None => return Ok(NewtonOutcome::Stalled(vals, sup, steps)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::discretize;
    use crate::grid_function::sup_diff;
    use crate::ma::ma_apply;

    fn grid(spec: &str, h: f64) -> Arc<Grid> {
        Arc::new(discretize(&spec.parse().unwrap(), h, 2).unwrap())
    }

    fn opts(policy: SolverPolicy) -> DirichletOptions {
        DirichletOptions { policy, ..Default::default() }
    }

    #[test]
    fn zero_density_gives_zero() {
        for policy in [SolverPolicy::Sweep, SolverPolicy::Newton] {
            let g = grid("disc 0 0 1", 0.1);
            let s = solve_dirichlet(&g, &vec![0.0; g.len()], BoundaryData::Zero, &opts(policy)).unwrap();
            assert!(s.u.is_zero());
        }
    }

    #[test]
    fn one_dimensional_parabola() {
        let g = grid("interval 0 1", 1.0 / 64.0);
        for policy in [SolverPolicy::Sweep, SolverPolicy::Newton] {
            let s = solve_dirichlet(&g, &vec![2.0; g.len()], BoundaryData::Zero, &opts(policy)).unwrap();
            let mid = g.nodes().iter().position(|p| p[0] == 0.5).unwrap();
            assert!((s.u.values()[mid] + 0.25).abs() < 1e-8);
            for (p, v) in g.nodes().iter().zip(s.u.values()) {
                assert!((v - (p[0] * p[0] - p[0])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn disc_paraboloid_both_policies() {
        let g = grid("disc 0 0 1", 1.0 / 32.0);
        let ones = vec![1.0; g.len()];
        let sweep = solve_dirichlet(&g, &ones, BoundaryData::Zero, &opts(SolverPolicy::Sweep)).unwrap();
        let newton = solve_dirichlet(&g, &ones, BoundaryData::Zero, &opts(SolverPolicy::Newton)).unwrap();
        assert!(sweep.residual < 1e-8);
        assert!(newton.residual < 1e-8);
        assert_eq!(newton.policy_used, SolverPolicy::Newton);
        assert!(sup_diff(sweep.u.values(), newton.u.values()) < 1e-7);
        // quadratics are reproduced exactly, shortened arms included
        for (p, v) in g.nodes().iter().zip(newton.u.values()) {
            let exact = 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0);
            assert!((v - exact).abs() < 1e-7, "{v} vs {exact}");
        }
    }

    #[test]
    fn newton_budget_exhaustion_reports_residual() {
        let g = grid("disc 0 0 1", 1.0 / 16.0);
        let density: Vec<f64> = g.nodes().iter().map(|p| 1.0 + 5.0 * p[0] * p[0]).collect();
        let o = DirichletOptions { max_newton: 0, ..Default::default() };
        match solve_dirichlet(&g, &density, BoundaryData::Zero, &o) {
            Err(Error::NonConvergence { residual, iterations, .. }) => {
                assert!(residual > 0.0 && residual.is_finite());
                assert_eq!(iterations, 0);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
        let o = DirichletOptions { max_sweeps: 3, policy: SolverPolicy::Sweep, ..Default::default() };
        assert!(matches!(
            solve_dirichlet(&g, &density, BoundaryData::Zero, &o),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn rejects_negative_density() {
        let g = grid("disc 0 0 1", 0.25);
        let mut d = vec![1.0; g.len()];
        d[2] = -0.5;
        assert_eq!(
            solve_dirichlet(&g, &d, BoundaryData::Zero, &Default::default()).unwrap_err(),
            Error::NegativeDensity { node: 2, value: -0.5 }
        );
    }

    #[test]
    fn nonzero_boundary_data() {
        // u = |x|^2 / 2 + x on the unit box has M(u) = 1
        let g = grid("box 0 0 1 1", 1.0 / 16.0);
        let f = |p: [f64; 2]| 0.5 * (p[0] * p[0] + p[1] * p[1]) + p[0];
        let bnd = BoundaryData::from_fn(&g, f).unwrap();
        for policy in [SolverPolicy::Sweep, SolverPolicy::Newton] {
            let s = solve_dirichlet(&g, &vec![1.0; g.len()], bnd.clone(), &opts(policy)).unwrap();
            for (p, v) in g.nodes().iter().zip(s.u.values()) {
                assert!((v - f(*p)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn comparison_and_polygon_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for spec in ["disc 0 0 1", "polygon 0 0 2 0 2.5 1.5 0.5 2", "interval -1 2"] {
            let g = grid(spec, 1.0 / 16.0);
            for _ in 0..3 {
                let g1: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
                let g2: Vec<f64> = g1.iter().map(|x| x + rng.gen_range(0.0..1.0)).collect();
                let u1 = solve_dirichlet(&g, &g1, BoundaryData::Zero, &Default::default()).unwrap();
                let u2 = solve_dirichlet(&g, &g2, BoundaryData::Zero, &Default::default()).unwrap();
                let m = ma_apply(&u1.u);
                assert!(m.min_defect() >= -1e-8);
                for (a, b) in u1.u.values().iter().zip(u2.u.values()) {
                    assert!(*a >= b - 1e-8);
                    assert!(*a <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn warm_start_is_a_fixed_point() {
        let g = grid("disc 0 0 1", 1.0 / 32.0);
        let d: Vec<f64> = g.nodes().iter().map(|p| 1.0 + p[1] * p[1]).collect();
        let s = solve_dirichlet(&g, &d, BoundaryData::Zero, &Default::default()).unwrap();
        let again = solve_dirichlet_from(&s.u, &d, &Default::default()).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(again.u.values(), s.u.values());
    }
}
