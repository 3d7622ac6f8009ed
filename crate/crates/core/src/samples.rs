//! Seeded random convex grid functions with zero boundary values, for
//! property tests and the invariant checks of the CLI.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirichlet::{solve_dirichlet, DirichletOptions};
use crate::domain::ConvexDomain;
use crate::error::Result;
use crate::grid::Grid;
use crate::grid_function::{BoundaryData, GridFunction};

/// `c1 (|y|^2 - 1) + c2 (|y|^4 - 1) + (|y|^2 - 1)(a . y)` in the
/// coordinates `y = (x - center) / radius` of a disc grid, with `|a| <= c1/4`
/// so the cubic term cannot break convexity. Panics on non-disc grids.
pub fn disc_sample(grid: &Arc<Grid>, seed: u64) -> GridFunction {
    let ConvexDomain::Disc { center, radius } = *grid.domain() else {
        panic!("disc_sample needs a disc grid");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1 = rng.gen_range(0.2..2.0);
    let c2 = rng.gen_range(0.0..1.0);
    let (r, t) = (rng.gen_range(0.0..0.25 * c1), rng.gen_range(0.0..std::f64::consts::TAU));
    let a = [r * t.cos(), r * t.sin()];
    GridFunction::from_fn(grid, |p| {
        let y = [(p[0] - center[0]) / radius, (p[1] - center[1]) / radius];
        let s = y[0] * y[0] + y[1] * y[1] - 1.0;
        c1 * s + c2 * ((s + 1.0) * (s + 1.0) - 1.0) + s * (a[0] * y[0] + a[1] * y[1])
    })
}

/// `c (t^2 - t) + d (t^4 - t)` with `t` the affine coordinate mapping the
/// interval onto `(0, 1)`. Panics on non-interval grids.
pub fn interval_sample(grid: &Arc<Grid>, seed: u64) -> GridFunction {
    let ConvexDomain::Interval { a, b } = *grid.domain() else {
        panic!("interval_sample needs an interval grid");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = rng.gen_range(0.2..2.0);
    let d = rng.gen_range(0.0..1.0);
    GridFunction::from_fn(grid, |p| {
        let t = (p[0] - a) / (b - a);
        c * (t * t - t) + d * (t.powi(4) - t)
    })
}

/// A convex zero-boundary function on any grid: the closed forms above on
/// discs and intervals, otherwise the Dirichlet solution for a random smooth
/// positive density.
pub fn convex_sample(grid: &Arc<Grid>, seed: u64) -> Result<GridFunction> {
    match grid.domain() {
        ConvexDomain::Disc { .. } => Ok(disc_sample(grid, seed)),
        ConvexDomain::Interval { .. } => Ok(interval_sample(grid, seed)),
        domain => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lo, hi) = domain.bounding_box();
            let k = [rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0)];
            let amp = rng.gen_range(0.0..0.8);
            let base = rng.gen_range(0.5..2.0);
            let density: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|p| {
                    let s = [(p[0] - lo[0]) / (hi[0] - lo[0]), (p[1] - lo[1]) / (hi[1] - lo[1])];
                    base * (1.0 + amp * (k[0] * s[0]).sin() * (k[1] * s[1]).cos())
                })
                .collect();
            Ok(solve_dirichlet(grid, &density, BoundaryData::Zero, &DirichletOptions::default())?.u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::discretize;
    use crate::ma::ma_apply;

    #[test]
    fn samples_are_convex_and_nonpositive() {
        for spec in ["disc 0.5 -1 2", "interval -1 3", "box 0 0 2 1"] {
            let g = Arc::new(discretize(&spec.parse().unwrap(), 1.0 / 16.0, 2).unwrap());
            for seed in 0..10 {
                let u = convex_sample(&g, seed).unwrap();
                assert!(u.values().iter().all(|&v| v < 0.0));
                assert!(ma_apply(&u).min_defect() > -1e-8);
            }
        }
    }
}
