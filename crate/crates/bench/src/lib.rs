//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use maeigen::{discretize, ConvexDomain, Grid, GridFunction};

pub fn disc_grid(h: f64) -> Arc<Grid> {
    grid("disc 0 0 1", h)
}

pub fn grid(spec: &str, h: f64) -> Arc<Grid> {
    let d: ConvexDomain = spec.parse().expect("valid domain");
    Arc::new(discretize(&d, h, 2).expect("valid grid"))
}

/// `(|x|^2 - 1) / 2` on the unit disc grid.
pub fn paraboloid(grid: &Arc<Grid>) -> GridFunction {
    GridFunction::from_fn(grid, |p| (p[0] * p[0] + p[1] * p[1] - 1.0) / 2.0)
}
