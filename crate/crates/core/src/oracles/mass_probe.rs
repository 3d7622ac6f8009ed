//! Total discrete Monge-Ampere mass of `-(-u)^alpha` under refinement. For
//! `alpha < 1` the continuum mass is infinite (the transform steepens at the
//! boundary), so the discrete mass should grow as `h` shrinks.

use std::sync::Arc;

use serde::Serialize;

use crate::dirichlet::{solve_dirichlet, DirichletOptions};
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::grid::discretize;
use crate::grid_function::{BoundaryData, GridFunction};
use crate::ma::ma_apply;
use crate::measure::MeasureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassProbeRow {
    pub h: f64,
    pub mass: f64,
    /// Mass over the mass of the previous (coarser) row.
    pub ratio: Option<f64>,
}

/// `sum M(-(-u)^alpha) h^n` for a zero-boundary, nonpositive `u`.
pub fn transformed_mass(u_base: &GridFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !u_base.boundary().is_zero() || u_base.values().iter().any(|&v| v > 0.0) {
        return Err(Error::InvalidInput("the base function must be nonpositive with zero boundary values".into()));
    }
    let v = u_base.map(|x| -(-x).powf(alpha));
    Ok(ma_apply(&v).total_mass(v.grid()))
}

/// Solves the zero-boundary problem `M(u) = nu` on each grid of `hs` and
/// reports the transformed mass with successive ratios.
pub fn mass_divergence_probe(
    domain: &ConvexDomain,
    nu: &MeasureSpec,
    width: usize,
    alpha: f64,
    hs: &[f64],
    dopts: &DirichletOptions,
) -> Result<Vec<MassProbeRow>> {
    let mut rows: Vec<MassProbeRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let grid = Arc::new(discretize(domain, h, width)?);
        let g = nu.density_on(&grid)?;
        let u = solve_dirichlet(&grid, &g, BoundaryData::Zero, dopts)?.u;
        let mass = transformed_mass(&u, alpha)?;
        let ratio = rows.last().map(|r| mass / r.mass);
        rows.push(MassProbeRow { h, mass, ratio });
    }
    Ok(rows)
}
