//! Energy, mass integral, Rayleigh quotient and the Cegrell inequality.
//!
//! The eigenvalue estimate is `lambda_hat = (E/I)^(1/n)`: an eigenfunction
//! satisfies `M(u) = (-lambda u)^n nu`, so `E = lambda^n I`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_function::GridFunction;
use crate::ma::ma_apply;
use crate::measure::MeasureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    /// `E(u) = sum (-u) M(u) h^n`.
    pub energy: f64,
    /// `I(u) = sum (-u)^(n+1) nu h^n`.
    pub mass: f64,
    /// `R = E / I`.
    pub ratio: f64,
    /// `R^(1/n)`.
    pub lambda_hat: f64,
}

pub fn energy(u: &GridFunction) -> f64 {
    let m = ma_apply(u);
    energy_with(u, &m.values)
}

pub(crate) fn energy_with(u: &GridFunction, ma: &[f64]) -> f64 {
    let s: f64 = u.values().iter().zip(ma).map(|(v, m)| -v * m).sum();
    s * u.grid().cell_volume()
}

pub fn mass_integral(u: &GridFunction, nu: &MeasureSpec) -> Result<f64> {
    Ok(mass_integral_with(u, &nu.density_on(u.grid())?))
}

/// Mass integral against an already sampled density.
pub fn mass_integral_with(u: &GridFunction, density: &[f64]) -> f64 {
    let p = u.grid().dim() as i32 + 1;
    let s: f64 = u.values().iter().zip(density).map(|(v, d)| (-v).powi(p) * d).sum();
    s * u.grid().cell_volume()
}

pub fn rayleigh(u: &GridFunction, nu: &MeasureSpec) -> Result<FunctionalReport> {
    rayleigh_with(u, &nu.density_on(u.grid())?)
}

pub fn rayleigh_with(u: &GridFunction, density: &[f64]) -> Result<FunctionalReport> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let energy = energy(u);
    let mass = mass_integral_with(u, density);
    if mass == 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(report(u.grid().dim(), energy, mass))
}

pub(crate) fn report(dim: usize, energy: f64, mass: f64) -> FunctionalReport {
    let ratio = energy / mass;
    let lambda_hat = if dim == 1 { ratio } else { ratio.sqrt() };
    FunctionalReport { energy, mass, ratio, lambda_hat }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CegrellReport {
    /// `sum (-u) M(v) h^n`.
    pub lhs: f64,
    /// `E(u)^(1/(n+1)) E(v)^(n/(n+1))`.
    pub rhs: f64,
    /// `lhs / rhs`; at most 1 for the continuum inequality.
    pub slack: f64,
}

/// Evaluates both sides of the Cegrell inequality. Reports only.
pub fn cegrell_check(u: &GridFunction, v: &GridFunction) -> Result<CegrellReport> {
    u.same_grid(v)?;
    let mv = ma_apply(v).values;
    let lhs = energy_with(u, &mv);
    let n = u.grid().dim() as f64;
    let rhs = energy(u).powf(1.0 / (n + 1.0)) * energy_with(v, &mv).powf(n / (n + 1.0));
    Ok(CegrellReport { lhs, rhs, slack: lhs / rhs })
}
