//! Right-hand measures, given by their density with respect to Lebesgue
//! measure and sampled pointwise at the nodes.

use std::fmt;
use std::sync::Arc;

use crate::domain::{norm, sub, Point};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::grid_function::{same_layout, GridFunction};
use crate::ma::ma_apply;

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MeasureSpec {
    Constant(f64),
    /// `coeff * |x - center|^(-exponent)`, integrable for `exponent < n`.
    /// Sampled with `|x - center|` floored at `h/2` so a node sitting on the
    /// center gets a finite value.
    RadialPower { coeff: f64, exponent: f64, center: Point },
    Expression(PointFn),
    /// Density equal to the discrete Monge-Ampere density of a grid function.
    HessianOf(GridFunction),
}

impl MeasureSpec {
    pub fn lebesgue() -> Self {
        MeasureSpec::Constant(1.0)
    }

    pub fn expression(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        MeasureSpec::Expression(Arc::new(f))
    }

    /// Density at every node of `grid`. Rejects negative or non-finite values
    /// and measures whose discretized total mass is not positive.
    pub fn density_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        let density: Vec<f64> = match self {
            MeasureSpec::Constant(c) => vec![*c; grid.len()],
            MeasureSpec::RadialPower { coeff, exponent, center } => {
                if *exponent >= grid.dim() as f64 {
                    return Err(Error::InvalidMeasure(format!(
                        "radial exponent {exponent} must be below the dimension {} for integrability",
                        grid.dim()
                    )));
                }
                let floor = 0.5 * grid.h();
                grid.nodes()
                    .iter()
                    .map(|&p| coeff * norm(sub(p, *center)).max(floor).powf(-exponent))
                    .collect()
            }
            MeasureSpec::Expression(f) => grid.nodes().iter().map(|&p| f(p)).collect(),
            MeasureSpec::HessianOf(v) => {
                if !same_layout(v.grid(), grid) {
                    return Err(Error::InvalidMeasure("Hessian source lives on a different grid".into()));
                }
                ma_apply(v).values
            }
        };
        for (node, &value) in density.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::InvalidMeasure(format!("density is not finite at node {node}")));
            }
            if value < 0.0 {
                return Err(Error::NegativeDensity { node, value });
            }
        }
        let mass: f64 = density.iter().sum::<f64>() * grid.cell_volume();
        if !(mass > 0.0) {
            return Err(Error::InvalidMeasure("total mass of the measure is zero".into()));
        }
        Ok(density)
    }
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Constant(c) => write!(f, "Constant({c})"),
            MeasureSpec::RadialPower { coeff, exponent, center } => {
                write!(f, "RadialPower {{ coeff: {coeff}, exponent: {exponent}, center: {center:?} }}")
            }
            MeasureSpec::Expression(_) => write!(f, "Expression(..)"),
            MeasureSpec::HessianOf(_) => write!(f, "HessianOf(..)"),
        }
    }
}
