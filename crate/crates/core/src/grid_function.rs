use std::sync::Arc;

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Values on the boundary points of a grid (see [`Grid::boundary_points`]).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BoundaryData {
    #[default]
    Zero,
    Values(Arc<[f64]>),
}

impl BoundaryData {
    /// Samples `f` at every boundary point of `grid`.
    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.boundary_points().iter().map(|&p| f(p)).collect();
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("boundary data is not finite ({v})")));
        }
        Ok(BoundaryData::Values(values.into()))
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Values(v) => v[idx],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BoundaryData::Zero => true,
            BoundaryData::Values(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Values(v) => v.iter().copied().reduce(f64::max).unwrap_or(0.0),
        }
    }

    fn scaled(&self, c: f64) -> Self {
        match self {
            BoundaryData::Zero => BoundaryData::Zero,
            BoundaryData::Values(v) => BoundaryData::Values(v.iter().map(|x| c * x).collect()),
        }
    }

    pub(crate) fn check_len(&self, grid: &Grid) -> Result<()> {
        match self {
            BoundaryData::Values(v) if v.len() != grid.boundary_points().len() => Err(Error::InvalidInput(format!(
                "boundary data has {} values, grid has {} boundary points",
                v.len(),
                grid.boundary_points().len()
            ))),
            _ => Ok(()),
        }
    }
}

/// One value per interior node plus the boundary data the stencil arms see.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    boundary: BoundaryData,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()], boundary: BoundaryData::Zero }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("value at node {i} is not finite")));
        }
        Ok(Self { grid: grid.clone(), values, boundary: BoundaryData::Zero })
    }

    /// Samples `f` at the nodes; boundary data is zero.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&p| f(p)).collect();
        Self { grid: grid.clone(), values, boundary: BoundaryData::Zero }
    }

    pub fn with_boundary(mut self, boundary: BoundaryData) -> Result<Self> {
        boundary.check_len(&self.grid)?;
        self.boundary = boundary;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `c * self`, boundary data included.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            boundary: self.boundary.scaled(c),
        }
    }

    /// Applies `f` to the node values, keeping the boundary data.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), boundary: self.boundary.clone() }
    }

    pub(crate) fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || same_layout(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::InvalidInput("grid functions live on different grids".into()))
        }
    }
}

pub(crate) fn same_layout(a: &Grid, b: &Grid) -> bool {
    a.h() == b.h() && a.len() == b.len() && a.domain() == b.domain() && a.width() == b.width()
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
