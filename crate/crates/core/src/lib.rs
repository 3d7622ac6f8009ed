//! Discrete Monge-Ampere eigenvalue computations on convex domains: a
//! wide-stencil operator, Dirichlet solvers, inverse iteration with
//! monotonicity certificates, semilinear continuation and independent
//! reference oracles.

pub mod continuation;
pub mod dirichlet;
pub mod domain;
pub mod eigen;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod grid_function;
pub mod ma;
pub mod measure;
pub mod oracles;
pub mod samples;

pub use continuation::{
    lions_bracket, picard_iterates, semilinear_residual, solve_semilinear, BracketResult, CurvePoint, LionsOptions,
    SemilinearOptions, SemilinearSolution, SemilinearSpec,
};
pub use dirichlet::{solve_dirichlet, solve_dirichlet_from, DirichletOptions, DirichletSolution, SolverPolicy};
pub use domain::{ConvexDomain, Point};
pub use eigen::{
    certify_monotone, fixed_point_residual, inverse_iterate, inverse_step, proportionality, EigenOptions, EigenResult,
    IterationTrace, Proportionality, TraceRecord, Violation,
};
pub use error::{Error, Result};
pub use functionals::{cegrell_check, energy, mass_integral, rayleigh, CegrellReport, FunctionalReport};
pub use grid::{discretize, Grid};
pub use grid_function::{BoundaryData, GridFunction};
pub use ma::{ma_apply, DiscreteMAResult};
pub use measure::MeasureSpec;
