//! Reference computations that share no code with the grid solver: closed
//! forms in 1D, radial shooting on discs, Alexandrov measures of
//! piecewise-linear functions, a mass-divergence probe, and the toric
//! (logarithmic) correspondence at n = 1.

pub mod mass_probe;
pub mod one_d;
pub mod pl;
pub mod radial;
pub mod toric;

pub use mass_probe::{mass_divergence_probe, transformed_mass, MassProbeRow};
pub use one_d::{oracle_1d, OneDEigen};
pub use pl::{oracle_pl_ma, AffinePiece, Atom, PLConvexFunction};
pub use radial::{oracle_radial, RadialEigen, RadialProblem, ShootOptions};
pub use toric::{calibrate_ddc, toric_check_1d, ToricReport, DDC_NORMALIZATION};
