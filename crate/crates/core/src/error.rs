use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("polygon is not strictly convex at vertex {index} ({x}, {y})")]
    NonConvexPolygon { index: usize, x: f64, y: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid spacing h = {h} leaves no interior node")]
    EmptyGrid { h: f64 },

    #[error("point ({x}, {y}) is not inside the domain")]
    PointOutside { x: f64, y: f64 },

    #[error("negative density {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}", non_convergence_message(.context, .step, *.iterations, *.residual))]
    NonConvergence {
        context: String,
        /// Outer step of the calling iteration, when the failure happened inside one.
        step: Option<usize>,
        iterations: usize,
        residual: f64,
    },

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("mass integral vanishes for a nonzero function")]
    ZeroMass,

    #[error("inverse iteration needs a nonzero starting function")]
    DegenerateStart,

    #[error("shooting failed to bracket a sign change of u(R) (last lambda tried: {last_lambda})")]
    NoBracket { last_lambda: f64 },

    #[error("piecewise-linear function is not in general position: {0}")]
    DegeneratePosition(String),

    #[error("every probed lambda up to {lambda_max} is subcritical; raise lambda_max")]
    AllSubcritical { lambda_max: f64 },

    #[error("every probed lambda down to {lambda_min} is supercritical; check the measure scaling")]
    AllSupercritical { lambda_min: f64 },
}

fn non_convergence_message(context: &str, step: &Option<usize>, iterations: usize, residual: f64) -> String {
    match step {
        Some(k) => format!(
            "{context} did not converge at outer step {k} after {iterations} iterations (residual {residual:e})"
        ),
        None => format!("{context} did not converge after {iterations} iterations (residual {residual:e})"),
    }
}

impl Error {
    /// True for failures of a numerical process, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NoBracket { .. }
                | Error::AllSubcritical { .. }
                | Error::AllSupercritical { .. }
                | Error::ZeroMass
        )
    }

    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            Error::NonConvergence { context, iterations, residual, .. } => Error::NonConvergence {
                context,
                step: Some(k),
                iterations,
                residual,
            },
            other => other,
        }
    }
}
