use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// First eigenpair of `u'' = lambda (-u)` on an interval of length `L`
/// with zero boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneDEigen {
    pub length: f64,
    /// `pi^2 / L^2`.
    pub lambda1: f64,
}

impl OneDEigen {
    /// `-sin(pi x / L)`, with `x` measured from the left endpoint.
    pub fn eigenfunction(&self, x: f64) -> f64 {
        -(PI * x / self.length).sin()
    }
}

pub fn oracle_1d(length: f64) -> Result<OneDEigen> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {length}")));
    }
    Ok(OneDEigen { length, lambda1: PI * PI / (length * length) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form() {
        let one = oracle_1d(1.0).unwrap();
        assert!((one.lambda1 - 9.869604401089358).abs() < 1e-15);
        assert!((oracle_1d(2.0).unwrap().lambda1 - PI * PI / 4.0).abs() < 1e-15);
        assert!((one.eigenfunction(0.5) + 1.0).abs() < 1e-15);
        assert!(oracle_1d(0.0).is_err());
    }
}
