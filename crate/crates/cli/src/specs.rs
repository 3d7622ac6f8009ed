//! Parsing of measure, boundary and starting-function descriptions.

use std::sync::Arc;

use maeigen::{BoundaryData, ConvexDomain, Grid, GridFunction, MeasureSpec, Point};

use crate::expr::Expr;
use crate::CliError;

pub fn domain(spec: &str) -> Result<ConvexDomain, CliError> {
    spec.parse().map_err(|e| CliError::Usage(format!("invalid value for --domain: {e}")))
}

fn point_expr(src: &str, flag: &str) -> Result<Arc<Expr>, CliError> {
    Expr::compile(src, &["x", "y"]).map(Arc::new).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn number(word: &str, flag: &str) -> Result<f64, CliError> {
    word.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value for --{flag}: '{word}' is not a number")))
}

/// `lebesgue`, `const:C`, `radial:COEFF:EXPONENT[:CX:CY]`, `expr:F(x,y)` or
/// `hessian:U(x,y)` (the discrete Monge-Ampere density of `U`).
pub fn measure(spec: &str, flag: &str, grid: &Arc<Grid>) -> Result<MeasureSpec, CliError> {
    let spec = spec.trim();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "lebesgue" if rest.is_empty() => Ok(MeasureSpec::lebesgue()),
        "const" => Ok(MeasureSpec::Constant(number(rest, flag)?)),
        "radial" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let nums = parts.iter().map(|w| number(w, flag)).collect::<Result<Vec<f64>, _>>()?;
            let center = match nums.len() {
                2 => [0.0, 0.0],
                4 => [nums[2], nums[3]],
                _ => return Err(CliError::Usage(format!("--{flag}: expected radial:COEFF:EXPONENT[:CX:CY], got '{spec}'"))),
            };
            Ok(MeasureSpec::RadialPower { coeff: nums[0], exponent: nums[1], center })
        }
        "expr" => {
            let e = point_expr(rest, flag)?;
            Ok(MeasureSpec::expression(move |p: Point| e.eval(&p)))
        }
        "hessian" => {
            let e = point_expr(rest, flag)?;
            let u = GridFunction::from_fn(grid, |p| e.eval(&p));
            let bnd = BoundaryData::from_fn(grid, |p| e.eval(&p)).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
            let u = u.with_boundary(bnd).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
            Ok(MeasureSpec::HessianOf(u))
        }
        _ => Err(CliError::Usage(format!(
            "invalid value for --{flag}: '{spec}' (expected lebesgue, const:C, radial:COEFF:EXP[:CX:CY], expr:F or hessian:U)"
        ))),
    }
}

/// `zero` or `expr:G(x,y)`.
pub fn boundary(spec: &str, grid: &Grid) -> Result<BoundaryData, CliError> {
    match spec.trim().split_once(':') {
        None if spec.trim() == "zero" => Ok(BoundaryData::Zero),
        Some(("expr", src)) => {
            let e = point_expr(src, "boundary")?;
            BoundaryData::from_fn(grid, |p| e.eval(&p)).map_err(|e| CliError::Usage(format!("--boundary: {e}")))
        }
        _ => Err(CliError::Usage(format!("invalid value for --boundary: '{spec}' (expected zero or expr:G)"))),
    }
}

pub enum Start {
    Dirichlet,
    Given(GridFunction),
}

/// `dirichlet` (solve `M(u) = nu`), `paraboloid` (on discs and intervals,
/// the quadratic vanishing on the boundary) or `expr:U(x,y)` sampled at the
/// nodes with zero boundary values.
pub fn start(spec: &str, grid: &Arc<Grid>) -> Result<Start, CliError> {
    let spec = spec.trim();
    match spec {
        "dirichlet" => Ok(Start::Dirichlet),
        "paraboloid" => match grid.domain() {
            ConvexDomain::Disc { center, radius } => {
                let (c, r) = (*center, *radius);
                Ok(Start::Given(GridFunction::from_fn(grid, |p| {
                    0.5 * ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) - r * r)
                })))
            }
            ConvexDomain::Interval { a, b } => {
                let (a, b) = (*a, *b);
                Ok(Start::Given(GridFunction::from_fn(grid, |p| 0.5 * (p[0] - a) * (p[0] - b))))
            }
            _ => Err(CliError::Usage("--start paraboloid needs a disc or an interval; use expr:U instead".into())),
        },
        _ => match spec.split_once(':') {
            Some(("expr", src)) => {
                let e = point_expr(src, "start")?;
                Ok(Start::Given(GridFunction::from_fn(grid, |p| e.eval(&p))))
            }
            _ => Err(CliError::Usage(format!(
                "invalid value for --start: '{spec}' (expected dirichlet, paraboloid or expr:U)"
            ))),
        },
    }
}

/// Semilinear right-hand side: `zero`, `lions:LAMBDA`, or an expression in
/// `x`, `y`, `t`.
pub fn semilinear(spec: &str) -> Result<(Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>, Option<f64>), CliError> {
    let spec = spec.trim();
    if spec == "zero" {
        return Ok((Arc::new(|_, _| 0.0), Some(0.0)));
    }
    if let Some(rest) = spec.strip_prefix("lions:") {
        let lambda = number(rest, "f")?;
        return Ok((Arc::new(move |_, t| 1.0 - lambda * t), Some(lambda.max(0.0))));
    }
    let src = spec.strip_prefix("expr:").unwrap_or(spec);
    let e = Expr::compile(src, &["x", "y", "t"]).map_err(|e| CliError::Usage(format!("--f: {e}")))?;
    Ok((Arc::new(move |p: Point, t| e.eval(&[p[0], p[1], t])), None))
}
