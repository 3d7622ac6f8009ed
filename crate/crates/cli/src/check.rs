//! The invariant suite behind `maeigen check`: each property is evaluated
//! on the configured grid and reported as one pass/fail line.

use maeigen::samples::convex_sample;
use maeigen::{
    cegrell_check, certify_monotone, energy, inverse_iterate, inverse_step, ma_apply, rayleigh, solve_dirichlet,
    BoundaryData, DirichletOptions, EigenOptions, GridFunction,
};
use serde_json::json;

use crate::commands::{base, finish, measure_on};
use crate::config::Resolver;
use crate::output;
use crate::{CheckArgs, CliError};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn run(a: CheckArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(a.common.config.as_deref())?;
    let b = base(&a.common, &mut r)?;
    let samples = r.require("samples", a.samples, Some(8))?.max(1);
    finish(&r);
    let nu = measure_on(&b)?;
    let density = nu.density_on(&b.grid)?;
    let grid = &b.grid;
    let n = grid.dim() as i32;
    output::prepare_dir(&b.out)?;

    let draws: Vec<GridFunction> =
        (0..2 * samples as u64).map(|s| convex_sample(grid, s)).collect::<Result<_, _>>()?;
    let mut outcomes = Vec::new();

    // homogeneity of the operator and scale invariance of R
    let mut worst: f64 = 0.0;
    for u in &draws[..samples] {
        let m = ma_apply(u).values;
        let top = m.iter().fold(0.0f64, |x, y| x.max(*y)).max(f64::MIN_POSITIVE);
        let r0 = rayleigh(u, &nu)?.ratio;
        for c in [0.1, 2.0, 10.0] {
            let mc: Vec<f64> = ma_apply(&u.scaled(c)).values.iter().map(|v| v / c.powi(n)).collect();
            worst = worst.max(max_abs_diff(&m, &mc) / top);
            worst = worst.max((rayleigh(&u.scaled(c), &nu)?.ratio / r0 - 1.0).abs());
        }
    }
    outcomes.push(Outcome { name: "homogeneity", pass: worst <= 1e-12, detail: format!("max relative deviation {worst:.3e}") });

    // comparison principle: doubling the density lowers the solution
    let lo = solve_dirichlet(grid, &density, BoundaryData::Zero, &b.dirichlet)?.u;
    let doubled: Vec<f64> = density.iter().map(|g| 2.0 * g).collect();
    let hi = solve_dirichlet(grid, &doubled, BoundaryData::Zero, &b.dirichlet)?.u;
    let breach = lo.values().iter().zip(hi.values()).map(|(a, b)| b - a).fold(f64::NEG_INFINITY, f64::max);
    let slack = 10.0 * b.dirichlet.tol * hi.sup_norm().max(1.0);
    outcomes.push(Outcome { name: "comparison", pass: breach <= slack, detail: format!("largest u2 - u1 = {breach:.3e}") });

    // E is monotone: u <= v implies E(v) <= E(u), up to 5%
    let mut ratio: f64 = 0.0;
    for pair in draws.chunks(2) {
        let sum: Vec<f64> = pair[0].values().iter().zip(pair[1].values()).map(|(x, y)| x + y).collect();
        let u = GridFunction::from_values(grid, sum)?;
        ratio = ratio.max(energy(&pair[0]) / energy(&u));
    }
    outcomes.push(Outcome { name: "energy-monotone", pass: ratio <= 1.05, detail: format!("max E(v)/E(u) {ratio:.6}") });

    // Cegrell inequality, up to 5%
    let mut slack_max: f64 = 0.0;
    for pair in draws.chunks(2) {
        slack_max = slack_max.max(cegrell_check(&pair[0], &pair[1])?.slack);
    }
    outcomes.push(Outcome { name: "cegrell", pass: slack_max <= 1.05, detail: format!("max slack {slack_max:.6}") });

    // inverse iteration: certificates, normalization invariance, fixed point
    let opts = EigenOptions { dirichlet: b.dirichlet, ..Default::default() };
    let on = inverse_iterate(grid, &nu, None, &opts)?;
    let off = inverse_iterate(grid, &nu, None, &EigenOptions { normalize: false, ..opts })?;
    let violations = certify_monotone(&on.trace, 1e-6);
    outcomes.push(Outcome {
        name: "certificates",
        pass: violations.is_empty(),
        detail: format!("{} violations over {} steps", violations.len(), on.iterations),
    });
    let drift = (on.lambda_hat / off.lambda_hat - 1.0).abs();
    outcomes.push(Outcome { name: "normalization", pass: drift <= 1e-10, detail: format!("relative drift {drift:.3e}") });
    let tight = inverse_iterate(grid, &nu, None, &EigenOptions { tol_diff: 1e-10, tol_r: 1e-12, ..opts })?;
    let bound = 10.0 * b.dirichlet.tol * tight.lambda_hat.powi(n).max(1.0);
    outcomes.push(Outcome {
        name: "fixed-point",
        pass: tight.converged && tight.fixed_point_residual <= bound,
        detail: format!("residual {:.3e} (bound {bound:.1e})", tight.fixed_point_residual),
    });

    // Rayleigh quotients of samples stay above the converged value, up to 2%
    let r_inf = on.lambda_hat.powi(n);
    let lowest = draws.iter().map(|u| rayleigh(u, &nu).map(|x| x.ratio)).collect::<Result<Vec<_>, _>>()?;
    let lowest = lowest.into_iter().fold(f64::INFINITY, f64::min);
    outcomes.push(Outcome {
        name: "rayleigh-bound",
        pass: lowest >= r_inf * 0.98,
        detail: format!("min R {lowest:.6} vs converged {r_inf:.6}"),
    });

    // one inverse step commutes with scaling
    let fine = DirichletOptions { tol: 1e-11, ..b.dirichlet };
    let (u1, _) = inverse_step(&draws[0], &nu, &fine)?;
    let mut dev: f64 = 0.0;
    for c in [0.1, 10.0] {
        let (uc, _) = inverse_step(&draws[0].scaled(c), &nu, &fine)?;
        dev = dev.max(max_abs_diff(uc.values(), u1.scaled(c).values()) / (c * u1.sup_norm()));
    }
    outcomes.push(Outcome { name: "step-equivariance", pass: dev <= 1e-8, detail: format!("relative deviation {dev:.3e}") });

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let summary = json!({
        "checks": outcomes.iter().map(|o| json!({ "name": o.name, "pass": o.pass, "detail": o.detail })).collect::<Vec<_>>(),
        "failed": failed,
        "config": r.echo(),
    });
    output::write_json(&b.out.join("summary.json"), &summary)?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} invariant check(s) failed")));
    }
    Ok(())
}
