use std::path::{Path, PathBuf};
use std::sync::Arc;

use maeigen::oracles::{
    mass_divergence_probe, oracle_1d, oracle_pl_ma, oracle_radial, toric_check_1d, AffinePiece, PLConvexFunction,
    RadialProblem, ShootOptions, DDC_NORMALIZATION,
};
use maeigen::{
    certify_monotone, discretize, inverse_iterate, lions_bracket, solve_dirichlet, solve_semilinear, ConvexDomain,
    DirichletOptions, EigenOptions, Grid, LionsOptions, MeasureSpec, SemilinearOptions, SemilinearSpec, SolverPolicy,
};
use serde_json::{json, Value};

use crate::config::Resolver;
use crate::expr::Expr;
use crate::output::{self, num};
use crate::specs::{self, Start};
use crate::{CliError, Common, EigenArgs, LionsArgs, OracleCommand, SemilinearArgs, SolveArgs};

/// Everything the grid-based commands share.
pub(crate) struct Base {
    pub grid: Arc<Grid>,
    pub measure: String,
    pub dirichlet: DirichletOptions,
    pub out: PathBuf,
    pub contour: bool,
}

pub(crate) fn base(c: &Common, r: &mut Resolver) -> Result<Base, CliError> {
    let domain = specs::domain(&r.require("domain", c.domain.clone(), None)?)?;
    let measure = r.require("measure", c.measure.clone(), Some("lebesgue".to_string()))?;
    let h = r.positive("h", c.h, None)?;
    let width = r.require("width", c.width, Some(2))?;
    if width == 0 {
        return Err(CliError::Usage("invalid value for --width: must be at least 1".into()));
    }
    let grid = Arc::new(discretize(&domain, h, width).map_err(|e| grid_error(e, &domain))?);
    let d = DirichletOptions::default();
    let dirichlet = DirichletOptions {
        tol: r.positive("tol", c.tol, Some(d.tol))?,
        max_sweeps: r.require("max-sweeps", c.max_sweeps, Some(d.max_sweeps))?,
        max_newton: r.require("max-newton", c.max_newton, Some(d.max_newton))?,
        policy: r
            .require("solver", c.solver.clone(), Some(d.policy.to_string()))?
            .parse::<SolverPolicy>()
            .map_err(|e| CliError::Usage(format!("invalid value for --solver: {e}")))?,
    };
    let out = r.require("out", c.out.as_ref().map(|p| p.display().to_string()), Some("maeigen-out".to_string()))?;
    let contour = r.switch("contour", c.contour)?;
    Ok(Base { grid, measure, dirichlet, out: PathBuf::from(out), contour })
}

fn grid_error(e: maeigen::Error, domain: &ConvexDomain) -> CliError {
    match e {
        maeigen::Error::InvalidGrid(m) => CliError::Usage(format!("invalid value for --h or --width on {domain}: {m}")),
        maeigen::Error::EmptyGrid { h } => CliError::Usage(format!("invalid value for --h: {h} leaves no interior node")),
        other => other.into(),
    }
}

pub(crate) fn finish(r: &Resolver) {
    for key in r.unused() {
        log::warn!("config key '{key}' is not used by this command");
    }
}

fn grid_info(grid: &Grid) -> Value {
    json!({ "nodes": grid.len(), "h": grid.h(), "width": grid.width(), "dim": grid.dim() })
}

pub(crate) fn measure_on(b: &Base) -> Result<MeasureSpec, CliError> {
    specs::measure(&b.measure, "measure", &b.grid)
}

pub fn solve(a: SolveArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(a.common.config.as_deref())?;
    let b = base(&a.common, &mut r)?;
    let rhs_src = r.require("rhs", a.rhs.clone(), Some(b.measure.clone()))?;
    let rhs = specs::measure(&rhs_src, "rhs", &b.grid)?;
    let bnd = specs::boundary(&r.require("boundary", a.boundary.clone(), Some("zero".to_string()))?, &b.grid)?;
    finish(&r);
    let g = rhs.density_on(&b.grid)?;
    output::prepare_dir(&b.out)?;
    let sol = solve_dirichlet(&b.grid, &g, bnd, &b.dirichlet)?;
    output::write_solution(&b.out.join("solution.csv"), &sol.u)?;
    if b.contour {
        output::write_contour(&b.out.join("contour.svg"), &sol.u)?;
    }
    let summary = json!({
        "residual": sol.residual,
        "iterations": sol.iterations,
        "policy_used": sol.policy_used.to_string(),
        "fell_back": sol.fell_back,
        "sup_norm": sol.u.sup_norm(),
        "grid": grid_info(&b.grid),
        "config": r.echo(),
    });
    output::write_json(&b.out.join("summary.json"), &summary)?;
    println!("solved on {} nodes: residual {:e} after {} iterations", b.grid.len(), sol.residual, sol.iterations);
    Ok(())
}

pub fn eigen(a: EigenArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(a.common.config.as_deref())?;
    let b = base(&a.common, &mut r)?;
    let d = EigenOptions::default();
    let opts = EigenOptions {
        tol_diff: r.positive("tol-diff", a.tol_diff, Some(d.tol_diff))?,
        tol_r: r.positive("tol-r", a.tol_r, Some(d.tol_r))?,
        max_iter: r.require("max-iter", a.max_iter, Some(d.max_iter))?,
        normalize: !r.switch("no-normalize", a.no_normalize)?,
        dirichlet: b.dirichlet,
    };
    let tol_cert = r.positive("tol-cert", a.tol_cert, Some(1e-6))?;
    let start = specs::start(&r.require("start", a.start.clone(), Some("dirichlet".to_string()))?, &b.grid)?;
    finish(&r);
    let nu = measure_on(&b)?;
    output::prepare_dir(&b.out)?;
    let u0 = match start {
        Start::Dirichlet => None,
        Start::Given(u) => Some(u),
    };
    let res = inverse_iterate(&b.grid, &nu, u0.as_ref(), &opts)?;
    let violations = certify_monotone(&res.trace, tol_cert);
    output::write_trace(&b.out.join("trace.jsonl"), &res.trace)?;
    output::write_solution(&b.out.join("solution.csv"), &res.u)?;
    if b.contour {
        output::write_contour(&b.out.join("contour.svg"), &res.u)?;
    }
    let summary = json!({
        "lambda_hat": res.lambda_hat,
        "iterations": res.iterations,
        "converged": res.converged,
        "certificate_violations": violations,
        "fixed_point_residual": res.fixed_point_residual,
        "grid": grid_info(&b.grid),
        "config": r.echo(),
    });
    output::write_json(&b.out.join("summary.json"), &summary)?;
    println!(
        "lambda_hat = {} after {} iterations ({}, {} certificate violations)",
        num(res.lambda_hat),
        res.iterations,
        if res.converged { "converged" } else { "not converged" },
        violations.len()
    );
    if !res.converged {
        return Err(CliError::Numerical(format!("inverse iteration did not converge in {} steps", opts.max_iter)));
    }
    Ok(())
}

pub fn lions(a: LionsArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(a.common.config.as_deref())?;
    let b = base(&a.common, &mut r)?;
    let d = LionsOptions::default();
    let opts = LionsOptions {
        lambda_max: r.positive("lambda-max", a.lambda_max, Some(d.lambda_max))?,
        growth_guard: r.positive("growth-guard", a.growth_guard, Some(d.growth_guard))?,
        bisect_tol: r.positive("bisect-tol", a.bisect_tol, Some(d.bisect_tol))?,
        max_picard: r.require("max-picard", a.max_picard, Some(d.max_picard))?,
        picard_tol: r.positive("picard-tol", a.picard_tol, Some(d.picard_tol))?,
        dirichlet: b.dirichlet,
    };
    finish(&r);
    let nu = measure_on(&b)?;
    output::prepare_dir(&b.out)?;
    let res = lions_bracket(&b.grid, &nu, &opts)?;
    let rows: Vec<Vec<String>> = res
        .sup_norm_curve
        .iter()
        .map(|p| vec![num(p.lambda), num(p.sup_norm), p.converged.to_string(), p.subcritical.to_string()])
        .collect();
    output::write_csv(&b.out.join("curve.csv"), "lambda,sup_norm,converged,subcritical", &rows)?;
    output::write_solution(&b.out.join("solution.csv"), &res.witness_lo)?;
    if b.contour {
        output::write_contour(&b.out.join("contour.svg"), &res.witness_lo)?;
    }
    let summary = json!({
        "lambda_lo": res.lambda_lo,
        "lambda_hi": res.lambda_hi,
        "relative_width": (res.lambda_hi - res.lambda_lo) / res.lambda_hi,
        "probes": res.sup_norm_curve.len() - 1,
        "grid": grid_info(&b.grid),
        "config": r.echo(),
    });
    output::write_json(&b.out.join("summary.json"), &summary)?;
    println!("lambda_1 in [{}, {}]", num(res.lambda_lo), num(res.lambda_hi));
    Ok(())
}

pub fn semilinear(a: SemilinearArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(a.common.config.as_deref())?;
    let b = base(&a.common, &mut r)?;
    let (f, implied) = specs::semilinear(&r.require("f", a.f.clone(), None)?)?;
    let lipschitz = r.get("lipschitz", a.lipschitz, implied)?.ok_or_else(|| {
        CliError::Usage("--lipschitz is required for expression right-hand sides (bound with dF/dt >= -L)".into())
    })?;
    let d = SemilinearOptions::default();
    let opts = SemilinearOptions {
        tol: r.positive("picard-tol", a.picard_tol, Some(d.tol))?,
        max_iter: r.require("max-iter", a.max_iter, Some(d.max_iter))?,
        growth_guard: r.get("growth-guard", a.growth_guard, None)?,
        dirichlet: b.dirichlet,
    };
    finish(&r);
    let nu = measure_on(&b)?;
    output::prepare_dir(&b.out)?;
    let spec = SemilinearSpec { f, lipschitz_down: lipschitz };
    let sol = solve_semilinear(&b.grid, &nu, &spec, &opts)?;
    output::write_solution(&b.out.join("solution.csv"), &sol.u)?;
    if b.contour && !sol.u.is_zero() {
        output::write_contour(&b.out.join("contour.svg"), &sol.u)?;
    }
    let summary = json!({
        "residual": sol.residual,
        "iterations": sol.iterations,
        "sup_norm": sol.u.sup_norm(),
        "sup_history": sol.sup_history,
        "grid": grid_info(&b.grid),
        "config": r.echo(),
    });
    output::write_json(&b.out.join("summary.json"), &summary)?;
    println!("semilinear solve: sup norm {}, residual {:e}, {} Picard steps", num(sol.u.sup_norm()), sol.residual, sol.iterations);
    Ok(())
}

fn oracle_out(r: &mut Resolver, out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let out = r.require("out", out.as_ref().map(|p| p.display().to_string()), Some("maeigen-out".to_string()))?;
    let out = PathBuf::from(out);
    output::prepare_dir(&out)?;
    Ok(out)
}

fn scalar_expr(src: &str, var: &'static str, flag: &str) -> Result<Arc<Expr>, CliError> {
    Expr::compile(src, &[var]).map(Arc::new).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn write_oracle(out: &Path, header: &str, rows: &[Vec<String>], summary: Value) -> Result<(), CliError> {
    output::write_csv(&out.join("oracle.csv"), header, rows)?;
    output::write_json(&out.join("summary.json"), &summary)?;
    Ok(())
}

pub fn oracle(o: OracleCommand) -> Result<(), CliError> {
    match o {
        OracleCommand::OneD { common, length, samples } => {
            let mut r = Resolver::new(common.config.as_deref())?;
            let length = r.positive("length", length, Some(1.0))?;
            let samples = r.require("samples", samples, Some(101))?.max(2);
            let out = oracle_out(&mut r, &common.out)?;
            finish(&r);
            let e = oracle_1d(length)?;
            let rows: Vec<Vec<String>> = (0..samples)
                .map(|i| {
                    let x = length * i as f64 / (samples - 1) as f64;
                    vec![num(x), num(e.eigenfunction(x))]
                })
                .collect();
            write_oracle(&out, "x,u", &rows, json!({ "lambda1": e.lambda1, "config": r.echo() }))?;
            println!("lambda_1 = {}", num(e.lambda1));
        }
        OracleCommand::Radial { common, radius, density, rtol, atol, lambda_tol, samples } => {
            let mut r = Resolver::new(common.config.as_deref())?;
            let d = ShootOptions::default();
            let radius = r.positive("radius", radius, Some(1.0))?;
            let density = r.require("density", density, Some("1".to_string()))?;
            let opts = ShootOptions {
                rtol: r.positive("rtol", rtol, Some(d.rtol))?,
                atol: r.positive("atol", atol, Some(d.atol))?,
                lambda_tol: r.positive("lambda-tol", lambda_tol, Some(d.lambda_tol))?,
                samples: r.require("samples", samples, Some(d.samples))?,
            };
            let out = oracle_out(&mut r, &common.out)?;
            finish(&r);
            let f = scalar_expr(&density, "r", "density")?;
            let problem = RadialProblem::new(radius, move |x| f.eval(&[x]))?;
            let e = oracle_radial(&problem, &opts)?;
            let rows: Vec<Vec<String>> = e.profile.iter().map(|(x, u)| vec![num(*x), num(*u)]).collect();
            write_oracle(&out, "r,u", &rows, json!({ "lambda1": e.lambda1, "config": r.echo() }))?;
            println!("lambda_1 = {}", num(e.lambda1));
        }
        OracleCommand::Pl { common, domain, pieces, cone } => {
            let mut r = Resolver::new(common.config.as_deref())?;
            let domain = specs::domain(&r.require("domain", domain, Some("disc 0 0 1".to_string()))?)?;
            let u = match (r.get("cone", cone, None)?, r.get("pieces", pieces, None)?) {
                (Some(m), None) => PLConvexFunction::cone(m)?,
                (None, Some(list)) => PLConvexFunction::new(parse_pieces(&list)?)?,
                _ => return Err(CliError::Usage("give exactly one of --pieces and --cone".into())),
            };
            let out = oracle_out(&mut r, &common.out)?;
            finish(&r);
            let atoms = oracle_pl_ma(&u, &domain)?;
            let total: f64 = atoms.iter().map(|a| a.mass).sum();
            let rows: Vec<Vec<String>> =
                atoms.iter().map(|a| vec![num(a.point[0]), num(a.point[1]), num(a.mass)]).collect();
            write_oracle(&out, "x,y,mass", &rows, json!({ "atoms": atoms.len(), "total_mass": total, "config": r.echo() }))?;
            println!("{} atoms, total mass {}", atoms.len(), num(total));
        }
        OracleCommand::Toric { common, u, chi, a, b, n_r, n_theta } => {
            let mut r = Resolver::new(common.config.as_deref())?;
            let u = scalar_expr(&r.require("u", u, Some("x^2".to_string()))?, "x", "u")?;
            let chi = scalar_expr(&r.require("chi", chi, Some("1".to_string()))?, "x", "chi")?;
            let a = r.require("a", a, Some(0.0))?;
            let b = r.require("b", b, Some(1.0))?;
            let n_r = r.require("n-r", n_r, Some(256))?;
            let n_theta = r.require("n-theta", n_theta, Some(256))?;
            let out = oracle_out(&mut r, &common.out)?;
            finish(&r);
            let rep = toric_check_1d(&|x| u.eval(&[x]), &|x| chi.eval(&[x]), a, b, n_r, n_theta)?;
            write_oracle(
                &out,
                "lhs,rhs,abs_diff",
                &[vec![num(rep.lhs), num(rep.rhs), num(rep.abs_diff)]],
                json!({ "lhs": rep.lhs, "rhs": rep.rhs, "abs_diff": rep.abs_diff, "ddc_normalization": DDC_NORMALIZATION, "config": r.echo() }),
            )?;
            println!("lhs {} rhs {} difference {:e}", num(rep.lhs), num(rep.rhs), rep.abs_diff);
        }
        OracleCommand::MassProbe { common, alpha, hs } => {
            let mut r = Resolver::new(common.config.as_deref())?;
            let domain = specs::domain(&r.require("domain", common.domain.clone(), None)?)?;
            let measure = r.require("measure", common.measure.clone(), Some("lebesgue".to_string()))?;
            let width = r.require("width", common.width, Some(2))?;
            let alpha = r.positive("alpha", alpha, Some(0.5))?;
            let hs_src = r.require("hs", hs, Some("0.0625,0.03125,0.015625".to_string()))?;
            let hs = hs_src
                .split(',')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| CliError::Usage(format!("invalid value for --hs: {e}")))?;
            let dopts = DirichletOptions { tol: r.positive("tol", common.tol, Some(DirichletOptions::default().tol))?, ..Default::default() };
            let out = oracle_out(&mut r, &common.out)?;
            finish(&r);
            // the measure is parsed against the coarsest grid; expression
            // measures do not depend on it
            let probe_grid = Arc::new(discretize(&domain, hs[0], width).map_err(|e| grid_error(e, &domain))?);
            let nu = specs::measure(&measure, "measure", &probe_grid)?;
            if matches!(nu, MeasureSpec::HessianOf(_)) {
                return Err(CliError::Usage("--measure hessian:... is tied to one grid and cannot be refined".into()));
            }
            let table = mass_divergence_probe(&domain, &nu, width, alpha, &hs, &dopts)?;
            let rows: Vec<Vec<String>> = table
                .iter()
                .map(|t| vec![num(t.h), num(t.mass), t.ratio.map(num).unwrap_or_default()])
                .collect();
            write_oracle(&out, "h,mass,ratio", &rows, json!({ "rows": table, "config": r.echo() }))?;
            for t in &table {
                println!("h = {}  mass = {}", t.h, num(t.mass));
            }
        }
    }
    Ok(())
}

fn parse_pieces(list: &str) -> Result<Vec<AffinePiece>, CliError> {
    list.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let v: Vec<f64> = s
                .split(',')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("invalid value for --pieces: '{s}': {e}")))?;
            match v.as_slice() {
                [gx, gy, b] => Ok(AffinePiece { gradient: [*gx, *gy], offset: *b }),
                _ => Err(CliError::Usage(format!("invalid value for --pieces: '{s}' needs GX,GY,B"))),
            }
        })
        .collect()
}
