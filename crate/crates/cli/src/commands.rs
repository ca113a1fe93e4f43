use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use quasilin::grid::{Grid, GridField, Sector};
use quasilin::nonlinearity::{check_conditions, default_condition_sample};
use quasilin::paths::{default_samples, PathFamily, Tuning};
use quasilin::solver::{find_bracket, minimize, nodal_direction, search, shooting_oracle, SolveReport};
use quasilin::transform::{default_sample, property_suite, ChangeOfVariables, DualTransform};

use crate::config::{nonlinearity_for, RunConfig};
use crate::output::{self, num, KeyValue};
use crate::CliError;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
}

/// `g` with a wrong derivative, used to check that verify-g can fail.
struct Broken(DualTransform);

impl ChangeOfVariables for Broken {
    fn value(&self, t: f64) -> f64 {
        self.0.value(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        1.1 * self.0.derivative(t)
    }

    fn inverse(&self, u: f64) -> f64 {
        self.0.inverse(u)
    }
}

pub fn verify_g(inject_fault: bool, log: &mut dyn Write) -> Result<(), CliError> {
    let sample = default_sample(8);
    let dual = DualTransform::default();
    let report = if inject_fault {
        property_suite(&Broken(dual), &sample)
    } else {
        property_suite(&dual, &sample)
    };
    writeln!(log, "{:<8} {:>24}  {:<6} description", "item", "worst margin", "status")?;
    for item in &report.items {
        writeln!(
            log,
            "{:<8} {:>24}  {:<6} {}",
            item.label,
            num(item.margin),
            if item.passed { "pass" } else { "FAIL" },
            item.description
        )?;
    }
    if report.all_passed() {
        writeln!(log, "all {} items passed on {} sample points", report.items.len(), sample.len())?;
        Ok(())
    } else {
        let failed: Vec<&str> = report.failures().iter().map(|i| i.label.as_str()).collect();
        Err(CliError::Verification(format!("failing items: {}", failed.join(", "))))
    }
}

pub fn verify_h(ctx: &Ctx, log: &mut dyn Write) -> Result<(), CliError> {
    let f = ctx.cfg.nonlinearity()?;
    let report = check_conditions(&f, &default_condition_sample(), ctx.cfg.problem.n);
    writeln!(log, "{} (N = {})", f.name(), ctx.cfg.problem.n)?;
    for c in &report.checks {
        writeln!(log, "{:<8} {:<6} {}", c.condition, if c.passed { "pass" } else { "FAIL" }, c.detail)?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.condition).collect();
        Err(CliError::Verification(format!("failing conditions: {}", failed.join(", "))))
    }
}

fn grid(cfg: &RunConfig) -> Result<Arc<Grid>, CliError> {
    Ok(Arc::new(Grid::new(cfg.spec()?, cfg.grid.r_max, cfg.grid.delta)?))
}

/// Tuned (or fixed-scale) family, its tuning record and the parameter samples.
type Family = (PathFamily, Option<Tuning>, Vec<Vec<f64>>);

/// The configured path family, tuned unless `paths.r` fixes the scale.
fn family(ctx: &Ctx) -> Result<Family, CliError> {
    let cfg = ctx.cfg;
    let f = cfg.nonlinearity()?;
    let base = PathFamily::new(cfg.paths.k, &f, cfg.spec()?, cfg.transform()?)?;
    let samples = default_samples(cfg.paths.k, cfg.paths.samples, ctx.seed);
    match cfg.paths.r {
        Some(r) => Ok((base.with_r(r)?, None, samples)),
        None => {
            let (family, tuning) = base.tune_r(&f, &samples)?;
            Ok((family, Some(tuning), samples))
        }
    }
}

fn seeds(ctx: &Ctx, grid: &Arc<Grid>) -> Result<Vec<GridField>, CliError> {
    let (family, _, samples) = family(ctx)?;
    samples
        .iter()
        .take(ctx.cfg.solver.starts)
        .map(|s| family.seed_field(s, grid).map_err(Into::into))
        .collect()
}

fn write_solution(
    cfg: &RunConfig,
    fctx: &quasilin::pohozaev::FunctionalContext,
    report: &SolveReport,
    kind: &str,
    suffix: &str,
) -> Result<(), CliError> {
    let dir = &cfg.output.directory;
    output::write(dir, &format!("profile{suffix}.csv"), &output::profile_csv(fctx, &report.field))?;
    output::write(dir, &format!("summary{suffix}.txt"), &output::summary(report, kind).render())?;
    output::write(dir, &format!("history{suffix}.csv"), &output::history_csv(&report.history))
}

pub fn solve(ctx: &Ctx, log: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = ctx.cfg;
    let fctx = cfg.context()?;
    let grid = grid(cfg)?;
    let seeds = seeds(ctx, &grid)?;
    let solve_cfg = cfg.solve_config();
    if cfg.solver.starts == 1 && cfg.solver.saddles == 0 {
        let report = minimize(&fctx, &seeds[0], &solve_cfg)?;
        write_solution(cfg, &fctx, &report, "minimum", "")?;
        writeln!(
            log,
            "beta = {}  theta = {}  el_residual = {:e}  iterations = {}  converged = {}",
            num(report.beta),
            num(report.theta),
            report.el_residual,
            report.iterations,
            report.converged
        )?;
    } else {
        let vias: Vec<GridField> = (0..cfg.solver.saddles).map(|j| nodal_direction(&grid, j)).collect();
        let outcome = search(&fctx, &seeds, &vias, &solve_cfg, &cfg.mountain_pass_config())?;
        if outcome.solutions.is_empty() {
            let (_, first) = outcome.failures.into_iter().next().expect("no solution implies a failure");
            return Err(first.into());
        }
        let mut levels = String::from("index,kind,beta,theta,pohozaev_residual,el_residual,converged\n");
        for (i, (report, kind)) in outcome.solutions.iter().zip(&outcome.kinds).enumerate() {
            let suffix = if i == 0 { String::new() } else { format!("_{i}") };
            write_solution(cfg, &fctx, report, kind.as_str(), &suffix)?;
            levels.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                kind.as_str(),
                num(report.beta),
                num(report.theta),
                num(report.pohozaev_residual),
                num(report.el_residual),
                report.converged
            ));
            writeln!(log, "[{i}] {:<8} beta = {}  el_residual = {:e}", kind.as_str(), num(report.beta), report.el_residual)?;
        }
        output::write(&cfg.output.directory, "levels.csv", &levels)?;
        for (i, e) in &outcome.failures {
            writeln!(log, "run {i} failed: {e}")?;
        }
    }
    // Wall time goes to the log only, so the files stay reproducible.
    writeln!(log, "wall time {:.3} s", start.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn oracle(ctx: &Ctx, log: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    require_radial(cfg)?;
    let fctx = cfg.context()?;
    let bracket = find_bracket(&fctx)?;
    let res = shooting_oracle(&fctx, bracket, cfg.grid.r_max, cfg.grid.delta)?;
    let mut kv = KeyValue::default();
    kv.number("a_star", res.a_star)
        .number("center_u", res.center_u)
        .number("energy", res.energy)
        .number("psi", res.psi)
        .number("bracket_lo", bracket.0)
        .number("bracket_hi", bracket.1)
        .int("bisection_steps", res.bisection_steps);
    let mut csv = String::from("r,v,u\n");
    for (r, v) in res.radii.iter().zip(&res.profile) {
        csv.push_str(&format!("{},{},{}\n", num(*r), num(*v), num(fctx.transform().value(*v))));
    }
    output::write(&cfg.output.directory, "oracle.txt", &kv.render())?;
    output::write(&cfg.output.directory, "oracle_profile.csv", &csv)?;
    writeln!(log, "a_star = {}  energy = {}", num(res.a_star), num(res.energy))?;
    Ok(())
}

pub fn paths(ctx: &Ctx, log: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let (family, tuning, samples) = family(ctx)?;
    let f = cfg.nonlinearity()?;
    let min = match &tuning {
        Some(t) => t.min_integral,
        None => family.min_integral(&f, &samples)?,
    };
    let mut kv = KeyValue::default();
    kv.int("k", family.k())
        .number("R", family.r())
        .number("min_h_integral", min)
        .int("samples", samples.len())
        .flag("tuned", tuning.is_some());
    if let Some(t) = &tuning {
        kv.int("doublings", t.doublings as usize);
    }
    let grid = grid(cfg)?;
    let seed = family.seed_field(&samples[0], &grid)?;
    output::write(&cfg.output.directory, "paths.txt", &kv.render())?;
    output::write(
        &cfg.output.directory,
        "seed_profile.csv",
        &output::profile_csv(&cfg.context()?, &seed),
    )?;
    writeln!(log, "k = {}  R = {}  min ∫H = {}", family.k(), num(family.r()), num(min))?;
    Ok(())
}

pub fn sweep(ctx: &Ctx, log: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut csv =
        String::from("n,p,mass,status,beta,theta,pohozaev_residual,el_residual,quasilinear_residual,iterations\n");
    for &n in &cfg.sweep.n {
        for &p in &cfg.sweep.p {
            for &mass in &cfg.sweep.mass {
                let mut row_cfg = cfg.clone();
                row_cfg.problem.n = n;
                row_cfg.problem.nonlinearity.p = p;
                row_cfg.problem.nonlinearity.mass = mass;
                let row_ctx = Ctx {
                    cfg: &row_cfg,
                    seed: ctx.seed,
                };
                let result = nonlinearity_for(&row_cfg.problem.nonlinearity, n).and_then(|_| {
                        let fctx = row_cfg.context()?;
                        let grid = grid(&row_cfg)?;
                        let seed = seeds(&row_ctx, &grid)?.swap_remove(0);
                        Ok(minimize(&fctx, &seed, &row_cfg.solve_config())?)
                    });
                match result {
                    Ok(r) if r.converged && r.beta > 0.0 => {
                        csv.push_str(&format!(
                            "{n},{},{},ok,{},{},{},{},{},{}\n",
                            num(p),
                            num(mass),
                            num(r.beta),
                            num(r.theta),
                            num(r.pohozaev_residual),
                            num(r.el_residual),
                            num(r.quasilinear_residual),
                            r.iterations
                        ));
                        writeln!(log, "n = {n}  p = {p}  mass = {mass}: beta = {}", num(r.beta))?;
                    }
                    Ok(r) => {
                        csv.push_str(&format!("{n},{},{},failed: not converged,,,,,,{}\n", num(p), num(mass), r.iterations));
                        writeln!(log, "n = {n}  p = {p}  mass = {mass}: not converged")?;
                    }
                    Err(e) => {
                        let msg = e.to_string().replace([',', '\n'], ";");
                        csv.push_str(&format!("{n},{},{},failed: {msg},,,,,,\n", num(p), num(mass)));
                        writeln!(log, "n = {n}  p = {p}  mass = {mass}: {e}")?;
                    }
                }
            }
        }
    }
    output::write(&cfg.output.directory, "sweep.csv", &csv)?;
    Ok(())
}

/// The shooting oracle is a radial ODE.
fn require_radial(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sector()? != Sector::Radial {
        return Err(quasilin::Error::Usage("the oracle runs in the radial sector only".into()).into());
    }
    Ok(())
}
