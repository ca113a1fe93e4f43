//! Preconditioned descent on the reduced energy, residual certificates, the
//! radial shooting oracle and multi-start searches.

mod multistart;
mod shooting;

pub use multistart::{
    dedup, mountain_pass, multistart, nodal_direction, search, MountainPassConfig, MultistartOutcome, SearchOutcome,
    SolutionKind,
};
pub use shooting::{find_bracket, shooting_oracle, Classification, ShootingResult};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Preconditioner};
use crate::pohozaev::{Evaluation, FunctionalContext};
use crate::transform::ChangeOfVariables;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_iter: usize,
    /// Stop when the dual gradient norm divided by `ψ^{1/2}` drops below this.
    pub grad_tol: f64,
    pub initial_step: f64,
    /// `c` in the `(-Δ + c)⁻¹` smoother.
    pub precondition_shift: f64,
    /// Smallest trial step before the search is declared stagnant.
    pub min_step: f64,
    /// Sufficient-decrease constant of the backtracking search.
    pub armijo: f64,
    /// Remove the dilation direction from every step (see [`minimize`]).
    pub pin_scale: bool,
    /// Re-dilate the iterate onto the Pohozaev set by interpolation whenever
    /// its projection factor leaves `[1/band, band]`; `f64::INFINITY` disables.
    pub rescale_band: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            grad_tol: 1e-8,
            initial_step: 1.0,
            precondition_shift: 1.0,
            min_step: 1e-14,
            armijo: 1e-4,
            pin_scale: true,
            rescale_band: 1.25,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be at least 1".into()));
        }
        for (name, x) in [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("precondition_shift", self.precondition_shift),
            ("min_step", self.min_step),
            ("armijo", self.armijo),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.rescale_band > 1.0) {
            return Err(Error::Validation(format!(
                "rescale_band must exceed 1, got {}",
                self.rescale_band
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub energy: f64,
    /// Relative dual norm of the (scale-pinned) gradient.
    pub gradient_norm: f64,
    pub step: f64,
    /// The iterate was re-dilated by interpolation just before this entry, so
    /// the energy may differ from the previous entry by interpolation error.
    pub rescaled: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Converged field on the Pohozaev set, on a grid of spacing `Δ/r`.
    pub field: GridField,
    pub beta: f64,
    pub psi: f64,
    /// `M(v) = ψ - 2*∫H(g(v))`.
    pub deficit: f64,
    pub theta: f64,
    /// `|ψ - 2*∫H(g(v))| / ψ`.
    pub pohozaev_residual: f64,
    /// `|I(g(v)) - J(v)|`.
    pub duality_gap: f64,
    pub el_residual: f64,
    pub quasilinear_residual: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryEntry>,
}

impl SolveReport {
    /// `u = g(v)`, the solution of the quasilinear equation.
    pub fn u(&self, ctx: &FunctionalContext) -> Vec<f64> {
        self.field.values().iter().map(|&v| ctx.transform().value(v)).collect()
    }

    /// The field value at the origin node, `v(0)`.
    pub fn center_value(&self) -> f64 {
        self.field.values()[0]
    }
}

/// Scale-pinned preconditioned steepest-descent direction and its norm.
pub(crate) struct Direction {
    pub dir: Vec<f64>,
    pub norm: f64,
}

/// `(A + cW) x` on all nodes.
pub(crate) fn sobolev_apply(grid: &Grid, shift: f64, x: &[f64]) -> Vec<f64> {
    let mut out = grid.stiffness_apply(x);
    for ((o, w), xi) in out.iter_mut().zip(grid.weights()).zip(x) {
        *o += shift * w * xi;
    }
    grid.zero_boundary(&mut out);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-(A + cW)⁻¹ G`, optionally made `(A + cW)`-orthogonal to the dilation generator.
pub(crate) fn descent_direction(
    grid: &Grid,
    precond: &Preconditioner,
    gradient: &[f64],
    v: &[f64],
    pin_scale: bool,
) -> Direction {
    let p = precond.apply(grid, gradient);
    let mut norm2 = dot(gradient, &p);
    let mut dir: Vec<f64> = p.iter().map(|x| -x).collect();
    if pin_scale {
        let mut z = grid.dilation_generator(v);
        if grid.spec().is_tau() {
            grid.antisymmetrize_in_place(&mut z);
        }
        let kz = sobolev_apply(grid, precond.shift(), &z);
        let zkz = dot(&z, &kz);
        if zkz > 0.0 {
            let zg = dot(&z, gradient);
            let c = zg / zkz;
            for (d, zi) in dir.iter_mut().zip(&z) {
                *d += c * zi;
            }
            norm2 -= zg * c;
        }
    }
    Direction {
        dir,
        norm: norm2.max(0.0).sqrt(),
    }
}

/// The Sobolev metric `A + cW` of the grid dilated onto the Pohozaev set.
///
/// The reduced energy only sees node values, so its gradient does not change
/// under a dilation of the grid while `A + cW` does. Measuring in the metric
/// of the projected field makes the descent, and the stopping test, identical
/// for any two grids that differ only by a dilation.
pub(crate) struct Metric {
    shift: f64,
    r: f64,
    grid: Grid,
    precond: Preconditioner,
}

impl Metric {
    pub fn new(base: &Grid, shift: f64, r: f64) -> Self {
        let grid = base.dilated(r);
        let precond = Preconditioner::new(&grid, shift);
        Self { shift, r, grid, precond }
    }

    fn update(&mut self, base: &Grid, r: f64) {
        if r != self.r {
            *self = Self::new(base, self.shift, r);
        }
    }

    pub fn direction(&mut self, base: &Grid, r: f64, gradient: &[f64], v: &[f64], pin_scale: bool) -> Direction {
        self.update(base, r);
        descent_direction(&self.grid, &self.precond, gradient, v, pin_scale)
    }
}

/// Dual gradient norm over `ψ^{1/2}`, both taken on the projected grid.
pub(crate) fn relative_norm(ctx: &FunctionalContext, norm: f64, eval: &Evaluation) -> f64 {
    let n = ctx.spec().n() as f64;
    norm / (eval.psi * eval.r.powf(2.0 - n)).sqrt()
}

/// Minimizes the reduced energy from `v0`.
///
/// Each step is a Barzilai–Borwein-scaled Sobolev gradient step with
/// backtracking on the reduced energy; steps leaving the admissible set
/// `{∫H(g(v)) > 0}` are halved like any rejected step. `v0` is first dilated
/// onto the Pohozaev set by interpolation so the solution is resolved at the
/// grid's own spacing.
///
/// The reduced energy is dilation-invariant in the continuum but only
/// approximately so as a function of node values. With `pin_scale` the
/// component of each step along the discrete generator `x·∇v` is removed,
/// which keeps the iterate from drifting along that near-flat valley. When the
/// shape changes a lot the pinned scale can still end up far from the grid's;
/// the iterate is then re-dilated (see [`SolveConfig::rescale_band`]).
pub fn minimize(ctx: &FunctionalContext, v0: &GridField, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let r0 = ctx.r_of(v0)?;
    let start = v0.interpolate_dilation(r0);
    let start = if ctx.evaluate(&start).is_ok() { start } else { v0.clone() };
    let grid = Arc::clone(start.grid());
    let mut v = start;
    let mut eval = ctx.evaluate(&v)?;
    let mut metric = Metric::new(&grid, cfg.precondition_shift, eval.r);
    let mut history = Vec::new();
    let mut alpha = cfg.initial_step;
    let mut previous: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut direction = metric.direction(&grid, eval.r, &eval.gradient, v.values(), cfg.pin_scale);
    let mut converged = false;
    let mut iterations = 0;
    let mut rescaled = false;
    for it in 0..cfg.max_iter {
        let rel = relative_norm(ctx, direction.norm, &eval);
        history.push(HistoryEntry {
            iteration: it,
            energy: eval.energy,
            gradient_norm: rel,
            step: if it == 0 { 0.0 } else { alpha },
            rescaled,
        });
        rescaled = false;
        if rel <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations = it + 1;
        if let Some((pv, pg, last_step_norm)) = &previous {
            let s: Vec<f64> = v.values().iter().zip(pv).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = eval.gradient.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                // BB1 in the Sobolev metric: ‖s‖²_K / sᵀy.
                alpha = (last_step_norm * last_step_norm / sy).clamp(1e-8, 1e8);
            }
        }
        let mut step = alpha;
        let accepted = loop {
            if step < cfg.min_step {
                break None;
            }
            let values: Vec<f64> = v
                .values()
                .iter()
                .zip(&direction.dir)
                .map(|(x, d)| x + step * d)
                .collect();
            let cand = GridField::from_values(Arc::clone(&grid), values)?;
            match ctx.evaluate(&cand) {
                Ok(e) => {
                    let decrease = eval.energy - e.energy;
                    if decrease >= cfg.armijo * step * direction.norm * direction.norm {
                        break Some((cand, e, step));
                    }
                    // Below rounding level the energy cannot rank steps; accept
                    // when the gradient still shrinks.
                    if decrease.abs() <= 1e-13 * eval.energy.abs() {
                        let d = Metric::new(&grid, cfg.precondition_shift, e.r).direction(
                            &grid,
                            e.r,
                            &e.gradient,
                            cand.values(),
                            cfg.pin_scale,
                        );
                        if d.norm < direction.norm {
                            break Some((cand, e, step));
                        }
                    }
                }
                Err(Error::Admissibility { .. }) | Err(Error::Degenerate(_)) => {}
                Err(other) => return Err(other),
            }
            step *= 0.5;
        };
        let Some((cand, e, step)) = accepted else {
            return Err(Error::Stagnation {
                iterations: it,
                gradient: rel,
                last: v.into_values(),
            });
        };
        previous = Some((v.values().to_vec(), eval.gradient.clone(), step * direction.norm));
        alpha = step;
        v = cand;
        eval = e;
        if eval.r > cfg.rescale_band || eval.r * cfg.rescale_band < 1.0 {
            let w = v.interpolate_dilation(eval.r);
            if let Ok(e) = ctx.evaluate(&w) {
                v = w;
                eval = e;
                previous = None;
                alpha = cfg.initial_step;
                rescaled = true;
            }
        }
        direction = metric.direction(&grid, eval.r, &eval.gradient, v.values(), cfg.pin_scale);
    }
    let gradient_norm = relative_norm(ctx, direction.norm, &eval);
    certify(ctx, &v, iterations, history, gradient_norm, converged, cfg.precondition_shift)
}

/// Projects `v` exactly onto the Pohozaev set and computes every diagnostic.
pub fn certify(
    ctx: &FunctionalContext,
    v: &GridField,
    iterations: usize,
    history: Vec<HistoryEntry>,
    gradient_norm: f64,
    converged: bool,
    shift: f64,
) -> Result<SolveReport> {
    let field = ctx.project_exact(v)?;
    let psi = field.dirichlet_energy();
    let h_integral = ctx.h_integral(&field)?;
    let deficit = psi - ctx.two_star() * h_integral;
    let j = 0.5 * psi - h_integral;
    let u = field.map(|s| ctx.transform().value(s));
    let duality_gap = (ctx.I_original(&u)? - j).abs();
    Ok(SolveReport {
        beta: j,
        psi,
        deficit,
        theta: ctx.theta_ratio(&field)?,
        pohozaev_residual: deficit.abs() / psi,
        duality_gap,
        el_residual: euler_lagrange_residual_with(ctx, &field, shift)?,
        quasilinear_residual: quasilinear_residual_with(ctx, &u, shift)?,
        gradient_norm,
        iterations,
        converged,
        history,
        field,
    })
}

/// Dual norm of `-Δv - h(g(v))g'(v)` relative to `ψ(v)^{1/2}`.
///
/// The Laplacian here is a fourth-order stencil independent of the one the
/// solver differentiates, so at a converged discrete solution the value
/// measures the discretization error, which decays like `Δ²`.
pub fn euler_lagrange_residual(ctx: &FunctionalContext, v: &GridField) -> Result<f64> {
    euler_lagrange_residual_with(ctx, v, 1.0)
}

fn euler_lagrange_residual_with(ctx: &FunctionalContext, v: &GridField, shift: f64) -> Result<f64> {
    let grid = v.grid();
    let psi = v.dirichlet_energy();
    if psi <= 0.0 {
        return Err(Error::Degenerate("residual of the zero field".into()));
    }
    let lap = grid.laplacian_fourth_order(v.values());
    let mut b: Vec<f64> = lap
        .iter()
        .zip(v.values())
        .zip(grid.weights())
        .map(|((l, &s), w)| w * (-l - ctx.force(s)))
        .collect();
    grid.zero_boundary(&mut b);
    if grid.spec().is_tau() {
        grid.antisymmetrize_in_place(&mut b);
    }
    let precond = Preconditioner::new(grid, shift);
    Ok(precond.dual_norm(grid, &b) / psi.sqrt())
}

/// Dual norm of the weak-form defect of `-Δu - uΔ(u²) = h(u)`,
/// `∫(1 + 2u²)∇u·∇φ + 2∫u|∇u|²φ - ∫h(u)φ`, relative to `(∫(1 + 2u²)|∇u|²)^{1/2}`.
///
/// The coefficient uses the edge-midpoint value of `u`, a discretization
/// independent of the one used by the solver. Under the identity transform the
/// quasilinear terms are dropped.
pub fn quasilinear_residual(ctx: &FunctionalContext, u: &GridField) -> Result<f64> {
    quasilinear_residual_with(ctx, u, 1.0)
}

fn quasilinear_residual_with(ctx: &FunctionalContext, u: &GridField, shift: f64) -> Result<f64> {
    let grid = u.grid();
    let k = if ctx.transform().is_identity() { 0.0 } else { 2.0 };
    let coef = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        1.0 + k * m * m
    };
    let energy = grid.weighted_dirichlet_energy(u.values(), coef);
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let stiff = grid.weighted_stiffness_gradient(u.values(), coef, |a, b| (0.5 * k * (a + b), 0.5 * k * (a + b)));
    let h = ctx.nonlinearity();
    let mut b: Vec<f64> = stiff
        .iter()
        .zip(u.values())
        .zip(grid.weights())
        .map(|((s, &x), w)| s - w * h.h(x))
        .collect();
    grid.zero_boundary(&mut b);
    if grid.spec().is_tau() {
        grid.antisymmetrize_in_place(&mut b);
    }
    let precond = Preconditioner::new(grid, shift);
    Ok(precond.dual_norm(grid, &b) / energy.sqrt())
}
