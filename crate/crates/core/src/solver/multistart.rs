//! Several minimizations from different seeds, deduplication of the results,
//! and a climbing-image string search for mountain-pass critical points.

use std::sync::Arc;

use super::{certify, descent_direction, dot, minimize, sobolev_apply, HistoryEntry, SolveConfig, SolveReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Preconditioner};
use crate::pohozaev::FunctionalContext;

/// Relative energy gap below which two reports count as the same level.
pub const ENERGY_GAP: f64 = 1e-3;
/// Relative node-value distance (up to sign) below which two fields coincide.
pub const FIELD_DISTANCE: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct MultistartOutcome {
    /// Distinct critical points, ascending in energy.
    pub solutions: Vec<SolveReport>,
    /// Seeds whose run failed, with the error.
    pub failures: Vec<(usize, Error)>,
    pub runs: usize,
}

fn field_distance(a: &SolveReport, b: &SolveReport) -> f64 {
    let (x, y) = (a.field.values(), b.field.values());
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    let norm = |it: &mut dyn Iterator<Item = f64>| it.map(|t| t * t).sum::<f64>().sqrt();
    let minus = norm(&mut x.iter().zip(y).map(|(p, q)| p - q));
    let plus = norm(&mut x.iter().zip(y).map(|(p, q)| p + q));
    let scale = norm(&mut x.iter().copied()).max(norm(&mut y.iter().copied()));
    minus.min(plus) / scale
}

/// Sorts by energy and keeps one report per cluster; two reports are merged
/// when their energies differ by at most [`ENERGY_GAP`] (relative) or their
/// node values agree up to sign within [`FIELD_DISTANCE`].
pub fn dedup(reports: Vec<SolveReport>) -> Vec<SolveReport> {
    dedup_tagged(reports.into_iter().map(|r| (r, ())).collect())
        .into_iter()
        .map(|(r, _)| r)
        .collect()
}

fn dedup_tagged<T>(mut reports: Vec<(SolveReport, T)>) -> Vec<(SolveReport, T)> {
    reports.sort_by(|a, b| a.0.beta.total_cmp(&b.0.beta));
    let mut kept: Vec<(SolveReport, T)> = Vec::new();
    for (r, tag) in reports {
        let duplicate = kept.iter().any(|(k, _)| {
            (r.beta - k.beta).abs() <= ENERGY_GAP * k.beta.abs().max(r.beta.abs()) || field_distance(k, &r) <= FIELD_DISTANCE
        });
        if !duplicate {
            kept.push((r, tag));
        }
    }
    kept
}

/// Independent minimizations from every seed, deduplicated.
pub fn multistart(ctx: &FunctionalContext, seeds: &[GridField], cfg: &SolveConfig) -> Result<MultistartOutcome> {
    if seeds.is_empty() {
        return Err(Error::Usage("multistart needs at least one seed".into()));
    }
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        match minimize(ctx, seed, cfg) {
            Ok(r) => reports.push(r),
            Err(e) => failures.push((i, e)),
        }
    }
    Ok(MultistartOutcome {
        solutions: dedup(reports),
        failures,
        runs: seeds.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassConfig {
    /// Number of images including the two fixed end points.
    pub images: usize,
    pub max_iter: usize,
    /// Step length along the preconditioned force.
    pub step: f64,
    /// Relative gradient norm at which the string phase hands over to the
    /// single-image refinement.
    pub string_tol: f64,
    /// Final relative gradient tolerance for the climbing image.
    pub grad_tol: f64,
    pub refine_iter: usize,
    pub precondition_shift: f64,
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        Self {
            images: 9,
            max_iter: 4000,
            step: 0.3,
            string_tol: 1e-3,
            grad_tol: 1e-8,
            refine_iter: 20_000,
            precondition_shift: 1.0,
        }
    }
}

struct Image {
    values: Vec<f64>,
    energy: f64,
    gradient: Vec<f64>,
    psi: f64,
    r: f64,
}

impl Image {
    /// Dual gradient norm over `ψ^{1/2}` of the projected image.
    fn relative(&self, ctx: &FunctionalContext, norm: f64) -> f64 {
        let n = ctx.spec().n() as f64;
        norm / (self.psi * self.r.powf(2.0 - n)).sqrt()
    }
}

fn evaluate_image(ctx: &FunctionalContext, grid: &Arc<Grid>, values: Vec<f64>) -> Result<Image> {
    let field = GridField::from_values(Arc::clone(grid), values)?;
    let e = ctx.evaluate(&field)?;
    Ok(Image {
        values: field.into_values(),
        energy: e.energy,
        gradient: e.gradient,
        psi: e.psi,
        r: e.r,
    })
}

/// Makes a field admissible by amplification: `∫H(g(t v))` is positive for
/// large `t` whenever the nonlinearity is superlinear at infinity.
fn amplify_into_cone(ctx: &FunctionalContext, grid: &Arc<Grid>, mut values: Vec<f64>) -> Result<Image> {
    for _ in 0..80 {
        match evaluate_image(ctx, grid, values.clone()) {
            Ok(img) => return Ok(img),
            Err(Error::Admissibility { .. }) => values.iter_mut().for_each(|x| *x *= 1.25),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numeric("could not amplify a string image into the admissible cone".into()))
}

/// `K`-unit tangent from the neighbours of an image.
fn tangent(grid: &Grid, shift: f64, prev: &[f64], next: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut t: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let mut kt = sobolev_apply(grid, shift, &t);
    let n = dot(&t, &kt).max(f64::MIN_POSITIVE).sqrt();
    t.iter_mut().for_each(|x| *x /= n);
    kt.iter_mut().for_each(|x| *x /= n);
    (t, kt)
}

/// Redistributes the images between indices `from` and `to` (inclusive,
/// both kept fixed) to equal `K`-arclength by piecewise-linear interpolation.
fn reparametrize(grid: &Grid, shift: f64, values: &mut [Vec<f64>], from: usize, to: usize) {
    if to <= from + 1 {
        return;
    }
    let mut arc = vec![0.0];
    for i in from..to {
        let d: Vec<f64> = values[i + 1].iter().zip(&values[i]).map(|(a, b)| a - b).collect();
        let kd = sobolev_apply(grid, shift, &d);
        arc.push(arc.last().unwrap() + dot(&d, &kd).max(0.0).sqrt());
    }
    let total = *arc.last().unwrap();
    if total <= 0.0 {
        return;
    }
    let old: Vec<Vec<f64>> = values[from..=to].to_vec();
    for j in 1..(to - from) {
        let target = total * j as f64 / (to - from) as f64;
        let seg = arc.windows(2).position(|w| target <= w[1]).unwrap_or(arc.len() - 2);
        let len = arc[seg + 1] - arc[seg];
        let t = if len > 0.0 { (target - arc[seg]) / len } else { 0.0 };
        values[from + j] = old[seg].iter().zip(&old[seg + 1]).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    }
}

/// Climbing-image string search for a mountain-pass point between the
/// minimizer `w` and its mirror `-w`, through the direction `via`.
///
/// The initial string is `cos(πt) w + sin(πt) z` with `z` the part of `via`
/// Sobolev-orthogonal to `w`, scaled to the norm of `w`; images outside the
/// admissible cone are amplified until admissible. Interior images descend
/// perpendicular to the string and are redistributed to equal arclength after
/// every step; the highest image climbs along the string instead. Once the
/// climbing image's force is below `string_tol`, it is refined alone with its
/// neighbours frozen. The result is certified like a minimizer; if the
/// refinement does not reach `grad_tol` the best iterate is reported with
/// `converged = false`.
pub fn mountain_pass(ctx: &FunctionalContext, w: &GridField, via: &GridField, cfg: &MountainPassConfig) -> Result<SolveReport> {
    if cfg.images < 3 {
        return Err(Error::Validation("the string needs at least 3 images".into()));
    }
    // Only node values matter to the reduced energy, so `via` may sit on a
    // dilated copy of `w`'s grid.
    if w.grid().spec() != via.grid().spec() || w.grid().shape() != via.grid().shape() {
        return Err(Error::Usage("mountain_pass end point and direction live on different grids".into()));
    }
    let grid = Arc::clone(w.grid());
    let shift = cfg.precondition_shift;
    let precond = Preconditioner::new(&grid, shift);

    // Bring `via` to the scale of the Pohozaev set, as `minimize` does.
    let via = match ctx.r_of(via) {
        Ok(r) => via.interpolate_dilation(r),
        Err(_) => via.clone(),
    };
    let a = w.values();
    let ka = sobolev_apply(&grid, shift, a);
    let aa = dot(a, &ka);
    let coef = dot(via.values(), &ka) / aa;
    let mut z: Vec<f64> = via.values().iter().zip(a).map(|(v, x)| v - coef * x).collect();
    let kz = sobolev_apply(&grid, shift, &z);
    let zz = dot(&z, &kz);
    if zz <= 1e-24 * aa {
        return Err(Error::Degenerate("string direction is parallel to the end point".into()));
    }
    let s = (aa / zz).sqrt();
    z.iter_mut().for_each(|x| *x *= s);

    let m = cfg.images - 1;
    let mut images: Vec<Image> = Vec::with_capacity(cfg.images);
    for i in 0..=m {
        let t = std::f64::consts::PI * i as f64 / m as f64;
        let values: Vec<f64> = a.iter().zip(&z).map(|(x, y)| t.cos() * x + t.sin() * y).collect();
        images.push(amplify_into_cone(ctx, &grid, values)?);
    }

    let mut history = Vec::new();
    let mut climber = 0;
    let mut rel = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        climber = (1..m).max_by(|&i, &j| images[i].energy.total_cmp(&images[j].energy)).unwrap();
        let mut new_values: Vec<Vec<f64>> = images.iter().map(|im| im.values.clone()).collect();
        for i in 1..m {
            let img = &images[i];
            let d = descent_direction(&grid, &precond, &img.gradient, &img.values, true);
            let (t, kt) = tangent(&grid, shift, &images[i - 1].values, &images[i + 1].values);
            let along = dot(&kt, &d.dir);
            let factor = if i == climber { 2.0 } else { 1.0 };
            // The climbing image moves along the descent direction with its
            // tangential part reversed; the others only perpendicular to the string.
            if i == climber {
                rel = img.relative(ctx, d.norm);
            }
            new_values[i] = img
                .values
                .iter()
                .zip(&d.dir)
                .zip(&t)
                .map(|((x, di), ti)| x + cfg.step * (di - factor * along * ti))
                .collect();
        }
        history.push(HistoryEntry {
            iteration: it,
            energy: images[climber].energy,
            gradient_norm: rel,
            step: cfg.step,
            rescaled: false,
        });
        if rel <= cfg.string_tol {
            break;
        }
        reparametrize(&grid, shift, &mut new_values, 0, climber);
        reparametrize(&grid, shift, &mut new_values, climber, m);
        for i in 1..m {
            images[i] = amplify_into_cone(ctx, &grid, std::mem::take(&mut new_values[i]))?;
        }
    }

    // Refinement of the climbing image alone, tangent from frozen neighbours.
    let (t, kt) = tangent(&grid, shift, &images[climber - 1].values, &images[climber + 1].values);
    let mut img = std::mem::replace(
        &mut images[climber],
        Image {
            values: vec![],
            energy: 0.0,
            gradient: vec![],
            psi: 1.0,
            r: 1.0,
        },
    );
    // Barzilai–Borwein steps on the reflected force, which is a contraction
    // near an index-one saddle; the best iterate seen is kept.
    let mut step = cfg.step;
    let mut converged = false;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for it in 0..cfg.refine_iter {
        let d = descent_direction(&grid, &precond, &img.gradient, &img.values, true);
        rel = img.relative(ctx, d.norm);
        let along = dot(&kt, &d.dir);
        let force: Vec<f64> = d.dir.iter().zip(&t).map(|(di, ti)| di - 2.0 * along * ti).collect();
        if let Some((px, pf)) = &previous {
            let s: Vec<f64> = img.values.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = force.iter().zip(pf).map(|(a, b)| a - b).collect();
            let ks = sobolev_apply(&grid, shift, &s);
            let alpha = dot(&s, &ks) / -dot(&y, &ks);
            step = if alpha.is_finite() && alpha > 0.0 { alpha.clamp(1e-4, 1e4) } else { cfg.step };
        }
        history.push(HistoryEntry {
            iteration: iterations + it,
            energy: img.energy,
            gradient_norm: rel,
            step,
            rescaled: false,
        });
        if best.as_ref().is_none_or(|(b, _)| rel < *b) {
            best = Some((rel, img.values.clone()));
        }
        if rel <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut trial = step;
        let next = loop {
            let values: Vec<f64> = img.values.iter().zip(&force).map(|(x, f)| x + trial * f).collect();
            match evaluate_image(ctx, &grid, values) {
                Ok(next) => break Some(next),
                Err(Error::Admissibility { .. }) | Err(Error::Degenerate(_)) => trial *= 0.5,
                Err(e) => return Err(e),
            }
            if trial < 1e-12 {
                break None;
            }
        };
        let Some(next) = next else { break };
        previous = Some((std::mem::take(&mut img.values), force));
        img = next;
    }
    let (best_rel, values) = best.expect("the refinement records at least one iterate");
    let field = GridField::from_values(Arc::clone(&grid), values)?;
    certify(ctx, &field, iterations + history.len(), history, best_rel, converged, shift)
}

/// How a reported critical point was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Minimum,
    Saddle,
}

impl SolutionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionKind::Minimum => "minimum",
            SolutionKind::Saddle => "saddle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Distinct critical points, ascending in energy.
    pub solutions: Vec<SolveReport>,
    pub kinds: Vec<SolutionKind>,
    /// Failed runs: seed indices first, then `seeds.len() + j` for the
    /// saddle search through `vias[j]`.
    pub failures: Vec<(usize, Error)>,
}

/// A sign-changing direction for [`mountain_pass`]: `(x₁² - x₂²) e^{-|x|²/w}`
/// in τ-sectors (the lowest τ-odd harmonic), `(1 - 2|x|²/w) e^{-|x|²/w}`
/// otherwise, with width `w = 8(j+1)`.
pub fn nodal_direction(grid: &Arc<Grid>, j: usize) -> GridField {
    let w = 8.0 * (j + 1) as f64;
    let tau = grid.spec().is_tau();
    let nd = grid.ndim();
    GridField::from_fn(Arc::clone(grid), |x| {
        let rho2: f64 = x[..nd].iter().map(|t| t * t).sum();
        let shape = if tau { x[0] * x[0] - x[1] * x[1] } else { 1.0 - 2.0 * rho2 / w };
        shape * (-rho2 / w).exp()
    })
}

/// Minimizations from every seed, then one mountain-pass search per `via`
/// between the lowest minimizer and its mirror. Saddle searches that do not
/// converge count as failures. All converged points are deduplicated together.
pub fn search(
    ctx: &FunctionalContext,
    seeds: &[GridField],
    vias: &[GridField],
    cfg: &SolveConfig,
    mp: &MountainPassConfig,
) -> Result<SearchOutcome> {
    let minima = multistart(ctx, seeds, cfg)?;
    let mut failures = minima.failures;
    let mut found: Vec<(SolveReport, SolutionKind)> =
        minima.solutions.into_iter().map(|r| (r, SolutionKind::Minimum)).collect();
    if let Some(w) = found.first().map(|(r, _)| r.field.clone()) {
        for (j, via) in vias.iter().enumerate() {
            match mountain_pass(ctx, &w, via, mp) {
                Ok(r) if r.converged => found.push((r, SolutionKind::Saddle)),
                Ok(r) => failures.push((
                    seeds.len() + j,
                    Error::Stagnation {
                        iterations: r.iterations,
                        gradient: r.gradient_norm,
                        last: r.field.into_values(),
                    },
                )),
                Err(e) => failures.push((seeds.len() + j, e)),
            }
        }
    }
    let (solutions, kinds) = dedup_tagged(found).into_iter().unzip();
    Ok(SearchOutcome {
        solutions,
        kinds,
        failures,
    })
}
