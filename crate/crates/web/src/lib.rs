//! Browser bindings: the dual transform, a radial ground-state solve and the
//! path-family profiles. Each export wraps a plain Rust function so the logic
//! is testable natively.

use std::sync::Arc;

use quasilin::grid::{Grid, GridField, SectorSpec};
use quasilin::nonlinearity::BLNonlinearity;
use quasilin::paths::PathFamily;
use quasilin::pohozaev::{FunctionalContext, Transform};
use quasilin::solver::{minimize, SolveConfig};
use quasilin::transform::{ChangeOfVariables, DualTransform};
use quasilin::Result;
use wasm_bindgen::prelude::*;

/// `g`, `g'` and `g⁻¹` sampled on `points` equally spaced values in `[-t_max, t_max]`,
/// flattened as `[t, g(t), g'(t), g⁻¹(t), ...]`.
pub fn transform_samples(t_max: f64, points: usize) -> Vec<f64> {
    let g = DualTransform::default();
    let points = points.max(2);
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let t = -t_max + 2.0 * t_max * i as f64 / (points - 1) as f64;
        out.extend([t, g.value(t), g.derivative(t), g.inverse(t)]);
    }
    out
}

#[wasm_bindgen]
pub struct RadialSolution {
    beta: f64,
    theta: f64,
    el_residual: f64,
    iterations: usize,
    radii: Vec<f64>,
    u: Vec<f64>,
}

#[wasm_bindgen]
impl RadialSolution {
    #[wasm_bindgen(getter)]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[wasm_bindgen(getter)]
    pub fn el_residual(&self) -> f64 {
        self.el_residual
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn radii(&self) -> Vec<f64> {
        self.radii.clone()
    }

    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
}

/// Radial ground state of the quasilinear equation (κ = 1) with the power
/// nonlinearity `|u|^{p-1}u - mass·u`.
pub fn radial_ground_state(n: usize, p: f64, mass: f64, r_max: f64, delta: f64) -> Result<RadialSolution> {
    let spec = SectorSpec::radial(n)?;
    let ctx = FunctionalContext::new(Transform::default(), BLNonlinearity::model_power(p, mass, n)?, spec);
    let grid = Arc::new(Grid::new(spec, r_max, delta)?);
    let seed = GridField::from_fn(grid, |x| 10.0 * (-0.25 * x[0] * x[0]).exp());
    let report = minimize(&ctx, &seed, &SolveConfig::default())?;
    let grid = report.field.grid();
    Ok(RadialSolution {
        beta: report.beta,
        theta: report.theta,
        el_residual: report.el_residual,
        iterations: report.iterations,
        radii: (0..grid.len()).map(|i| grid.radius(i)).collect(),
        u: report.u(&ctx),
    })
}

/// Path profile `γ'_k(s)` on `points` radii in `[0, 1.1 · outer radius]`,
/// flattened as `[radius, value, ...]`, for the `N = 3` family at its smallest
/// scale `R = 10k`.
pub fn path_profile(s: &[f64], points: usize) -> Result<Vec<f64>> {
    let h = BLNonlinearity::model_power(3.0, 1.0, 3)?;
    let family = PathFamily::new(s.len(), &h, SectorSpec::radial(3)?, Transform::default())?;
    let end = 1.1 * family.outer_radius();
    let points = points.max(2);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let radius = end * i as f64 / (points - 1) as f64;
        out.extend([radius, family.profile(s, radius)?]);
    }
    Ok(out)
}

fn js(e: quasilin::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen(js_name = transformSamples)]
pub fn transform_samples_js(t_max: f64, points: usize) -> Vec<f64> {
    transform_samples(t_max, points)
}

#[wasm_bindgen(js_name = radialGroundState)]
pub fn radial_ground_state_js(n: usize, p: f64, mass: f64, r_max: f64, delta: f64) -> std::result::Result<RadialSolution, JsValue> {
    radial_ground_state(n, p, mass, r_max, delta).map_err(js)
}

#[wasm_bindgen(js_name = pathProfile)]
pub fn path_profile_js(s: Vec<f64>, points: usize) -> std::result::Result<Vec<f64>, JsValue> {
    path_profile(&s, points).map_err(js)
}
