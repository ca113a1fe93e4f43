//! The dual energy `J(v) = ½ψ(v) - ∫H(g(v))`, the Pohozaev constraint and the
//! scale-free reduced energy minimized by the solver.
//!
//! With `ψ(v) = ∫|∇v|²` and `F(v) = ∫H(g(v))`, dilations act by
//! `ψ(v(λ·)) = λ^{2-N} ψ(v)` and `F(v(λ·)) = λ^{-N} F(v)`. The Pohozaev set
//! `{ψ = 2*F}` meets each admissible ray `λ ↦ v(λ·)` exactly once, at
//! `λ = r(v) = (2*F/ψ)^{1/2}`, and `J` restricted there only depends on the two
//! scalars.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridField, SectorSpec};
use crate::nonlinearity::BLNonlinearity;
use crate::transform::{ChangeOfVariables, DualTransform, Identity};

/// Which change of variables the functionals use. `Identity` turns everything
/// into the classical semilinear problem and exists to calibrate oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Dual(DualTransform),
    Identity,
}

impl Default for Transform {
    fn default() -> Self {
        Transform::Dual(DualTransform::default())
    }
}

impl Transform {
    /// `(g(v), g'(v))` with a single inversion.
    #[inline]
    pub fn eval(&self, v: f64) -> (f64, f64) {
        match self {
            Transform::Dual(d) => {
                let g = d.value(v);
                (g, 1.0 / (1.0 + 2.0 * g * g).sqrt())
            }
            Transform::Identity => (v, 1.0),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Transform::Identity)
    }
}

impl ChangeOfVariables for Transform {
    fn value(&self, t: f64) -> f64 {
        match self {
            Transform::Dual(d) => d.value(t),
            Transform::Identity => Identity.value(t),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    fn inverse(&self, u: f64) -> f64 {
        match self {
            Transform::Dual(d) => d.inverse(u),
            Transform::Identity => u,
        }
    }
}

/// Everything the solver needs from one pass over a field.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub psi: f64,
    /// `F(v) = ∫H(g(v))`.
    pub h_integral: f64,
    pub r: f64,
    pub energy: f64,
    /// Covector of the reduced energy: `⟨gradient, w⟩` (plain dot product) is
    /// the directional derivative along `w`.
    pub gradient: Vec<f64>,
}

/// Transform, nonlinearity and sector bundled together.
#[derive(Debug, Clone)]
pub struct FunctionalContext {
    transform: Transform,
    nonlinearity: BLNonlinearity,
    spec: SectorSpec,
}

impl FunctionalContext {
    pub fn new(transform: Transform, nonlinearity: BLNonlinearity, spec: SectorSpec) -> Self {
        Self {
            transform,
            nonlinearity,
            spec,
        }
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn nonlinearity(&self) -> &BLNonlinearity {
        &self.nonlinearity
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn two_star(&self) -> f64 {
        self.spec.two_star()
    }

    fn dimension(&self) -> f64 {
        self.spec.n() as f64
    }

    fn check(&self, v: &GridField) -> Result<()> {
        if v.grid().spec() != &self.spec {
            return Err(Error::Usage(format!(
                "field lives on a {} grid with N = {}, context expects {} with N = {}",
                v.grid().spec().sector(),
                v.grid().spec().n(),
                self.spec.sector(),
                self.spec.n()
            )));
        }
        Ok(())
    }

    /// `H(g(s))`.
    #[inline]
    pub fn potential(&self, s: f64) -> f64 {
        self.nonlinearity.primitive(self.transform.eval(s).0)
    }

    /// `f(s) = h(g(s)) g'(s)`, the right-hand side of the dual equation.
    #[inline]
    pub fn force(&self, s: f64) -> f64 {
        let (g, gp) = self.transform.eval(s);
        self.nonlinearity.h(g) * gp
    }

    /// `F(v) = ∫H(g(v))`.
    pub fn h_integral(&self, v: &GridField) -> Result<f64> {
        self.check(v)?;
        let value = v.integrate(|s| self.potential(s));
        if !value.is_finite() {
            return Err(Error::Numeric("∫H(g(v)) is not finite".into()));
        }
        Ok(value)
    }

    #[allow(non_snake_case)]
    pub fn J(&self, v: &GridField) -> Result<f64> {
        Ok(0.5 * v.dirichlet_energy() - self.h_integral(v)?)
    }

    /// `½∫(1 + 2u²)|∇u|² - ∫H(u)`.
    ///
    /// On each edge the factor `1 + 2u²` is replaced by the square of the mean of
    /// `sqrt(1 + 2s²)` over the edge's value range, a second-order consistent
    /// choice under which `I(g(v)) = J(v)` holds exactly on the grid.
    ///
    /// Under the identity transform the original problem is the semilinear
    /// one and the factor is 1.
    #[allow(non_snake_case)]
    pub fn I_original(&self, u: &GridField) -> Result<f64> {
        self.check(u)?;
        if self.transform.is_identity() {
            return Ok(0.5 * u.dirichlet_energy() - u.integrate(|s| self.nonlinearity.primitive(s)));
        }
        let dual = DualTransform::default();
        let coef = |a: f64, b: f64| {
            let d = b - a;
            if d.abs() > 1e-6 * (1.0 + a.abs() + b.abs()) {
                let m = (dual.inverse(b) - dual.inverse(a)) / d;
                m * m
            } else {
                let c = |s: f64| (1.0 + 2.0 * s * s).sqrt();
                let m = (c(a) + 4.0 * c(0.5 * (a + b)) + c(b)) / 6.0;
                m * m
            }
        };
        let gradient_part = u.grid().weighted_dirichlet_energy(u.values(), coef);
        let potential = u.integrate(|s| self.nonlinearity.primitive(s));
        Ok(0.5 * gradient_part - potential)
    }

    /// `M(v) = ψ(v) - 2*F(v)`.
    pub fn pohozaev_deficit(&self, v: &GridField) -> Result<f64> {
        Ok(v.dirichlet_energy() - self.two_star() * self.h_integral(v)?)
    }

    fn scale_from(&self, psi: f64, h_integral: f64) -> Result<f64> {
        if psi <= 0.0 {
            return Err(Error::Degenerate("field has zero Dirichlet energy".into()));
        }
        if !(h_integral > 0.0) {
            return Err(Error::Admissibility {
                integral: h_integral,
            });
        }
        Ok((self.two_star() * h_integral / psi).sqrt())
    }

    /// `r(v) = (2*F(v)/ψ(v))^{1/2}`, the dilation that lands on the Pohozaev set.
    pub fn r_of(&self, v: &GridField) -> Result<f64> {
        let f = self.h_integral(v)?;
        self.scale_from(v.dirichlet_energy(), f)
    }

    /// `v(r(v)·)` on the same grid by multilinear interpolation. Interpolation
    /// perturbs the integrals slightly, so the dilation factor is then corrected
    /// by a bracketed root search on `λ ↦ M(v(λ·))` until `|M| ≤ 1e-10 ψ`.
    pub fn project_to_manifold(&self, v: &GridField) -> Result<GridField> {
        let r = self.r_of(v)?;
        let deficit_at = |lambda: f64| -> Result<(GridField, f64, f64)> {
            let w = v.interpolate_dilation(lambda);
            let psi = w.dirichlet_energy();
            let m = psi - self.two_star() * self.h_integral(&w)?;
            Ok((w, m, psi))
        };
        let (w, m, psi) = deficit_at(r)?;
        if m.abs() <= 1e-10 * psi {
            return Ok(w);
        }
        // λ²M(v(λ·)) = λ^{4-N}(λ²ψ - 2*F) is negative for small λ and positive
        // for large λ.
        let (mut lo, mut hi) = (r, r);
        let mut m_lo = m;
        let mut m_hi = m;
        let mut widen = 1.0 + 1e-3;
        while m_lo > 0.0 || m_hi < 0.0 {
            if m_lo > 0.0 {
                lo /= widen;
                m_lo = deficit_at(lo)?.1;
            }
            if m_hi < 0.0 {
                hi *= widen;
                m_hi = deficit_at(hi)?.1;
            }
            widen *= widen;
            if widen > 1e6 {
                return Err(Error::Numeric("could not bracket the Pohozaev scale".into()));
            }
        }
        let mut best = (w, m, psi);
        // Illinois variant of regula falsi: a stale endpoint gets its value halved.
        let mut side = 0i8;
        for _ in 0..200 {
            let mut mid = hi - m_hi * (hi - lo) / (m_hi - m_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let cand = deficit_at(mid)?;
            if cand.1.abs() < best.1.abs() {
                best = cand.clone();
            }
            if best.1.abs() <= 1e-10 * best.2 {
                return Ok(best.0);
            }
            if cand.1 < 0.0 {
                lo = mid;
                m_lo = cand.1;
                if side == 1 {
                    m_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = mid;
                m_hi = cand.1;
                if side == -1 {
                    m_lo *= 0.5;
                }
                side = -1;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        if best.1.abs() <= 1e-10 * best.2 {
            Ok(best.0)
        } else {
            Err(Error::Numeric(format!(
                "interpolated projection reached |M|/ψ = {:e} only",
                best.1.abs() / best.2
            )))
        }
    }

    /// `v(r(v)·)` represented exactly by rescaling the grid spacing.
    pub fn project_exact(&self, v: &GridField) -> Result<GridField> {
        let r = self.r_of(v)?;
        Ok(v.dilated(r))
    }

    fn energy_from(&self, psi: f64, h_integral: f64) -> f64 {
        let n = self.dimension();
        psi.powf(0.5 * n) * (self.two_star() * h_integral).powf(0.5 * (2.0 - n)) / n
    }

    /// `J(v(r(v)·)) = ψ^{N/2} (2*F)^{(2-N)/2} / N`, invariant under dilation.
    pub fn reduced_energy(&self, v: &GridField) -> Result<f64> {
        let psi = v.dirichlet_energy();
        let f = self.h_integral(v)?;
        self.scale_from(psi, f)?;
        Ok(self.energy_from(psi, f))
    }

    /// Energy, scale and gradient covector `r^{2-N} A v - r^{-N} W f(v)` in one pass.
    pub fn evaluate(&self, v: &GridField) -> Result<Evaluation> {
        self.check(v)?;
        let grid = v.grid();
        let values = v.values();
        let weights = grid.weights();
        let mut h_integral = 0.0;
        let mut force = Vec::with_capacity(values.len());
        for (w, &s) in weights.iter().zip(values) {
            let (g, gp) = self.transform.eval(s);
            h_integral += w * self.nonlinearity.primitive(g);
            force.push(w * self.nonlinearity.h(g) * gp);
        }
        if !h_integral.is_finite() {
            return Err(Error::Numeric("∫H(g(v)) is not finite".into()));
        }
        let av = grid.stiffness_apply(values);
        let psi: f64 = av.iter().zip(values).map(|(a, b)| a * b).sum();
        let r = self.scale_from(psi, h_integral)?;
        let n = self.dimension();
        let (a, b) = (r.powf(2.0 - n), r.powf(-n));
        let mut gradient: Vec<f64> = av.iter().zip(&force).map(|(x, y)| a * x - b * y).collect();
        grid.zero_boundary(&mut gradient);
        if self.spec.is_tau() {
            grid.antisymmetrize_in_place(&mut gradient);
        }
        Ok(Evaluation {
            psi,
            h_integral,
            r,
            energy: self.energy_from(psi, h_integral),
            gradient,
        })
    }

    /// The `L²` representative of the reduced-energy derivative,
    /// `r^{2-N}(-Δv) - r^{-N} h(g(v)) g'(v)`, zero on the boundary.
    pub fn reduced_gradient(&self, v: &GridField) -> Result<GridField> {
        let eval = self.evaluate(v)?;
        let grid = v.grid();
        let values = eval
            .gradient
            .iter()
            .zip(grid.weights())
            .map(|(g, w)| g / w)
            .collect();
        GridField::from_values(Arc::clone(grid), values)
    }

    /// `θ(v) = ψ(v)⁻¹ ∫ h(g(v)) g'(v) v`, equal to 1 at critical points.
    pub fn theta_ratio(&self, v: &GridField) -> Result<f64> {
        self.check(v)?;
        let psi = v.dirichlet_energy();
        if psi <= 0.0 {
            return Err(Error::Degenerate("θ of a field with zero Dirichlet energy".into()));
        }
        Ok(v.integrate(|s| self.force(s) * s) / psi)
    }

    /// `v(ψ(v)^{1/(N-2)}·)`, the representative with `ψ = 1`; for reporting only.
    pub fn normalize(&self, v: &GridField) -> Result<GridField> {
        self.check(v)?;
        let psi = v.dirichlet_energy();
        if psi <= 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero field".into()));
        }
        Ok(v.dilated(psi.powf(1.0 / (self.dimension() - 2.0))))
    }
}
