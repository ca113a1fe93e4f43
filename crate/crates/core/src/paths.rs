//! Odd families of admissible initial data built from annular bumps.
//!
//! A point `s` of the max-norm sphere `Σ_k ⊂ ℝᵏ` is sorted by magnitude; its
//! `i`-th smallest entry sets the height sign and width of the `i`-th bump.
//! The first `k - 1` bumps are thin annuli near `|x| = 4i`; the last one is a
//! wide annulus of scale `R` whose `∫H` grows like `Rᴺ` and dominates the rest
//! once `R` is large. In the biaxial sectors the radial profile is multiplied
//! by the odd cutoff `φ(|x₁| - |x₂|)`, which makes the seed `τ`-odd.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{sphere_area, AxisKind, Grid, GridField, SectorSpec};
use crate::nonlinearity::BLNonlinearity;
use crate::pohozaev::Transform;
use crate::quad::GaussLegendre;
use crate::transform::ChangeOfVariables;

/// Seeds are dilated so the outer bump ends at this fraction of `R_max`.
pub const SEED_FILL: f64 = 0.75;
/// Largest multiple of the starting scale `10k` tried by [`PathFamily::tune_r`].
const MAX_DOUBLINGS: u32 = 20;
const GL_POINTS: usize = 12;

/// Sorts by absolute value; ties keep their original order.
pub fn rearrange(s: &[f64]) -> Vec<f64> {
    let mut out = s.to_vec();
    out.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    out
}

/// Odd C¹ cutoff, `sign(s)·t²(3 - 2t)` with `t = min(|s|, 1)`; equal to 1 for `|s| ≥ 1`.
pub fn phi(s: f64) -> f64 {
    let t = s.abs().min(1.0);
    s.signum() * t * t * (3.0 - 2.0 * t)
}

/// `s / ‖s‖_∞`.
fn normalize(s: &[f64]) -> Result<Vec<f64>> {
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("path parameter has non-finite entries".into()));
    }
    let max = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return Err(Error::Degenerate("path parameter s = 0 has no direction".into()));
    }
    Ok(s.iter().map(|x| x / max).collect())
}

/// The `2ᵏ` corners of `Σ_k` followed by the `2k` face centres `±eᵢ`.
pub fn vertices(k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..1usize << k)
        .map(|bits| (0..k).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect();
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; k];
            e[i] = sign;
            out.push(e);
        }
    }
    out
}

/// `count` points of `Σ_k` from normalized standard Gaussian vectors.
pub fn random_points(k: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Ok(p) = normalize(&g) {
                break p;
            }
        })
        .collect()
}

/// Vertices plus `random` Gaussian points, the sample set used for tuning.
pub fn default_samples(k: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = vertices(k);
    s.extend(random_points(k, random, seed));
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFamily {
    k: usize,
    xi0: f64,
    r: f64,
    spec: SectorSpec,
    transform: Transform,
}

/// Outcome of [`PathFamily::tune_r`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub r: f64,
    /// `min_s ∫H(γ'(s))` over the samples at the tuned `R`.
    pub min_integral: f64,
    pub doublings: u32,
}

impl PathFamily {
    /// A family with `k` bumps of height `ξ₀` from `nonlinearity`, at the
    /// smallest allowed scale `R = 10k`.
    pub fn new(k: usize, nonlinearity: &BLNonlinearity, spec: SectorSpec, transform: Transform) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("a path family needs k >= 1".into()));
        }
        Ok(Self {
            k,
            xi0: nonlinearity.xi0(),
            r: 10.0 * k as f64,
            spec,
            transform,
        })
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 10.0 * self.k as f64) {
            return Err(Error::Validation(format!("R = {r} must be at least 10k = {}", 10 * self.k)));
        }
        self.r = r;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    /// `χᵢ(ρ)(x)` at `|x| = radius`, for `1 ≤ i ≤ k`.
    pub fn bump(&self, i: usize, rho: f64, radius: f64) -> f64 {
        assert!((1..=self.k).contains(&i), "bump index {i} outside 1..={}", self.k);
        if rho <= 0.0 {
            return 0.0;
        }
        let x = radius.abs();
        if i < self.k {
            let a = 4.0 * i as f64;
            if x < a {
                0.0
            } else if x <= a + rho {
                (x - a) / rho
            } else if x <= a + 2.0 * rho {
                1.0
            } else if x <= a + 3.0 * rho {
                (3.0 * rho + a - x) / rho
            } else {
                0.0
            }
        } else {
            let k = self.k as f64;
            let t = x / (self.r * rho);
            if t < 4.0 * k {
                0.0
            } else if t <= 4.0 * k + 1.0 {
                t - 4.0 * k
            } else if t <= 8.0 * k + 2.0 {
                1.0
            } else if t <= 8.0 * k + 3.0 {
                3.0 + 8.0 * k - t
            } else {
                0.0
            }
        }
    }

    /// `Σᵢ ξ₀ sgn(σ(s)ᵢ) χᵢ(|σ(s)ᵢ|)(radius)`, with `s` first normalized onto `Σ_k`.
    pub fn profile(&self, s: &[f64], radius: f64) -> Result<f64> {
        let sigma = self.sorted(s)?;
        Ok(self.profile_sorted(&sigma, radius))
    }

    fn sorted(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.k {
            return Err(Error::Validation(format!("path parameter has {} entries, k = {}", s.len(), self.k)));
        }
        Ok(rearrange(&normalize(s)?))
    }

    fn profile_sorted(&self, sigma: &[f64], radius: f64) -> f64 {
        sigma
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if x == 0.0 {
                    0.0
                } else {
                    self.xi0 * x.signum() * self.bump(i + 1, x.abs(), radius)
                }
            })
            .sum()
    }

    /// Radial support `[lo, hi]` of every nonzero bump of `γ'(s)`, in bump order.
    pub fn support_intervals(&self, s: &[f64]) -> Result<Vec<(f64, f64)>> {
        let sigma = self.sorted(s)?;
        let k = self.k as f64;
        Ok(sigma
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| {
                let rho = x.abs();
                if i + 1 < self.k {
                    let a = 4.0 * (i + 1) as f64;
                    (a, a + 3.0 * rho)
                } else {
                    (4.0 * k * self.r * rho, (8.0 * k + 3.0) * self.r * rho)
                }
            })
            .collect())
    }

    /// Whether the bump supports overlap only at shared end points.
    pub fn supports_disjoint(&self, s: &[f64]) -> Result<bool> {
        let mut iv = self.support_intervals(s)?;
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(iv.windows(2).all(|w| w[0].1 <= w[1].0))
    }

    fn breakpoints(&self, sigma: &[f64]) -> Vec<f64> {
        let k = self.k as f64;
        let mut b = vec![0.0];
        for (i, x) in sigma.iter().enumerate() {
            let rho = x.abs();
            if rho == 0.0 {
                continue;
            }
            if i + 1 < self.k {
                let a = 4.0 * (i + 1) as f64;
                b.extend([a, a + rho, a + 2.0 * rho, a + 3.0 * rho]);
            } else {
                let s = self.r * rho;
                b.extend([4.0 * k * s, (4.0 * k + 1.0) * s, (8.0 * k + 2.0) * s, (8.0 * k + 3.0) * s]);
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Radius beyond which every seed of the family vanishes.
    pub fn outer_radius(&self) -> f64 {
        (8.0 * self.k as f64 + 3.0) * self.r
    }

    /// `γ(s)` sampled on `grid`, dilated so its support ends at
    /// `SEED_FILL·R_max`; dilation does not change the reduced energy.
    pub fn seed_field(&self, s: &[f64], grid: &Arc<Grid>) -> Result<GridField> {
        if *grid.spec() != self.spec {
            return Err(Error::Usage(format!(
                "path family is for the {} sector, grid for {}",
                self.spec.sector(),
                grid.spec().sector()
            )));
        }
        let sigma = self.sorted(s)?;
        let scale = self.outer_radius() / (SEED_FILL * grid.r_max());
        let tau = self.spec.is_tau();
        let values = (0..grid.len())
            .map(|idx| {
                let c = grid.coords(idx);
                let radius = scale * grid.radius(idx);
                let mut u = self.profile_sorted(&sigma, radius);
                if tau {
                    u *= phi(scale * (c[0] - c[1]));
                }
                self.transform.inverse(u)
            })
            .collect();
        GridField::from_values(Arc::clone(grid), values)
    }

    /// `∫_{ℝᴺ} H(g(γ(s)))` by quadrature in the natural coordinates, with
    /// panels split at every kink of the integrand.
    pub fn h_integral(&self, s: &[f64], nonlinearity: &BLNonlinearity) -> Result<f64> {
        let sigma = self.sorted(s)?;
        let gl = GaussLegendre::new(GL_POINTS);
        let n = self.spec.n();
        let breaks = self.breakpoints(&sigma);
        let axes = self.spec.axes();
        let constant: f64 = axes
            .iter()
            .map(|a| match a {
                AxisKind::Radial { dim } => sphere_area(*dim),
                AxisKind::Cartesian => 2.0,
            })
            .product();
        let m = self.spec.m() as i32;
        let rest = self.spec.n() - 2 * self.spec.m();
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += gl.integrate(w[0], w[1], |rho| {
                let p = self.profile_sorted(&sigma, rho);
                if p == 0.0 {
                    return 0.0;
                }
                let angular = if !self.spec.is_tau() {
                    nonlinearity.primitive(p)
                } else {
                    let h = |c1: f64, c2: f64| nonlinearity.primitive(p * phi(rho * (c1 - c2)));
                    let planar = |sin_a: f64| {
                        let mut cuts = vec![0.0, FRAC_PI_4, FRAC_PI_2];
                        for sign in [1.0, -1.0] {
                            let c = sign / (SQRT_2 * rho * sin_a);
                            if c.abs() <= 1.0 {
                                let t = c.acos() - FRAC_PI_4;
                                if (0.0..=FRAC_PI_2).contains(&t) {
                                    cuts.push(t);
                                }
                            }
                        }
                        cuts.sort_by(f64::total_cmp);
                        cuts.windows(2)
                            .map(|c| {
                                gl.integrate(c[0], c[1], |t| {
                                    let (c1, c2) = (sin_a * t.cos(), sin_a * t.sin());
                                    (t.cos() * t.sin()).powi(m - 1) * h(c1, c2)
                                })
                            })
                            .sum::<f64>()
                    };
                    if rest == 0 {
                        planar(1.0)
                    } else {
                        let mut cuts = vec![0.0, FRAC_PI_2];
                        let a = 1.0 / (SQRT_2 * rho);
                        if a < 1.0 {
                            cuts.insert(1, a.asin());
                        }
                        cuts.windows(2)
                            .map(|c| {
                                gl.integrate(c[0], c[1], |alpha| {
                                    let (sa, ca) = alpha.sin_cos();
                                    sa.powi(2 * m - 1) * ca.powi(rest as i32 - 1) * planar(sa)
                                })
                            })
                            .sum::<f64>()
                    }
                };
                rho.powi(n as i32 - 1) * angular
            });
        }
        let value = constant * total;
        if !value.is_finite() {
            return Err(Error::Numeric("path H-integral is not finite".into()));
        }
        Ok(value)
    }

    /// Smallest `R = 10k·2ʲ` with `min_s ∫H ≥ 1` over `samples`; returns the
    /// tuned family and the attained minimum.
    pub fn tune_r(&self, nonlinearity: &BLNonlinearity, samples: &[Vec<f64>]) -> Result<(PathFamily, Tuning)> {
        if samples.is_empty() {
            return Err(Error::Usage("tune_r needs at least one sample".into()));
        }
        let base = 10.0 * self.k as f64;
        for j in 0..=MAX_DOUBLINGS {
            let family = self.clone().with_r(base * 2f64.powi(j as i32))?;
            let mut min = f64::INFINITY;
            for s in samples {
                min = min.min(family.h_integral(s, nonlinearity)?);
            }
            if min >= 1.0 {
                let tuning = Tuning {
                    r: family.r,
                    min_integral: min,
                    doublings: j,
                };
                return Ok((family, tuning));
            }
        }
        Err(Error::Tuning(format!(
            "no R up to 2^{MAX_DOUBLINGS}·10k gives ∫H >= 1 on every sample; check ξ₀ = {}",
            self.xi0
        )))
    }

    /// Minimum of the `H`-integral over `samples` at the family's `R`.
    pub fn min_integral(&self, nonlinearity: &BLNonlinearity, samples: &[Vec<f64>]) -> Result<f64> {
        samples
            .iter()
            .map(|s| self.h_integral(s, nonlinearity))
            .try_fold(f64::INFINITY, |m, x| Ok(m.min(x?)))
    }
}
