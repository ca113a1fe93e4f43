use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Symmetry sector in which fields live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    /// `O(N)`-invariant fields.
    Radial,
    /// `O(M)×O(M)×id`-invariant fields, odd under the block swap `τ`.
    BiaxialTau,
    /// `O(M)×O(M)×O(N−2M)`-invariant fields, odd under `τ`.
    BiaxialCompactTau,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Radial => "radial",
            Sector::BiaxialTau => "biaxial-tau",
            Sector::BiaxialCompactTau => "biaxial-compact-tau",
        })
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "radial" => Ok(Sector::Radial),
            "biaxial-tau" | "biaxialtau" => Ok(Sector::BiaxialTau),
            "biaxial-compact-tau" | "biaxialcompacttau" => Ok(Sector::BiaxialCompactTau),
            other => Err(Error::Validation(format!("unknown sector '{other}'"))),
        }
    }
}

/// One reduced coordinate of a sector grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Radius of a `dim`-dimensional block, `r ∈ [0, R_max]`, density `r^{dim-1}`.
    Radial { dim: usize },
    /// A single Cartesian coordinate `x ∈ [-R_max, R_max]`.
    Cartesian,
}

/// Dimension, block size and sector, validated together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorSpec {
    n: usize,
    m: usize,
    sector: Sector,
}

impl SectorSpec {
    pub fn radial(n: usize) -> Result<Self> {
        Self::new(n, 0, Sector::Radial)
    }

    pub fn new(n: usize, m: usize, sector: Sector) -> Result<Self> {
        if n < 3 {
            return Err(Error::Validation(format!("dimension N = {n} must be at least 3")));
        }
        match sector {
            Sector::Radial => Ok(Self { n, m: 0, sector }),
            Sector::BiaxialTau => {
                if n < 4 || m < 2 || 2 * m > n {
                    return Err(Error::Validation(format!(
                        "biaxial-tau needs N >= 4 and 2 <= M <= N/2 (got N = {n}, M = {m})"
                    )));
                }
                if n - 2 * m > 1 {
                    return Err(Error::Validation(format!(
                        "biaxial-tau runs are limited to N = 2M or N = 2M + 1 (got N = {n}, M = {m})"
                    )));
                }
                Ok(Self { n, m, sector })
            }
            Sector::BiaxialCompactTau => {
                if n < 4 || n == 5 || m < 2 || 2 * m > n || 2 * m == n - 1 {
                    return Err(Error::Validation(format!(
                        "biaxial-compact-tau needs N >= 4, N != 5, 2 <= M <= N/2, 2M != N - 1 (got N = {n}, M = {m})"
                    )));
                }
                Ok(Self { n, m, sector })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// `BiaxialCompactTau` with `N = 2M` coincides with `BiaxialTau`.
    pub fn is_alias(&self) -> bool {
        self.sector == Sector::BiaxialCompactTau && self.n == 2 * self.m
    }

    pub fn is_tau(&self) -> bool {
        self.sector != Sector::Radial
    }

    /// `2* = 2N / (N - 2)`.
    pub fn two_star(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0)
    }

    pub fn axes(&self) -> Vec<AxisKind> {
        match self.sector {
            Sector::Radial => vec![AxisKind::Radial { dim: self.n }],
            Sector::BiaxialTau | Sector::BiaxialCompactTau => {
                let block = AxisKind::Radial { dim: self.m };
                let rest = self.n - 2 * self.m;
                match (self.sector, rest) {
                    (_, 0) => vec![block, block],
                    (Sector::BiaxialTau, 1) => vec![block, block, AxisKind::Cartesian],
                    (_, d) => vec![block, block, AxisKind::Radial { dim: d }],
                }
            }
        }
    }

    /// Product of the sphere-surface factors `ω_{d-1} = 2π^{d/2}/Γ(d/2)` of the radial blocks.
    pub fn measure_constant(&self) -> f64 {
        self.measure_constants().iter().product()
    }

    pub fn measure_constants(&self) -> Vec<f64> {
        self.axes()
            .iter()
            .map(|a| match a {
                AxisKind::Radial { dim } => sphere_area(*dim),
                AxisKind::Cartesian => 1.0,
            })
            .collect()
    }
}

/// Surface area of the unit sphere in `ℝ^d`, `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// `Γ(d/2)` for a positive integer `d`.
fn gamma_half_integer(d: usize) -> f64 {
    let mut x = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if d % 2 == 0 { 2 } else { 1 };
    while k < d {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}
