use std::sync::Arc;

use super::Grid;
use crate::error::{Error, Result};

/// Node values on a grid. Values vanish on Dirichlet nodes and, in the `τ`
/// sectors, are odd under the block swap.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at the reduced coordinates of each node, then enforces the
    /// boundary condition and the sector symmetry.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let nd = grid.ndim();
        let values = (0..grid.len()).map(|i| f(&grid.coords(i)[..nd])).collect();
        let mut field = Self { grid, values };
        field.enforce();
        field
    }

    /// Wraps raw node values; they must already satisfy the constraints.
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("field contains non-finite values".into()));
        }
        let mut field = Self { grid, values };
        field.enforce();
        Ok(field)
    }

    /// Zeroes boundary nodes and projects onto `τ`-odd fields where required.
    pub fn enforce(&mut self) {
        self.grid.zero_boundary(&mut self.values);
        if self.grid.spec().is_tau() {
            self.grid.antisymmetrize_in_place(&mut self.values);
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `Δ_h v`.
    pub fn laplacian_apply(&self) -> GridField {
        let mut field = Self {
            grid: self.grid.clone(),
            values: self.grid.laplacian(&self.values),
        };
        field.enforce();
        field
    }

    /// `∫ f(v)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, &v)| w * f(v))
            .sum()
    }

    pub fn dirichlet_energy(&self) -> f64 {
        self.grid.dirichlet_energy(&self.values)
    }

    /// `(v - v∘τ)/2`; only meaningful in the biaxial sectors.
    pub fn antisymmetrize(&self) -> Result<GridField> {
        if !self.grid.spec().is_tau() {
            return Err(Error::Usage("antisymmetrize called on a radial grid".into()));
        }
        let mut values = self.values.clone();
        self.grid.antisymmetrize_in_place(&mut values);
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `v(r·)` represented exactly: same node values on a grid with spacing `Δ/r`.
    pub fn dilated(&self, r: f64) -> GridField {
        Self {
            grid: Arc::new(self.grid.dilated(r)),
            values: self.values.clone(),
        }
    }

    /// `v(r·)` interpolated back onto this field's grid.
    pub fn interpolate_dilation(&self, r: f64) -> GridField {
        let mut field = Self {
            grid: self.grid.clone(),
            values: self.grid.interpolate_dilation(&self.values, r),
        };
        field.enforce();
        field
    }

    pub fn scaled(&self, a: f64) -> GridField {
        self.map(|v| a * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridField {
        let mut field = Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        };
        field.enforce();
        field
    }

    /// `self + a·other`; both must live on the same grid.
    pub fn axpy(&self, a: f64, other: &GridField) -> GridField {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
