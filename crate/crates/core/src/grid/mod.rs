//! Reduced-coordinate discretization of `ℝᴺ` for each symmetry sector.
//!
//! A grid is a tensor product of at most three axes. Radial axes carry the
//! density `r^{d-1}` of their block, Cartesian axes density 1. Quadrature is the
//! trapezoid rule on the nodes, except at a radial origin where the node owns the
//! exact measure of the half cell, `(Δ/2)^d / d`. The Dirichlet energy sums
//! squared differences over grid edges with the density evaluated at edge
//! midpoints, and the Laplacian is defined as the operator whose weighted inner
//! products reproduce that energy. This keeps energies and discrete gradients
//! exactly consistent.
//!
//! Every quantity depends on the spacing homogeneously, so dilating a field
//! (`v ↦ v(λ·)`) is exact when done by rescaling the grid instead of moving
//! values: see [`Grid::dilated`].

mod field;
mod precond;
mod sector;

pub use field::GridField;
pub use precond::Preconditioner;
pub use sector::{sphere_area, AxisKind, Sector, SectorSpec};

use crate::error::{Error, Result};

/// One tensor axis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    /// Node coordinates.
    pub nodes: Vec<f64>,
    /// One-dimensional quadrature weights, density included.
    pub weights: Vec<f64>,
    /// Density at edge midpoints, `nodes.len() - 1` entries.
    pub edges: Vec<f64>,
}

impl Axis {
    fn new(kind: AxisKind, cells: usize, spacing: f64) -> Self {
        match kind {
            AxisKind::Radial { dim } => {
                let d = dim as i32;
                let nodes: Vec<f64> = (0..=cells).map(|i| i as f64 * spacing).collect();
                let mut weights: Vec<f64> = nodes.iter().map(|r| r.powi(d - 1) * spacing).collect();
                weights[0] = (0.5 * spacing).powi(d) / dim as f64;
                weights[cells] *= 0.5;
                let edges = (0..cells)
                    .map(|i| ((i as f64 + 0.5) * spacing).powi(d - 1))
                    .collect();
                Self { kind, nodes, weights, edges }
            }
            AxisKind::Cartesian => {
                let nodes: Vec<f64> = (0..=2 * cells)
                    .map(|i| (i as f64 - cells as f64) * spacing)
                    .collect();
                let mut weights = vec![spacing; 2 * cells + 1];
                weights[0] *= 0.5;
                weights[2 * cells] *= 0.5;
                let edges = vec![1.0; 2 * cells];
                Self { kind, nodes, weights, edges }
            }
        }
    }

    fn placeholder() -> Self {
        Self {
            kind: AxisKind::Cartesian,
            nodes: vec![0.0],
            weights: vec![1.0],
            edges: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Dirichlet nodes of this axis.
    pub fn is_boundary(&self, i: usize) -> bool {
        match self.kind {
            AxisKind::Radial { .. } => i + 1 == self.len() && self.len() > 1,
            AxisKind::Cartesian => self.len() > 1 && (i == 0 || i + 1 == self.len()),
        }
    }

    /// Index range of the unknowns along this axis.
    pub fn interior(&self) -> std::ops::Range<usize> {
        if self.len() == 1 {
            return 0..1;
        }
        match self.kind {
            AxisKind::Radial { .. } => 0..self.len() - 1,
            AxisKind::Cartesian => 1..self.len() - 1,
        }
    }
}

/// A sector grid with uniform spacing and truncation radius `R_max = cells·Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: SectorSpec,
    spacing: f64,
    cells: usize,
    ndim: usize,
    /// Always three entries; unused trailing axes are single-node placeholders.
    axes: [Axis; 3],
    shape: [usize; 3],
    strides: [usize; 3],
    constant: f64,
    weights: Vec<f64>,
}

impl Grid {
    /// Grid on `[0, r_max]` per radial axis (`[-r_max, r_max]` per Cartesian axis)
    /// with spacing close to `spacing` such that `r_max` is a node.
    pub fn new(spec: SectorSpec, r_max: f64, spacing: f64) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0 && spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Validation(format!(
                "grid needs positive finite r_max and spacing (got {r_max}, {spacing})"
            )));
        }
        let cells = (r_max / spacing).round() as usize;
        if cells < 4 {
            return Err(Error::Validation(format!(
                "grid with r_max = {r_max} and spacing {spacing} has fewer than 4 cells"
            )));
        }
        Ok(Self::build(spec, cells, r_max / cells as f64))
    }

    fn build(spec: SectorSpec, cells: usize, spacing: f64) -> Self {
        let kinds = spec.axes();
        let ndim = kinds.len();
        let mut axes = [Axis::placeholder(), Axis::placeholder(), Axis::placeholder()];
        for (slot, kind) in axes.iter_mut().zip(&kinds) {
            *slot = Axis::new(*kind, cells, spacing);
        }
        let shape = [axes[0].len(), axes[1].len(), axes[2].len()];
        let strides = [shape[1] * shape[2], shape[2], 1];
        let constant = spec.measure_constant();
        let mut weights = Vec::with_capacity(shape.iter().product());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    weights.push(constant * axes[0].weights[i] * axes[1].weights[j] * axes[2].weights[k]);
                }
            }
        }
        Self {
            spec,
            spacing,
            cells,
            ndim,
            axes,
            shape,
            strides,
            constant,
            weights,
        }
    }

    /// The same node layout with spacing `Δ / r`: node values read on this grid
    /// represent `v(r·)`.
    pub fn dilated(&self, r: f64) -> Self {
        assert!(r.is_finite() && r > 0.0, "dilation factor must be positive");
        Self::build(self.spec, self.cells, self.spacing / r)
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn r_max(&self) -> f64 {
        self.spacing * self.cells as f64
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.ndim]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Full quadrature weights, sphere factors included.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index(&self, multi: [usize; 3]) -> usize {
        multi[0] * self.strides[0] + multi[1] * self.strides[1] + multi[2] * self.strides[2]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        [
            idx / self.strides[0],
            (idx / self.strides[1]) % self.shape[1],
            idx % self.shape[2],
        ]
    }

    /// Reduced coordinates of node `idx` (`ndim` leading entries are meaningful).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        [
            self.axes[0].nodes[m[0]],
            self.axes[1].nodes[m[1]],
            self.axes[2].nodes[m[2]],
        ]
    }

    /// Euclidean norm `|x|` of the points represented by node `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.ndim).any(|a| self.axes[a].is_boundary(m[a]))
    }

    /// Column names of the reduced coordinates, in axis order.
    pub fn coordinate_names(&self) -> Vec<&'static str> {
        match self.ndim {
            1 => vec!["r"],
            2 => vec!["r1", "r2"],
            _ => match self.axes[2].kind {
                AxisKind::Cartesian => vec!["r1", "r2", "x3"],
                AxisKind::Radial { .. } => vec!["r1", "r2", "r3"],
            },
        }
    }

    /// Node index of the `τ` image `(r1, r2, ·) ↦ (r2, r1, ·)`.
    pub fn tau_index(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        self.index([m[1], m[0], m[2]])
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted `L²` inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Visits every grid edge as `(i, j, coefficient)` where `coefficient (v_j - v_i)²`
    /// is its contribution to the Dirichlet energy.
    fn for_each_edge<F: FnMut(usize, usize, f64)>(&self, mut visit: F) {
        let inv = 1.0 / self.spacing;
        let [n0, n1, n2] = self.shape;
        let [a0, a1, a2] = &self.axes;
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let idx = self.index([i, j, k]);
                    let (w0, w1, w2) = (a0.weights[i], a1.weights[j], a2.weights[k]);
                    if i + 1 < n0 {
                        visit(idx, idx + self.strides[0], self.constant * a0.edges[i] * inv * w1 * w2);
                    }
                    if j + 1 < n1 {
                        visit(idx, idx + self.strides[1], self.constant * a1.edges[j] * inv * w0 * w2);
                    }
                    if k + 1 < n2 {
                        visit(idx, idx + 1, self.constant * a2.edges[k] * inv * w0 * w1);
                    }
                }
            }
        }
    }

    /// `ψ(v) = ∫|∇v|²` from edge differences.
    pub fn dirichlet_energy(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each_edge(|i, j, c| {
            let d = v[j] - v[i];
            acc += c * d * d;
        });
        acc
    }

    /// `∫ a(e) |∇v|²` where `a` is evaluated per edge from the two end values.
    pub fn weighted_dirichlet_energy<F: Fn(f64, f64) -> f64>(&self, v: &[f64], coef: F) -> f64 {
        let mut acc = 0.0;
        self.for_each_edge(|i, j, c| {
            let d = v[j] - v[i];
            acc += c * coef(v[i], v[j]) * d * d;
        });
        acc
    }

    /// `A v`, where `vᵀ A v = ψ(v)`; rows of Dirichlet nodes are zero.
    pub fn stiffness_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each_edge(|i, j, c| {
            let flux = c * (v[i] - v[j]);
            out[i] += flux;
            out[j] -= flux;
        });
        self.zero_boundary(&mut out);
        out
    }

    /// Gradient of `½ ∫ a(v)|∇v|²` with respect to node values, for a per-edge
    /// coefficient `a(v_i, v_j)` with partial derivatives `da(v_i, v_j) = (∂a/∂v_i, ∂a/∂v_j)`.
    pub fn weighted_stiffness_gradient<F, D>(&self, v: &[f64], coef: F, dcoef: D) -> Vec<f64>
    where
        F: Fn(f64, f64) -> f64,
        D: Fn(f64, f64) -> (f64, f64),
    {
        let mut out = vec![0.0; self.len()];
        self.for_each_edge(|i, j, c| {
            let d = v[j] - v[i];
            let a = coef(v[i], v[j]);
            let (dai, daj) = dcoef(v[i], v[j]);
            out[i] += c * (-a * d + 0.5 * dai * d * d);
            out[j] += c * (a * d + 0.5 * daj * d * d);
        });
        self.zero_boundary(&mut out);
        out
    }

    /// Second-order discrete Laplacian `Δ_h v = -W⁻¹ A v`; zero on Dirichlet nodes.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.stiffness_apply(v);
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = -*o / w;
        }
        out
    }

    /// Fourth-order Laplacian used to measure truncation error. Radial axes use
    /// even reflection at the origin, all axes odd reflection through the
    /// Dirichlet end nodes.
    pub fn laplacian_fourth_order(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let h2 = self.spacing * self.spacing;
        for a in 0..self.ndim {
            let axis = &self.axes[a];
            let n = axis.len() as isize;
            let stride = self.strides[a];
            for idx in 0..self.len() {
                if self.is_boundary(idx) {
                    continue;
                }
                let m = self.multi_index(idx)[a] as isize;
                let base = idx - m as usize * stride;
                let at = |p: isize| -> f64 {
                    match axis.kind {
                        AxisKind::Radial { .. } => {
                            let q = p.abs();
                            if q < n {
                                v[base + q as usize * stride]
                            } else {
                                -v[base + (2 * (n - 1) - q) as usize * stride]
                            }
                        }
                        AxisKind::Cartesian => {
                            if p < 0 {
                                -v[base + (-p) as usize * stride]
                            } else if p >= n {
                                -v[base + (2 * (n - 1) - p) as usize * stride]
                            } else {
                                v[base + p as usize * stride]
                            }
                        }
                    }
                };
                let second = (-at(m + 2) + 16.0 * at(m + 1) - 30.0 * at(m) + 16.0 * at(m - 1) - at(m - 2)) / (12.0 * h2);
                let term = match axis.kind {
                    AxisKind::Radial { dim } if m == 0 => dim as f64 * second,
                    AxisKind::Radial { dim } => {
                        let first = (-at(m + 2) + 8.0 * at(m + 1) - 8.0 * at(m - 1) + at(m - 2)) / (12.0 * self.spacing);
                        second + (dim as f64 - 1.0) / axis.nodes[m as usize] * first
                    }
                    AxisKind::Cartesian => second,
                };
                out[idx] += term;
            }
        }
        out
    }

    /// Discrete dilation generator `x·∇v = d/dλ v(λ·)|_{λ=1}` by central
    /// differences, zero on Dirichlet nodes.
    pub fn dilation_generator(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let inv = 0.5 / self.spacing;
        for (idx, o) in out.iter_mut().enumerate() {
            if self.is_boundary(idx) {
                continue;
            }
            let m = self.multi_index(idx);
            let mut acc = 0.0;
            for a in 0..self.ndim {
                let x = self.axes[a].nodes[m[a]];
                if x == 0.0 {
                    continue;
                }
                let s = self.strides[a];
                acc += x * (v[idx + s] - v[idx - s]) * inv;
            }
            *o = acc;
        }
        out
    }

    pub fn zero_boundary(&self, v: &mut [f64]) {
        if self.ndim == 1 {
            let last = self.len() - 1;
            v[last] = 0.0;
            return;
        }
        for (idx, x) in v.iter_mut().enumerate() {
            if self.is_boundary(idx) {
                *x = 0.0;
            }
        }
    }

    /// `v ← (v - v∘τ)/2` in place.
    pub fn antisymmetrize_in_place(&self, v: &mut [f64]) {
        let [n0, n1, n2] = self.shape;
        debug_assert_eq!(n0, n1);
        for i in 0..n0 {
            for j in i..n1 {
                for k in 0..n2 {
                    let p = self.index([i, j, k]);
                    let q = self.index([j, i, k]);
                    if p == q {
                        v[p] = 0.0;
                    } else {
                        let a = 0.5 * (v[p] - v[q]);
                        v[p] = a;
                        v[q] = -a;
                    }
                }
            }
        }
    }

    /// Node values of `v(r·)` on this grid by multilinear interpolation; points
    /// outside the truncation box read as zero.
    pub fn interpolate_dilation(&self, v: &[f64], r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let m = self.multi_index(idx);
            let mut lo = [0usize; 3];
            let mut frac = [0.0f64; 3];
            let mut outside = false;
            for a in 0..self.ndim {
                let axis = &self.axes[a];
                let target = r * axis.nodes[m[a]];
                let pos = match axis.kind {
                    AxisKind::Radial { .. } => target / self.spacing,
                    AxisKind::Cartesian => target / self.spacing + self.cells as f64,
                };
                let last = (axis.len() - 1) as f64;
                if pos < 0.0 || pos > last {
                    outside = true;
                    break;
                }
                // Snap positions that are nodes up to rounding.
                let pos = if (pos - pos.round()).abs() < 1e-9 { pos.round() } else { pos };
                let base = (pos.floor() as usize).min(axis.len() - 2);
                lo[a] = base;
                frac[a] = pos - base as f64;
            }
            if outside {
                continue;
            }
            let mut acc = 0.0;
            let corners = 1usize << self.ndim;
            for c in 0..corners {
                let mut weight = 1.0;
                let mut multi = [0usize; 3];
                for a in 0..self.ndim {
                    let upper = (c >> a) & 1 == 1;
                    multi[a] = lo[a] + usize::from(upper);
                    weight *= if upper { frac[a] } else { 1.0 - frac[a] };
                }
                if weight != 0.0 {
                    acc += weight * v[self.index(multi)];
                }
            }
            *o = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn radial(n: usize, r_max: f64, h: f64) -> Grid {
        Grid::new(SectorSpec::radial(n).unwrap(), r_max, h).unwrap()
    }

    fn biaxial(r_max: f64, h: f64) -> Grid {
        Grid::new(SectorSpec::new(4, 2, Sector::BiaxialTau).unwrap(), r_max, h).unwrap()
    }

    fn sample(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(&grid.coords(i))).collect()
    }

    #[test]
    fn ball_volume_is_second_order() {
        let exact = 4.0 / 3.0 * PI * 8.0;
        let err = |h: f64| {
            let g = radial(3, 2.0, h);
            (g.integrate(&vec![1.0; g.len()]) - exact).abs() / exact
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-2);
        let ratio = e1 / e2;
        assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn gaussian_integral_in_several_dimensions() {
        for n in [3usize, 4, 5] {
            let g = radial(n, 10.0, 0.05);
            let v = sample(&g, |c| (-c[0] * c[0]).exp());
            let exact = PI.powf(n as f64 / 2.0);
            assert!((g.integrate(&v) - exact).abs() / exact < 1e-3, "N = {n}");
        }
        // Same integral on the biaxial grid of R⁴.
        let g = biaxial(8.0, 0.05);
        let v = sample(&g, |c| (-(c[0] * c[0] + c[1] * c[1])).exp());
        assert!((g.integrate(&v) - PI * PI).abs() / (PI * PI) < 1e-3);
    }

    #[test]
    fn gaussian_integral_converges_at_second_order() {
        let exact = PI.powf(1.5);
        let err = |h: f64| {
            let g = radial(3, 10.0, h);
            let v = sample(&g, |c| (-c[0] * c[0]).exp());
            (g.integrate(&v) - exact).abs()
        };
        // The smooth decaying integrand makes the interior trapezoid rule
        // spectrally accurate; only the origin cell limits the order.
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 3.4, "ratio {ratio}");
    }

    #[test]
    fn laplacian_of_gaussian_radial() {
        let err = |h: f64| {
            let g = radial(3, 10.0, h);
            let v = sample(&g, |c| (-c[0] * c[0]).exp());
            let lap = g.laplacian(&v);
            let i = (1.0 / g.spacing()).round() as usize;
            (lap[i] - (-2.0 * (-1.0f64).exp())).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-2);
        let ratio = e1 / e2;
        assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn regularized_origin_stencil() {
        let g = radial(3, 2.0, 0.1);
        let v = sample(&g, |c| (-c[0] * c[0]).exp());
        let lap = g.laplacian(&v);
        let h = g.spacing();
        assert_relative_eq!(lap[0], 2.0 * 3.0 * (v[1] - v[0]) / (h * h), max_relative = 1e-12);
    }

    #[test]
    fn fourth_order_laplacian_converges_faster() {
        let err = |h: f64| {
            let g = radial(3, 10.0, h);
            let v = sample(&g, |c| (-c[0] * c[0]).exp());
            let lap = g.laplacian_fourth_order(&v);
            (0..g.len() - 1)
                .map(|i| {
                    let r = g.coords(i)[0];
                    (lap[i] - (4.0 * r * r - 6.0) * (-r * r).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn dirichlet_energy_against_quadrature() {
        // ψ = ∫ 4r² e^{-2r²} 4π r² dr.
        let exact = adaptive_simpson(|r| 16.0 * PI * r.powi(4) * (-2.0 * r * r).exp(), 0.0, 10.0, 1e-13).unwrap();
        let err = |h: f64| {
            let g = radial(3, 10.0, h);
            let v = sample(&g, |c| (-c[0] * c[0]).exp());
            (g.dirichlet_energy(&v) - exact).abs() / exact
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-2);
        assert!((3.4..=4.6).contains(&(e1 / e2)), "ratio {}", e1 / e2);
    }

    #[test]
    fn energy_is_consistent_with_stiffness() {
        let g = biaxial(3.0, 0.25);
        let mut v = sample(&g, |c| (c[0] - c[1]) * (-(c[0] * c[0] + c[1] * c[1])).exp());
        g.zero_boundary(&mut v);
        let av = g.stiffness_apply(&v);
        let quad: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        assert_relative_eq!(quad, g.dirichlet_energy(&v), max_relative = 1e-12);
    }

    #[test]
    fn dilation_scaling_is_exact() {
        let g = radial(3, 6.0, 0.1);
        let mut v = sample(&g, |c| (-c[0] * c[0]).exp());
        g.zero_boundary(&mut v);
        let lambda: f64 = 1.7;
        let gd = g.dilated(lambda);
        let n = 3;
        assert_relative_eq!(
            gd.dirichlet_energy(&v),
            lambda.powi(2 - n) * g.dirichlet_energy(&v),
            max_relative = 1e-13
        );
        assert_relative_eq!(gd.integrate(&v), lambda.powi(-n) * g.integrate(&v), max_relative = 1e-13);
    }

    #[test]
    fn interpolated_dilation_tracks_scaling_law() {
        let g = radial(3, 12.0, 0.02);
        let mut v = sample(&g, |c| (-c[0] * c[0]).exp());
        g.zero_boundary(&mut v);
        let lambda: f64 = 1.3;
        let w = g.interpolate_dilation(&v, lambda);
        let expect = lambda.powi(-1) * g.dirichlet_energy(&v);
        assert!((g.dirichlet_energy(&w) - expect).abs() / expect < 1e-3);
        let identity = g.interpolate_dilation(&v, 1.0);
        assert_eq!(identity, v);
    }

    #[test]
    fn dilation_generator_matches_derivative() {
        let g = radial(3, 8.0, 0.02);
        let v = sample(&g, |c| (-c[0] * c[0]).exp());
        let z = g.dilation_generator(&v);
        let i = (1.0 / g.spacing()).round() as usize;
        // x·∇e^{-r²} = -2r² e^{-r²}.
        assert!((z[i] + 2.0 * (-1.0f64).exp()).abs() < 1e-3);
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn antisymmetrization() {
        let g = biaxial(2.0, 0.25);
        let mut v = sample(&g, |c| c[0] * c[0] + 0.3 * c[1]);
        g.antisymmetrize_in_place(&mut v);
        for idx in 0..g.len() {
            assert_eq!(v[idx], -v[g.tau_index(idx)]);
        }
        let once = v.clone();
        g.antisymmetrize_in_place(&mut v);
        assert_eq!(once, v);
        let mut sym = sample(&g, |c| c[0] * c[1]);
        g.antisymmetrize_in_place(&mut sym);
        assert!(sym.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplacian_commutes_with_projector() {
        let g = Grid::new(SectorSpec::new(5, 2, Sector::BiaxialTau).unwrap(), 2.0, 0.25).unwrap();
        let mut v = sample(&g, |c| (c[0] + 2.0 * c[1] * c[1] + c[2]).sin() * (-(c[0] + c[1])).exp());
        g.zero_boundary(&mut v);
        let mut a = g.laplacian(&v);
        g.antisymmetrize_in_place(&mut a);
        let mut pv = v.clone();
        g.antisymmetrize_in_place(&mut pv);
        let b = g.laplacian(&pv);
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn odd_integrand_cancels_in_tau_sector() {
        let g = biaxial(4.0, 0.1);
        let v = sample(&g, |c| (c[0] - c[1]) * (-(c[0] * c[0] + c[1] * c[1])).exp());
        assert!(g.integrate(&v).abs() < 1e-13);
    }

    #[test]
    fn discrete_integration_by_parts() {
        let g = biaxial(4.0, 0.1);
        let mut u = sample(&g, |c| (c[0] * c[0] - c[1] * c[1]) * (-(c[0] * c[0] + c[1] * c[1])).exp());
        let mut v = sample(&g, |c| (c[0] - c[1]) * (-(c[0] * c[0] + 2.0 * c[1] * c[1])).exp());
        g.zero_boundary(&mut u);
        g.zero_boundary(&mut v);
        let lhs = g.inner(&u, &g.laplacian(&v));
        let av = g.stiffness_apply(&v);
        let rhs: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
        assert!((lhs + rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }
}
