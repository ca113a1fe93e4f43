use nalgebra::{DMatrix, SymmetricEigen};

use super::Grid;

/// Exact solver for `(A + cW) z = b` on the unknowns of a grid, where `A` is
/// the stiffness matrix and `W` the diagonal mass.
///
/// Radial grids use the tridiagonal Thomas algorithm. Tensor grids use fast
/// diagonalization: both matrices are Kronecker sums of one-dimensional factors,
/// so one generalized eigendecomposition per axis gives a direct solve.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    shift: f64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Tridiagonal {
        lower: Vec<f64>,
        diag: Vec<f64>,
        upper: Vec<f64>,
    },
    Separable {
        constant: f64,
        /// Per-axis row-major `Φ` with `Φᵀ A Φ = Λ`, `Φᵀ W Φ = I`.
        phis: Vec<(usize, Vec<f64>)>,
        lambdas: Vec<Vec<f64>>,
        offsets: [usize; 3],
        dims: [usize; 3],
    },
}

fn axis_factors(grid: &Grid, a: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // Interior tridiagonal (diag, off) of the 1-D stiffness and the 1-D mass.
    let axis = grid.axis(a);
    let range = axis.interior();
    let inv = 1.0 / grid.spacing();
    let mut diag = Vec::with_capacity(range.len());
    let mut off = Vec::with_capacity(range.len());
    let mut mass = Vec::with_capacity(range.len());
    for i in range.clone() {
        let left = if i > 0 { axis.edges[i - 1] } else { 0.0 };
        let right = axis.edges.get(i).copied().unwrap_or(0.0);
        diag.push((left + right) * inv);
        off.push(-right * inv);
        mass.push(axis.weights[i]);
    }
    off.pop();
    (diag, off, mass)
}

impl Preconditioner {
    pub fn new(grid: &Grid, shift: f64) -> Self {
        assert!(shift > 0.0, "preconditioner shift must be positive");
        let constant = grid.spec().measure_constant();
        if grid.ndim() == 1 {
            let (diag, off, mass) = axis_factors(grid, 0);
            let diag = diag
                .iter()
                .zip(&mass)
                .map(|(d, w)| constant * (d + shift * w))
                .collect();
            let off: Vec<f64> = off.iter().map(|o| constant * o).collect();
            return Self {
                shift,
                kind: Kind::Tridiagonal {
                    lower: off.clone(),
                    diag,
                    upper: off,
                },
            };
        }
        let mut phis = Vec::new();
        let mut lambdas = Vec::new();
        let mut offsets = [0; 3];
        let mut dims = [1; 3];
        for a in 0..grid.ndim() {
            let (diag, off, mass) = axis_factors(grid, a);
            let n = diag.len();
            let s: Vec<f64> = mass.iter().map(|w| 1.0 / w.sqrt()).collect();
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                b[(i, i)] = diag[i] * s[i] * s[i];
                if i + 1 < n {
                    let v = off[i] * s[i] * s[i + 1];
                    b[(i, i + 1)] = v;
                    b[(i + 1, i)] = v;
                }
            }
            let eig = SymmetricEigen::new(b);
            let mut phi = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    phi[i * n + k] = s[i] * eig.eigenvectors[(i, k)];
                }
            }
            phis.push((n, phi));
            lambdas.push(eig.eigenvalues.iter().copied().collect());
            offsets[a] = grid.axis(a).interior().start;
            dims[a] = n;
        }
        Self {
            shift,
            kind: Kind::Separable {
                constant,
                phis,
                lambdas,
                offsets,
                dims,
            },
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Solves `(A + cW) z = b` on the unknowns; `z` vanishes on Dirichlet nodes.
    pub fn apply(&self, grid: &Grid, b: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Tridiagonal { lower, diag, upper } => {
                let n = diag.len();
                let mut c = vec![0.0; n];
                let mut d = vec![0.0; n];
                let mut denom = diag[0];
                c[0] = if n > 1 { upper[0] / denom } else { 0.0 };
                d[0] = b[0] / denom;
                for i in 1..n {
                    denom = diag[i] - lower[i - 1] * c[i - 1];
                    if i + 1 < n {
                        c[i] = upper[i] / denom;
                    }
                    d[i] = (b[i] - lower[i - 1] * d[i - 1]) / denom;
                }
                let mut z = vec![0.0; grid.len()];
                z[n - 1] = d[n - 1];
                for i in (0..n - 1).rev() {
                    z[i] = d[i] - c[i] * z[i + 1];
                }
                z
            }
            Kind::Separable {
                constant,
                phis,
                lambdas,
                offsets,
                dims,
            } => {
                let len = dims[0] * dims[1] * dims[2];
                let mut t = vec![0.0; len];
                for i in 0..dims[0] {
                    for j in 0..dims[1] {
                        for k in 0..dims[2] {
                            let g = grid.index([i + offsets[0], j + offsets[1], k + offsets[2]]);
                            t[(i * dims[1] + j) * dims[2] + k] = b[g];
                        }
                    }
                }
                for (a, (n, phi)) in phis.iter().enumerate() {
                    mode_product(&mut t, *dims, a, *n, phi, true);
                }
                for i in 0..dims[0] {
                    for j in 0..dims[1] {
                        for k in 0..dims[2] {
                            let mut lam = self.shift;
                            lam += lambdas[0][i];
                            lam += lambdas[1][j];
                            if lambdas.len() > 2 {
                                lam += lambdas[2][k];
                            }
                            t[(i * dims[1] + j) * dims[2] + k] /= constant * lam;
                        }
                    }
                }
                for (a, (n, phi)) in phis.iter().enumerate() {
                    mode_product(&mut t, *dims, a, *n, phi, false);
                }
                let mut z = vec![0.0; grid.len()];
                for i in 0..dims[0] {
                    for j in 0..dims[1] {
                        for k in 0..dims[2] {
                            let g = grid.index([i + offsets[0], j + offsets[1], k + offsets[2]]);
                            z[g] = t[(i * dims[1] + j) * dims[2] + k];
                        }
                    }
                }
                z
            }
        }
    }

    /// `sqrt(bᵀ (A + cW)⁻¹ b)`, the dual norm of a residual.
    pub fn dual_norm(&self, grid: &Grid, b: &[f64]) -> f64 {
        let z = self.apply(grid, b);
        z.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().max(0.0).sqrt()
    }
}

/// Multiplies tensor `t` along `axis` by `Φ` (or `Φᵀ` when `transpose`).
fn mode_product(t: &mut [f64], dims: [usize; 3], axis: usize, n: usize, phi: &[f64], transpose: bool) {
    let strides = [dims[1] * dims[2], dims[2], 1];
    let stride = strides[axis];
    let mut fiber = vec![0.0; n];
    let mut out = vec![0.0; n];
    for base in 0..t.len() {
        // Fibers start where the axis index is zero.
        if (base / stride) % dims[axis] != 0 {
            continue;
        }
        for (p, f) in fiber.iter_mut().enumerate() {
            *f = t[base + p * stride];
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            if transpose {
                for (p, f) in fiber.iter().enumerate() {
                    acc += phi[p * n + i] * f;
                }
            } else {
                let row = &phi[i * n..(i + 1) * n];
                for (r, f) in row.iter().zip(&fiber) {
                    acc += r * f;
                }
            }
            *o = acc;
        }
        for (p, o) in out.iter().enumerate() {
            t[base + p * stride] = *o;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Sector, SectorSpec};
    use super::*;

    fn check(grid: &Grid) {
        let shift = 0.7;
        let mut b: Vec<f64> = (0..grid.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        grid.zero_boundary(&mut b);
        let p = Preconditioner::new(grid, shift);
        let z = p.apply(grid, &b);
        let az = grid.stiffness_apply(&z);
        let w = grid.weights();
        for idx in 0..grid.len() {
            if grid.is_boundary(idx) {
                assert_eq!(z[idx], 0.0);
                continue;
            }
            let lhs = az[idx] + shift * w[idx] * z[idx];
            assert!((lhs - b[idx]).abs() < 1e-10 * (1.0 + b[idx].abs()), "{lhs} vs {}", b[idx]);
        }
    }

    #[test]
    fn radial_solve_is_exact() {
        check(&Grid::new(SectorSpec::radial(3).unwrap(), 5.0, 0.1).unwrap());
    }

    #[test]
    fn biaxial_solve_is_exact() {
        check(&Grid::new(SectorSpec::new(4, 2, Sector::BiaxialTau).unwrap(), 3.0, 0.2).unwrap());
    }

    #[test]
    fn three_axis_solves_are_exact() {
        check(&Grid::new(SectorSpec::new(5, 2, Sector::BiaxialTau).unwrap(), 2.0, 0.25).unwrap());
        check(&Grid::new(SectorSpec::new(6, 2, Sector::BiaxialCompactTau).unwrap(), 2.0, 0.25).unwrap());
    }
}
