//! Discrete Helmholtz projection of wall-bounded magnetic fields.
//!
//! The field is held at zero on the walls. The potential `φ` lives on
//! interior nodes and is extended by zero, so both the interior divergence
//! and the correction `∇φ` use the same centered operator `C` along each
//! axis. The normal operator `Σ_a C_a²` is a tensor-product sum of small
//! symmetric matrices and is solved exactly by diagonalizing each factor.
//! A sine transform does not diagonalize `C²` here: with the boundary rows
//! the two sublattices couple differently at either end.

use super::field::{ScalarField, VectorField};
use super::grid::{Grid, Parity};
use super::ops::div;
use super::FieldError;
use nalgebra::{DMatrix, SymmetricEigen};

/// Required `‖div H‖₂ / ‖H‖₂` after projection.
pub const PROJECTION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
struct AxisBasis {
    /// Columns are eigenvectors of `C²`.
    vectors: DMatrix<f64>,
    vectors_t: DMatrix<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DivFreeProjector {
    grid: Grid,
    /// Interior node counts, 1 on suppressed axes.
    m: [usize; 3],
    bases: [Option<AxisBasis>; 3],
    lambda_scale: f64,
    walls: Vec<usize>,
}

impl DivFreeProjector {
    pub fn new(grid: &Grid) -> Result<Self, FieldError> {
        let mut m = [1; 3];
        let mut bases: [Option<AxisBasis>; 3] = [None, None, None];
        let mut lambda_scale: f64 = 0.0;
        for a in grid.active_axes() {
            if grid.is_periodic(a) {
                return Err(FieldError::Grid("divergence projection needs walls on every active axis".into()));
            }
            let n = grid.shape()[a];
            if n < 3 {
                return Err(FieldError::Grid(format!("axis {a} needs at least 3 nodes for projection")));
            }
            m[a] = n - 2;
            let c = centered_matrix(m[a], grid.h(a));
            let eig = SymmetricEigen::new(&c * &c);
            lambda_scale = lambda_scale.max(eig.eigenvalues.iter().fold(0.0, |s: f64, v| s.max(v.abs())));
            bases[a] = Some(AxisBasis {
                vectors_t: eig.eigenvectors.transpose(),
                vectors: eig.eigenvectors,
                values: eig.eigenvalues.iter().copied().collect(),
            });
        }
        let walls = (0..grid.len()).filter(|&i| grid.on_wall(i)).collect();
        Ok(DivFreeProjector { grid: grid.clone(), m, bases, lambda_scale, walls })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn interior_len(&self) -> usize {
        self.m.iter().product()
    }

    /// Index into the full grid of interior node `(i, j, k)`.
    fn full_index(&self, i: usize, j: usize, k: usize) -> usize {
        let off = |a: usize| usize::from(self.grid.is_active(a));
        self.grid.index(i + off(0), j + off(1), k + off(2))
    }

    fn for_each_interior(&self, mut f: impl FnMut(usize, usize)) {
        let mut p = 0;
        for i in 0..self.m[0] {
            for j in 0..self.m[1] {
                for k in 0..self.m[2] {
                    f(p, self.full_index(i, j, k));
                    p += 1;
                }
            }
        }
    }

    /// Replaces every line along `axis` of an interior array by `V line`
    /// (or `Vᵀ line`). Each case is a single matrix product on a
    /// column-major view of the row-major data.
    fn apply_along(&self, data: &mut [f64], axis: usize, basis: &AxisBasis, transpose: bool) {
        let [m0, m1, m2] = self.m;
        // X' = X opᵀ, with opᵀ = V when op = Vᵀ
        let right = |x: DMatrix<f64>| {
            if transpose {
                x * &basis.vectors
            } else {
                x * &basis.vectors_t
            }
        };
        match axis {
            0 => {
                let y = right(DMatrix::from_column_slice(m1 * m2, m0, data));
                data.copy_from_slice(y.as_slice());
            }
            1 if m2 == 1 => {
                let x = DMatrix::from_column_slice(m1, m0, data);
                let y = if transpose { &basis.vectors_t * x } else { &basis.vectors * x };
                data.copy_from_slice(y.as_slice());
            }
            1 => {
                for blk in data.chunks_mut(m1 * m2) {
                    let y = right(DMatrix::from_column_slice(m2, m1, blk));
                    blk.copy_from_slice(y.as_slice());
                }
            }
            _ => {
                let x = DMatrix::from_column_slice(m2, m0 * m1, data);
                let y = if transpose { &basis.vectors_t * x } else { &basis.vectors * x };
                data.copy_from_slice(y.as_slice());
            }
        }
    }

    /// Solves `Σ_a C_a² φ = rhs` on interior nodes; kernel modes are dropped.
    fn solve(&self, rhs: &mut [f64]) {
        for a in 0..3 {
            if let Some(b) = &self.bases[a] {
                self.apply_along(rhs, a, b, true);
            }
        }
        let threshold = 1e-10 * self.lambda_scale;
        let mut p = 0;
        for i in 0..self.m[0] {
            for j in 0..self.m[1] {
                for k in 0..self.m[2] {
                    let ev = |a: usize, q: usize| self.bases[a].as_ref().map_or(0.0, |b| b.values[q]);
                    let lam = ev(0, i) + ev(1, j) + ev(2, k);
                    rhs[p] = if lam.abs() > threshold { rhs[p] / lam } else { 0.0 };
                    p += 1;
                }
            }
        }
        for a in 0..3 {
            if let Some(b) = &self.bases[a] {
                self.apply_along(rhs, a, b, false);
            }
        }
    }

    /// Interior-node divergence of `h` with its wall values taken as zero.
    pub fn interior_divergence(&self, h: &VectorField) -> Result<Vec<f64>, FieldError> {
        let d = div(&self.grid, h)?;
        let mut out = vec![0.0; self.interior_len()];
        self.for_each_interior(|p, idx| out[p] = d.data[idx]);
        Ok(out)
    }

    /// `‖div H‖₂` over interior nodes with trapezoid weights.
    pub fn divergence_norm(&self, h: &VectorField) -> Result<f64, FieldError> {
        let d = div(&self.grid, h)?;
        let cell: f64 = self.grid.active_axes().map(|a| self.grid.h(a)).product();
        let mut s = Vec::with_capacity(self.interior_len());
        self.for_each_interior(|_, idx| s.push(d.data[idx] * d.data[idx] * cell));
        Ok(super::grid::pairwise_sum(&s).sqrt())
    }

    /// Zeroes the wall values and removes the discrete gradient part.
    pub fn project(&self, h: &VectorField) -> Result<VectorField, FieldError> {
        h.check_grid(&self.grid)?;
        let mut out = h.clone();
        for c in out.c.iter_mut() {
            for &idx in &self.walls {
                c.data[idx] = 0.0;
            }
        }
        let mut phi = self.interior_divergence(&out)?;
        self.solve(&mut phi);
        let mut full = vec![0.0; self.grid.len()];
        self.for_each_interior(|p, idx| full[idx] = phi[p]);
        let phi = ScalarField::from_vec(&self.grid, [Parity::Odd; 3], full)?;
        for a in self.grid.active_axes() {
            let g = super::ops::derivative(&self.grid, &phi, a);
            let comp = &mut out.c[a];
            for (c, d) in comp.data.iter_mut().zip(&g.data) {
                *c -= d;
                // repeated projection of a removed component decays into
                // subnormals, which are very slow in the dense products
                if c.is_subnormal() {
                    *c = 0.0;
                }
            }
            for &idx in &self.walls {
                comp.data[idx] = 0.0;
            }
        }
        // a pure gradient projects to rounding noise, so compare against the input too
        let norm = out.l2_norm(&self.grid).max(h.l2_norm(&self.grid));
        let residual = self.divergence_norm(&out)?;
        if residual > PROJECTION_TOLERANCE * norm && residual > f64::MIN_POSITIVE {
            return Err(FieldError::Projection { residual, norm });
        }
        for (a, c) in out.c.iter_mut().enumerate() {
            if self.grid.is_active(a) || c.parity != [Parity::Vanishing; 3] {
                c.parity = [Parity::Odd; 3];
            }
        }
        Ok(out)
    }
}

/// `(C f)_i = (f_{i+1} - f_{i-1}) / 2h` with zero values outside.
fn centered_matrix(m: usize, h: f64) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        if i + 1 < m {
            c[(i, i + 1)] = 0.5 / h;
        }
        if i > 0 {
            c[(i, i - 1)] = -0.5 / h;
        }
    }
    c
}

pub fn project_divfree(grid: &Grid, h: &VectorField) -> Result<VectorField, FieldError> {
    DivFreeProjector::new(grid)?.project(h)
}
