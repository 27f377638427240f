//! Node-valued scalar, vector and symmetric-tensor fields.

use super::grid::{pairwise_sum, Grid, Parity};
use super::FieldError;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: [usize; 3],
    /// Reflection parity along each axis; drives the wall ghost values.
    pub parity: [Parity; 3],
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn from_vec(grid: &Grid, parity: [Parity; 3], data: Vec<f64>) -> Result<Self, FieldError> {
        if data.len() != grid.len() {
            return Err(FieldError::Shape { expected: grid.shape(), found: data.len() });
        }
        Ok(ScalarField { shape: grid.shape(), parity, data })
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { shape: grid.shape(), parity: [Parity::Vanishing; 3], data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let parity = if value == 0.0 { Parity::Vanishing } else { Parity::Even };
        ScalarField { shape: grid.shape(), parity: [parity; 3], data: vec![value; grid.len()] }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: &Grid, parity: Parity, f: F) -> Self {
        let data = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        ScalarField { shape: grid.shape(), parity: [parity; 3], data }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<(), FieldError> {
        if self.shape != grid.shape() || self.data.len() != grid.len() {
            Err(FieldError::Shape { expected: grid.shape(), found: self.data.len() })
        } else {
            Ok(())
        }
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = [parity; 3];
        self
    }

    /// Pointwise image `g(f)`; even fields stay even, anything else becomes free.
    pub fn map<G: Fn(f64) -> f64>(&self, g: G) -> ScalarField {
        ScalarField {
            shape: self.shape,
            parity: self.parity.map(Parity::image),
            data: self.data.iter().map(|&v| g(v)).collect(),
        }
    }

    /// Pointwise `g(f, other)` with an explicitly chosen result parity.
    pub fn zip_map<G: Fn(f64, f64) -> f64>(&self, other: &ScalarField, parity: [Parity; 3], g: G) -> ScalarField {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        ScalarField {
            shape: self.shape,
            parity,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| g(a, b)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        let parity = if a == 0.0 { [Parity::Vanishing; 3] } else { self.parity };
        ScalarField { shape: self.shape, parity, data: self.data.iter().map(|v| a * v).collect() }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
        if a != 0.0 {
            for (p, q) in self.parity.iter_mut().zip(other.parity) {
                *p = p.sum(q);
            }
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral over the grid, by pairwise summation.
    pub fn integrate(&self, grid: &Grid) -> f64 {
        integrate_by(grid, |idx| self.data[idx])
    }

    /// Discrete `L^p` norm with trapezoid weights.
    pub fn lp_norm(&self, grid: &Grid, p: f64) -> f64 {
        integrate_by(grid, |idx| self.data[idx].abs().powf(p)).powf(1.0 / p)
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        integrate_by(grid, |idx| self.data[idx] * self.data[idx]).sqrt()
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }
}

/// Trapezoid integral of a nodal integrand given by index.
pub fn integrate_by<F: Fn(usize) -> f64>(grid: &Grid, f: F) -> f64 {
    let terms: Vec<f64> = grid.weights().into_iter().enumerate().map(|(i, w)| w * f(i)).collect();
    pairwise_sum(&terms)
}

fn combine(a: &ScalarField, b: &ScalarField, parity: [Parity; 3], op: impl Fn(f64, f64) -> f64) -> ScalarField {
    assert_eq!(a.shape, b.shape, "field shapes differ");
    ScalarField { shape: a.shape, parity, data: a.data.iter().zip(&b.data).map(|(&x, &y)| op(x, y)).collect() }
}

fn zip_parity(a: [Parity; 3], b: [Parity; 3], f: fn(Parity, Parity) -> Parity) -> [Parity; 3] {
    [f(a[0], b[0]), f(a[1], b[1]), f(a[2], b[2])]
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        combine(self, rhs, zip_parity(self.parity, rhs.parity, Parity::sum), |x, y| x + y)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        combine(self, rhs, zip_parity(self.parity, rhs.parity, Parity::sum), |x, y| x - y)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        combine(self, rhs, zip_parity(self.parity, rhs.parity, Parity::product), |x, y| x * y)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField { shape: self.shape, parity: self.parity, data: self.data.iter().map(|v| -v).collect() }
    }
}

/// Three Cartesian components, kept even when some axes are suppressed.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn new(c: [ScalarField; 3]) -> Self {
        assert!(c[0].shape == c[1].shape && c[1].shape == c[2].shape, "component shapes differ");
        VectorField { c }
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField { c: std::array::from_fn(|_| ScalarField::zeros(grid)) }
    }

    pub fn uniform(grid: &Grid, v: [f64; 3]) -> Self {
        VectorField { c: v.map(|x| ScalarField::constant(grid, x)) }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(grid: &Grid, parity: Parity, f: F) -> Self {
        let values: Vec<[f64; 3]> = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        VectorField {
            c: std::array::from_fn(|m| ScalarField {
                shape: grid.shape(),
                parity: [parity; 3],
                data: values.iter().map(|v| v[m]).collect(),
            }),
        }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<(), FieldError> {
        self.c.iter().try_for_each(|c| c.check_grid(grid))
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.c[0].is_empty()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.c[0].data[idx], self.c[1].data[idx], self.c[2].data[idx]]
    }

    pub fn scale(&self, a: f64) -> VectorField {
        VectorField { c: std::array::from_fn(|m| self.c[m].scale(a)) }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for m in 0..3 {
            self.c[m].axpy(a, &other.c[m]);
        }
    }

    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let mut s = &self.c[0] * &other.c[0];
        s = &s + &(&self.c[1] * &other.c[1]);
        &s + &(&self.c[2] * &other.c[2])
    }

    pub fn norm_squared(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn cross(&self, other: &VectorField) -> VectorField {
        let (a, b) = (&self.c, &other.c);
        VectorField {
            c: [
                &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
                &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
                &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
            ],
        }
    }

    pub fn scaled_by(&self, s: &ScalarField) -> VectorField {
        VectorField { c: std::array::from_fn(|m| &self.c[m] * s) }
    }

    /// `(∫|F|²)^{1/2}`
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        integrate_by(grid, |idx| {
            let v = self.at(idx);
            v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        })
        .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.c.iter().filter_map(ScalarField::first_non_finite).min()
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField { c: std::array::from_fn(|m| &self.c[m] + &rhs.c[m]) }
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField { c: std::array::from_fn(|m| &self.c[m] - &rhs.c[m]) }
    }
}

/// Symmetric 3×3 tensor field stored as `[xx, yy, zz, xy, xz, yz]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    pub c: [ScalarField; 6],
}

impl SymTensorField {
    pub const fn slot(i: usize, j: usize) -> usize {
        match (i, j) {
            (0, 0) => 0,
            (1, 1) => 1,
            (2, 2) => 2,
            (0, 1) | (1, 0) => 3,
            (0, 2) | (2, 0) => 4,
            _ => 5,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.c[Self::slot(i, j)]
    }

    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j).data[idx]))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_tracks_parity() {
        let g = Grid::unit_box([9, 9, 1]);
        let odd = ScalarField::from_fn(&g, Parity::Odd, |x| (std::f64::consts::PI * x[0]).sin());
        let even = ScalarField::constant(&g, 2.0);
        assert_eq!((&odd * &odd).parity[0], Parity::Even);
        assert_eq!((&odd * &even).parity[0], Parity::Odd);
        assert_eq!((&odd + &even).parity[0], Parity::Free);
        assert_eq!((&odd + &ScalarField::zeros(&g)).parity[0], Parity::Odd);
        assert_eq!(odd.map(|v| v * v).parity[0], Parity::Free);
    }

    #[test]
    fn integrals_of_simple_fields() {
        let g = Grid::unit_box([33, 17, 1]);
        assert!((ScalarField::constant(&g, 2.0).integrate(&g) - 2.0).abs() < 1e-14);
        let lin = ScalarField::from_fn(&g, Parity::Free, |x| x[0] + 2.0 * x[1]);
        assert!((lin.integrate(&g) - 1.5).abs() < 1e-14);
        assert!((ScalarField::constant(&g, 2.0).lp_norm(&g, 5.0 / 3.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cross_and_dot() {
        let g = Grid::unit_box([3, 3, 3]);
        let a = VectorField::uniform(&g, [1.0, 0.0, 0.0]);
        let b = VectorField::uniform(&g, [0.0, 1.0, 0.0]);
        assert_eq!(a.cross(&b).at(5), [0.0, 0.0, 1.0]);
        assert_eq!(a.dot(&b).max_abs(), 0.0);
        assert_eq!(a.norm_squared().min(), 1.0);
    }
}
