//! Rectangular node grids with wall or periodic axes.

use super::FieldError;
use serde::{Deserialize, Serialize};

/// How the physical fields behave at a wall.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Field vanishes on the wall (no-slip velocity, magnetic field).
    DirichletZero,
    /// Normal derivative vanishes on the wall (density, temperature).
    NeumannZero,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFamily {
    Velocity,
    Magnetic,
    Density,
    Temperature,
}

/// Reflection symmetry of a field across the walls of one axis.
///
/// Even fields are mirrored (`f(-h) = f(h)`), odd fields are mirrored with a
/// sign change about the wall value (`f(-h) = 2f(0) - f(h)`). `Free` fields
/// have no known symmetry and are extrapolated quadratically. `Vanishing`
/// marks an identically zero field, which combines with anything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Free,
    Vanishing,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            p => p,
        }
    }

    pub fn sum(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Vanishing, p) | (p, Parity::Vanishing) => p,
            (a, b) if a == b => a,
            _ => Parity::Free,
        }
    }

    pub fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Vanishing, _) | (_, Parity::Vanishing) => Parity::Vanishing,
            (Parity::Free, _) | (_, Parity::Free) => Parity::Free,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity of `g(f)` for a generic pointwise `g`.
    pub fn image(self) -> Parity {
        match self {
            Parity::Even => Parity::Even,
            _ => Parity::Free,
        }
    }
}

impl FieldFamily {
    pub fn parity(self) -> Parity {
        match self {
            FieldFamily::Velocity | FieldFamily::Magnetic => Parity::Odd,
            FieldFamily::Density | FieldFamily::Temperature => Parity::Even,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: [usize; 3],
    extent: [f64; 3],
    periodic: [bool; 3],
}

impl Grid {
    /// A box `[0, L_x] × [0, L_y] × [0, L_z]` with walls on every active axis.
    pub fn new(n: [usize; 3], extent: [f64; 3]) -> Result<Grid, FieldError> {
        Grid::with_periodicity(n, extent, [false; 3])
    }

    pub fn with_periodicity(n: [usize; 3], extent: [f64; 3], periodic: [bool; 3]) -> Result<Grid, FieldError> {
        for a in 0..3 {
            if n[a] == 0 {
                return Err(FieldError::Grid(format!("axis {a} has zero nodes")));
            }
            if n[a] > 1 && !(extent[a] > 0.0 && extent[a].is_finite()) {
                return Err(FieldError::Grid(format!("axis {a} extent {} must be positive", extent[a])));
            }
        }
        if n.iter().all(|&k| k == 1) {
            return Err(FieldError::Grid("grid has no active axis".into()));
        }
        Ok(Grid { n, extent, periodic })
    }

    pub fn unit_box(n: [usize; 3]) -> Grid {
        Grid::new(n, [1.0; 3]).expect("unit box with nonzero counts")
    }

    /// `[0, L)^d` with every active axis periodic.
    pub fn torus(n: [usize; 3], extent: f64) -> Result<Grid, FieldError> {
        Grid::with_periodicity(n, [extent; 3], [true; 3])
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    #[inline]
    pub fn is_active(&self, axis: usize) -> bool {
        self.n[axis] > 1
    }

    #[inline]
    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis] && self.is_active(axis)
    }

    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&a| self.is_active(a))
    }

    pub fn dimension(&self) -> usize {
        self.active_axes().count()
    }

    /// Node spacing; suppressed axes report 1.
    #[inline]
    pub fn h(&self, axis: usize) -> f64 {
        let n = self.n[axis];
        if n == 1 {
            1.0
        } else if self.periodic[axis] {
            self.extent[axis] / n as f64
        } else {
            self.extent[axis] / (n - 1) as f64
        }
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.h(0), self.h(1), self.h(2)]
    }

    /// Smallest spacing over active axes.
    pub fn h_min(&self) -> f64 {
        self.active_axes().map(|a| self.h(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn boundary(&self, family: FieldFamily, axis: usize) -> BoundaryTag {
        if self.is_periodic(axis) {
            BoundaryTag::Periodic
        } else {
            match family {
                FieldFamily::Velocity | FieldFamily::Magnetic => BoundaryTag::DirichletZero,
                FieldFamily::Density | FieldFamily::Temperature => BoundaryTag::NeumannZero,
            }
        }
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2],
            1 => self.n[2],
            _ => 1,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let j = (idx / self.n[2]) % self.n[1];
        let i = idx / (self.n[1] * self.n[2]);
        [i, j, k]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if self.n[axis] == 1 {
            0.0
        } else {
            i as f64 * self.h(axis)
        }
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    /// True when the node sits on a wall of some active non-periodic axis.
    pub fn on_wall(&self, idx: usize) -> bool {
        let ijk = self.unravel(idx);
        (0..3).any(|a| self.is_active(a) && !self.periodic[a] && (ijk[a] == 0 || ijk[a] == self.n[a] - 1))
    }

    fn weight_1d(&self, axis: usize, i: usize) -> f64 {
        let n = self.n[axis];
        if n == 1 {
            1.0
        } else if self.periodic[axis] {
            self.h(axis)
        } else if i == 0 || i == n - 1 {
            0.5 * self.h(axis)
        } else {
            self.h(axis)
        }
    }

    /// Trapezoid quadrature weights for every node.
    pub fn weights(&self) -> Vec<f64> {
        let wx: Vec<f64> = (0..self.n[0]).map(|i| self.weight_1d(0, i)).collect();
        let wy: Vec<f64> = (0..self.n[1]).map(|j| self.weight_1d(1, j)).collect();
        let wz: Vec<f64> = (0..self.n[2]).map(|k| self.weight_1d(2, k)).collect();
        let mut w = Vec::with_capacity(self.len());
        for &a in &wx {
            for &b in &wy {
                for &c in &wz {
                    w.push(a * b * c);
                }
            }
        }
        w
    }

    /// Measure of the domain over active axes.
    pub fn volume(&self) -> f64 {
        self.active_axes().map(|a| self.extent[a]).product()
    }

    /// The same box with every active spacing scaled by `factor_den / factor_num`.
    pub fn refined(&self, factor_num: usize, factor_den: usize) -> Grid {
        let mut n = self.n;
        for a in 0..3 {
            if self.is_active(a) {
                n[a] = if self.periodic[a] {
                    self.n[a] * factor_num / factor_den
                } else {
                    (self.n[a] - 1) * factor_num / factor_den + 1
                };
            }
        }
        Grid { n, ..self.clone() }
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Pairwise sum of `f(i)` for `i < len`, without materializing the terms
/// beyond one block at a time.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 64 {
            (lo..hi).map(f).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    rec(0, len, f)
}
