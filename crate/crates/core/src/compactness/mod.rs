//! Fourier multipliers `A_i = F⁻¹[-iξ_i/|ξ|²]` and `R_ij = ∂_j A_i`, the
//! effective viscous flux and the experiments built on them.
//!
//! Periodic axes are transformed as they are. A walled axis is first
//! extended to twice its length by reflecting the field with its parity
//! (even or odd about the wall), which is the extension these operators
//! act on.

mod oscillation;

pub use oscillation::{oscillation_experiment, DefectRow, DefectTable, OscillationConfig};

use crate::constitutive::{pow, ConstitutiveError, ConstitutiveLaw};
use crate::fieldops::{derivative, div, FieldError, Grid, Parity, ScalarField, VectorField};
use crate::solver::{SchemeParams, State};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompactnessError {
    #[error("A_{axis} needs a mean-zero field, measured mean {mean:e}")]
    NotMeanZero { axis: usize, mean: f64 },
    #[error("weight must vanish on the walls: {0}")]
    Support(String),
    #[error("{fraction:.3} of the nodes were clipped, more than the allowed 0.1")]
    Clipping { fraction: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RieszOp {
    /// `A_i`, zero-based axis.
    A(usize),
    /// `R_ij`
    R(usize, usize),
}

impl RieszOp {
    fn axes_flipped(self) -> [bool; 3] {
        let mut f = [false; 3];
        match self {
            RieszOp::A(i) => f[i] = true,
            RieszOp::R(i, j) if i != j => {
                f[i] = true;
                f[j] = true;
            }
            RieszOp::R(..) => {}
        }
        f
    }

    fn symbol(self, xi: [f64; 3]) -> Complex<f64> {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        match self {
            RieszOp::A(i) => Complex::new(0.0, -xi[i] / k2),
            RieszOp::R(i, j) => Complex::new(xi[i] * xi[j] / k2, 0.0),
        }
    }
}

/// How an axis is made periodic before transforming.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    Inactive,
    Torus,
    Reflected,
}

impl fmt::Display for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Extension::Inactive => "inactive",
            Extension::Torus => "torus",
            Extension::Reflected => "even/odd reflection",
        })
    }
}

#[derive(Clone)]
struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Transform plans and wavenumber tables for one grid. Immutable once
/// built; the zero mode of every symbol is mapped to 0.
#[derive(Clone)]
pub struct SpectralOperators {
    grid: Grid,
    extension: [Extension; 3],
    ext: [usize; 3],
    /// `ξ_a` for every extended index along axis `a`.
    wavenumbers: [Vec<f64>; 3],
    plans: [Option<AxisPlan>; 3],
}

impl fmt::Debug for SpectralOperators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralOperators").field("grid", &self.grid).field("extension", &self.extension).finish()
    }
}

impl SpectralOperators {
    pub fn new(grid: &Grid) -> SpectralOperators {
        let mut planner = FftPlanner::new();
        let mut extension = [Extension::Inactive; 3];
        let mut ext = [1; 3];
        let mut wavenumbers: [Vec<f64>; 3] = [vec![0.0], vec![0.0], vec![0.0]];
        let mut plans: [Option<AxisPlan>; 3] = [None, None, None];
        for a in grid.active_axes() {
            let n = grid.shape()[a];
            let (m, period) = if grid.is_periodic(a) {
                extension[a] = Extension::Torus;
                (n, grid.extent(a))
            } else {
                extension[a] = Extension::Reflected;
                (2 * (n - 1), 2.0 * grid.extent(a))
            };
            ext[a] = m;
            wavenumbers[a] = (0..m)
                .map(|k| {
                    let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                    2.0 * std::f64::consts::PI * signed / period
                })
                .collect();
            plans[a] = Some(AxisPlan { forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) });
        }
        SpectralOperators { grid: grid.clone(), extension, ext, wavenumbers, plans }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn extension(&self) -> [Extension; 3] {
        self.extension
    }

    /// One line per axis describing the extension, for output metadata.
    pub fn convention(&self) -> String {
        (0..3).map(|a| format!("axis {a}: {}", self.extension[a])).collect::<Vec<_>>().join("; ")
    }

    fn ext_len(&self) -> usize {
        self.ext.iter().product()
    }

    fn is_nyquist(&self, axis: usize, k: usize) -> bool {
        let m = self.ext[axis];
        m > 1 && m.is_multiple_of(2) && k == m / 2
    }

    fn extend(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        let [_, m1, m2] = self.ext;
        let n = self.grid.shape();
        let mut out = Vec::with_capacity(self.ext_len());
        let fold = |a: usize, k: usize| -> (usize, f64) {
            if self.extension[a] == Extension::Reflected && k >= n[a] {
                let sign = if f.parity[a] == Parity::Odd { -1.0 } else { 1.0 };
                (self.ext[a] - k, sign)
            } else {
                (k, 1.0)
            }
        };
        for i in 0..self.ext[0] {
            let (si, ai) = fold(0, i);
            for j in 0..m1 {
                let (sj, aj) = fold(1, j);
                for k in 0..m2 {
                    let (sk, ak) = fold(2, k);
                    out.push(Complex::new(ai * aj * ak * f.data[self.grid.index(si, sj, sk)], 0.0));
                }
            }
        }
        out
    }

    fn transform(&self, buf: &mut [Complex<f64>], forward: bool) {
        let stride = [self.ext[1] * self.ext[2], self.ext[2], 1];
        for a in 0..3 {
            let Some(plan) = &self.plans[a] else { continue };
            let fft = if forward { &plan.forward } else { &plan.inverse };
            let m = self.ext[a];
            if stride[a] == 1 {
                fft.process(buf);
                continue;
            }
            let mut line = vec![Complex::new(0.0, 0.0); m];
            let block = m * stride[a];
            for chunk in buf.chunks_mut(block) {
                for off in 0..stride[a] {
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = chunk[off + k * stride[a]];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        chunk[off + k * stride[a]] = *v;
                    }
                }
            }
        }
    }

    /// Multiplies the spectrum of `f` by `symbol(ξ)` and returns the real
    /// part on the original nodes. Modes on the Nyquist plane of any axis in
    /// `odd_axes` are dropped, as is the zero mode.
    pub fn apply_symbol<S: Fn([f64; 3]) -> Complex<f64>>(
        &self,
        f: &ScalarField,
        odd_axes: [bool; 3],
        symbol: S,
    ) -> Result<ScalarField, CompactnessError> {
        f.check_grid(&self.grid)?;
        let mut buf = self.extend(f);
        self.transform(&mut buf, true);
        let [m0, m1, m2] = self.ext;
        let mut idx = 0;
        for i in 0..m0 {
            for j in 0..m1 {
                for k in 0..m2 {
                    let drop = (i, j, k) == (0, 0, 0)
                        || (odd_axes[0] && self.is_nyquist(0, i))
                        || (odd_axes[1] && self.is_nyquist(1, j))
                        || (odd_axes[2] && self.is_nyquist(2, k));
                    buf[idx] = if drop {
                        Complex::new(0.0, 0.0)
                    } else {
                        buf[idx] * symbol([self.wavenumbers[0][i], self.wavenumbers[1][j], self.wavenumbers[2][k]])
                    };
                    idx += 1;
                }
            }
        }
        self.transform(&mut buf, false);
        let scale = 1.0 / self.ext_len() as f64;
        let n = self.grid.shape();
        let mut data = Vec::with_capacity(self.grid.len());
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    data.push(buf[(i * m1 + j) * m2 + k].re * scale);
                }
            }
        }
        let parity = std::array::from_fn(|a| if odd_axes[a] { f.parity[a].flip() } else { f.parity[a] });
        Ok(ScalarField::from_vec(&self.grid, parity, data)?)
    }

    /// Mean of `f` over the extended domain.
    pub fn mean(&self, f: &ScalarField) -> f64 {
        let buf = self.extend(f);
        buf.iter().map(|c| c.re).sum::<f64>() / buf.len() as f64
    }

    pub fn riesz_apply(&self, op: RieszOp, f: &ScalarField) -> Result<ScalarField, CompactnessError> {
        let active = |a: usize| a < 3 && self.grid.is_active(a);
        match op {
            RieszOp::A(i) if !active(i) => return Err(CompactnessError::Parameter(format!("axis {i} is not active"))),
            RieszOp::R(i, j) if !active(i) || !active(j) => {
                return Err(CompactnessError::Parameter(format!("axes ({i}, {j}) are not both active")))
            }
            _ => {}
        }
        if let RieszOp::A(axis) = op {
            let mean = self.mean(f);
            if mean.abs() > 1e-12 * f.max_abs().max(f64::MIN_POSITIVE) {
                return Err(CompactnessError::NotMeanZero { axis, mean });
            }
        }
        self.apply_symbol(f, op.axes_flipped(), |xi| op.symbol(xi))
    }
}

/// `F = p(ρ,θ) + δρ^β - (λ(θ) + 2μ(θ)) div u`
pub fn effective_viscous_flux(
    grid: &Grid,
    state: &State,
    params: &SchemeParams,
    law: &ConstitutiveLaw,
) -> Result<ScalarField, CompactnessError> {
    let div_u = div(grid, &state.u)?;
    let (rho, th) = (&state.rho, &state.theta);
    let data = (0..grid.len())
        .map(|i| {
            let (r, t) = (rho.data[i], th.data[i]);
            law.pressure_unchecked(r, t) + params.delta * pow(r, params.beta)
                - (law.lambda.eval(t) + 2.0 * law.mu.eval(t)) * div_u.data[i]
        })
        .collect();
    Ok(ScalarField::from_vec(grid, [Parity::Even; 3], data)?)
}

/// `Σ_ij (R_ij[φμ ∂_j u^i] - φμ R_ij[∂_j u^i])` and its L² norm.
pub fn commutator_probe(
    ops: &SpectralOperators,
    weight: &ScalarField,
    mu: &ScalarField,
    u: &VectorField,
) -> Result<(ScalarField, f64), CompactnessError> {
    let g = ops.grid();
    weight.check_grid(g)?;
    let scale = weight.max_abs();
    if let Some(i) = (0..g.len()).find(|&i| g.on_wall(i) && weight.data[i].abs() > 1e-14 * scale) {
        return Err(CompactnessError::Support(format!("weight is {} at {:?}", weight.data[i], g.position(i))));
    }
    let phi_mu = weight * mu;
    let axes: Vec<usize> = g.active_axes().collect();
    let mut out = ScalarField::zeros(g);
    for &i in &axes {
        for &j in &axes {
            let du = derivative(g, &u.c[i], j);
            let a = ops.riesz_apply(RieszOp::R(i, j), &(&phi_mu * &du))?;
            let b = ops.riesz_apply(RieszOp::R(i, j), &du)?;
            for k in 0..g.len() {
                out.data[k] += a.data[k] - phi_mu.data[k] * b.data[k];
            }
        }
    }
    out.parity = [Parity::Free; 3];
    let norm = out.l2_norm(g);
    Ok((out, norm))
}
