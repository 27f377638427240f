//! The renormalized thermal inequality tested against a bank of smooth
//! non-negative space-time functions.
//!
//! For a test function `φ` with `φ(·,T) = 0` and `∇φ·n = 0` on the walls,
//! the residual is right-hand side minus left-hand side of
//!
//! ```text
//! ∫∫((ρ+δ)Q_h φ_t + ρQ_h u·∇φ + K_h Δφ - δhθ^{α+1}φ)
//!   ≤ ∫∫((δ-1)h(Ψ:∇u + ν|∇×H|²) + h'κ|∇θ|²)φ + ∫∫hθp_θ div u φ
//!     - ∫(ρ₀+δ)Q_h(θ₀)φ(0) + ε∫∫∇ρ·∇((Q_h - Qh)φ)
//! ```
//!
//! with `h = (1+θ)^{-ω}`. Smooth solutions turn it into an equality, so the
//! discrete residual is a consistency error and must not fall below `-tol`.

use super::DiagnosticsError;
use crate::constitutive::{pow, Renormalizer, WeightFunction};
use crate::fieldops::{curl, dissipation_from_gradient, grad, velocity_gradient, Grid};
use crate::solver::{Frame, Scheme};

/// Value and derivatives of a test function at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TestSample {
    pub value: f64,
    pub dt: f64,
    pub grad: [f64; 3],
    pub laplacian: f64,
}

pub trait TestFunction: Sync {
    fn sample(&self, x: [f64; 3], t: f64) -> TestSample;
}

/// Quintic bump `1 - 10s³ + 15s⁴ - 6s⁵` on `s ∈ [0, 1]`, zero beyond;
/// returns the value and its first two derivatives in `s`.
fn quintic(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let (s2, c) = (s * s, 1.0 - s);
    (c * c * c * (1.0 + 3.0 * s + 6.0 * s2), -30.0 * s2 * c * c, -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s))
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpatialProfile {
    Uniform,
    /// Product of quintic bumps of half-width `width`, reflected evenly at
    /// the walls so the normal derivative vanishes there.
    Bump {
        center: [f64; 3],
        width: f64,
        extent: [f64; 3],
        active: [bool; 3],
    },
}

impl SpatialProfile {
    pub fn bump(grid: &Grid, center: [f64; 3], width: f64) -> SpatialProfile {
        SpatialProfile::Bump {
            center,
            width,
            extent: std::array::from_fn(|a| grid.extent(a)),
            active: std::array::from_fn(|a| grid.is_active(a)),
        }
    }

    /// Value, gradient and Laplacian.
    fn eval(&self, x: [f64; 3]) -> (f64, [f64; 3], f64) {
        match self {
            SpatialProfile::Uniform => (1.0, [0.0; 3], 0.0),
            SpatialProfile::Bump { center, width, extent, active } => {
                let axis = |a: usize| -> (f64, f64, f64) {
                    if !active[a] {
                        return (1.0, 0.0, 0.0);
                    }
                    let (c, l) = (center[a], extent[a]);
                    let mut acc = (0.0, 0.0, 0.0);
                    for image in [c, -c, 2.0 * l - c] {
                        let r = x[a] - image;
                        let (v, d1, d2) = quintic(r.abs() / width);
                        acc.0 += v;
                        acc.1 += r.signum() * d1 / width;
                        acc.2 += d2 / (width * width);
                    }
                    acc
                };
                let f: [(f64, f64, f64); 3] = std::array::from_fn(axis);
                let value = f[0].0 * f[1].0 * f[2].0;
                let grad = [f[0].1 * f[1].0 * f[2].0, f[0].0 * f[1].1 * f[2].0, f[0].0 * f[1].0 * f[2].1];
                let lap = f[0].2 * f[1].0 * f[2].0 + f[0].0 * f[1].2 * f[2].0 + f[0].0 * f[1].0 * f[2].2;
                (value, grad, lap)
            }
        }
    }
}

/// Polynomial in `s = t/horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalProfile {
    pub coeffs: Vec<f64>,
    pub horizon: f64,
}

impl TemporalProfile {
    /// `1 - t/T`
    pub fn ramp(horizon: f64) -> Self {
        TemporalProfile { coeffs: vec![1.0, -1.0], horizon }
    }

    /// `(1 - t/T)²`
    pub fn quadratic(horizon: f64) -> Self {
        TemporalProfile { coeffs: vec![1.0, -2.0, 1.0], horizon }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let s = t / self.horizon;
        let (mut v, mut d) = (0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            d = d * s + v;
            v = v * s + c;
        }
        (v, d / self.horizon)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparableTest {
    pub amplitude: f64,
    pub space: SpatialProfile,
    pub time: TemporalProfile,
}

impl TestFunction for SeparableTest {
    fn sample(&self, x: [f64; 3], t: f64) -> TestSample {
        let (v, g, lap) = self.space.eval(x);
        let (tv, td) = self.time.eval(t);
        let a = self.amplitude;
        TestSample { value: a * v * tv, dt: a * v * td, grad: g.map(|gi| a * gi * tv), laplacian: a * lap * tv }
    }
}

/// `Σ c_k φ_k`
#[derive(Clone, Debug, PartialEq)]
pub struct Combination {
    pub terms: Vec<(f64, SeparableTest)>,
}

impl TestFunction for Combination {
    fn sample(&self, x: [f64; 3], t: f64) -> TestSample {
        let mut out = TestSample::default();
        for (c, f) in &self.terms {
            let s = f.sample(x, t);
            out.value += c * s.value;
            out.dt += c * s.dt;
            out.laplacian += c * s.laplacian;
            for a in 0..3 {
                out.grad[a] += c * s.grad[a];
            }
        }
        out
    }
}

const PLACEMENTS: [[f64; 3]; 8] = [
    [0.25, 0.25, 0.5],
    [0.75, 0.25, 0.25],
    [0.25, 0.75, 0.75],
    [0.75, 0.75, 0.5],
    [0.5, 0.5, 0.5],
    [0.0, 0.5, 0.25],
    [0.5, 1.0, 0.75],
    [0.0, 0.0, 0.0],
];
const WIDTHS: [f64; 3] = [0.15, 0.3, 0.5];
/// Narrowest half-width in grid spacings, so every bump is resolved.
pub const MIN_WIDTH_SPACINGS: f64 = 6.0;

/// 8 placements × 3 widths × 2 temporal profiles; centres and widths are
/// fractions of the shortest active extent, floored at
/// `MIN_WIDTH_SPACINGS` times the coarsest spacing.
pub fn default_bank(grid: &Grid, horizon: f64) -> Vec<SeparableTest> {
    let scale = grid.active_axes().map(|a| grid.extent(a)).fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() { scale } else { 1.0 };
    let floor = MIN_WIDTH_SPACINGS * grid.active_axes().map(|a| grid.h(a)).fold(0.0, f64::max);
    let mut bank = Vec::with_capacity(48);
    for frac in PLACEMENTS {
        let center: [f64; 3] = std::array::from_fn(|a| frac[a] * grid.extent(a));
        for w in WIDTHS {
            for time in [TemporalProfile::ramp(horizon), TemporalProfile::quadratic(horizon)] {
                bank.push(SeparableTest {
                    amplitude: 1.0,
                    space: SpatialProfile::bump(grid, center, (w * scale).max(floor)),
                    time,
                });
            }
        }
    }
    bank
}

/// Quadrature weights for samples at increasing `times`: Simpson on pairs
/// of intervals, the quadratic through the last three samples for a final
/// odd interval.
pub fn time_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    if n == 2 {
        let h = times[1] - times[0];
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
    }
    if n < 3 {
        return w;
    }
    let mut k = 0;
    while k + 2 < n {
        let (h1, h2) = (times[k + 1] - times[k], times[k + 2] - times[k + 1]);
        let span = h1 + h2;
        w[k] += span / 6.0 * (2.0 - h2 / h1);
        w[k + 1] += span.powi(3) / (6.0 * h1 * h2);
        w[k + 2] += span / 6.0 * (2.0 - h1 / h2);
        k += 2;
    }
    if k + 1 < n {
        let (h1, h2) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        w[k - 1] -= h2.powi(3) / (6.0 * h1 * (h1 + h2));
        w[k] += h2 * (3.0 * h1 + h2) / (6.0 * h1);
        w[k + 1] += h2 * (3.0 * h1 + 2.0 * h2) / (6.0 * (h1 + h2));
    }
    w
}

fn validate<T: TestFunction>(grid: &Grid, times: &[f64], k: usize, phi: &T) -> Result<(), DiagnosticsError> {
    let horizon = *times.last().expect("non-empty window");
    let mut scale: f64 = 1.0;
    for &t in times {
        for i in 0..grid.len() {
            let x = grid.position(i);
            let s = phi.sample(x, t);
            if s.value < 0.0 {
                return Err(DiagnosticsError::IllFormedTest(format!(
                    "test function {k} is {} at {x:?}, t = {t}",
                    s.value
                )));
            }
            scale = scale.max(s.value);
            let ijk = grid.unravel(i);
            for a in grid.active_axes() {
                let n = grid.shape()[a];
                if (ijk[a] == 0 || ijk[a] == n - 1) && s.grad[a].abs() > 1e-9 * scale {
                    return Err(DiagnosticsError::IllFormedTest(format!(
                        "test function {k} has normal derivative {} on the wall at {x:?}",
                        s.grad[a]
                    )));
                }
            }
        }
    }
    for i in 0..grid.len() {
        let v = phi.sample(grid.position(i), horizon).value;
        if v.abs() > 1e-12 * scale {
            return Err(DiagnosticsError::IllFormedTest(format!(
                "test function {k} is {v} at the final time t = {horizon}"
            )));
        }
    }
    Ok(())
}

/// Right minus left side of the renormalized thermal inequality for each
/// test function, time integrals by [`time_weights`] over the records.
pub fn thermal_weak_residual<T: TestFunction>(
    scheme: &Scheme,
    frames: &[Frame],
    bank: &[T],
    omega: f64,
) -> Result<Vec<f64>, DiagnosticsError> {
    let renorm = Renormalizer::new(omega).map_err(|e| DiagnosticsError::Parameter(e.to_string()))?;
    if frames.len() < 2 {
        return Err(DiagnosticsError::InvalidWindow("the thermal residual needs at least two records".into()));
    }
    let times: Vec<f64> = frames.iter().map(|f| f.state.time).collect();
    if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] != 0.0 {
        return Err(DiagnosticsError::InvalidWindow("records must start at t = 0 and increase".into()));
    }
    let g = scheme.grid();
    for (k, phi) in bank.iter().enumerate() {
        validate(g, &times, k, phi)?;
    }
    let law = scheme.law();
    let p = scheme.params();
    let (eps, delta, alpha, nu) = (p.epsilon, p.delta, law.alpha, law.nu);
    let weights = g.weights();
    let axes: Vec<usize> = g.active_axes().collect();
    let positions: Vec<[f64; 3]> = (0..g.len()).map(|i| g.position(i)).collect();
    let tw = time_weights(&times);
    let mut out = vec![0.0; bank.len()];

    for (frame, &wt) in frames.iter().zip(&tw) {
        let s = &frame.state;
        let (rho, th, u) = (&s.rho, &s.theta, &s.u);
        let grad_u = velocity_gradient(g, u);
        let heat = dissipation_from_gradient(g, &grad_u, th, law);
        let j2 = curl(g, &s.h)?.norm_squared();
        let grad_t = grad(g, th)?;
        let grad_r = grad(g, rho)?;
        // per node: coefficients of φ, ∇φ, φ_t and Δφ in the integrand
        let mut c_phi = vec![0.0; g.len()];
        let mut c_grad = vec![[0.0; 3]; g.len()];
        let mut c_dt = vec![0.0; g.len()];
        let mut c_lap = vec![0.0; g.len()];
        for i in 0..g.len() {
            let (r, t) = (rho.data[i], th.data[i]);
            let (h, dh) = (renorm.value(t), renorm.first(t));
            let (q, qh) = (law.q(t), law.q_h(omega, t));
            let div_u: f64 = axes.iter().map(|&a| grad_u[a][a].data[i]).sum();
            let gt2: f64 = axes.iter().map(|&a| grad_t.c[a].data[i].powi(2)).sum();
            let gr_gt: f64 = axes.iter().map(|&a| grad_r.c[a].data[i] * grad_t.c[a].data[i]).sum();
            let right = (delta - 1.0) * h * (heat.data[i] + nu * j2.data[i])
                + dh * law.kappa.eval(t) * gt2
                + h * t * law.p_theta.eval(r) * div_u
                - eps * q * dh * gr_gt;
            c_phi[i] = right + delta * h * pow(t, alpha + 1.0);
            for &a in &axes {
                c_grad[i][a] = eps * (qh - q * h) * grad_r.c[a].data[i] - r * qh * u.c[a].data[i];
            }
            c_dt[i] = -(r + delta) * qh;
            c_lap[i] = -law.k_h(omega, t);
        }
        let initial = frame.state.time == 0.0;
        for (k, phi) in bank.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..g.len() {
                let smp = phi.sample(positions[i], s.time);
                let mut v = wt * (c_phi[i] * smp.value + c_dt[i] * smp.dt + c_lap[i] * smp.laplacian);
                for &a in &axes {
                    v += wt * c_grad[i][a] * smp.grad[a];
                }
                if initial {
                    v += c_dt[i] * smp.value;
                }
                acc += weights[i] * v;
            }
            out[k] += acc;
        }
    }
    Ok(out)
}
