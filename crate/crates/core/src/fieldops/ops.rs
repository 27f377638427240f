//! Centered-difference vector calculus on node grids.
//!
//! Interior nodes use the three-point centered stencils. At a wall the
//! missing neighbour is a ghost value synthesized from the parity of the
//! field along that axis, so the same formula applies everywhere. With
//! trapezoid weights this makes `Σ w f (D g) = -Σ w (D f) g` exact whenever
//! one of the two factors is odd and vanishes on the wall.

use super::field::{ScalarField, SymTensorField, VectorField};
use super::grid::{Grid, Parity};
use super::FieldError;
use crate::constitutive::ConstitutiveLaw;
use rayon::prelude::*;

/// Grids at least this large are differenced in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Differential {
    Grad,
    Div,
    Curl,
    Laplacian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

pub fn differential(grid: &Grid, field: &Field, op: Differential) -> Result<Field, FieldError> {
    match (op, field) {
        (Differential::Grad, Field::Scalar(f)) => Ok(Field::Vector(grad(grid, f)?)),
        (Differential::Div, Field::Vector(v)) => Ok(Field::Scalar(div(grid, v)?)),
        (Differential::Curl, Field::Vector(v)) => Ok(Field::Vector(curl(grid, v)?)),
        (Differential::Laplacian, Field::Scalar(f)) => Ok(Field::Scalar(laplacian(grid, f)?)),
        (Differential::Laplacian, Field::Vector(v)) => Ok(Field::Vector(vector_laplacian(grid, v)?)),
        (op, Field::Scalar(_)) => Err(FieldError::Arity { op, found: "scalar" }),
        (op, Field::Vector(_)) => Err(FieldError::Arity { op, found: "vector" }),
    }
}

/// Ghost value below node 0 (mirror it for the upper wall).
#[inline]
fn ghost(parity: Parity, f0: f64, f1: f64, f2: Option<f64>) -> f64 {
    match parity {
        Parity::Even => f1,
        Parity::Odd | Parity::Vanishing => 2.0 * f0 - f1,
        Parity::Free => match f2 {
            Some(f2) => 3.0 * f0 - 3.0 * f1 + f2,
            None => 2.0 * f0 - f1,
        },
    }
}

/// Applies `kernel(f_{i-1}, f_i, f_{i+1})` along `axis`, with ghosts at
/// walls. Works on whole rows of the line-major layout so the interior
/// loop carries no branches.
fn stencil<K: Fn(f64, f64, f64) -> f64 + Sync>(grid: &Grid, f: &ScalarField, axis: usize, kernel: K) -> Vec<f64> {
    let parity = f.parity[axis];
    let n = grid.shape()[axis];
    let s = grid.stride(axis);
    let periodic = grid.is_periodic(axis);
    let block = n * s;
    let fill = |src: &[f64], dst: &mut [f64]| {
        let row = |i: usize| &src[i * s..(i + 1) * s];
        for i in 1..n - 1 {
            let (lo, mid, hi) = (row(i - 1), row(i), row(i + 1));
            for (t, out) in dst[i * s..(i + 1) * s].iter_mut().enumerate() {
                *out = kernel(lo[t], mid[t], hi[t]);
            }
        }
        for (i, inward) in [(0, 1usize), (n - 1, n - 2)] {
            let mid = row(i);
            let near = row(inward);
            let far = (n > 2).then(|| row(if i == 0 { 2 } else { n - 3 }));
            let wrap = row(if i == 0 { n - 1 } else { 0 });
            for t in 0..s {
                let f0 = mid[t];
                let outside = if periodic { wrap[t] } else { ghost(parity, f0, near[t], far.map(|r| r[t])) };
                dst[i * s + t] = if i == 0 { kernel(outside, f0, near[t]) } else { kernel(near[t], f0, outside) };
            }
        }
    };
    let mut out = vec![0.0; grid.len()];
    if grid.len() >= PARALLEL_THRESHOLD {
        out.par_chunks_mut(block).zip(f.data.par_chunks(block)).for_each(|(dst, src)| fill(src, dst));
    } else {
        out.chunks_mut(block).zip(f.data.chunks(block)).for_each(|(dst, src)| fill(src, dst));
    }
    out
}

/// Centered first derivative along `axis`.
pub fn derivative(grid: &Grid, f: &ScalarField, axis: usize) -> ScalarField {
    if !grid.is_active(axis) || f.parity[axis] == Parity::Vanishing {
        return ScalarField::zeros(grid);
    }
    let inv = 0.5 / grid.h(axis);
    let data = stencil(grid, f, axis, |m, _, p| (p - m) * inv);
    let mut parity = f.parity;
    parity[axis] = parity[axis].flip();
    ScalarField::from_vec(grid, parity, data).expect("stencil preserves length")
}

/// Three-point second derivative along `axis`.
pub fn second_derivative(grid: &Grid, f: &ScalarField, axis: usize) -> ScalarField {
    if !grid.is_active(axis) || f.parity[axis] == Parity::Vanishing {
        return ScalarField::zeros(grid);
    }
    let h = grid.h(axis);
    let inv = 1.0 / (h * h);
    let data = stencil(grid, f, axis, |m, c, p| (p - 2.0 * c + m) * inv);
    ScalarField::from_vec(grid, f.parity, data).expect("stencil preserves length")
}

pub fn grad(grid: &Grid, f: &ScalarField) -> Result<VectorField, FieldError> {
    f.check_grid(grid)?;
    Ok(VectorField::new(std::array::from_fn(|a| derivative(grid, f, a))))
}

pub fn div(grid: &Grid, v: &VectorField) -> Result<ScalarField, FieldError> {
    v.check_grid(grid)?;
    let mut out = ScalarField::zeros(grid);
    for a in grid.active_axes() {
        out.axpy(1.0, &derivative(grid, &v.c[a], a));
    }
    Ok(out)
}

pub fn curl(grid: &Grid, v: &VectorField) -> Result<VectorField, FieldError> {
    v.check_grid(grid)?;
    let d = |m: usize, a: usize| derivative(grid, &v.c[m], a);
    Ok(VectorField::new([&d(2, 1) - &d(1, 2), &d(0, 2) - &d(2, 0), &d(1, 0) - &d(0, 1)]))
}

pub fn laplacian(grid: &Grid, f: &ScalarField) -> Result<ScalarField, FieldError> {
    f.check_grid(grid)?;
    let mut out = ScalarField::zeros(grid);
    for a in grid.active_axes() {
        out.axpy(1.0, &second_derivative(grid, f, a));
    }
    Ok(out)
}

pub fn vector_laplacian(grid: &Grid, v: &VectorField) -> Result<VectorField, FieldError> {
    v.check_grid(grid)?;
    Ok(VectorField::new([laplacian(grid, &v.c[0])?, laplacian(grid, &v.c[1])?, laplacian(grid, &v.c[2])?]))
}

/// `∇×(∇×v)` assembled term by term, so every differenced factor keeps a
/// definite parity.
pub fn curl_curl(grid: &Grid, v: &VectorField) -> Result<VectorField, FieldError> {
    v.check_grid(grid)?;
    let first: [[ScalarField; 3]; 3] = std::array::from_fn(|m| std::array::from_fn(|a| derivative(grid, &v.c[m], a)));
    let dd = |m: usize, a: usize, b: usize| derivative(grid, &first[m][a], b);
    // (∇×∇×v)_i = Σ_j ∂_j ∂_i v_j - ∂_j ∂_j v_i
    Ok(VectorField::new(std::array::from_fn(|i| {
        let mut out = ScalarField::zeros(grid);
        for j in grid.active_axes() {
            if j != i {
                out.axpy(1.0, &dd(j, i, j));
                out.axpy(-1.0, &dd(i, j, j));
            }
        }
        out
    })))
}

/// Velocity gradient `g[i][j] = ∂u^i/∂x_j`.
pub fn velocity_gradient(grid: &Grid, u: &VectorField) -> [[ScalarField; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| derivative(grid, &u.c[i], j)))
}

/// `Ψ = μ(θ)(∇u + ∇uᵀ) + λ(θ) div u I`
pub fn stress_tensor(
    grid: &Grid,
    u: &VectorField,
    theta: &ScalarField,
    law: &ConstitutiveLaw,
) -> Result<SymTensorField, FieldError> {
    u.check_grid(grid)?;
    theta.check_grid(grid)?;
    let g = velocity_gradient(grid, u);
    let mu = theta.map(|t| law.mu.eval(t));
    let lambda = theta.map(|t| law.lambda.eval(t));
    let div_u = &(&g[0][0] + &g[1][1]) + &g[2][2];
    let bulk = &lambda * &div_u;
    let mut c: [ScalarField; 6] = std::array::from_fn(|_| ScalarField::zeros(grid));
    for (i, j) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)] {
        let mut s = &mu * &(&g[i][j] + &g[j][i]);
        if i == j {
            s = &s + &bulk;
        }
        c[SymTensorField::slot(i, j)] = s;
    }
    Ok(SymTensorField { c })
}

/// `Ψ:∇u = Σ_{ij} (μ/2)(∂_j u^i + ∂_i u^j)² + λ (div u)²`, non-negative when
/// `μ ≥ 0, λ ≥ 0`.
pub fn dissipation(
    grid: &Grid,
    u: &VectorField,
    theta: &ScalarField,
    law: &ConstitutiveLaw,
) -> Result<ScalarField, FieldError> {
    u.check_grid(grid)?;
    theta.check_grid(grid)?;
    let g = velocity_gradient(grid, u);
    Ok(dissipation_from_gradient(grid, &g, theta, law))
}

pub fn dissipation_from_gradient(
    grid: &Grid,
    g: &[[ScalarField; 3]; 3],
    theta: &ScalarField,
    law: &ConstitutiveLaw,
) -> ScalarField {
    let data = (0..grid.len())
        .map(|idx| {
            let t = theta.data[idx];
            let (mu, lambda) = (law.mu.eval(t), law.lambda.eval(t));
            let mut shear = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let s = g[i][j].data[idx] + g[j][i].data[idx];
                    shear += s * s;
                }
            }
            let d = g[0][0].data[idx] + g[1][1].data[idx] + g[2][2].data[idx];
            0.5 * mu * shear + lambda * d * d
        })
        .collect();
    ScalarField::from_vec(grid, [Parity::Free; 3], data).expect("length matches grid")
}

/// `(∇×H)×H`
pub fn lorentz_force(grid: &Grid, h: &VectorField) -> Result<VectorField, FieldError> {
    Ok(curl(grid, h)?.cross(h))
}

/// `∇×(u×H) - ∇×(ν∇×H)` for constant `ν`.
pub fn induction_rhs(grid: &Grid, u: &VectorField, h: &VectorField, nu: f64) -> Result<VectorField, FieldError> {
    u.check_grid(grid)?;
    let transport = curl(grid, &u.cross(h))?;
    let diffusion = curl_curl(grid, h)?;
    let mut out = transport;
    out.axpy(-nu, &diffusion);
    Ok(out)
}

/// `∫ |div((u×H)×H) - ((∇×H)×H)·u - (∇×(u×H))·H|` over the grid.
///
/// The three terms agree exactly in the continuum; the discrete mismatch
/// measures how far the centered product rule is from exact.
pub fn lorentz_work_identity_residual(grid: &Grid, u: &VectorField, h: &VectorField) -> Result<f64, FieldError> {
    u.check_grid(grid)?;
    h.check_grid(grid)?;
    let uxh = u.cross(h);
    let lhs = div(grid, &uxh.cross(h))?;
    let work = lorentz_force(grid, h)?.dot(u);
    let induction = curl(grid, &uxh)?.dot(h);
    let residual = &(&lhs - &work) - &induction;
    Ok(residual.map(f64::abs).integrate(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ScalarLaw;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Grid {
        Grid::unit_box([n, n, 1])
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let g = unit(17);
        let v = grad(&g, &ScalarField::constant(&g, 3.5)).unwrap();
        assert_eq!(v.max_abs(), 0.0);
    }

    #[test]
    fn laplacian_second_order() {
        let err = |n: usize| {
            let g = unit(n);
            let f = ScalarField::from_fn(&g, Parity::Odd, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let l = laplacian(&g, &f).unwrap();
            let exact = f.scale(-2.0 * PI * PI);
            (&l - &exact).max_abs()
        };
        let (e1, e2) = (err(33), err(65));
        assert!(e1 / e2 > 3.9 && e1 / e2 < 4.1, "{e1} {e2}");
        assert!(err(65) < 2e-2);
    }

    #[test]
    fn neumann_gradient_vanishes_at_walls() {
        let g = unit(9);
        let f = ScalarField::from_fn(&g, Parity::Even, |x| (PI * x[0]).cos());
        let d = derivative(&g, &f, 0);
        assert_eq!(d.data[g.index(0, 3, 0)], 0.0);
        assert_eq!(d.data[g.index(8, 3, 0)], 0.0);
        assert_eq!(d.parity[0], Parity::Odd);
    }

    #[test]
    fn dirichlet_derivative_is_one_sided_at_walls() {
        let g = Grid::unit_box([9, 1, 1]);
        let f = ScalarField::from_fn(&g, Parity::Odd, |x| x[0] * (1.0 - x[0]));
        let d = derivative(&g, &f, 0);
        assert!((d.data[0] - (f.data[1] - f.data[0]) / g.h(0)).abs() < 1e-15);
    }

    #[test]
    fn free_parity_is_exact_on_quadratics() {
        let g = Grid::unit_box([7, 1, 1]);
        let f = ScalarField::from_fn(&g, Parity::Free, |x| 1.0 + 2.0 * x[0] + 3.0 * x[0] * x[0]);
        let d = derivative(&g, &f, 0);
        for i in 0..7 {
            let x = g.coord(0, i);
            assert!((d.data[i] - (2.0 + 6.0 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_derivative_wraps() {
        let g = Grid::torus([64, 1, 1], 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, Parity::Free, |x| x[0].sin());
        let d = derivative(&g, &f, 0);
        let exact = (PI / 32.0).sin() / (PI / 32.0);
        for i in 0..64 {
            assert!((d.data[i] - exact * g.coord(0, i).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn differential_checks_arity() {
        let g = unit(5);
        let s = Field::Scalar(ScalarField::zeros(&g));
        assert!(matches!(differential(&g, &s, Differential::Div), Err(FieldError::Arity { .. })));
        assert!(matches!(differential(&g, &s, Differential::Grad), Ok(Field::Vector(_))));
        let wrong = Field::Scalar(ScalarField::zeros(&unit(6)));
        assert!(matches!(differential(&g, &wrong, Differential::Laplacian), Err(FieldError::Shape { .. })));
    }

    #[test]
    fn stress_of_linear_and_rigid_fields() {
        let g = Grid::unit_box([9, 9, 9]);
        let law = ConstitutiveLaw::default();
        let theta = ScalarField::constant(&g, 1.0);
        let interior = g.index(4, 4, 4);
        let u = VectorField::from_fn(&g, Parity::Free, |x| [x[0], 0.0, 0.0]);
        let psi = stress_tensor(&g, &u, &theta, &law).unwrap();
        let t = psi.at(interior);
        assert!((t[0][0] - 2.0).abs() < 1e-13);
        assert!(t[1][1].abs() < 1e-13 && t[0][1].abs() < 1e-13);
        assert!((dissipation(&g, &u, &theta, &law).unwrap().data[interior] - 2.0).abs() < 1e-12);
        let rot = VectorField::from_fn(&g, Parity::Free, |x| [-x[1], x[0], 0.0]);
        assert!(stress_tensor(&g, &rot, &theta, &law).unwrap().max_abs() < 1e-12);
        let zero = stress_tensor(&g, &VectorField::zeros(&g), &theta, &law).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn lorentz_force_closed_form() {
        let n = 129;
        let g = Grid::new([n, 1, 1], [2.0 * PI, 1.0, 1.0]).unwrap();
        let h = VectorField::from_fn(&g, Parity::Free, |x| [0.0, 0.0, x[0].sin()]);
        let f = lorentz_force(&g, &h).unwrap();
        let mut err: f64 = 0.0;
        for idx in 1..n - 1 {
            let x = g.coord(0, idx);
            // ∇×H = (0, -cos x, 0), so the force is -∇(|H|²/2)
            err = err.max((f.c[0].data[idx] + x.cos() * x.sin()).abs());
            assert_eq!(f.c[1].data[idx], 0.0);
        }
        assert!(err < 2.0 * g.h(0).powi(2), "{err}");
        let uniform = VectorField::uniform(&g, [1.0, 2.0, 3.0]);
        assert_eq!(lorentz_force(&g, &uniform).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn induction_diffusion_is_vector_laplacian() {
        let n = 129;
        let g = Grid::new([n, 1, 1], [2.0 * PI, 1.0, 1.0]).unwrap();
        let h = VectorField::from_fn(&g, Parity::Free, |x| [0.0, 0.0, x[0].sin()]);
        let r = induction_rhs(&g, &VectorField::zeros(&g), &h, 1.0).unwrap();
        let mut err: f64 = 0.0;
        for idx in 2..n - 2 {
            err = err.max((r.c[2].data[idx] + g.coord(0, idx).sin()).abs());
        }
        assert!(err < g.h(0).powi(2), "{err}");
        let u = VectorField::uniform(&g, [0.3, -0.2, 0.1]);
        let hu = VectorField::uniform(&g, [1.0, 0.5, -2.0]);
        assert_eq!(induction_rhs(&g, &u, &hu, 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn identity_residual_trivial_cases() {
        let g = Grid::unit_box([17, 17, 1]);
        let bump = |x: [f64; 3]| {
            let s = (PI * x[0]).sin() * (PI * x[1]).sin();
            [s * s, s * s * s, s]
        };
        let u = VectorField::from_fn(&g, Parity::Odd, bump);
        let h = VectorField::from_fn(&g, Parity::Odd, |x| bump([x[1], x[0], 0.0]));
        assert_eq!(lorentz_work_identity_residual(&g, &VectorField::zeros(&g), &h).unwrap(), 0.0);
        let uniform = VectorField::uniform(&g, [0.4, -1.1, 0.7]);
        let r = lorentz_work_identity_residual(&g, &u, &uniform).unwrap();
        assert!(r < 1e-13, "{r}");
    }

    #[test]
    fn scalar_law_coefficients_enter_stress() {
        let g = Grid::unit_box([5, 5, 5]);
        let law = ConstitutiveLaw { lambda: ScalarLaw::constant(0.5), ..ConstitutiveLaw::default() };
        let u = VectorField::from_fn(&g, Parity::Free, |x| [x[0], x[1], 0.0]);
        let psi = stress_tensor(&g, &u, &ScalarField::constant(&g, 1.0), &law).unwrap();
        // 2μ·1 + λ·2
        assert!((psi.at(62)[0][0] - 3.0).abs() < 1e-13);
    }
}
