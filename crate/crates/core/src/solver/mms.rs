//! Manufactured smooth solutions on the unit interval.
//!
//! Density and temperature are cosine profiles (homogeneous Neumann data),
//! velocity and the transverse magnetic field are sine profiles (zero on
//! the walls), all modulated by `a(t) = 1 + ½ sin 2πt`. The continuous
//! right-hand side is written out in one dimension with second-order jets,
//! so the forcing `S = ∂ₜU - R(U)` is exact up to rounding.

use super::{Conserved, DtPolicy, Rates, Scheme, SchemeParams, SolverError, State};
use crate::constitutive::{ConstitutiveLaw, ScalarLaw};
use crate::fieldops::{Grid, Parity, ScalarField, VectorField};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Value with its first two derivatives in `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Jet2 {
        Jet2 { v, d1: 0.0, d2: 0.0 }
    }

    /// `f ∘ self` given `f, f', f''` at `self.v`.
    pub fn compose(self, f: f64, df: f64, ddf: f64) -> Jet2 {
        Jet2 { v: f, d1: df * self.d1, d2: ddf * self.d1 * self.d1 + df * self.d2 }
    }

    pub fn powf(self, e: f64) -> Jet2 {
        let x = self.v;
        self.compose(x.powf(e), e * x.powf(e - 1.0), e * (e - 1.0) * x.powf(e - 2.0))
    }

    /// `law ∘ self`; the law must have analytic derivatives.
    pub fn through(self, law: &ScalarLaw) -> Jet2 {
        let x = self.v;
        self.compose(
            law.eval(x),
            law.derivative(x).expect("analytic law"),
            law.second_derivative(x).expect("analytic law"),
        )
    }

    pub fn scale(self, a: f64) -> Jet2 {
        Jet2 { v: a * self.v, d1: a * self.d1, d2: a * self.d2 }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

/// Values of the integrated tuple at a point: `ρ, m₁..₃, e, H₁..₃`.
pub type Point = [f64; 8];

/// `c·a(t)·cos(kπx)` or `c·a(t)·sin(kπx)` on top of a base value.
#[derive(Clone, Copy, Debug)]
struct Profile {
    base: f64,
    amp: f64,
    k: f64,
    sine: bool,
}

impl Profile {
    const fn cos(base: f64, amp: f64, k: f64) -> Profile {
        Profile { base, amp, k, sine: false }
    }

    const fn sin(amp: f64, k: f64) -> Profile {
        Profile { base: 0.0, amp, k, sine: true }
    }

    fn jet(&self, x: f64, a: f64) -> Jet2 {
        let w = self.k * PI;
        let (s, c) = (w * x).sin_cos();
        let c0 = self.amp * a;
        if self.sine {
            Jet2 { v: c0 * s, d1: c0 * w * c, d2: -c0 * w * w * s }
        } else {
            Jet2 { v: self.base + c0 * c, d1: -c0 * w * s, d2: -c0 * w * w * c }
        }
    }

    fn dt(&self, x: f64, da: f64) -> f64 {
        let f = if self.sine { (self.k * PI * x).sin() } else { (self.k * PI * x).cos() };
        self.amp * da * f
    }
}

const RHO: Profile = Profile::cos(1.0, 0.2, 1.0);
const THETA: Profile = Profile::cos(1.0, 0.3, 1.0);
const U: [Profile; 3] = [Profile::sin(0.3, 1.0), Profile::sin(0.2, 2.0), Profile::sin(0.1, 1.0)];
const H: [Profile; 2] = [Profile::sin(0.3, 1.0), Profile::sin(0.2, 2.0)];

fn modulation(t: f64) -> (f64, f64) {
    (1.0 + 0.5 * (2.0 * PI * t).sin(), PI * (2.0 * PI * t).cos())
}

#[derive(Clone, Debug)]
pub struct Manufactured {
    law: ConstitutiveLaw,
    params: SchemeParams,
}

impl Manufactured {
    pub fn new(law: &ConstitutiveLaw, params: &SchemeParams) -> Result<Manufactured, SolverError> {
        let laws = [&law.p_e, &law.p_theta, &law.c_v, &law.kappa, &law.mu, &law.lambda];
        if !laws.iter().all(|l| l.is_analytic()) {
            return Err(SolverError::Parameter("manufactured solutions need closed-form laws".into()));
        }
        params.validate(law)?;
        Ok(Manufactured { law: law.clone(), params: params.clone() })
    }

    /// Primitive values `(ρ, u, θ, H)` at `(x, t)`.
    pub fn primitive(&self, x: f64, t: f64) -> (f64, [f64; 3], f64, [f64; 3]) {
        let (a, _) = modulation(t);
        (RHO.jet(x, a).v, U.map(|p| p.jet(x, a).v), THETA.jet(x, a).v, [0.0, H[0].jet(x, a).v, H[1].jet(x, a).v])
    }

    pub fn conserved(&self, x: f64, t: f64) -> Point {
        let (rho, u, theta, h) = self.primitive(x, t);
        let e = (rho + self.params.delta) * self.law.q(theta);
        [rho, rho * u[0], rho * u[1], rho * u[2], e, h[0], h[1], h[2]]
    }

    pub fn time_derivative(&self, x: f64, t: f64) -> Point {
        let (_, da) = modulation(t);
        let (rho, u, theta, _) = self.primitive(x, t);
        let rho_t = RHO.dt(x, da);
        let u_t = U.map(|p| p.dt(x, da));
        let theta_t = THETA.dt(x, da);
        let e_t = rho_t * self.law.q(theta) + (rho + self.params.delta) * self.law.c_v.eval(theta) * theta_t;
        [
            rho_t,
            rho_t * u[0] + rho * u_t[0],
            rho_t * u[1] + rho * u_t[1],
            rho_t * u[2] + rho * u_t[2],
            e_t,
            0.0,
            H[0].dt(x, da),
            H[1].dt(x, da),
        ]
    }

    /// The continuous right-hand side in one dimension.
    pub fn continuous_rhs(&self, x: f64, t: f64) -> Point {
        let (a, _) = modulation(t);
        let law = &self.law;
        let SchemeParams { epsilon: eps, delta, beta, .. } = self.params;
        let rho = RHO.jet(x, a);
        let th = THETA.jet(x, a);
        let u = U.map(|p| p.jet(x, a));
        let (h2, h3) = (H[0].jet(x, a), H[1].jet(x, a));
        let mu = th.through(&law.mu);
        let lambda = th.through(&law.lambda);
        let p_theta = rho.through(&law.p_theta);
        let pressure = rho.through(&law.p_e) + th * p_theta + rho.powf(beta).scale(delta);

        let r_rho = -(rho * u[0]).d1 + eps * rho.d2;
        let lorentz = -(h2.v * h2.d1 + h3.v * h3.d1);
        let mut r_m = [0.0; 3];
        for i in 0..3 {
            let visc = if i == 0 { mu.scale(2.0) + lambda } else { mu };
            r_m[i] = -(rho * u[i] * u[0]).d1 - eps * u[i].d1 * rho.d1 + visc.d1 * u[i].d1 + visc.v * u[i].d2;
        }
        r_m[0] += -pressure.d1 + lorentz;

        let q = th.through(&law.c_v_integral());
        let kappa = law.kappa.eval(th.v);
        let dkappa = law.kappa.derivative(th.v).expect("analytic law");
        let heat = law.nu * (h2.d1 * h2.d1 + h3.d1 * h3.d1)
            + (2.0 * mu.v + lambda.v) * u[0].d1 * u[0].d1
            + mu.v * (u[1].d1 * u[1].d1 + u[2].d1 * u[2].d1);
        let r_e = -(rho * q * u[0]).d1 + kappa * th.d2 + dkappa * th.d1 * th.d1 - delta * th.v.powf(law.alpha + 1.0)
            + (1.0 - delta) * heat
            - th.v * p_theta.v * u[0].d1;

        let r_h2 = -(u[0] * h2).d1 + law.nu * h2.d2;
        let r_h3 = -(u[0] * h3).d1 + law.nu * h3.d2;
        [r_rho, r_m[0], r_m[1], r_m[2], r_e, 0.0, r_h2, r_h3]
    }

    /// `S = ∂ₜU - R(U)`
    pub fn forcing(&self, x: f64, t: f64) -> Point {
        let dt = self.time_derivative(x, t);
        let r = self.continuous_rhs(x, t);
        std::array::from_fn(|k| dt[k] - r[k])
    }

    pub fn exact_state(&self, grid: &Grid, t: f64) -> State {
        let at = |f: &dyn Fn(f64) -> f64, parity| ScalarField::from_fn(grid, parity, |x| f(x[0]));
        let p = |x: f64| self.primitive(x, t);
        State::new(
            t,
            at(&|x| p(x).0, Parity::Even),
            VectorField::new(std::array::from_fn(|c| at(&|x| p(x).1[c], Parity::Odd))),
            at(&|x| p(x).2, Parity::Even),
            VectorField::new(std::array::from_fn(|c| at(&|x| p(x).3[c], Parity::Odd))),
        )
    }

    fn field_of(grid: &Grid, f: impl Fn(f64) -> Point) -> Conserved {
        let values: Vec<Point> = (0..grid.len()).map(|i| f(grid.position(i)[0])).collect();
        let comp = |k: usize, parity| {
            ScalarField::from_vec(grid, [parity; 3], values.iter().map(|p| p[k]).collect()).expect("grid length")
        };
        Conserved {
            rho: comp(0, Parity::Even),
            m: VectorField::new([comp(1, Parity::Odd), comp(2, Parity::Odd), comp(3, Parity::Odd)]),
            e: comp(4, Parity::Even),
            h: VectorField::new([comp(5, Parity::Odd), comp(6, Parity::Odd), comp(7, Parity::Odd)]),
        }
    }

    pub fn exact_conserved(&self, grid: &Grid, t: f64) -> Conserved {
        Manufactured::field_of(grid, |x| self.conserved(x, t))
    }

    pub fn continuous_rates(&self, grid: &Grid, t: f64) -> Rates {
        Manufactured::field_of(grid, |x| self.continuous_rhs(x, t))
    }

    /// A scheme on `grid` carrying the manufactured forcing.
    pub fn scheme(&self, grid: &Grid) -> Result<Scheme, SolverError> {
        let me = self.clone();
        let g = grid.clone();
        let source = Arc::new(move |t: f64| Manufactured::field_of(&g, |x| me.forcing(x, t)));
        Ok(Scheme::new(grid, &self.law, &self.params)?.with_source(source))
    }
}

impl ConstitutiveLaw {
    /// `Q` as a scalar law, for jets.
    fn c_v_integral(&self) -> ScalarLaw {
        match &self.c_v {
            ScalarLaw::Constant { value } => ScalarLaw::Affine { intercept: 0.0, slope: *value },
            other => ScalarLaw::Sum { terms: vec![other.antiderivative()] },
        }
    }
}

impl ScalarLaw {
    /// Antiderivative vanishing at zero; only for laws without a table.
    fn antiderivative(&self) -> ScalarLaw {
        match self {
            ScalarLaw::Constant { value } => ScalarLaw::Affine { intercept: 0.0, slope: *value },
            ScalarLaw::Power { coeff, exponent } => {
                ScalarLaw::Power { coeff: coeff / (exponent + 1.0), exponent: exponent + 1.0 }
            }
            ScalarLaw::Affine { intercept, slope } => ScalarLaw::Sum {
                terms: vec![
                    ScalarLaw::Affine { intercept: 0.0, slope: *intercept },
                    ScalarLaw::Power { coeff: 0.5 * slope, exponent: 2.0 },
                ],
            },
            ScalarLaw::Sum { terms } => ScalarLaw::Sum { terms: terms.iter().map(ScalarLaw::antiderivative).collect() },
            ScalarLaw::Tabulated { .. } => unreachable!("tables are rejected up front"),
        }
    }
}

/// Per-block discrete `L²` norms `(ρ, m, e, H)`.
pub fn block_norms(grid: &Grid, c: &Conserved) -> [f64; 4] {
    [c.rho.l2_norm(grid), c.m.l2_norm(grid), c.e.l2_norm(grid), c.h.l2_norm(grid)]
}

fn difference(a: &Conserved, b: &Conserved) -> Conserved {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d
}

/// Least-squares slope of `ln err` against `ln size`.
pub fn fit_order(sizes: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = sizes.iter().zip(errors).map(|(s, e)| (s.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}

pub const BLOCKS: [&str; 4] = ["mass", "momentum", "thermal", "induction"];

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    /// `"h"` or `"dt"`.
    pub variable: &'static str,
    /// Refinement parameter of each row.
    pub sizes: Vec<f64>,
    pub errors: Vec<[f64; 4]>,
    pub orders: [f64; 4],
}

impl ConvergenceTable {
    fn new(variable: &'static str, sizes: Vec<f64>, errors: Vec<[f64; 4]>) -> ConvergenceTable {
        let orders = std::array::from_fn(|b| fit_order(&sizes, &errors.iter().map(|e| e[b]).collect::<Vec<_>>()));
        ConvergenceTable { variable, sizes, errors, orders }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.variable, BLOCKS.join(","));
        for (s, e) in self.sizes.iter().zip(&self.errors) {
            out += &format!("{s:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", e[0], e[1], e[2], e[3]);
        }
        out += &format!(
            "order,{:.16e},{:.16e},{:.16e},{:.16e}\n",
            self.orders[0], self.orders[1], self.orders[2], self.orders[3]
        );
        out
    }
}

fn unit_interval(n: usize) -> Grid {
    Grid::unit_box([n, 1, 1])
}

/// Advances the exact initial state with `steps` equal steps to `t_final`.
fn integrate(scheme: &Scheme, mut state: State, t_final: f64, steps: usize) -> Result<State, SolverError> {
    let dt = t_final / steps as f64;
    for k in 0..steps {
        state = scheme.step(&state, dt)?.0;
        state.time = (k + 1) as f64 * dt;
    }
    Ok(state)
}

impl Manufactured {
    /// `‖R_h(U) - R(U)‖` per block on exact fields at time `t`.
    pub fn truncation_table(&self, nodes: &[usize], t: f64) -> Result<ConvergenceTable, SolverError> {
        let mut sizes = Vec::new();
        let mut errors = Vec::new();
        for &n in nodes {
            let g = unit_interval(n);
            let plain = Scheme::new(&g, &self.law, &self.params)?;
            let discrete = plain.rhs(&self.exact_state(&g, t))?;
            let exact = self.continuous_rates(&g, t);
            let mut diff = difference(&discrete, &exact);
            // the walls hold m and H by the boundary condition, not by the equations
            for c in diff.m.c.iter_mut().chain(diff.h.c.iter_mut()) {
                for i in [0, n - 1] {
                    c.data[i] = 0.0;
                }
            }
            sizes.push(g.h(0));
            errors.push(block_norms(&g, &diff));
        }
        Ok(ConvergenceTable::new("h", sizes, errors))
    }

    /// Error against the exact solution at `t_final`, one common step for all grids.
    pub fn spatial_table(&self, nodes: &[usize], t_final: f64) -> Result<ConvergenceTable, SolverError> {
        let finest = unit_interval(*nodes.iter().max().expect("at least one grid"));
        let probe = self.scheme(&finest)?;
        let dt = DEFAULT_MMS_SAFETY * probe.stability_limit(&self.exact_state(&finest, 0.0));
        let steps = (t_final / dt).ceil() as usize;
        let mut sizes = Vec::new();
        let mut errors = Vec::new();
        for &n in nodes {
            let g = unit_interval(n);
            let scheme = self.scheme(&g)?;
            let end = integrate(&scheme, self.exact_state(&g, 0.0), t_final, steps)?;
            let diff = difference(&scheme.conserved(&end), &self.exact_conserved(&g, t_final));
            sizes.push(g.h(0));
            errors.push(block_norms(&g, &diff));
        }
        Ok(ConvergenceTable::new("h", sizes, errors))
    }

    /// Self-convergence under step halving on a fixed grid: row `k` holds
    /// `‖U_{dt_k} - U_{dt_k/2}‖`.
    pub fn temporal_table(&self, n: usize, halvings: usize, t_final: f64) -> Result<ConvergenceTable, SolverError> {
        let g = unit_interval(n);
        let scheme = self.scheme(&g)?;
        let dt0 = DEFAULT_MMS_SAFETY * scheme.stability_limit(&self.exact_state(&g, 0.0));
        let steps0 = (t_final / dt0).ceil() as usize;
        let mut finals = Vec::new();
        for k in 0..=halvings {
            let end = integrate(&scheme, self.exact_state(&g, 0.0), t_final, steps0 << k)?;
            finals.push(scheme.conserved(&end));
        }
        let sizes = (0..halvings).map(|k| t_final / (steps0 << k) as f64).collect();
        let errors = finals.windows(2).map(|w| block_norms(&g, &difference(&w[0], &w[1]))).collect();
        Ok(ConvergenceTable::new("dt", sizes, errors))
    }
}

/// Safety factor for manufactured runs.
pub const DEFAULT_MMS_SAFETY: f64 = 0.4;

/// Parameters of the built-in one-dimensional suite.
pub fn default_suite() -> (ConstitutiveLaw, SchemeParams) {
    let law = ConstitutiveLaw::default().with_transport_scale(0.1);
    let params = SchemeParams {
        epsilon: 0.05,
        delta: 0.1,
        beta: 4.0,
        omega: 0.5,
        dt: DtPolicy::Cfl { safety: DEFAULT_MMS_SAFETY },
        t_end: 0.1,
    };
    (law, params)
}
