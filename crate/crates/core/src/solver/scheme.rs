//! Right-hand side assembly, the two-stage Heun step and the step-size bound.

use super::{Conserved, DtPolicy, Rates, SchemeParams, SolverError, State};
use crate::constitutive::{pow, ConstitutiveLaw};
use crate::fieldops::{
    curl, curl_curl, derivative, dissipation_from_gradient, grad, integrate_by, laplacian, velocity_gradient,
    DivFreeProjector, FieldError, Grid, Parity, ScalarField, VectorField,
};
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_SAFETY: f64 = 0.4;
/// Entropy quantities are skipped below this temperature.
pub const ENTROPY_THETA_FLOOR: f64 = 1e-8;

/// Extra forcing `S(t)` added to every right-hand side evaluation.
pub type Source = Arc<dyn Fn(f64) -> Rates + Send + Sync>;

/// Domain integrals sampled alongside a right-hand side evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BudgetRates {
    /// `dE_δ/dt` assembled from the discrete rates.
    pub production: f64,
    /// `∫Ψ:∇u`
    pub viscous: f64,
    /// `ν∫|∇×H|²`
    pub magnetic: f64,
    /// `∫θ^{α+1}`
    pub sink: f64,
    /// `ε∫(p_e'(ρ)/ρ + δβρ^{β-2})|∇ρ|²`
    pub eps_dissipation: f64,
    /// `δ∫ρ^β`
    pub artificial_pressure: f64,
    pub entropy: Option<EntropyRates>,
}

impl BudgetRates {
    /// `δ(∫Ψ:∇u + ν∫|∇×H|² + ∫θ^{α+1})`
    pub fn delta_dissipation(&self, delta: f64) -> f64 {
        delta * (self.viscous + self.magnetic + self.sink)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropyRates {
    /// `∫((ν|∇×H|² + Ψ:∇u)/θ + κ|∇θ|²/θ²)`
    pub production: f64,
    /// `-δ∫((ν|∇×H|² + Ψ:∇u)/θ + θ^α)`
    pub delta_part: f64,
    /// `ε∫(s - Q/θ - p_θ/ρ)Δρ`
    pub eps_part: f64,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub rates: Rates,
    pub budget: Option<BudgetRates>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    /// Nodes where velocity recovery used the density floor `δ/2`.
    pub guard_incidents: u64,
}

#[derive(Clone)]
pub struct Scheme {
    grid: Grid,
    law: ConstitutiveLaw,
    params: SchemeParams,
    projector: DivFreeProjector,
    walls: Vec<usize>,
    source: Option<Source>,
}

impl fmt::Debug for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scheme")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("source", &self.source.is_some())
            .finish()
    }
}

fn pointwise(grid: &Grid, parity: Parity, f: impl Fn(usize) -> f64) -> ScalarField {
    ScalarField::from_vec(grid, [parity; 3], (0..grid.len()).map(f).collect()).expect("length matches grid")
}

impl Scheme {
    pub fn new(grid: &Grid, law: &ConstitutiveLaw, params: &SchemeParams) -> Result<Scheme, SolverError> {
        params.validate(law)?;
        law.check_structure()?;
        if grid.active_axes().any(|a| grid.is_periodic(a)) {
            return Err(SolverError::Parameter("the solver needs walls on every active axis".into()));
        }
        let projector = DivFreeProjector::new(grid)?;
        let walls = (0..grid.len()).filter(|&i| grid.on_wall(i)).collect();
        Ok(Scheme { grid: grid.clone(), law: law.clone(), params: params.clone(), projector, walls, source: None })
    }

    pub fn with_source(mut self, source: Source) -> Scheme {
        self.source = Some(source);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn law(&self) -> &ConstitutiveLaw {
        &self.law
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn projector(&self) -> &DivFreeProjector {
        &self.projector
    }

    fn zero_walls(&self, f: &mut ScalarField) {
        for &i in &self.walls {
            f.data[i] = 0.0;
        }
    }

    pub fn conserved(&self, s: &State) -> Conserved {
        let delta = self.params.delta;
        let e = pointwise(&self.grid, Parity::Even, |i| (s.rho.data[i] + delta) * self.law.q(s.theta.data[i]));
        Conserved { rho: s.rho.clone(), m: s.momentum(), e, h: s.h.clone() }
    }

    /// Primitive recovery `u = m / max(ρ, δ/2)`, `θ = Q⁻¹(e/(ρ+δ))`.
    pub fn recover(&self, c: &Conserved, time: f64) -> Result<(State, u64), SolverError> {
        let g = &self.grid;
        let delta = self.params.delta;
        let floor = 0.5 * delta;
        if let Some(i) = c.rho.data.iter().position(|&r| !(r > 0.0)) {
            return Err(SolverError::Invariant {
                time,
                what: format!("density {} at node {:?} is not positive", c.rho.data[i], g.position(i)),
            });
        }
        let guard = c.rho.data.iter().filter(|&&r| r < floor).count() as u64;
        let u = VectorField::new(std::array::from_fn(|k| {
            c.m.c[k].zip_map(&c.rho, [Parity::Odd; 3], |m, r| m / r.max(floor))
        }));
        let mut theta = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let energy = c.e.data[i] / (c.rho.data[i] + delta);
            let t = self.law.q_inverse(energy).map_err(|err| SolverError::Numerical {
                time,
                what: format!("temperature recovery at node {:?}: {err}", g.position(i)),
            })?;
            if !(t >= 0.0) {
                return Err(SolverError::Invariant {
                    time,
                    what: format!("temperature {t} at node {:?} is negative", g.position(i)),
                });
            }
            theta.push(t);
        }
        let theta = ScalarField::from_vec(g, [Parity::Even; 3], theta)?;
        Ok((State::new(time, c.rho.clone(), u, theta, c.h.clone()), guard))
    }

    pub fn rhs(&self, s: &State) -> Result<Rates, SolverError> {
        Ok(self.evaluate(s, false)?.rates)
    }

    /// Assembles the time derivatives of `(ρ, m, e, H)`, and the budget
    /// integrals when `budget` is set.
    pub fn evaluate(&self, s: &State, budget: bool) -> Result<Evaluation, SolverError> {
        let g = &self.grid;
        s.check_grid(g)?;
        let law = &self.law;
        let SchemeParams { epsilon: eps, delta, beta, .. } = self.params;
        let n = g.len();
        let axes: Vec<usize> = g.active_axes().collect();
        let d = |f: &ScalarField, a: usize| derivative(g, f, a);
        let (rho, u, th, h) = (&s.rho, &s.u, &s.theta, &s.h);
        let m = u.scaled_by(rho);

        let mu = th.map(|t| law.mu.eval(t));
        let lambda = th.map(|t| law.lambda.eval(t));
        let q = th.map(|t| law.q(t));
        let k = th.map(|t| law.k(t));
        let pressure = pointwise(g, Parity::Even, |i| {
            let r = rho.data[i];
            law.pressure_unchecked(r, th.data[i]) + delta * pow(r, beta)
        });

        let lap_rho = laplacian(g, rho)?;
        let mut r_rho = lap_rho.scale(eps);
        for &a in &axes {
            r_rho.axpy(-1.0, &d(&m.c[a], a));
        }

        let grad_u = velocity_gradient(g, u);
        let grad_rho = grad(g, rho)?;
        let j = curl(g, h)?;
        let lorentz = j.cross(h);

        // div Ψ is summed term by term so every differenced product has a definite parity
        let mut r_m = VectorField::zeros(g);
        for i in 0..3 {
            let acc = &mut r_m.c[i];
            for &a in &axes {
                acc.axpy(-1.0, &d(&(&m.c[i] * &u.c[a]), a));
                acc.axpy(1.0, &d(&(&mu * &grad_u[i][a]), a));
                acc.axpy(1.0, &d(&(&mu * &grad_u[a][i]), a));
            }
            if g.is_active(i) {
                acc.axpy(-1.0, &d(&pressure, i));
                for &a in &axes {
                    acc.axpy(1.0, &d(&(&lambda * &grad_u[a][a]), i));
                }
            }
            for idx in 0..n {
                let mut v = lorentz.c[i].data[idx];
                for &a in &axes {
                    v -= eps * grad_u[i][a].data[idx] * grad_rho.c[a].data[idx];
                }
                acc.data[idx] += v;
            }
            self.zero_walls(acc);
        }

        let psi_du = dissipation_from_gradient(g, &grad_u, th, law);
        let j2 = j.norm_squared();
        let div_u: Vec<f64> = (0..n).map(|i| axes.iter().map(|&a| grad_u[a][a].data[i]).sum()).collect();
        let alpha = law.alpha;
        let nu = law.nu;
        let mut r_e = laplacian(g, &k)?;
        let qm = m.scaled_by(&q);
        for &a in &axes {
            r_e.axpy(-1.0, &d(&qm.c[a], a));
        }
        for idx in 0..n {
            let t = th.data[idx];
            r_e.data[idx] += -delta * pow(t, alpha + 1.0) + (1.0 - delta) * (nu * j2.data[idx] + psi_du.data[idx])
                - t * law.p_theta.eval(rho.data[idx]) * div_u[idx];
        }

        let mut r_h = curl(g, &u.cross(h))?;
        r_h.axpy(-nu, &curl_curl(g, h)?);
        for c in r_h.c.iter_mut() {
            self.zero_walls(c);
        }

        let mut rates = Conserved { rho: r_rho, m: r_m, e: r_e, h: r_h };
        if let Some(src) = &self.source {
            let mut extra = src(s.time);
            for c in extra.m.c.iter_mut().chain(extra.h.c.iter_mut()) {
                self.zero_walls(c);
            }
            rates.axpy(1.0, &extra);
        }
        self.check_rates(&rates, s.time)?;

        let budget = budget.then(|| {
            let production = integrate_by(g, |i| {
                let r = rho.data[i];
                let uu: f64 = (0..3).map(|c| u.c[c].data[i].powi(2)).sum();
                let dr = -0.5 * uu
                    + law.elastic_potential(r)
                    + law.p_e.eval(r) / r
                    + delta * beta * pow(r, beta - 1.0) / (beta - 1.0);
                let mut p = dr * rates.rho.data[i] + rates.e.data[i];
                for c in 0..3 {
                    p += u.c[c].data[i] * rates.m.c[c].data[i] + h.c[c].data[i] * rates.h.c[c].data[i];
                }
                p
            });
            let entropy = (th.min() >= ENTROPY_THETA_FLOOR).then(|| {
                let heat = |i: usize| nu * j2.data[i] + psi_du.data[i];
                let grad_t = grad(g, th).expect("grid checked");
                EntropyRates {
                    production: integrate_by(g, |i| {
                        let t = th.data[i];
                        let gt: f64 = axes.iter().map(|&a| grad_t.c[a].data[i].powi(2)).sum();
                        heat(i) / t + law.kappa.eval(t) * gt / (t * t)
                    }),
                    delta_part: -delta * integrate_by(g, |i| heat(i) / th.data[i] + pow(th.data[i], alpha)),
                    eps_part: eps
                        * integrate_by(g, |i| {
                            let (r, t) = (rho.data[i], th.data[i]);
                            (law.entropy_unchecked(r, t) - q.data[i] / t - law.p_theta.eval(r) / r) * lap_rho.data[i]
                        }),
                }
            });
            BudgetRates {
                production,
                viscous: psi_du.integrate(g),
                magnetic: nu * j2.integrate(g),
                sink: integrate_by(g, |i| pow(th.data[i], alpha + 1.0)),
                eps_dissipation: eps
                    * integrate_by(g, |i| {
                        let r = rho.data[i];
                        let gr: f64 = axes.iter().map(|&a| grad_rho.c[a].data[i].powi(2)).sum();
                        (law.p_e.derivative_or_fd(r) / r + delta * beta * pow(r, beta - 2.0)) * gr
                    }),
                artificial_pressure: delta * integrate_by(g, |i| pow(rho.data[i], beta)),
                entropy,
            }
        });
        Ok(Evaluation { rates, budget })
    }

    fn check_rates(&self, r: &Rates, time: f64) -> Result<(), SolverError> {
        let blocks: [(&str, Option<usize>); 4] = [
            ("mass", r.rho.first_non_finite()),
            ("momentum", r.m.first_non_finite()),
            ("thermal", r.e.first_non_finite()),
            ("induction", r.h.first_non_finite()),
        ];
        match blocks.into_iter().find_map(|(name, i)| i.map(|i| (name, i))) {
            Some((name, i)) => Err(SolverError::Numerical {
                time,
                what: format!("non-finite {name} rate at node {:?}", self.grid.position(i)),
            }),
            None => Ok(()),
        }
    }

    fn project(&self, h: &VectorField, time: f64) -> Result<VectorField, SolverError> {
        self.projector.project(h).map_err(|err| match err {
            FieldError::Projection { .. } => SolverError::Invariant { time, what: err.to_string() },
            other => other.into(),
        })
    }

    /// Largest step the explicit update tolerates, before the safety factor.
    pub fn stability_limit(&self, s: &State) -> f64 {
        let g = &self.grid;
        let law = &self.law;
        let SchemeParams { epsilon: eps, delta, beta, .. } = self.params;
        let dims = g.dimension().max(1) as f64;
        let h = g.h_min();
        let floor = 0.5 * delta;
        let mut speed: f64 = 0.0;
        for i in 0..g.len() {
            let r = s.rho.data[i].max(floor);
            let t = s.theta.data[i].max(0.0);
            let pt = law.p_theta.eval(r);
            let c2 = law.p_e.derivative_or_fd(r)
                + t * law.p_theta.derivative_or_fd(r)
                + delta * beta * pow(r, beta - 1.0)
                + t * pt * pt / (r * r * law.c_v.eval(t));
            let (uu, hh) =
                (0..3).fold((0.0, 0.0), |(a, b), c| (a + s.u.c[c].data[i].powi(2), b + s.h.c[c].data[i].powi(2)));
            speed = speed.max(uu.sqrt() + (c2.max(0.0) + hh / r).sqrt());
        }
        let rho_min = s.rho.min().max(floor);
        let theta_max = s.theta.max().max(0.0);
        let over = |f: &dyn Fn(f64) -> f64| s.theta.data.iter().map(|&t| f(t)).fold(f64::NEG_INFINITY, f64::max);
        let mu_max = over(&|t| law.mu.eval(t));
        let lambda_max = over(&|t| law.lambda.eval(t)).max(0.0);
        let kappa_max = over(&|t| law.kappa.eval(t));
        let cv_min = -over(&|t| -law.c_v.eval(t));
        let diffusivity =
            eps.max(law.nu).max((2.0 * mu_max + lambda_max) / rho_min).max(kappa_max / ((rho_min + delta) * cv_min));
        let advective = if speed > 0.0 { h / speed } else { f64::INFINITY };
        let diffusive = h * h / (2.0 * dims * diffusivity);
        let sink = if theta_max > 0.0 {
            (rho_min + delta) * cv_min / (delta * (law.alpha + 1.0) * pow(theta_max, law.alpha))
        } else {
            f64::INFINITY
        };
        advective.min(diffusive).min(sink)
    }

    /// `safety · stability_limit`, with the default safety under a fixed policy.
    pub fn stable_dt(&self, s: &State) -> f64 {
        self.safety() * self.stability_limit(s)
    }

    pub(crate) fn safety(&self) -> f64 {
        match self.params.dt {
            DtPolicy::Cfl { safety } => safety,
            DtPolicy::Fixed { .. } => DEFAULT_SAFETY,
        }
    }

    pub fn step(&self, s: &State, dt: f64) -> Result<(State, StepReport), SolverError> {
        let r0 = self.rhs(s)?;
        self.step_from(s, &r0, dt)
    }

    /// Heun step reusing the already evaluated rates at `s`.
    pub fn step_from(&self, s: &State, r0: &Rates, dt: f64) -> Result<(State, StepReport), SolverError> {
        self.step_within(s, r0, dt, self.stability_limit(s))
    }

    /// `step_from` with the stability limit at `s` already computed.
    pub(crate) fn step_within(
        &self,
        s: &State,
        r0: &Rates,
        dt: f64,
        limit: f64,
    ) -> Result<(State, StepReport), SolverError> {
        if !(dt > 0.0 && dt.is_finite()) || dt > limit * (1.0 + 1e-9) {
            return Err(SolverError::Precondition(format!("dt = {dt:e} outside (0, {limit:e}] at t = {}", s.time)));
        }
        let t1 = s.time + dt;
        let u0 = self.conserved(s);
        let mut u1 = u0.clone();
        u1.axpy(dt, r0);
        u1.h = self.project(&u1.h, t1)?;
        let (s1, guard1) = self.recover(&u1, t1)?;
        let r1 = self.rhs(&s1)?;
        let mut next = u0.scale(0.5);
        next.axpy(0.5, &u1);
        next.axpy(0.5 * dt, &r1);
        next.h = self.project(&next.h, t1)?;
        let (s2, guard2) = self.recover(&next, t1)?;
        Ok((s2, StepReport { guard_incidents: guard1 + guard2 }))
    }
}
