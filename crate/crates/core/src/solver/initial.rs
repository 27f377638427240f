//! Clamping of raw initial data into the range the scheme needs.

use super::{SchemeParams, SolverError, State};
use crate::fieldops::{integrate_by, DivFreeProjector, Grid, Parity, ScalarField, VectorField};

/// Unprocessed initial fields; `m` is the momentum `ρ₀u₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawInitialData {
    pub rho: ScalarField,
    pub m: VectorField,
    pub theta: ScalarField,
    pub h: VectorField,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClampBounds {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClampStats {
    /// Nodes where `ρ₀` was raised to `δ`.
    pub raised: usize,
    /// Nodes where `ρ₀` was lowered to `δ^{-1/(2β)}`; momentum is zeroed there.
    pub lowered: usize,
    /// Quadrature measure of the lowered set.
    pub lowered_measure: f64,
    pub theta_clamped: usize,
    /// `‖H₀ - P H₀‖₂`
    pub projection_change: f64,
}

impl ClampStats {
    pub fn incidents(&self) -> usize {
        self.raised + self.lowered + self.theta_clamped
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedInitialData {
    pub rho0: ScalarField,
    pub m0: VectorField,
    pub theta0: ScalarField,
    pub h0: VectorField,
    pub bounds: ClampBounds,
    /// `true` where the momentum was zeroed because the density was lowered.
    pub zeroed: Vec<bool>,
    pub stats: ClampStats,
}

/// Clamps `ρ₀` into `[δ, δ^{-1/(2β)}]` and `θ₀` into `[θ̲, θ̄]`, zeroes the
/// momentum where the density was lowered and projects `H₀`.
///
/// `theta_bounds` defaults to the raw extrema of `θ₀`. Momentum and `H₀`
/// are also set to zero on the walls.
pub fn mollify_initial_data(
    grid: &Grid,
    raw: &RawInitialData,
    params: &SchemeParams,
    theta_bounds: Option<(f64, f64)>,
) -> Result<MollifiedInitialData, SolverError> {
    raw.rho.check_grid(grid)?;
    raw.m.check_grid(grid)?;
    raw.theta.check_grid(grid)?;
    raw.h.check_grid(grid)?;
    let (delta, beta) = (params.delta, params.beta);
    if !(delta > 0.0 && delta < 1.0 && beta > 0.0) {
        return Err(SolverError::Parameter(format!(
            "mollification needs 0 < delta < 1, beta > 0; got {delta}, {beta}"
        )));
    }
    if let Some(i) = raw.rho.data.iter().position(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(SolverError::Precondition(format!(
            "raw density {} at {:?} violates rho0 >= 0",
            raw.rho.data[i],
            grid.position(i)
        )));
    }
    let (raw_lo, raw_hi) = (raw.theta.min(), raw.theta.max());
    if !(raw_lo > 0.0) || !raw_hi.is_finite() {
        return Err(SolverError::Precondition(format!(
            "raw temperature minimum {raw_lo} violates theta0 >= theta_lo > 0"
        )));
    }
    let (theta_lo, theta_hi) = theta_bounds.unwrap_or((raw_lo, raw_hi));
    if !(theta_lo > 0.0 && theta_hi >= theta_lo) {
        return Err(SolverError::Parameter(format!(
            "temperature clamp [{theta_lo}, {theta_hi}] violates 0 < theta_lo <= theta_hi"
        )));
    }
    let bounds = ClampBounds { rho_lo: delta, rho_hi: delta.powf(-1.0 / (2.0 * beta)), theta_lo, theta_hi };

    let mut stats = ClampStats::default();
    let rho0: Vec<f64> = raw.rho.data.iter().map(|&r| r.clamp(bounds.rho_lo, bounds.rho_hi)).collect();
    let zeroed: Vec<bool> = rho0.iter().zip(&raw.rho.data).map(|(a, b)| a < b).collect();
    stats.raised = rho0.iter().zip(&raw.rho.data).filter(|(a, b)| a > b).count();
    stats.lowered = zeroed.iter().filter(|&&z| z).count();
    stats.lowered_measure = integrate_by(grid, |i| if zeroed[i] { 1.0 } else { 0.0 });

    let m0 = VectorField::new(std::array::from_fn(|c| {
        let data =
            (0..grid.len()).map(|i| if zeroed[i] || grid.on_wall(i) { 0.0 } else { raw.m.c[c].data[i] }).collect();
        ScalarField::from_vec(grid, [Parity::Odd; 3], data).expect("length matches grid")
    }));
    let theta0: Vec<f64> = raw.theta.data.iter().map(|&t| t.clamp(theta_lo, theta_hi)).collect();
    stats.theta_clamped = theta0.iter().zip(&raw.theta.data).filter(|(a, b)| a != b).count();

    let h0 = DivFreeProjector::new(grid)?.project(&raw.h)?;
    stats.projection_change = (&h0 - &raw.h).l2_norm(grid);

    Ok(MollifiedInitialData {
        rho0: ScalarField::from_vec(grid, [Parity::Even; 3], rho0)?,
        m0,
        theta0: ScalarField::from_vec(grid, [Parity::Even; 3], theta0)?,
        h0,
        bounds,
        zeroed,
        stats,
    })
}

impl MollifiedInitialData {
    /// The primitive state at `t = 0`.
    pub fn state(&self) -> State {
        let u =
            VectorField::new(std::array::from_fn(|c| self.m0.c[c].zip_map(&self.rho0, [Parity::Odd; 3], |m, r| m / r)));
        State::new(0.0, self.rho0.clone(), u, self.theta0.clone(), self.h0.clone())
    }
}
