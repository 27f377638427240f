//! Structured-grid fields and the discrete vector calculus on them.

mod field;
mod grid;
mod ops;
mod projection;
mod snapshot;

pub use field::{integrate_by, ScalarField, SymTensorField, VectorField};
pub use grid::{pairwise_sum, pairwise_sum_by, BoundaryTag, FieldFamily, Grid, Parity};
pub use ops::{
    curl, curl_curl, derivative, differential, dissipation, dissipation_from_gradient, div, grad, induction_rhs,
    laplacian, lorentz_force, lorentz_work_identity_residual, second_derivative, stress_tensor, vector_laplacian,
    velocity_gradient, Differential, Field,
};
pub use projection::{project_divfree, DivFreeProjector, PROJECTION_TOLERANCE};
pub use snapshot::{Snapshot, SNAPSHOT_MAGIC};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field has {found} values, grid {expected:?} needs their product")]
    Shape { expected: [usize; 3], found: usize },
    #[error("{op:?} cannot act on a {found} field")]
    Arity { op: Differential, found: &'static str },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("projection left ‖div H‖₂ = {residual:e} against ‖H‖₂ = {norm:e}")]
    Projection { residual: f64, norm: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
