//! Stationary-point geometry: classification, Hessian nullspace at
//! zero-misfit minima, curvature at degenerate activation points, and the
//! negative-orthant Monte Carlo.

mod classify;
mod curvature;
mod nullspace;
mod orthant;
mod tolerances;

pub use classify::{classify_stationary, deep_classify_stationary, Degeneracy, StationaryReport, Verdict};
pub use curvature::{
    find_negative_curvature, negative_curvature_form, CurvatureClass, CurvatureReport,
};
pub use nullspace::{
    construct_null_direction, directional_operator, nullspace_at_minimum, NullDirection,
    NullspaceResult,
};
pub use orthant::{orthant_probability, OrthantEstimate, ORTHANT_CHUNK};
pub use tolerances::Tolerances;
