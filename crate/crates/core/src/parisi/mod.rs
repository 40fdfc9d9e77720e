//! The Parisi variational problem for step-function order parameters.

mod minimize;
mod pde;
mod profile;

pub use minimize::{minimize, spherical_value, MinimizeOptions, ParisiFit};
pub use pde::{
    functional, solve_pde, spherical_coefficients, spherical_denominator, spherical_functional_exact, Boundary,
    GridParams, ParisiSolution, ParisiValue, Slice,
};
pub use profile::RSBProfile;

use crate::error::Result;
use crate::iamp::ControlField;
use crate::scalar::Real;

/// Control field `u = ∂ₓₓΦ`, `v = ξ″γ∂ₓΦ` on the time grid of step `delta`;
/// slices at multiples of `delta` are added when the solution lacks them.
pub fn export_control<T: Real>(solution: &ParisiSolution<T>, delta: T) -> Result<ControlField<T>> {
    ControlField::ising(solution, delta)
}
