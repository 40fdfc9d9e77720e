//! Incremental AMP for mixed p-spin optimization, its state-evolution shadow,
//! rounding, and the spectral baseline.

mod control;
mod rounding;
mod run;
mod shadow;

pub use control::{control_diagnostics, ControlDiagnostics, ControlField};
pub use rounding::{round_to_cube, round_to_sphere, sign_vector, spectral_baseline, Rounded, SpectralBaseline};
pub use run::{run_iamp, IampOptions, IampStep, IampTrajectory};
pub use shadow::{se_shadow, ShadowReport};
