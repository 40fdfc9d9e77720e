//! Numerical building blocks: special functions, quadrature rules,
//! derivative-free optimizers and a few statistical tests.

pub mod optimize;
pub mod quadrature;
pub mod special;
pub mod stats;

pub use optimize::{bisect, golden_section, nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use quadrature::{adaptive_simpson, GaussHermite};
pub use special::{erfc, log_normal_cdf, normal_cdf, normal_pdf};
pub use stats::{ks_normal_test, KsResult};
