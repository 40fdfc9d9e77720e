//! Mean-field spin glass algorithms: random ensembles, the Parisi variational
//! problem, approximate message passing with state evolution, Bayes-optimal AMP
//! for spiked matrices, incremental AMP optimization and belief propagation.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`.

pub mod amp;
pub mod ensembles;
pub mod error;
pub mod hamiltonian;
pub mod iamp;
pub mod numerics;
pub mod parisi;
pub mod scalar;
pub mod sparse_mp;
pub mod spiked;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = ensembles::SymmetricMatrix<f64>;
pub type Tensor = ensembles::SymmetricTensor<f64>;
pub type Instance = hamiltonian::PSpinInstance<f64>;
pub type Spiked = ensembles::SpikedInstance<f64>;
