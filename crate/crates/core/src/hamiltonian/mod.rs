//! Mixed p-spin Hamiltonians and exhaustive-enumeration oracles.

mod instance;
mod mixing;
mod oracle;

pub use instance::{Component, Configuration, Flavor, PSpinInstance};
pub use mixing::MixingPolynomial;
pub use oracle::{
    brute_force_opt, covariance_probe, enumerate_energies, free_energy, free_energy_from_energies,
    spins_from_index, CovarianceCell, OptResult, MAX_ENUMERATION_N,
};
