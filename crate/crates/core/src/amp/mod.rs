//! General AMP with separable nonlinearities, its state evolution, and the
//! comparison harness between the two.

mod compare;
mod run;
mod schedule;
mod se;

pub use compare::{gram_deviation, gram_tests, se_compare, write_compare_csv, CompareRow, TestFunction};
pub use run::{amp_run, onsager, AmpOptions, AmpTrajectory};
pub use schedule::{
    derivative_mismatch, partial_derivative, DerivativeMethod, FnSchedule, Schedule, Separable, FD_STEP,
};
pub use se::{
    state_evolution, state_evolution_quadrature, InitLaw, Marginal, SeMethod, StateEvolution, MIN_MC_SAMPLES,
    SE_GH_ORDER,
};
