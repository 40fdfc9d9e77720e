//! Rank-one spiked matrix estimation: Bayes denoisers, the scalar channel, the
//! algorithmic and Bayes thresholds, and Bayes-optimal AMP.

mod amp;
mod scalar;

pub use amp::{overlap, run_bayes_amp, BayesAmpOptions, BayesAmpResult};
pub use scalar::{
    f_of_gamma, gamma_alg, gamma_bayes, mutual_information, overlap_of, psi, se_fixed_points, se_scalar_recursion,
    threshold_table, write_threshold_csv, Denoiser, ScalarChannel, ScalarChannelState, ScalarTrajectory, Threshold,
    ThresholdRow, SCALAR_GH_ORDER,
};
