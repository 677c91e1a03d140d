//! Physical-measure estimation: IG maximum likelihood on the volatility index,
//! ECF fitting of the return models and goodness-of-fit diagnostics.

mod ecf;
mod gof;
mod ig_mle;
mod series;

pub use ecf::{
    default_starts, ecf_noise_level, ecf_objective, empirical_chf, fit_ecf, log_likelihood, mom_start,
    EcfCandidate, EcfFit, EcfFitOptions, EcfGrid, EcfTarget, ECF_GRID_POINTS,
};
pub use gof::{gof_report, gof_report_with, kolmogorov_q, ks_test, GofReport};
pub use ig_mle::{fit_ig_mle, fit_ig_mle_values, ig_cdf, ig_log_likelihood, DEFAULT_VIX_SCALE};
pub use series::{ReturnSeries, VixSeries, MIN_FIT_LEN};
