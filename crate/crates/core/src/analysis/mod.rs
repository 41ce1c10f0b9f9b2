//! Gamma-distribution modelling of the block-average SINR.

mod curves;
mod fit;
pub mod special;

pub use curves::{param_curves_eval, table_entry, ParamCurves, TableEntry, PUBLISHED_CURVES, PUBLISHED_TABLE};
pub use fit::{
    fit_gamma, gamma_cdf, gamma_pdf, ks_statistic, theoretical_op, GammaFit, MAX_NEWTON_ITERATIONS, MIN_FIT_SAMPLES,
};
