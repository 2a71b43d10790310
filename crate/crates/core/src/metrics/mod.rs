//! Evaluation measures: normalized MSE variants, ILD, ITD and null-space projection.

pub mod erb;
pub mod ild;
pub mod itd;
pub mod mse;
pub mod null_space;
mod report;

pub use erb::{make_erb_filterbank, ErbFilterbank};
pub use ild::{ild, ild_error, Ild, IldError};
pub use itd::{group_delay, itd, itd_error};
pub use mse::{band_average, eps_ls, eps_magls, eps_mixed};
pub use null_space::{null_space_projection, NULL_FLOOR_DB};
pub use report::{
    evaluate, reproduced_spectra, Column, DirectionMetric, DirectionRow, EvalConfig, FrequencyRow, MetricsReport,
    ITD_JND_FRONTAL_US, ITD_JND_LATERAL_US, PLOT_F_HI, PLOT_F_LO,
};
