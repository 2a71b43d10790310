//! Binaural signal matching (BSM) for arbitrary microphone arrays.
//!
//! Designs per-frequency filters that map microphone signals to the two ear
//! signals (regularized LS, magnitude LS, and their frequency crossfade, with
//! optional field-of-view weighting) and evaluates them with normalized MSE,
//! ILD, ITD and null-space measures.

pub mod dataset;
pub mod design;
pub mod dsp;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod scene;
mod lebedev_table;
pub mod steering;

pub use dataset::{ComplexCube, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance, SteeringSet};
pub use design::{BsmFilterBank, Criterion, FovSpec};
pub use error::{BsmError, Result};
pub use geometry::{angular_distance, nearest_direction, ArrayGeometry, Direction, DirectionGrid};
