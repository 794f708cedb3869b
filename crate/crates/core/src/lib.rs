//! Bird's-eye-view semantic occupancy grids and trajectory forecasting.
//!
//! The crate is organized around one intermediate representation: a metric,
//! ego-centric occupancy grid with five semantic channels (obstacles, road,
//! lane markings, target vehicle, other vehicles). On top of it sit
//!
//! - [`grid`]: grid geometry, rasterization, resizing and raster file I/O,
//! - [`synth`]: a deterministic synthetic scenario generator and dataset store,
//! - [`tensor`]: a small reverse-mode differentiation engine with exactly the
//!   operators the forecaster needs, plus the optimizer,
//! - [`model`]: the encoder/ConvLSTM/decoder forecaster, its training loop and
//!   autoregressive rollout,
//! - [`markov`]: a discrete Bayes-filter baseline with a constant-velocity
//!   motion model,
//! - [`eval`]: displacement metrics, ablation drivers and data association,
//! - [`predict`]: the registry of trajectory-prediction strategies selected
//!   by name at runtime.

pub mod eval;
pub mod geom;
pub mod grid;
pub mod markov;
pub mod model;
pub mod predict;
pub mod synth;
pub mod tensor;
