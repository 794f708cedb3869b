//! Minimal reverse-mode differentiation engine.
//!
//! The engine supplies exactly the operators the forecaster needs: 2D
//! convolution, 2x2 max-pooling, bilinear upsampling, elementwise
//! nonlinearities, the two loss terms, and a convolutional LSTM step built
//! from those primitives. Values are recorded on a [`Tape`]; calling
//! [`Tape::backward`] walks the tape once in reverse topological order and
//! accumulates gradients into every node.
//!
//! Everything is generic over the scalar type: `f32` for training, `f64` for
//! finite-difference gradient checks. A tape is single-threaded; independent
//! tapes on different threads do not share state.

mod checkpoint;
mod lstm;
mod optim;
mod tape;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use lstm::{conv_lstm_step, ConvLstmStateData, ConvLstmWeights};
pub use optim::{adam_step, clip_global_norm, global_norm, AdamConfig, AdamState};
pub use tape::{Tape, Var};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use thiserror::Error;

/// Scalar types the engine runs on.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    fn from_real(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 conversion")
    }
    fn to_real(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("{op}: expected a scalar, got shape {shape:?}")]
    NotScalar { op: &'static str, shape: Vec<usize> },
    #[error("non-finite gradient for parameter {param:?}; step aborted")]
    NonFiniteGradient { param: String },
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
}

/// A dense N-dimensional array of scalars in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Array<S> {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Vec<S>,
}

impl<S: Scalar> Array<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self, TensorError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TensorError::InvalidShape(format!(
                "shape {shape:?} holds {n} elements but {} were provided",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: S) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Converts element-by-element into another scalar type.
    pub fn cast<T: Scalar>(&self) -> Array<T> {
        Array {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| T::from_real(v.to_real())).collect(),
        }
    }
}

/// An ordered collection of named parameter arrays.
#[derive(Debug, Clone)]
pub struct ParamSet<S> {
    entries: Vec<(String, Array<S>)>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Appends a parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, array: Array<S>) -> usize {
        self.entries.push((name.into(), array));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.entries[idx].0
    }

    pub fn array(&self, idx: usize) -> &Array<S> {
        &self.entries[idx].1
    }

    pub fn array_mut(&mut self, idx: usize) -> &mut Array<S> {
        &mut self.entries[idx].1
    }

    pub fn index_of(&self, name: &str) -> Result<usize, TensorError> {
        self.entries
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array<S>)> {
        self.entries.iter().map(|(n, a)| (n.as_str(), a))
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, a)| a.numel()).sum()
    }

    pub fn cast<T: Scalar>(&self) -> ParamSet<T> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, a)| (n.clone(), a.cast()))
                .collect(),
        }
    }
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}
