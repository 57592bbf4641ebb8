//! Convolutional demodulator built from scratch.
//!
//! The network maps one raw symbol window to tone probabilities:
//!
//! ```text
//! input (N) -> reshape (N, 1) -> batch-norm -> conv1d (N, F), kernel K, "same"
//!   -> batch-norm -> flatten (N*F) -> dense (H) + ReLU -> batch-norm
//!   -> dense (M) + softmax
//! ```
//!
//! Everything is generic over [`Scalar`] so the 32-bit training build and
//! the 64-bit gradient-check build run the same code.

mod adam;
mod gradcheck;
mod layers;
mod model;
mod persist;
mod train;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use layers::{BatchNorm, Conv1d, Dense, BN_EPSILON, BN_MOMENTUM};
pub use model::{build_model, cross_entropy, Gradients, Mode, ModelState, ParameterCounts, TRAINABLE_NAMES};
pub use persist::{load_weights, save_weights, state_digest, WeightsError, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use train::{train, train_step, train_with_progress, EpochStats, Examples, StepOutcome, TrainConfig, TrainLog};

/// Storage type tag used in the weights file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    F64 = 1,
}

impl DType {
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(DType::F32),
            1 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Floating-point element type of a model.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + AddAssign + Debug + Default + Send + Sync + 'static
{
    const DTYPE: DType;

    fn write_le(self, out: &mut Vec<u8>);

    /// Reads one value from exactly `DTYPE.size()` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {
    const DTYPE: DType = DType::F32;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Scalar for f64 {
    const DTYPE: DType = DType::F64;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

/// Architecture hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Samples per input window (N).
    pub input_len: usize,
    /// Convolution filters (F).
    pub conv_filters: usize,
    /// Convolution kernel length (K).
    pub conv_kernel: usize,
    /// Hidden dense units (H).
    pub hidden_units: usize,
    /// Output classes (M).
    pub classes: usize,
}

impl ModelConfig {
    /// N = 4096, F = 128, K = 16, H = 64, M = 64.
    pub fn jt65a_full() -> Self {
        Self {
            input_len: 4096,
            conv_filters: 128,
            conv_kernel: 16,
            hidden_units: 64,
            classes: 64,
        }
    }

    /// N = 512, F = 32, K = 16, H = 32, M = 8.
    pub fn reduced_m8() -> Self {
        Self {
            input_len: 512,
            conv_filters: 32,
            conv_kernel: 16,
            hidden_units: 32,
            classes: 8,
        }
    }

    /// Small configuration used for finite-difference checks.
    pub fn grad_check_small() -> Self {
        Self {
            input_len: 64,
            conv_filters: 4,
            conv_kernel: 8,
            hidden_units: 8,
            classes: 4,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let fields = [
            ("input_len", self.input_len),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("hidden_units", self.hidden_units),
            ("classes", self.classes),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(NeuralError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.classes < 2 {
            return Err(NeuralError::InvalidConfig("need at least two classes".into()));
        }
        if self.conv_kernel > self.input_len {
            return Err(NeuralError::InvalidConfig(format!(
                "kernel {} longer than input {}",
                self.conv_kernel, self.input_len
            )));
        }
        Ok(())
    }

    /// Width of the flattened convolution output (N * F).
    pub fn flat_len(&self) -> usize {
        self.input_len * self.conv_filters
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("input has {got} values, expected a multiple of {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("batch of {inputs} inputs has {labels} labels")]
    LabelCount { inputs: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("loss became non-finite at step {step} (learning rate too high?)")]
    NonFiniteLoss { step: u64 },
}
