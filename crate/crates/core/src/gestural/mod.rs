//! Gestural-score kernels: convolutive matrix factorization, duration and
//! intensity shaping, sparse sampling, multi-scale reconstruction, and the
//! KL/density utilities used by the gestural VAE objective.

mod cmf;
mod kl;
pub mod matrix_io;
mod multiscale;
mod shaping;

pub use cmf::{cmf_apply, cnmf_fit, relative_error, CnmfConfig, CnmfFit};
pub use kl::{
    cov_logdensity, elbo_kl_terms, gaussian_kl, kl_to_standard_normal, mc_kl, Density, GaussianSpec, KlTerms,
    LinearFlow, McEstimate, Sample,
};
pub use multiscale::{multiscale_reconstruct, multiscale_reconstruct_with, SCALES};
pub use shaping::{
    apply_mask, gumbel_duration, hann_apply, hann_window, sample_gumbel_uniforms, sigmoid, sparse_mask, SparseMask,
    SparseWeights, DEFAULT_DURATION_CLASSES, DEFAULT_GUMBEL_TAU,
};

use ndarray::{Array2, Array3};
use thiserror::Error;

/// Default number of gestures.
pub const DEFAULT_GESTURES: usize = 40;

#[derive(Debug, Error)]
pub enum GesturalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("input must be nonnegative")]
    NegativeInput,
    #[error("logits must be positive")]
    NonPositiveLogit,
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("gumbel noise must lie in (0, 1)")]
    BadNoise,
    #[error("duration must be at least 2 frames, got {0}")]
    BadDuration(usize),
    #[error("index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),
    #[error("invalid sigma: {0}")]
    InvalidSigma(String),
    #[error("not a probability vector: {0}")]
    InvalidSimplex(String),
    #[error("linear map is singular")]
    SingularMap,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("matrix format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Motion kernels `G`, shape `[T x d x K]` (window, channels, gestures).
#[derive(Debug, Clone, PartialEq)]
pub struct GestureDict(Array3<f64>);

impl GestureDict {
    pub fn new(kernels: Array3<f64>) -> Result<Self, GesturalError> {
        let (t, d, k) = kernels.dim();
        if t == 0 || d == 0 || k == 0 {
            return Err(GesturalError::DimensionMismatch(format!("empty dictionary {t}x{d}x{k}")));
        }
        if kernels.iter().any(|v| !v.is_finite()) {
            return Err(GesturalError::DimensionMismatch("non-finite kernel entry".into()));
        }
        Ok(GestureDict(kernels))
    }

    pub fn kernels(&self) -> &Array3<f64> {
        &self.0
    }

    pub fn window(&self) -> usize {
        self.0.dim().0
    }

    pub fn channels(&self) -> usize {
        self.0.dim().1
    }

    pub fn gestures(&self) -> usize {
        self.0.dim().2
    }
}

/// Activations `H`, shape `[K x t]`, with optional per-cell pre-sigmoid
/// intensity and duration class.
#[derive(Debug, Clone, PartialEq)]
pub struct GesturalScore {
    pub activations: Array2<f64>,
    pub intensity: Option<Array2<f64>>,
    pub duration: Option<Array2<f64>>,
}

impl GesturalScore {
    pub fn new(activations: Array2<f64>) -> Self {
        GesturalScore { activations, intensity: None, duration: None }
    }

    pub fn zeros(gestures: usize, frames: usize) -> Self {
        GesturalScore::new(Array2::zeros((gestures, frames)))
    }

    pub fn gestures(&self) -> usize {
        self.activations.nrows()
    }

    pub fn frames(&self) -> usize {
        self.activations.ncols()
    }
}
