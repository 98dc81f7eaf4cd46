//! Computational core of a saliency attentive model.
//!
//! The crate provides, at desk scale and in double precision throughout:
//!
//! - a minimal dense-tensor kernel set (convolution with stride/dilation/
//!   padding, pooling, activations, spatial softmax, bilinear resize),
//! - layer graphs for feature backbones and the stride-to-dilation transform
//!   that raises output resolution without touching parameter shapes,
//! - an attentive convolutional LSTM that iteratively refines a static
//!   feature stack,
//! - learnable Gaussian center-bias priors,
//! - the saliency metric suite (NSS, CC, KL, AUC-Judd, shuffled AUC, SIM,
//!   exact EMD) and the composite training loss,
//! - reverse-mode gradients over the whole model with a finite-difference
//!   oracle, RMSprop, and a toy training loop,
//! - pre/postprocessing, PGM/SAMT file formats and synthetic datasets.
//!
//! Everything is pure and deterministic given explicit seeds; tensors are
//! immutable values that are safe to share across threads.

pub mod attention;
pub mod autodiff;
pub mod backbone;
pub mod error;
mod init;
pub mod metrics;
pub mod pipeline;
pub mod priors;
pub mod samt;
pub mod tensor;
pub mod train;
pub mod transport;

pub use error::{Result, SamError};
pub use metrics::{DensityMap, FixationMap, LossWeights, MetricKind, MetricReport};
pub use tensor::{Activation, ElemOp, Padding, Tensor};
