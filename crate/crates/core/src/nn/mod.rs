//! Minimal dense-tensor kernel and layer stack with hand-written backward
//! passes: linear, 2-D convolution, batch normalization and ReLU.

mod arch;
mod gradcheck;
mod io;
mod layer;
mod model;
mod tensor;

pub use arch::{build_model, Architecture, DEFAULT_CONV_CHANNELS, DEFAULT_MLP_HIDDEN};
pub use gradcheck::{grad_check, GradCheck};
pub use io::{ModelHeader, MODEL_MAGIC};
pub use layer::LayerSpec;
pub use model::{Gradients, Mode, Model};
pub use tensor::Tensor;


