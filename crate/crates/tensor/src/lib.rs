//! Dense tensor arithmetic with reverse-mode automatic differentiation.
//!
//! Every network operation in this workspace is built on the kernels here:
//! 3D convolutions (plain, depthwise, transposed, pointwise), pooling, batch
//! normalization, dropout, dense layers and the MSE loss, all recorded on a
//! per-forward-pass tape so `backward` can fill parameter gradients. The Adam
//! optimizer consumes those gradients in place.
//!
//! Tensors are generic over the element type: training runs at `f32`, while
//! the gradient-check suite drives the same kernels at `f64` so finite
//! differences can be compared at tight tolerances.

mod adam;
mod error;
mod graph;
pub mod gradcheck;
pub mod ops;
pub mod rng;
mod scalar;
mod tensor;

pub use adam::Adam;
pub use error::{Result, TensorError};
pub use graph::{backward, Graph};
pub use ops::Mode;
pub use scalar::Scalar;
pub use tensor::Tensor;
