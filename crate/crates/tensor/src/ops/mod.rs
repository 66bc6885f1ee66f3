//! Forward kernels and their backward rules.

mod conv;
mod dropout;
mod elementwise;
mod linear;
mod loss;
mod norm;
mod pool;

pub use conv::{
    conv3d, conv3d_transpose, conv_output_extent, conv_transpose_output_extent, depthwise_conv3d,
    depthwise_conv3d_transpose, pointwise_conv3d,
};
pub use dropout::dropout;
pub use elementwise::{add, flatten, mul, reshape, scale_channels, sigmoid, silu, sum};
pub use linear::dense;
pub use loss::mse_loss;
pub use norm::batch_norm;
pub use pool::{global_avg_pool3d, max_pool3d};

/// Forward-pass mode. Train mode carries the RNG context that keys dropout
/// masks, so a run is reproducible regardless of thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64, step: u64 },
    Eval,
}

impl Mode {
    pub fn train(seed: u64, step: u64) -> Self {
        Mode::Train { seed, step }
    }

    pub fn is_train(self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}
