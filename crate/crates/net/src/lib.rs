//! Voxel autoencoder networks: the MBConv3D / MBConvTranspose3D building
//! blocks, the reference CNN-DCNN autoencoder, the residual autoencoder with
//! its 256-value latent bottleneck, and the checkpoint container.

mod blocks;
mod checkpoint;
mod error;
mod model;

pub use blocks::{
    block_forward, block_output_shape, block_param_count, count_params, init_block,
    squeeze_excite, visit_block_tensors, BlockKind, BlockParams, BlockSpec, BnParams,
    MbConvParams, SeParams, ShapeState, BN_EPS, BN_MOMENTUM,
};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, export_encoder, load_checkpoint_file, restore_model,
    restore_optimizer, save_checkpoint_file, snapshot_model, AdamSnapshot, Checkpoint,
    NamedTensorData, MAGIC, VERSION,
};
pub use error::{NetError, Result};
pub use model::{
    build_baseline, build_by_name, build_residual, Model, ModelSpec, WidthPreset, LATENT_DIM,
};

/// Write `bytes` to `path` atomically: temp file in the same directory, then
/// rename. Interrupted writers never leave a truncated file behind.
pub fn atomic_write(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => std::path::PathBuf::from(format!(".atomic.tmp{}", std::process::id())),
    };
    std::fs::write(&tmp, bytes)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}
