use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, NetError>;

#[derive(Debug)]
pub enum NetError {
    Tensor(vxae_tensor::TensorError),
    /// Block/model description violates an invariant.
    Spec { detail: String },
    /// Checkpoint bytes are malformed or inconsistent with the model.
    Checkpoint { detail: String },
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::Tensor(e) => write!(f, "{e}"),
            NetError::Spec { detail } => write!(f, "model spec error: {detail}"),
            NetError::Checkpoint { detail } => write!(f, "checkpoint error: {detail}"),
            NetError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for NetError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            NetError::Tensor(e) => Some(e),
            NetError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<vxae_tensor::TensorError> for NetError {
    fn from(e: vxae_tensor::TensorError) -> Self {
        NetError::Tensor(e)
    }
}

pub(crate) fn spec_err<T>(detail: impl Into<String>) -> Result<T> {
    Err(NetError::Spec { detail: detail.into() })
}

pub(crate) fn ckpt_err<T>(detail: impl Into<String>) -> Result<T> {
    Err(NetError::Checkpoint { detail: detail.into() })
}
