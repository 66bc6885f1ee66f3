use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, VoxelError>;

#[derive(Debug)]
pub enum VoxelError {
    Io { path: PathBuf, source: std::io::Error },
    /// STL parse failure, locating the problem by byte offset (binary) or
    /// line number (ASCII).
    Stl { offset: Option<usize>, line: Option<usize>, detail: String },
    /// binvox container violation (magic, dims, RLE accounting).
    Binvox { detail: String },
    InvalidArgument { detail: String },
    Tensor(vxae_tensor::TensorError),
}

impl fmt::Display for VoxelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoxelError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            VoxelError::Stl { offset, line, detail } => match (offset, line) {
                (Some(o), _) => write!(f, "stl parse error at byte {o}: {detail}"),
                (None, Some(l)) => write!(f, "stl parse error at line {l}: {detail}"),
                _ => write!(f, "stl parse error: {detail}"),
            },
            VoxelError::Binvox { detail } => write!(f, "binvox format error: {detail}"),
            VoxelError::InvalidArgument { detail } => write!(f, "invalid argument: {detail}"),
            VoxelError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VoxelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            VoxelError::Io { source, .. } => Some(source),
            VoxelError::Tensor(e) => Some(e),
            _ => None,
        }
    }
}

impl From<vxae_tensor::TensorError> for VoxelError {
    fn from(e: vxae_tensor::TensorError) -> Self {
        VoxelError::Tensor(e)
    }
}

pub(crate) fn stl_byte_err<T>(offset: usize, detail: impl Into<String>) -> Result<T> {
    Err(VoxelError::Stl { offset: Some(offset), line: None, detail: detail.into() })
}

pub(crate) fn stl_line_err<T>(line: usize, detail: impl Into<String>) -> Result<T> {
    Err(VoxelError::Stl { offset: None, line: Some(line), detail: detail.into() })
}

pub(crate) fn binvox_err<T>(detail: impl Into<String>) -> Result<T> {
    Err(VoxelError::Binvox { detail: detail.into() })
}

pub(crate) fn arg_err<T>(detail: impl Into<String>) -> Result<T> {
    Err(VoxelError::InvalidArgument { detail: detail.into() })
}
