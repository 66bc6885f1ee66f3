use std::fmt;

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    /// Operand shapes are incompatible for the named op.
    ShapeMismatch { op: &'static str, detail: String },
    /// An argument is out of its legal range.
    InvalidArgument { op: &'static str, detail: String },
    /// `backward` was called on a tensor that is not a scalar.
    NonScalarBackward { shape: Vec<usize> },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::ShapeMismatch { op, detail } => {
                write!(f, "{op}: shape mismatch: {detail}")
            }
            TensorError::InvalidArgument { op, detail } => {
                write!(f, "{op}: invalid argument: {detail}")
            }
            TensorError::NonScalarBackward { shape } => {
                write!(f, "backward: loss must be a scalar, got shape {shape:?}")
            }
        }
    }
}

impl std::error::Error for TensorError {}

pub(crate) fn shape_err<T>(op: &'static str, detail: String) -> Result<T> {
    Err(TensorError::ShapeMismatch { op, detail })
}

pub(crate) fn arg_err<T>(op: &'static str, detail: String) -> Result<T> {
    Err(TensorError::InvalidArgument { op, detail })
}
