use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Context handed to a backward rule.
pub(crate) struct BackwardArgs<'a, T: Scalar> {
    /// Gradient of the loss w.r.t. this node's output.
    pub out_grad: &'a [T],
    /// The node's forward output values.
    pub out_data: &'a [T],
    /// The node's inputs, in recording order.
    pub parents: &'a [Tensor<T>],
    /// Which parents actually need a gradient; rules may skip the rest.
    pub needs: &'a [bool],
}

/// A backward rule returns one optional gradient buffer per parent.
pub(crate) type BackwardFn<T> =
    Box<dyn for<'a> Fn(&BackwardArgs<'a, T>) -> Vec<Option<Vec<T>>> + Send + Sync>;

pub(crate) struct TensorInner<T: Scalar> {
    pub(crate) id: u64,
    pub(crate) shape: Vec<usize>,
    pub(crate) data: RwLock<Vec<T>>,
    pub(crate) grad: RwLock<Option<Vec<T>>>,
    /// Leaf flag: gradients are stored here after backward.
    pub(crate) requires_grad: bool,
    /// True if a gradient must flow through this node (it, or an ancestor,
    /// requires a gradient). Nodes with `tracked == false` carry no tape.
    pub(crate) tracked: bool,
    pub(crate) parents: Vec<Tensor<T>>,
    pub(crate) backward_fn: Option<BackwardFn<T>>,
}

/// Dense n-dimensional array of real values, optionally recorded on the
/// autodiff tape. Cloning is cheap (shared buffer); values are immutable
/// once produced by an op except for in-place optimizer updates on leaves.
pub struct Tensor<T: Scalar = f32> {
    pub(crate) inner: Arc<TensorInner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Tensor(id={}, shape={:?}, requires_grad={})",
            self.inner.id, self.inner.shape, self.inner.requires_grad
        )
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    fn new_leaf(shape: Vec<usize>, data: Vec<T>, requires_grad: bool) -> Self {
        Tensor {
            inner: Arc::new(TensorInner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RwLock::new(data),
                grad: RwLock::new(None),
                requires_grad,
                tracked: requires_grad,
                parents: Vec::new(),
                backward_fn: None,
            }),
        }
    }

    /// Constant (non-trainable) tensor from a flat buffer.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if numel(shape) != data.len() {
            return shape_err(
                "from_vec",
                format!("shape {:?} needs {} values, got {}", shape, numel(shape), data.len()),
            );
        }
        Ok(Self::new_leaf(shape.to_vec(), data, false))
    }

    /// Trainable parameter from a flat buffer.
    pub fn param(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let t = Self::from_vec(shape, data)?;
        // Rebuild with the gradient flag; cheaper than exposing a setter.
        Ok(Self::new_leaf(t.inner.shape.clone(), t.to_vec(), true))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new_leaf(shape.to_vec(), vec![T::zero(); numel(shape)], false)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self::new_leaf(shape.to_vec(), vec![value; numel(shape)], false)
    }

    /// Rank-0 tensor holding one value.
    pub fn scalar(value: T) -> Self {
        Self::new_leaf(Vec::new(), vec![value], false)
    }

    /// Result of an op, wired to its parents with a backward rule. The rule
    /// is dropped when no parent is tracked, so pure evaluation records no
    /// tape.
    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        backward_fn: BackwardFn<T>,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len());
        let tracked = parents.iter().any(|p| p.inner.tracked);
        Tensor {
            inner: Arc::new(TensorInner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RwLock::new(data),
                grad: RwLock::new(None),
                requires_grad: false,
                tracked,
                parents: if tracked { parents } else { Vec::new() },
                backward_fn: if tracked { Some(backward_fn) } else { None },
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn len(&self) -> usize {
        numel(&self.inner.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.len() == 1 && self.inner.shape.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub(crate) fn tracked(&self) -> bool {
        self.inner.tracked
    }

    /// Read access to the value buffer.
    pub fn data(&self) -> RwLockReadGuard<'_, Vec<T>> {
        self.inner.data.read().expect("tensor data lock poisoned")
    }

    /// Write access to the value buffer (optimizer updates, buffer refresh).
    pub fn data_mut(&self) -> RwLockWriteGuard<'_, Vec<T>> {
        self.inner.data.write().expect("tensor data lock poisoned")
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.data().clone()
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> T {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.data()[0]
    }

    /// Copy of the accumulated gradient, if any has been stored.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.read().expect("grad lock poisoned").clone()
    }

    /// Reset the gradient buffer to zeros (materializing it if absent).
    pub fn zero_grad(&self) {
        let mut g = self.inner.grad.write().expect("grad lock poisoned");
        match g.as_mut() {
            Some(buf) => buf.iter_mut().for_each(|v| *v = T::zero()),
            None => *g = Some(vec![T::zero(); self.len()]),
        }
    }

    /// Add a contribution into the gradient buffer (used by backward and
    /// by tests that inject synthetic gradients).
    pub fn accumulate_grad(&self, contribution: &[T]) {
        let mut g = self.inner.grad.write().expect("grad lock poisoned");
        match g.as_mut() {
            Some(buf) => {
                debug_assert_eq!(buf.len(), contribution.len());
                for (dst, src) in buf.iter_mut().zip(contribution) {
                    *dst += *src;
                }
            }
            None => *g = Some(contribution.to_vec()),
        }
    }

    /// A constant copy that shares no history with this tensor.
    pub fn detach(&self) -> Tensor<T> {
        Self::new_leaf(self.inner.shape.clone(), self.to_vec(), false)
    }

    /// True if every stored value is finite.
    pub fn all_finite(&self) -> bool {
        self.data().iter().all(|v| v.is_finite())
    }

    /// Convert the buffer to another scalar type (drops tape and gradients).
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        let data = self.data().iter().map(|v| U::from_f64(v.as_f64())).collect();
        let t = Tensor::<U>::from_vec(&self.inner.shape, data).expect("cast preserves length");
        if self.inner.requires_grad {
            Tensor::param(&self.inner.shape, t.to_vec()).expect("cast preserves length")
        } else {
            t
        }
    }
}
