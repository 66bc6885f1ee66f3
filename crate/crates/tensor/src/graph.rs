use std::collections::{HashMap, HashSet};

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::{BackwardArgs, Tensor};

/// The recorded operations reachable from one root, in topological order.
/// Reverse traversal propagates gradients; each parameter's accumulated
/// gradient is the sum of the contributions from all of its uses.
pub struct Graph<T: Scalar> {
    order: Vec<Tensor<T>>,
}

impl<T: Scalar> Graph<T> {
    /// Collect the tracked subgraph below `root` (iterative DFS postorder).
    pub fn from_root(root: &Tensor<T>) -> Self {
        let mut order = Vec::new();
        if !root.tracked() {
            return Graph { order };
        }
        let mut visited: HashSet<u64> = HashSet::new();
        // (tensor, next child index to visit)
        let mut stack: Vec<(Tensor<T>, usize)> = vec![(root.clone(), 0)];
        visited.insert(root.id());
        while let Some((node, child_idx)) = stack.pop() {
            let parents = &node.inner.parents;
            if child_idx < parents.len() {
                let child = parents[child_idx].clone();
                stack.push((node, child_idx + 1));
                if child.tracked() && visited.insert(child.id()) {
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
            }
        }
        Graph { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Propagate gradients from `root` (must be the tensor this graph was
    /// built from) down to every tracked leaf, accumulating into each
    /// parameter's grad buffer.
    pub fn run_backward(&self, root: &Tensor<T>) -> Result<()> {
        if !root.is_scalar() {
            return Err(TensorError::NonScalarBackward {
                shape: root.shape().to_vec(),
            });
        }
        if self.order.is_empty() {
            // Loss does not depend on any tracked tensor; nothing to do.
            return Ok(());
        }

        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        grads.insert(root.id(), vec![T::one()]);

        for node in self.order.iter().rev() {
            let Some(out_grad) = grads.remove(&node.id()) else {
                continue; // not on a path from the root
            };
            if node.requires_grad() {
                node.accumulate_grad(&out_grad);
            }
            let Some(backward_fn) = node.inner.backward_fn.as_ref() else {
                continue;
            };
            let parents = &node.inner.parents;
            let needs: Vec<bool> = parents.iter().map(|p| p.tracked()).collect();
            let contributions = {
                let out_data = node.data();
                let args = BackwardArgs {
                    out_grad: &out_grad,
                    out_data: &out_data,
                    parents,
                    needs: &needs,
                };
                backward_fn(&args)
            };
            debug_assert_eq!(contributions.len(), parents.len());
            for (parent, contribution) in parents.iter().zip(contributions) {
                let Some(contribution) = contribution else {
                    continue;
                };
                if !parent.tracked() {
                    continue;
                }
                debug_assert_eq!(contribution.len(), parent.len());
                match grads.get_mut(&parent.id()) {
                    Some(buf) => {
                        for (dst, src) in buf.iter_mut().zip(&contribution) {
                            *dst += *src;
                        }
                    }
                    None => {
                        grads.insert(parent.id(), contribution);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Populate `grad` for every tracked parameter the scalar `loss` depends on.
pub fn backward<T: Scalar>(loss: &Tensor<T>) -> Result<()> {
    Graph::from_root(loss).run_backward(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn sum_gradient_is_ones() {
        let p = Tensor::<f64>::param(&[2, 3], vec![1.0; 6]).unwrap();
        let loss = ops::sum(&p);
        backward(&loss).unwrap();
        assert_eq!(p.grad().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn unused_parameter_keeps_zero_grad() {
        let used = Tensor::<f64>::param(&[2], vec![1.0, 2.0]).unwrap();
        let unused = Tensor::<f64>::param(&[2], vec![3.0, 4.0]).unwrap();
        used.zero_grad();
        unused.zero_grad();
        let loss = ops::sum(&used);
        backward(&loss).unwrap();
        assert_eq!(used.grad().unwrap(), vec![1.0, 1.0]);
        assert_eq!(unused.grad().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_non_scalar_loss() {
        let p = Tensor::<f64>::param(&[2], vec![1.0, 2.0]).unwrap();
        let y = ops::silu(&p);
        assert!(matches!(
            backward(&y),
            Err(TensorError::NonScalarBackward { .. })
        ));
    }

    #[test]
    fn shared_input_accumulates_both_uses() {
        // loss = sum(p * p) => dloss/dp = 2p
        let p = Tensor::<f64>::param(&[3], vec![1.0, -2.0, 3.0]).unwrap();
        let sq = ops::mul(&p, &p).unwrap();
        let loss = ops::sum(&sq);
        backward(&loss).unwrap();
        assert_eq!(p.grad().unwrap(), vec![2.0, -4.0, 6.0]);
    }

    #[test]
    fn backward_twice_accumulates() {
        let p = Tensor::<f64>::param(&[2], vec![1.0, 1.0]).unwrap();
        for _ in 0..2 {
            let loss = ops::sum(&p);
            backward(&loss).unwrap();
        }
        assert_eq!(p.grad().unwrap(), vec![2.0, 2.0]);
    }
}
