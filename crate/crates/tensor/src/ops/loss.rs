use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean squared error over all elements, as a scalar tensor.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    if pred.shape() != target.shape() {
        return shape_err(
            "mse_loss",
            format!("pred {:?} vs target {:?}", pred.shape(), target.shape()),
        );
    }
    let n = pred.len();
    let inv = T::from_f64(1.0 / n as f64);
    let value = {
        let p = pred.data();
        let t = target.data();
        let mut acc = T::zero();
        for (a, b) in p.iter().zip(t.iter()) {
            let d = *a - *b;
            acc += d * d;
        }
        acc * inv
    };
    Ok(Tensor::from_op(
        Vec::new(),
        vec![value],
        vec![pred.clone(), target.clone()],
        Box::new(move |args| {
            let g0 = args.out_grad[0];
            let two = T::from_f64(2.0);
            let p = args.parents[0].data();
            let t = args.parents[1].data();
            let dp = args.needs[0].then(|| {
                p.iter().zip(t.iter()).map(|(a, b)| two * (*a - *b) * inv * g0).collect()
            });
            let dt = args.needs[1].then(|| {
                p.iter().zip(t.iter()).map(|(a, b)| -two * (*a - *b) * inv * g0).collect()
            });
            vec![dp, dt]
        }),
    ))
}
