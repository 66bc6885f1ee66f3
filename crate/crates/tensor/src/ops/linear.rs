use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Fully connected layer: input [N,F] * weight [F,G] + bias [G] -> [N,G].
pub fn dense<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "dense";
    let s = input.shape();
    if s.len() != 2 {
        return shape_err(OP, format!("input must be rank 2, got {s:?}"));
    }
    let (n, f) = (s[0], s[1]);
    let ws = weight.shape();
    if ws.len() != 2 || ws[0] != f {
        return shape_err(OP, format!("weight {ws:?} does not match input features {f}"));
    }
    let g = ws[1];
    if bias.shape() != [g] {
        return shape_err(OP, format!("bias {:?} does not match {g} outputs", bias.shape()));
    }

    let mut out = vec![T::zero(); n * g];
    {
        let x = input.data();
        let w = weight.data();
        T::gemm(n, f, g, T::one(), &x, f as isize, 1, &w, g as isize, 1, T::zero(), &mut out, g as isize, 1);
        let b = bias.data();
        for row in out.chunks_mut(g) {
            for (v, bv) in row.iter_mut().zip(b.iter()) {
                *v += *bv;
            }
        }
    }

    Ok(Tensor::from_op(
        vec![n, g],
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        Box::new(move |args| {
            let gy = args.out_grad;
            let dx = args.needs[0].then(|| {
                let w = args.parents[1].data();
                let mut dx = vec![T::zero(); n * f];
                // dX[n,f] = gy[n,g] . W^T
                T::gemm(n, g, f, T::one(), gy, g as isize, 1, &w, 1, g as isize, T::zero(), &mut dx, f as isize, 1);
                dx
            });
            let dw = args.needs[1].then(|| {
                let x = args.parents[0].data();
                let mut dw = vec![T::zero(); f * g];
                // dW[f,g] = X^T . gy
                T::gemm(f, n, g, T::one(), &x, 1, f as isize, gy, g as isize, 1, T::zero(), &mut dw, g as isize, 1);
                dw
            });
            let db = args.needs[2].then(|| {
                let mut db = vec![T::zero(); g];
                for row in gy.chunks(g) {
                    for (d, v) in db.iter_mut().zip(row) {
                        *d += *v;
                    }
                }
                db
            });
            vec![dx, dw, db]
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight_zero_bias_is_identity() {
        let x = Tensor::<f64>::from_vec(&[2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let w = Tensor::from_vec(&[3, 3], eye).unwrap();
        let b = Tensor::zeros(&[3]);
        let y = dense(&x, &w, &b).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn zero_weight_returns_bias_rows() {
        let x = Tensor::<f64>::from_vec(&[2, 2], vec![9., 9., 9., 9.]).unwrap();
        let w = Tensor::zeros(&[2, 3]);
        let b = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let y = dense(&x, &w, &b).unwrap();
        assert_eq!(y.to_vec(), vec![1.0, -2.0, 0.5, 1.0, -2.0, 0.5]);
    }

    #[test]
    fn matches_hand_matrix_multiply() {
        let x = Tensor::<f64>::from_vec(&[1, 2], vec![2.0, -1.0]).unwrap();
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap();
        let y = dense(&x, &w, &b).unwrap();
        // [2,-1] . [[1,2],[3,4]] = [-1, 0]; plus bias
        assert_eq!(y.to_vec(), vec![-0.5, -0.5]);
    }

    #[test]
    fn rejects_feature_mismatch() {
        let x = Tensor::<f32>::zeros(&[1, 3]);
        let w = Tensor::zeros(&[4, 2]);
        let b = Tensor::zeros(&[2]);
        assert!(dense(&x, &w, &b).is_err());
    }
}
