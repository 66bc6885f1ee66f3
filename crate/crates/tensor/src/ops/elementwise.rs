use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[inline]
pub(crate) fn stable_sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

/// Elementwise a + b.
pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("add", a, b)?;
    let data: Vec<T> = a.data().iter().zip(b.data().iter()).map(|(x, y)| *x + *y).collect();
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|args| {
            vec![
                args.needs[0].then(|| args.out_grad.to_vec()),
                args.needs[1].then(|| args.out_grad.to_vec()),
            ]
        }),
    ))
}

/// Elementwise a * b.
pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("mul", a, b)?;
    let data: Vec<T> = a.data().iter().zip(b.data().iter()).map(|(x, y)| *x * *y).collect();
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|args| {
            let da = args.needs[0].then(|| {
                let b = args.parents[1].data();
                args.out_grad.iter().zip(b.iter()).map(|(g, y)| *g * *y).collect()
            });
            let db = args.needs[1].then(|| {
                let a = args.parents[0].data();
                args.out_grad.iter().zip(a.iter()).map(|(g, x)| *g * *x).collect()
            });
            vec![da, db]
        }),
    ))
}

/// SiLU activation: x * sigmoid(x).
pub fn silu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| v * stable_sigmoid(v)).collect();
    Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(|args| {
            let dx = args.needs[0].then(|| {
                let x = args.parents[0].data();
                args.out_grad
                    .iter()
                    .zip(x.iter())
                    .map(|(g, &v)| {
                        let s = stable_sigmoid(v);
                        *g * s * (T::one() + v * (T::one() - s))
                    })
                    .collect()
            });
            vec![dx]
        }),
    )
}

/// Logistic sigmoid.
pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| stable_sigmoid(v)).collect();
    Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(|args| {
            let dx = args.needs[0].then(|| {
                args.out_grad
                    .iter()
                    .zip(args.out_data.iter())
                    .map(|(g, &y)| *g * y * (T::one() - y))
                    .collect()
            });
            vec![dx]
        }),
    )
}

/// Sum of all elements, as a scalar tensor.
pub fn sum<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let total = x.data().iter().copied().fold(T::zero(), |a, v| a + v);
    let n = x.len();
    Tensor::from_op(
        Vec::new(),
        vec![total],
        vec![x.clone()],
        Box::new(move |args| {
            let dx = args.needs[0].then(|| vec![args.out_grad[0]; n]);
            vec![dx]
        }),
    )
}

/// Same data, new shape (element count must match).
pub fn reshape<T: Scalar>(x: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
    let n: usize = shape.iter().product();
    if n != x.len() {
        return shape_err(
            "reshape",
            format!("cannot view {:?} ({} values) as {:?}", x.shape(), x.len(), shape),
        );
    }
    Ok(Tensor::from_op(
        shape.to_vec(),
        x.to_vec(),
        vec![x.clone()],
        Box::new(|args| vec![args.needs[0].then(|| args.out_grad.to_vec())]),
    ))
}

/// Collapse all axes after the first into one: [N, ...] -> [N, prod(...)].
pub fn flatten<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    if x.rank() < 1 {
        return shape_err("flatten", "input must have at least one axis".to_string());
    }
    let n = x.shape()[0];
    let rest: usize = x.shape()[1..].iter().product();
    reshape(x, &[n, rest])
}

/// Multiply each channel of x[N,C,D,H,W] by the matching gate g[N,C].
pub fn scale_channels<T: Scalar>(x: &Tensor<T>, gate: &Tensor<T>) -> Result<Tensor<T>> {
    if x.rank() != 5 {
        return shape_err("scale_channels", format!("expected rank-5 input, got {:?}", x.shape()));
    }
    let (n, c) = (x.shape()[0], x.shape()[1]);
    if gate.shape() != [n, c] {
        return shape_err(
            "scale_channels",
            format!("gate {:?} does not match input batch/channels ({n}, {c})", gate.shape()),
        );
    }
    let vol: usize = x.shape()[2..].iter().product();
    let data = {
        let xd = x.data();
        let gd = gate.data();
        let mut out = vec![T::zero(); xd.len()];
        for i in 0..n * c {
            let g = gd[i];
            for j in 0..vol {
                out[i * vol + j] = xd[i * vol + j] * g;
            }
        }
        out
    };
    Ok(Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone(), gate.clone()],
        Box::new(move |args| {
            let dx = args.needs[0].then(|| {
                let gd = args.parents[1].data();
                let mut out = vec![T::zero(); args.out_grad.len()];
                for i in 0..n * c {
                    let g = gd[i];
                    for j in 0..vol {
                        out[i * vol + j] = args.out_grad[i * vol + j] * g;
                    }
                }
                out
            });
            let dg = args.needs[1].then(|| {
                let xd = args.parents[0].data();
                let mut out = vec![T::zero(); n * c];
                for i in 0..n * c {
                    let mut acc = T::zero();
                    for j in 0..vol {
                        acc += args.out_grad[i * vol + j] * xd[i * vol + j];
                    }
                    out[i] = acc;
                }
                out
            });
            vec![dx, dg]
        }),
    ))
}
