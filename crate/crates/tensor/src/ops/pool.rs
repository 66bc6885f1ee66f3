use crate::error::{arg_err, shape_err, Result};
use crate::ops::conv::conv_output_extent;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Windowed maximum over [N,C,D,H,W]. The backward pass routes the gradient
/// to the argmax element of each window; ties go to the first element in
/// scan order.
pub fn max_pool3d<T: Scalar>(input: &Tensor<T>, k: usize, stride: usize) -> Result<Tensor<T>> {
    const OP: &str = "max_pool3d";
    if k == 0 || stride == 0 {
        return arg_err(OP, "kernel and stride must be >= 1".to_string());
    }
    let s = input.shape();
    if s.len() != 5 {
        return shape_err(OP, format!("input must be rank 5, got {s:?}"));
    }
    let [n, c, d, h, w] = [s[0], s[1], s[2], s[3], s[4]];
    let (od, oh, ow) = match (
        conv_output_extent(d, k, stride, 0),
        conv_output_extent(h, k, stride, 0),
        conv_output_extent(w, k, stride, 0),
    ) {
        (Some(a), Some(b), Some(cc)) => (a, b, cc),
        _ => return arg_err(OP, format!("window {k} does not fit input {d}x{h}x{w}")),
    };

    let vol = d * h * w;
    let p = od * oh * ow;
    let mut out = vec![T::zero(); n * c * p];
    let mut argmax = vec![0usize; n * c * p];
    {
        let x = input.data();
        let mut idx = 0;
        for i in 0..n {
            for ch in 0..c {
                let src = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                let base = (i * c + ch) * vol;
                for pd in 0..od {
                    for ph in 0..oh {
                        for pw in 0..ow {
                            let mut best = T::neg_infinity();
                            let mut best_at = 0usize;
                            for kd in 0..k {
                                let id = pd * stride + kd;
                                for kh in 0..k {
                                    let ih = ph * stride + kh;
                                    let row = (id * h + ih) * w + pw * stride;
                                    for kw in 0..k {
                                        let v = src[row + kw];
                                        if v > best {
                                            best = v;
                                            best_at = row + kw;
                                        }
                                    }
                                }
                            }
                            out[idx] = best;
                            argmax[idx] = base + best_at;
                            idx += 1;
                        }
                    }
                }
            }
        }
    }

    let in_len = n * c * vol;
    Ok(Tensor::from_op(
        vec![n, c, od, oh, ow],
        out,
        vec![input.clone()],
        Box::new(move |args| {
            let dx = args.needs[0].then(|| {
                let mut dx = vec![T::zero(); in_len];
                for (g, &at) in args.out_grad.iter().zip(&argmax) {
                    dx[at] += *g;
                }
                dx
            });
            vec![dx]
        }),
    ))
}

/// Mean over the spatial axes: [N,C,D,H,W] -> [N,C].
pub fn global_avg_pool3d<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.len() != 5 {
        return shape_err("global_avg_pool3d", format!("input must be rank 5, got {s:?}"));
    }
    let (n, c) = (s[0], s[1]);
    let vol: usize = s[2..].iter().product();
    let inv = T::from_f64(1.0 / vol as f64);
    let data = {
        let x = input.data();
        let mut out = vec![T::zero(); n * c];
        for i in 0..n * c {
            let mut acc = T::zero();
            for v in &x[i * vol..(i + 1) * vol] {
                acc += *v;
            }
            out[i] = acc * inv;
        }
        out
    };
    Ok(Tensor::from_op(
        vec![n, c],
        data,
        vec![input.clone()],
        Box::new(move |args| {
            let dx = args.needs[0].then(|| {
                let mut dx = vec![T::zero(); n * c * vol];
                for i in 0..n * c {
                    let g = args.out_grad[i] * inv;
                    dx[i * vol..(i + 1) * vol].fill(g);
                }
                dx
            });
            vec![dx]
        }),
    ))
}
