use crate::error::{arg_err, shape_err, Result};
use crate::ops::Mode;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Per-channel batch normalization over [N,C,D,H,W].
///
/// Train mode normalizes with batch statistics (reduced over N,D,H,W) and
/// updates the running buffers in place:
///   running = (1 - momentum) * running + momentum * batch_stat
/// Eval mode normalizes with the running buffers, which start at mean 0 /
/// var 1, so an eval pass before any training step is well defined.
///
/// `running_mean` / `running_var` are plain buffers, never differentiated.
/// Statistics accumulate in f64 so the normalization identity holds tightly
/// even for f32 activations.
#[allow(clippy::too_many_arguments)]
pub fn batch_norm<T: Scalar>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &Tensor<T>,
    running_var: &Tensor<T>,
    mode: Mode,
    momentum: T,
    eps: T,
) -> Result<Tensor<T>> {
    const OP: &str = "batch_norm";
    let s = input.shape();
    if s.len() != 5 {
        return shape_err(OP, format!("input must be rank 5, got {s:?}"));
    }
    let (n, c) = (s[0], s[1]);
    let vol: usize = s[2..].iter().product();
    for (name, t) in [("gamma", gamma), ("beta", beta), ("running_mean", running_mean), ("running_var", running_var)] {
        if t.shape() != [c] {
            return shape_err(OP, format!("{name} {:?} does not match {c} channels", t.shape()));
        }
    }
    if eps <= T::zero() {
        return arg_err(OP, "eps must be positive".to_string());
    }
    let count = n * vol;
    if count == 0 {
        return arg_err(OP, "empty reduction".to_string());
    }

    let per_channel = move |buf: &[T], f: &mut dyn FnMut(usize, &[T])| {
        for i in 0..n {
            for ch in 0..c {
                f(ch, &buf[(i * c + ch) * vol..(i * c + ch + 1) * vol]);
            }
        }
    };

    match mode {
        Mode::Train { .. } => {
            let (mean, invstd, out) = {
                let x = input.data();
                let mut sums = vec![0.0f64; c];
                per_channel(&x, &mut |ch, slice| {
                    sums[ch] += slice.iter().map(|v| v.as_f64()).sum::<f64>();
                });
                let mean_f64: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
                let mut sq = vec![0.0f64; c];
                per_channel(&x, &mut |ch, slice| {
                    let m = mean_f64[ch];
                    sq[ch] += slice.iter().map(|v| { let d = v.as_f64() - m; d * d }).sum::<f64>();
                });
                let var_f64: Vec<f64> = sq.iter().map(|s| s / count as f64).collect();

                // Refresh running buffers (unbiased variance, when defined).
                {
                    let mom = momentum.as_f64();
                    let mut rm = running_mean.data_mut();
                    let mut rv = running_var.data_mut();
                    for ch in 0..c {
                        let unbiased = if count > 1 {
                            var_f64[ch] * count as f64 / (count as f64 - 1.0)
                        } else {
                            var_f64[ch]
                        };
                        rm[ch] = T::from_f64((1.0 - mom) * rm[ch].as_f64() + mom * mean_f64[ch]);
                        rv[ch] = T::from_f64((1.0 - mom) * rv[ch].as_f64() + mom * unbiased);
                    }
                }

                let mean: Vec<T> = mean_f64.iter().map(|&m| T::from_f64(m)).collect();
                let invstd: Vec<T> = var_f64
                    .iter()
                    .map(|&v| T::from_f64(1.0 / (v + eps.as_f64()).sqrt()))
                    .collect();
                let g = gamma.data();
                let b = beta.data();
                let mut out = vec![T::zero(); x.len()];
                for i in 0..n {
                    for ch in 0..c {
                        let (m, is, gm, bt) = (mean[ch], invstd[ch], g[ch], b[ch]);
                        let src = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                        let dst = &mut out[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                        for (d, v) in dst.iter_mut().zip(src) {
                            *d = gm * ((*v - m) * is) + bt;
                        }
                    }
                }
                (mean, invstd, out)
            };

            Ok(Tensor::from_op(
                s.to_vec(),
                out,
                vec![input.clone(), gamma.clone(), beta.clone()],
                Box::new(move |args| {
                    let x = args.parents[0].data();
                    let g = args.parents[1].data();
                    let gy = args.out_grad;
                    // Per-channel reductions of dy and dy*xhat.
                    let mut sum_dy = vec![0.0f64; c];
                    let mut sum_dy_xhat = vec![0.0f64; c];
                    for i in 0..n {
                        for ch in 0..c {
                            let (m, is) = (mean[ch], invstd[ch]);
                            let xs = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                            let gs = &gy[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                            for (xv, gv) in xs.iter().zip(gs) {
                                let xhat = ((*xv - m) * is).as_f64();
                                sum_dy[ch] += gv.as_f64();
                                sum_dy_xhat[ch] += gv.as_f64() * xhat;
                            }
                        }
                    }
                    let dx = args.needs[0].then(|| {
                        let inv_count = 1.0 / count as f64;
                        let mut dx = vec![T::zero(); x.len()];
                        for i in 0..n {
                            for ch in 0..c {
                                let (m, is, gm) = (mean[ch], invstd[ch], g[ch]);
                                let mean_dy = sum_dy[ch] * inv_count;
                                let mean_dy_xhat = sum_dy_xhat[ch] * inv_count;
                                let xs = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                let gs = &gy[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                let ds = &mut dx[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                for ((dv, xv), gv) in ds.iter_mut().zip(xs).zip(gs) {
                                    let xhat = ((*xv - m) * is).as_f64();
                                    let t = gv.as_f64() - mean_dy - xhat * mean_dy_xhat;
                                    *dv = T::from_f64(gm.as_f64() * is.as_f64() * t);
                                }
                            }
                        }
                        dx
                    });
                    let dgamma = args.needs[1]
                        .then(|| sum_dy_xhat.iter().map(|&v| T::from_f64(v)).collect());
                    let dbeta = args.needs[2]
                        .then(|| sum_dy.iter().map(|&v| T::from_f64(v)).collect());
                    vec![dx, dgamma, dbeta]
                }),
            ))
        }
        Mode::Eval => {
            let rm: Vec<T> = running_mean.to_vec();
            let invstd: Vec<T> = running_var
                .data()
                .iter()
                .map(|&v| T::from_f64(1.0 / (v.as_f64() + eps.as_f64()).sqrt()))
                .collect();
            let out = {
                let x = input.data();
                let g = gamma.data();
                let b = beta.data();
                let mut out = vec![T::zero(); x.len()];
                for i in 0..n {
                    for ch in 0..c {
                        let (m, is, gm, bt) = (rm[ch], invstd[ch], g[ch], b[ch]);
                        let src = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                        let dst = &mut out[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                        for (d, v) in dst.iter_mut().zip(src) {
                            *d = gm * ((*v - m) * is) + bt;
                        }
                    }
                }
                out
            };
            Ok(Tensor::from_op(
                s.to_vec(),
                out,
                vec![input.clone(), gamma.clone(), beta.clone()],
                Box::new(move |args| {
                    let x = args.parents[0].data();
                    let g = args.parents[1].data();
                    let gy = args.out_grad;
                    let dx = args.needs[0].then(|| {
                        let mut dx = vec![T::zero(); x.len()];
                        for i in 0..n {
                            for ch in 0..c {
                                let f = g[ch] * invstd[ch];
                                let gs = &gy[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                let ds = &mut dx[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                for (d, gv) in ds.iter_mut().zip(gs) {
                                    *d = *gv * f;
                                }
                            }
                        }
                        dx
                    });
                    let dgamma = args.needs[1].then(|| {
                        let mut dg = vec![0.0f64; c];
                        for i in 0..n {
                            for ch in 0..c {
                                let (m, is) = (rm[ch], invstd[ch]);
                                let xs = &x[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                let gs = &gy[(i * c + ch) * vol..(i * c + ch + 1) * vol];
                                for (xv, gv) in xs.iter().zip(gs) {
                                    dg[ch] += gv.as_f64() * ((*xv - m) * is).as_f64();
                                }
                            }
                        }
                        dg.iter().map(|&v| T::from_f64(v)).collect()
                    });
                    let dbeta = args.needs[2].then(|| {
                        let mut db = vec![0.0f64; c];
                        for i in 0..n {
                            for ch in 0..c {
                                for gv in &gy[(i * c + ch) * vol..(i * c + ch + 1) * vol] {
                                    db[ch] += gv.as_f64();
                                }
                            }
                        }
                        db.iter().map(|&v| T::from_f64(v)).collect()
                    });
                    vec![dx, dgamma, dbeta]
                }),
            ))
        }
    }
}
