//! Brute-force reference convolutions (plain nested loops, no GEMM, no
//! im2col) checked elementwise against the production kernels, plus the
//! adjointness relation between conv3d and conv3d_transpose.

use vxae_tensor::ops::{
    conv3d, conv3d_transpose, conv_output_extent, conv_transpose_output_extent, depthwise_conv3d,
    depthwise_conv3d_transpose, pointwise_conv3d,
};
use vxae_tensor::rng::SplitMix64;
use vxae_tensor::{backward, ops, Tensor};

fn random_tensor(shape: &[usize], rng: &mut SplitMix64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    Tensor::from_vec(shape, data).unwrap()
}

fn random_param(shape: &[usize], rng: &mut SplitMix64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    Tensor::param(shape, data).unwrap()
}

#[allow(clippy::too_many_arguments)]
fn at(buf: &[f64], c_total: usize, d: usize, h: usize, w: usize, n: usize, c: usize, z: usize, y: usize, x: usize) -> f64 {
    buf[((((n * c_total + c) * d + z) * h + y) * w) + x]
}

/// Six-nested-loop direct convolution.
fn reference_conv3d(
    x: &Tensor<f64>,
    wt: &Tensor<f64>,
    bias: Option<&[f64]>,
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    let [n, cin, d, h, w] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3], x.shape()[4]];
    let [cout, _, k, _, _] = [wt.shape()[0], wt.shape()[1], wt.shape()[2], wt.shape()[3], wt.shape()[4]];
    let od = conv_output_extent(d, k, stride, pad).unwrap();
    let oh = conv_output_extent(h, k, stride, pad).unwrap();
    let ow = conv_output_extent(w, k, stride, pad).unwrap();
    let xd = x.to_vec();
    let wd = wt.to_vec();
    let mut out = vec![0.0; n * cout * od * oh * ow];
    let mut idx = 0;
    for ni in 0..n {
        for co in 0..cout {
            for oz in 0..od {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bias.map_or(0.0, |b| b[co]);
                        for ci in 0..cin {
                            for kz in 0..k {
                                let iz = (oz * stride + kz) as isize - pad as isize;
                                if iz < 0 || iz >= d as isize {
                                    continue;
                                }
                                for ky in 0..k {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let ix = (ox * stride + kx) as isize - pad as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        acc += at(&xd, cin, d, h, w, ni, ci, iz as usize, iy as usize, ix as usize)
                                            * wd[(((co * cin + ci) * k + kz) * k + ky) * k + kx];
                                    }
                                }
                            }
                        }
                        out[idx] = acc;
                        idx += 1;
                    }
                }
            }
        }
    }
    out
}

/// Direct scatter implementation of the transposed convolution.
fn reference_conv3d_transpose(
    x: &Tensor<f64>,
    wt: &Tensor<f64>,
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    let [n, cin, d, h, w] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3], x.shape()[4]];
    let [_, cout, k, _, _] = [wt.shape()[0], wt.shape()[1], wt.shape()[2], wt.shape()[3], wt.shape()[4]];
    let od = conv_transpose_output_extent(d, k, stride, pad).unwrap();
    let oh = conv_transpose_output_extent(h, k, stride, pad).unwrap();
    let ow = conv_transpose_output_extent(w, k, stride, pad).unwrap();
    let xd = x.to_vec();
    let wd = wt.to_vec();
    let mut out = vec![0.0; n * cout * od * oh * ow];
    for ni in 0..n {
        for ci in 0..cin {
            for iz in 0..d {
                for iy in 0..h {
                    for ix in 0..w {
                        let v = at(&xd, cin, d, h, w, ni, ci, iz, iy, ix);
                        for co in 0..cout {
                            for kz in 0..k {
                                let oz = (iz * stride + kz) as isize - pad as isize;
                                if oz < 0 || oz >= od as isize {
                                    continue;
                                }
                                for ky in 0..k {
                                    let oy = (iy * stride + ky) as isize - pad as isize;
                                    if oy < 0 || oy >= oh as isize {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let ox = (ix * stride + kx) as isize - pad as isize;
                                        if ox < 0 || ox >= ow as isize {
                                            continue;
                                        }
                                        out[((((ni * cout + co) * od + oz as usize) * oh + oy as usize) * ow)
                                            + ox as usize] +=
                                            v * wd[(((ci * cout + co) * k + kz) * k + ky) * k + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn assert_close(got: &[f64], want: &[f64], tol: f64, what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: length mismatch");
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(
            (g - w).abs() <= tol * (1.0 + w.abs()),
            "{what}: element {i}: {g} vs {w}"
        );
    }
}

#[test]
fn conv3d_matches_loop_oracle_across_grid() {
    let mut rng = SplitMix64::new(0x5eed);
    for &stride in &[1usize, 2, 3] {
        for &pad in &[0usize, 1, 2] {
            for &k in &[1usize, 2, 3] {
                if 5 + 2 * pad < k {
                    continue;
                }
                let x = random_tensor(&[2, 2, 5, 4, 6], &mut rng);
                let w = random_tensor(&[3, 2, k, k, k], &mut rng);
                let b: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
                let bias = Tensor::from_vec(&[3], b.clone()).unwrap();
                let y = conv3d(&x, &w, Some(&bias), stride, pad).unwrap();
                let want = reference_conv3d(&x, &w, Some(&b), stride, pad);
                assert_close(&y.to_vec(), &want, 1e-10, &format!("conv3d k={k} s={stride} p={pad}"));
            }
        }
    }
}

#[test]
fn conv3d_spec_example_random_case() {
    // random input 1x2x5x5x5, random weight 3x2x3x3x3, stride 2, padding 1
    let mut rng = SplitMix64::new(42);
    let x = random_tensor(&[1, 2, 5, 5, 5], &mut rng);
    let w = random_tensor(&[3, 2, 3, 3, 3], &mut rng);
    let y = conv3d(&x, &w, None, 2, 1).unwrap();
    assert_eq!(y.shape(), &[1, 3, 3, 3, 3]);
    let want = reference_conv3d(&x, &w, None, 2, 1);
    assert_close(&y.to_vec(), &want, 1e-10, "conv3d spec case");
}

#[test]
fn conv_transpose_matches_scatter_oracle_across_grid() {
    let mut rng = SplitMix64::new(0xface);
    for &stride in &[1usize, 2, 3] {
        for &pad in &[0usize, 1] {
            for &k in &[2usize, 3, 4] {
                if (3 - 1) * stride + k <= 2 * pad {
                    continue;
                }
                let x = random_tensor(&[2, 2, 3, 4, 3], &mut rng);
                let w = random_tensor(&[2, 3, k, k, k], &mut rng);
                let y = conv3d_transpose(&x, &w, None, stride, pad).unwrap();
                let want = reference_conv3d_transpose(&x, &w, stride, pad);
                assert_close(&y.to_vec(), &want, 1e-10, &format!("conv3d_transpose k={k} s={stride} p={pad}"));
            }
        }
    }
}

#[test]
fn conv_transpose_equals_conv_input_gradient() {
    // Duality: conv3d_transpose(x, w) == d/dy <conv3d(y, w), x> (all y).
    let mut rng = SplitMix64::new(7);
    for &(stride, pad, k) in &[(1usize, 0usize, 3usize), (2, 1, 3), (2, 1, 4), (1, 1, 3)] {
        let x = random_tensor(&[1, 3, 3, 3, 3], &mut rng); // conv output side
        let od = conv_transpose_output_extent(3, k, stride, pad).unwrap();
        let y = random_param(&[1, 2, od, od, od], &mut rng); // conv input side
        let w = random_tensor(&[3, 2, k, k, k], &mut rng);

        let ct = conv3d_transpose(&x, &w, None, stride, pad).unwrap();
        assert_eq!(ct.shape(), y.shape());

        y.zero_grad();
        let z = conv3d(&y, &w, None, stride, pad).unwrap();
        let inner = ops::sum(&ops::mul(&z, &x).unwrap());
        backward(&inner).unwrap();
        let grad = y.grad().unwrap();
        assert_close(&ct.to_vec(), &grad, 1e-10, &format!("duality k={k} s={stride} p={pad}"));
    }
}

#[test]
fn conv_transpose_duality_via_finite_differences() {
    // Same relation, but the gradient side evaluated only with forward
    // convolutions: the inner product is linear in y, so central
    // differences are exact up to rounding.
    let mut rng = SplitMix64::new(99);
    let stride = 2;
    let pad = 1;
    let k = 3;
    let x = random_tensor(&[1, 2, 2, 2, 2], &mut rng);
    let w = random_tensor(&[2, 1, k, k, k], &mut rng);
    let od = conv_transpose_output_extent(2, k, stride, pad).unwrap();
    let y = random_tensor(&[1, 1, od, od, od], &mut rng);

    let ct = conv3d_transpose(&x, &w, None, stride, pad).unwrap().to_vec();

    let inner = |y: &Tensor<f64>| -> f64 {
        let z = conv3d(y, &w, None, stride, pad).unwrap();
        z.to_vec().iter().zip(x.to_vec()).map(|(a, b)| a * b).sum()
    };
    let h = 1e-4;
    for j in 0..y.len() {
        let base = y.data()[j];
        y.data_mut()[j] = base + h;
        let up = inner(&y);
        y.data_mut()[j] = base - h;
        let down = inner(&y);
        y.data_mut()[j] = base;
        let numeric = (up - down) / (2.0 * h);
        assert!(
            (numeric - ct[j]).abs() < 1e-9 * (1.0 + ct[j].abs()),
            "element {j}: finite-difference {numeric} vs transpose {}",
            ct[j]
        );
    }
}

#[test]
fn depthwise_matches_per_channel_loop_oracle() {
    let mut rng = SplitMix64::new(21);
    for &stride in &[1usize, 2] {
        for &pad in &[0usize, 1] {
            let c = 3;
            let x = random_tensor(&[2, c, 5, 5, 4], &mut rng);
            let w = random_tensor(&[c, 1, 3, 3, 3], &mut rng);
            let y = depthwise_conv3d(&x, &w, stride, pad).unwrap();
            // Per-channel oracle: run the dense reference with a one-channel
            // slice at a time.
            let xd = x.to_vec();
            let wd = w.to_vec();
            let mut want = Vec::new();
            for ni in 0..2 {
                for ch in 0..c {
                    let xs: Vec<f64> = xd[(ni * c + ch) * 100..(ni * c + ch + 1) * 100].to_vec();
                    let ws: Vec<f64> = wd[ch * 27..(ch + 1) * 27].to_vec();
                    let x1 = Tensor::from_vec(&[1, 1, 5, 5, 4], xs).unwrap();
                    let w1 = Tensor::from_vec(&[1, 1, 3, 3, 3], ws).unwrap();
                    want.extend(reference_conv3d(&x1, &w1, None, stride, pad));
                }
            }
            assert_close(&y.to_vec(), &want, 1e-10, &format!("depthwise s={stride} p={pad}"));
        }
    }
}

#[test]
fn depthwise_transpose_matches_duality_oracle() {
    // depthwise_conv3d_transpose(x, w) == d/dy <depthwise_conv3d(y, w), x>.
    let mut rng = SplitMix64::new(31);
    for &(stride, pad, k) in &[(1usize, 1usize, 3usize), (2, 1, 3), (2, 1, 4), (2, 0, 2)] {
        let c = 2;
        let x = random_tensor(&[1, c, 3, 3, 3], &mut rng);
        let od = conv_transpose_output_extent(3, k, stride, pad).unwrap();
        let y = random_param(&[1, c, od, od, od], &mut rng);
        let w = random_tensor(&[c, 1, k, k, k], &mut rng);

        let ct = depthwise_conv3d_transpose(&x, &w, stride, pad).unwrap();
        assert_eq!(ct.shape(), y.shape());

        y.zero_grad();
        let z = depthwise_conv3d(&y, &w, stride, pad).unwrap();
        let inner = ops::sum(&ops::mul(&z, &x).unwrap());
        backward(&inner).unwrap();
        assert_close(
            &ct.to_vec(),
            &y.grad().unwrap(),
            1e-10,
            &format!("depthwise duality k={k} s={stride} p={pad}"),
        );
    }
}

#[test]
fn pointwise_matches_per_voxel_matmul_oracle() {
    let mut rng = SplitMix64::new(77);
    let (n, cin, cout, d) = (2, 3, 4, 3);
    let x = random_tensor(&[n, cin, d, d, d], &mut rng);
    let w = random_tensor(&[cout, cin, 1, 1, 1], &mut rng);
    let y = pointwise_conv3d(&x, &w).unwrap();
    let xd = x.to_vec();
    let wd = w.to_vec();
    let vol = d * d * d;
    let mut want = vec![0.0; n * cout * vol];
    for ni in 0..n {
        for v in 0..vol {
            for co in 0..cout {
                let mut acc = 0.0;
                for ci in 0..cin {
                    acc += wd[co * cin + ci] * xd[(ni * cin + ci) * vol + v];
                }
                want[(ni * cout + co) * vol + v] = acc;
            }
        }
    }
    assert_close(&y.to_vec(), &want, 1e-10, "pointwise");
}

#[test]
fn shape_algebra_conv_then_transpose_restores_extents() {
    // Whenever (D + 2p - k) % s == 0, a conv followed by the transposed conv
    // with the same (k, s, p) restores the spatial extents.
    for k in 1..=5usize {
        for s in 1..=3usize {
            for p in 0..=2usize {
                for d in 4..=16usize {
                    if d + 2 * p < k || (d + 2 * p - k) % s != 0 {
                        continue;
                    }
                    if (d + 2 * p - k) / s == 0 && p > 0 {
                        // Degenerate single-output case can under-cover the pad.
                    }
                    let x = Tensor::<f64>::zeros(&[1, 1, d, d, d]);
                    let w = Tensor::<f64>::zeros(&[1, 1, k, k, k]);
                    let y = conv3d(&x, &w, None, s, p).unwrap();
                    let wt = Tensor::<f64>::zeros(&[1, 1, k, k, k]);
                    let z = conv3d_transpose(&y, &wt, None, s, p).unwrap();
                    assert_eq!(
                        z.shape()[2..],
                        [d, d, d],
                        "k={k} s={s} p={p} d={d}: got {:?}",
                        z.shape()
                    );
                }
            }
        }
    }
}

#[test]
fn determinism_repeated_op_sequences_are_bitwise_equal() {
    let run = || -> Vec<f64> {
        let mut rng = SplitMix64::new(2024);
        let x = random_tensor(&[2, 2, 6, 6, 6], &mut rng);
        let w = random_tensor(&[4, 2, 3, 3, 3], &mut rng);
        let y = conv3d(&x, &w, None, 2, 1).unwrap();
        let z = ops::silu(&y);
        let wt = random_tensor(&[4, 2, 4, 4, 4], &mut rng);
        let up = conv3d_transpose(&z, &wt, None, 2, 1).unwrap();
        up.to_vec()
    };
    let a = run();
    let b = run();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}
