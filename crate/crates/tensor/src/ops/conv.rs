//! 3D convolution kernels: plain, transposed, depthwise (both directions)
//! and pointwise.
//!
//! The dense variants lower to im2col + GEMM; the depthwise variants use
//! direct loops (no channel mixing, so GEMM buys nothing). A transposed
//! convolution is computed as the input-gradient of the matching forward
//! convolution, which keeps the two exactly adjoint.

use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// floor((input + 2*pad - k) / stride) + 1, or None if the kernel does not fit.
pub fn conv_output_extent(input: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let span = input + 2 * pad;
    if stride == 0 || k == 0 || span < k {
        return None;
    }
    Some((span - k) / stride + 1)
}

/// (input - 1) * stride + k - 2*pad, or None if the result would not be positive.
pub fn conv_transpose_output_extent(
    input: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Option<usize> {
    if stride == 0 || k == 0 || input == 0 {
        return None;
    }
    let grown = (input - 1) * stride + k;
    if grown <= 2 * pad {
        return None;
    }
    Some(grown - 2 * pad)
}

/// Geometry of one forward convolution: im2col gathers patches from the
/// "source" grid (sd,sh,sw), one column per "patch" position (pd,ph,pw).
#[derive(Debug, Clone, Copy)]
struct Geom {
    k: usize,
    stride: usize,
    pad: usize,
    sd: usize,
    sh: usize,
    sw: usize,
    pd: usize,
    ph: usize,
    pw: usize,
}

impl Geom {
    fn patch_count(&self) -> usize {
        self.pd * self.ph * self.pw
    }
    fn source_volume(&self) -> usize {
        self.sd * self.sh * self.sw
    }
}

/// Gather `source` [channels, sd,sh,sw] into `cols` [channels*k^3, pd*ph*pw].
fn im2col<T: Scalar>(source: &[T], channels: usize, g: &Geom, cols: &mut [T]) {
    let k = g.k;
    let p = g.patch_count();
    debug_assert_eq!(source.len(), channels * g.source_volume());
    debug_assert_eq!(cols.len(), channels * k * k * k * p);
    let mut row = 0;
    for c in 0..channels {
        let src = &source[c * g.source_volume()..(c + 1) * g.source_volume()];
        for kd in 0..k {
            for kh in 0..k {
                for kw in 0..k {
                    let dst = &mut cols[row * p..(row + 1) * p];
                    let mut idx = 0;
                    for pd in 0..g.pd {
                        let sd = (pd * g.stride + kd) as isize - g.pad as isize;
                        if sd < 0 || sd >= g.sd as isize {
                            dst[idx..idx + g.ph * g.pw].fill(T::zero());
                            idx += g.ph * g.pw;
                            continue;
                        }
                        let sd = sd as usize;
                        for ph in 0..g.ph {
                            let sh = (ph * g.stride + kh) as isize - g.pad as isize;
                            if sh < 0 || sh >= g.sh as isize {
                                dst[idx..idx + g.pw].fill(T::zero());
                                idx += g.pw;
                                continue;
                            }
                            let base = (sd * g.sh + sh as usize) * g.sw;
                            for pw in 0..g.pw {
                                let sw = (pw * g.stride + kw) as isize - g.pad as isize;
                                dst[idx] = if sw < 0 || sw >= g.sw as isize {
                                    T::zero()
                                } else {
                                    src[base + sw as usize]
                                };
                                idx += 1;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Scatter-add `cols` back onto `source` (the adjoint of `im2col`).
fn col2im_add<T: Scalar>(cols: &[T], channels: usize, g: &Geom, source: &mut [T]) {
    let k = g.k;
    let p = g.patch_count();
    debug_assert_eq!(source.len(), channels * g.source_volume());
    debug_assert_eq!(cols.len(), channels * k * k * k * p);
    let mut row = 0;
    for c in 0..channels {
        let dst = &mut source[c * g.source_volume()..(c + 1) * g.source_volume()];
        for kd in 0..k {
            for kh in 0..k {
                for kw in 0..k {
                    let src = &cols[row * p..(row + 1) * p];
                    let mut idx = 0;
                    for pd in 0..g.pd {
                        let sd = (pd * g.stride + kd) as isize - g.pad as isize;
                        if sd < 0 || sd >= g.sd as isize {
                            idx += g.ph * g.pw;
                            continue;
                        }
                        let sd = sd as usize;
                        for ph in 0..g.ph {
                            let sh = (ph * g.stride + kh) as isize - g.pad as isize;
                            if sh < 0 || sh >= g.sh as isize {
                                idx += g.pw;
                                continue;
                            }
                            let base = (sd * g.sh + sh as usize) * g.sw;
                            for pw in 0..g.pw {
                                let sw = (pw * g.stride + kw) as isize - g.pad as isize;
                                if sw >= 0 && sw < g.sw as isize {
                                    dst[base + sw as usize] += src[idx];
                                }
                                idx += 1;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn dims5<T: Scalar>(op: &'static str, t: &Tensor<T>, what: &str) -> Result<[usize; 5]> {
    let s = t.shape();
    if s.len() != 5 {
        return shape_err(op, format!("{what} must be rank 5, got {s:?}"));
    }
    Ok([s[0], s[1], s[2], s[3], s[4]])
}

fn cubic_kernel(op: &'static str, dims: &[usize; 5]) -> Result<usize> {
    let k = dims[2];
    if dims[3] != k || dims[4] != k {
        return shape_err(op, format!("kernel must be cubic, got {:?}", &dims[2..]));
    }
    if k == 0 {
        return arg_err(op, "kernel extent must be positive".to_string());
    }
    Ok(k)
}

fn check_stride(op: &'static str, stride: usize) -> Result<()> {
    if stride == 0 {
        return arg_err(op, "stride must be >= 1".to_string());
    }
    Ok(())
}

fn check_bias<T: Scalar>(op: &'static str, bias: Option<&Tensor<T>>, cout: usize) -> Result<()> {
    if let Some(b) = bias {
        if b.shape() != [cout] {
            return shape_err(op, format!("bias {:?} does not match {cout} output channels", b.shape()));
        }
    }
    Ok(())
}

fn add_channel_bias<T: Scalar>(out: &mut [T], bias: &[T], n: usize, c: usize, vol: usize) {
    for i in 0..n {
        for ch in 0..c {
            let b = bias[ch];
            for v in &mut out[(i * c + ch) * vol..(i * c + ch + 1) * vol] {
                *v += b;
            }
        }
    }
}

fn channel_grad_sums<T: Scalar>(grad: &[T], n: usize, c: usize, vol: usize) -> Vec<T> {
    let mut db = vec![T::zero(); c];
    for i in 0..n {
        for ch in 0..c {
            let mut acc = T::zero();
            for v in &grad[(i * c + ch) * vol..(i * c + ch + 1) * vol] {
                acc += *v;
            }
            db[ch] += acc;
        }
    }
    db
}

/// Dense 3D convolution: input [N,Cin,D,H,W] * weight [Cout,Cin,k,k,k].
pub fn conv3d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    const OP: &str = "conv3d";
    check_stride(OP, stride)?;
    let [n, cin, d, h, w] = dims5(OP, input, "input")?;
    let wdims = dims5(OP, weight, "weight")?;
    let k = cubic_kernel(OP, &wdims)?;
    let cout = wdims[0];
    if wdims[1] != cin {
        return shape_err(
            OP,
            format!("input has {cin} channels but weight expects {} (weight {:?})", wdims[1], weight.shape()),
        );
    }
    check_bias(OP, bias, cout)?;
    let (od, oh, ow) = match (
        conv_output_extent(d, k, stride, padding),
        conv_output_extent(h, k, stride, padding),
        conv_output_extent(w, k, stride, padding),
    ) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return arg_err(
                OP,
                format!("kernel {k} (stride {stride}, padding {padding}) does not fit input {d}x{h}x{w}"),
            )
        }
    };

    let geom = Geom { k, stride, pad: padding, sd: d, sh: h, sw: w, pd: od, ph: oh, pw: ow };
    let ck3 = cin * k * k * k;
    let p = geom.patch_count();
    let in_vol = cin * geom.source_volume();
    let mut out = vec![T::zero(); n * cout * p];
    {
        let x = input.data();
        let wd = weight.data();
        let mut cols = vec![T::zero(); ck3 * p];
        for i in 0..n {
            im2col(&x[i * in_vol..(i + 1) * in_vol], cin, &geom, &mut cols);
            T::gemm(
                cout, ck3, p,
                T::one(), &wd, ck3 as isize, 1,
                &cols, p as isize, 1,
                T::zero(), &mut out[i * cout * p..(i + 1) * cout * p], p as isize, 1,
            );
        }
        if let Some(b) = bias {
            add_channel_bias(&mut out, &b.data(), n, cout, p);
        }
    }

    let mut parents = vec![input.clone(), weight.clone()];
    let has_bias = bias.is_some();
    if let Some(b) = bias {
        parents.push(b.clone());
    }
    Ok(Tensor::from_op(
        vec![n, cout, od, oh, ow],
        out,
        parents,
        Box::new(move |args| {
            let x = args.parents[0].data();
            let wd = args.parents[1].data();
            let gy = args.out_grad;
            let mut dx = args.needs[0].then(|| vec![T::zero(); x.len()]);
            let mut dw = args.needs[1].then(|| vec![T::zero(); wd.len()]);
            let mut db = (has_bias && args.needs[2])
                .then(|| channel_grad_sums(gy, n, cout, p));
            let mut cols = vec![T::zero(); ck3 * p];
            for i in 0..n {
                let gyi = &gy[i * cout * p..(i + 1) * cout * p];
                if let Some(dw) = dw.as_mut() {
                    im2col(&x[i * in_vol..(i + 1) * in_vol], cin, &geom, &mut cols);
                    // dW[cout,ck3] += gy[cout,p] . cols^T
                    T::gemm(
                        cout, p, ck3,
                        T::one(), gyi, p as isize, 1,
                        &cols, 1, p as isize,
                        T::one(), dw, ck3 as isize, 1,
                    );
                }
                if let Some(dx) = dx.as_mut() {
                    // dcols = W^T . gy, then scatter back onto the input grid
                    T::gemm(
                        ck3, cout, p,
                        T::one(), &wd, 1, ck3 as isize,
                        gyi, p as isize, 1,
                        T::zero(), &mut cols, p as isize, 1,
                    );
                    col2im_add(&cols, cin, &geom, &mut dx[i * in_vol..(i + 1) * in_vol]);
                }
            }
            let mut grads = vec![dx, dw];
            if has_bias {
                grads.push(db.take());
            }
            grads
        }),
    ))
}

/// Transposed 3D convolution: input [N,Cin,D,H,W] * weight [Cin,Cout,k,k,k].
/// Each input value scatters a weighted kernel copy; equivalently this is
/// the input-gradient of `conv3d` under the same stride/padding.
pub fn conv3d_transpose<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    const OP: &str = "conv3d_transpose";
    check_stride(OP, stride)?;
    let [n, cin, d, h, w] = dims5(OP, input, "input")?;
    let wdims = dims5(OP, weight, "weight")?;
    let k = cubic_kernel(OP, &wdims)?;
    if wdims[0] != cin {
        return shape_err(
            OP,
            format!("input has {cin} channels but weight expects {} (weight {:?})", wdims[0], weight.shape()),
        );
    }
    let cout = wdims[1];
    check_bias(OP, bias, cout)?;
    let (od, oh, ow) = match (
        conv_transpose_output_extent(d, k, stride, padding),
        conv_transpose_output_extent(h, k, stride, padding),
        conv_transpose_output_extent(w, k, stride, padding),
    ) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return arg_err(
                OP,
                format!("non-positive output extent for input {d}x{h}x{w}, kernel {k}, stride {stride}, padding {padding}"),
            )
        }
    };

    // Geometry of the forward conv this op is the adjoint of: it maps the
    // [cout, od,oh,ow] grid down to [_, d,h,w].
    let geom = Geom { k, stride, pad: padding, sd: od, sh: oh, sw: ow, pd: d, ph: h, pw: w };
    debug_assert_eq!(conv_output_extent(od, k, stride, padding), Some(d));
    let ok3 = cout * k * k * k;
    let pin = geom.patch_count();
    let out_vol = cout * geom.source_volume();
    let in_vol = cin * pin;
    let mut out = vec![T::zero(); n * out_vol];
    {
        let x = input.data();
        let wd = weight.data();
        let mut cols = vec![T::zero(); ok3 * pin];
        for i in 0..n {
            // cols[ok3, pin] = W^T[ok3, cin] . x[cin, pin]   (W is [cin, ok3] row-major)
            T::gemm(
                ok3, cin, pin,
                T::one(), &wd, 1, ok3 as isize,
                &x[i * in_vol..(i + 1) * in_vol], pin as isize, 1,
                T::zero(), &mut cols, pin as isize, 1,
            );
            col2im_add(&cols, cout, &geom, &mut out[i * out_vol..(i + 1) * out_vol]);
        }
        if let Some(b) = bias {
            add_channel_bias(&mut out, &b.data(), n, cout, geom.source_volume());
        }
    }

    let mut parents = vec![input.clone(), weight.clone()];
    let has_bias = bias.is_some();
    if let Some(b) = bias {
        parents.push(b.clone());
    }
    Ok(Tensor::from_op(
        vec![n, cout, od, oh, ow],
        out,
        parents,
        Box::new(move |args| {
            let x = args.parents[0].data();
            let wd = args.parents[1].data();
            let gy = args.out_grad;
            let mut dx = args.needs[0].then(|| vec![T::zero(); x.len()]);
            let mut dw = args.needs[1].then(|| vec![T::zero(); wd.len()]);
            let mut db = (has_bias && args.needs[2])
                .then(|| channel_grad_sums(gy, n, cout, geom.source_volume()));
            let mut cols = vec![T::zero(); ok3 * pin];
            for i in 0..n {
                let gyi = &gy[i * out_vol..(i + 1) * out_vol];
                if dx.is_some() || dw.is_some() {
                    im2col(gyi, cout, &geom, &mut cols);
                }
                if let Some(dx) = dx.as_mut() {
                    // dx[cin, pin] = W[cin, ok3] . cols
                    T::gemm(
                        cin, ok3, pin,
                        T::one(), &wd, ok3 as isize, 1,
                        &cols, pin as isize, 1,
                        T::zero(), &mut dx[i * in_vol..(i + 1) * in_vol], pin as isize, 1,
                    );
                }
                if let Some(dw) = dw.as_mut() {
                    // dW[cin, ok3] += x[cin, pin] . cols^T
                    T::gemm(
                        cin, pin, ok3,
                        T::one(), &x[i * in_vol..(i + 1) * in_vol], pin as isize, 1,
                        &cols, 1, pin as isize,
                        T::one(), dw, ok3 as isize, 1,
                    );
                }
            }
            let mut grads = vec![dx, dw];
            if has_bias {
                grads.push(db.take());
            }
            grads
        }),
    ))
}

/// Depthwise 3D convolution: channel c convolves only with kernel c.
/// weight is [C,1,k,k,k].
pub fn depthwise_conv3d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    const OP: &str = "depthwise_conv3d";
    check_stride(OP, stride)?;
    let [n, c, d, h, w] = dims5(OP, input, "input")?;
    let wdims = dims5(OP, weight, "weight")?;
    let k = cubic_kernel(OP, &wdims)?;
    if wdims[0] != c || wdims[1] != 1 {
        return shape_err(
            OP,
            format!("weight {:?} does not match {c} input channels (expected [{c},1,{k},{k},{k}])", weight.shape()),
        );
    }
    let (od, oh, ow) = match (
        conv_output_extent(d, k, stride, padding),
        conv_output_extent(h, k, stride, padding),
        conv_output_extent(w, k, stride, padding),
    ) {
        (Some(a), Some(b), Some(cc)) => (a, b, cc),
        _ => {
            return arg_err(
                OP,
                format!("kernel {k} (stride {stride}, padding {padding}) does not fit input {d}x{h}x{w}"),
            )
        }
    };

    let geom = Geom { k, stride, pad: padding, sd: d, sh: h, sw: w, pd: od, ph: oh, pw: ow };
    let out = {
        let x = input.data();
        let wd = weight.data();
        let mut out = vec![T::zero(); n * c * geom.patch_count()];
        depthwise_forward(&x, &wd, &mut out, n, c, &geom);
        out
    };

    Ok(Tensor::from_op(
        vec![n, c, od, oh, ow],
        out,
        vec![input.clone(), weight.clone()],
        Box::new(move |args| {
            let x = args.parents[0].data();
            let wd = args.parents[1].data();
            let gy = args.out_grad;
            let dx = args.needs[0].then(|| {
                let mut dx = vec![T::zero(); x.len()];
                depthwise_input_grad(gy, &wd, &mut dx, n, c, &geom);
                dx
            });
            let dw = args.needs[1].then(|| {
                let mut dw = vec![T::zero(); wd.len()];
                depthwise_weight_grad(gy, &x, &mut dw, n, c, &geom);
                dw
            });
            vec![dx, dw]
        }),
    ))
}

/// Depthwise transposed 3D convolution (channel-isolated scatter), the
/// upsampling counterpart of `depthwise_conv3d`. weight is [C,1,k,k,k].
pub fn depthwise_conv3d_transpose<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    const OP: &str = "depthwise_conv3d_transpose";
    check_stride(OP, stride)?;
    let [n, c, d, h, w] = dims5(OP, input, "input")?;
    let wdims = dims5(OP, weight, "weight")?;
    let k = cubic_kernel(OP, &wdims)?;
    if wdims[0] != c || wdims[1] != 1 {
        return shape_err(
            OP,
            format!("weight {:?} does not match {c} input channels (expected [{c},1,{k},{k},{k}])", weight.shape()),
        );
    }
    let (od, oh, ow) = match (
        conv_transpose_output_extent(d, k, stride, padding),
        conv_transpose_output_extent(h, k, stride, padding),
        conv_transpose_output_extent(w, k, stride, padding),
    ) {
        (Some(a), Some(b), Some(cc)) => (a, b, cc),
        _ => {
            return arg_err(
                OP,
                format!("non-positive output extent for input {d}x{h}x{w}, kernel {k}, stride {stride}, padding {padding}"),
            )
        }
    };

    // Adjoint geometry: the matching forward conv maps [c, od..] -> [c, d..].
    let geom = Geom { k, stride, pad: padding, sd: od, sh: oh, sw: ow, pd: d, ph: h, pw: w };
    let out = {
        let x = input.data();
        let wd = weight.data();
        let mut out = vec![T::zero(); n * c * geom.source_volume()];
        // Forward scatter is exactly the input-gradient loop of the forward conv.
        depthwise_input_grad(&x, &wd, &mut out, n, c, &geom);
        out
    };

    Ok(Tensor::from_op(
        vec![n, c, od, oh, ow],
        out,
        vec![input.clone(), weight.clone()],
        Box::new(move |args| {
            let x = args.parents[0].data();
            let wd = args.parents[1].data();
            let gy = args.out_grad;
            let dx = args.needs[0].then(|| {
                let mut dx = vec![T::zero(); x.len()];
                depthwise_forward(gy, &wd, &mut dx, n, c, &geom);
                dx
            });
            let dw = args.needs[1].then(|| {
                let mut dw = vec![T::zero(); wd.len()];
                depthwise_weight_grad(&x, gy, &mut dw, n, c, &geom);
                dw
            });
            vec![dx, dw]
        }),
    ))
}

/// out[patches] = sum over kernel window of source * weight, per channel.
fn depthwise_forward<T: Scalar>(source: &[T], wd: &[T], out: &mut [T], n: usize, c: usize, g: &Geom) {
    let k3 = g.k * g.k * g.k;
    let svol = g.source_volume();
    let p = g.patch_count();
    for i in 0..n {
        for ch in 0..c {
            let src = &source[(i * c + ch) * svol..(i * c + ch + 1) * svol];
            let ker = &wd[ch * k3..(ch + 1) * k3];
            let dst = &mut out[(i * c + ch) * p..(i * c + ch + 1) * p];
            let mut idx = 0;
            for pd in 0..g.pd {
                for ph in 0..g.ph {
                    for pw in 0..g.pw {
                        let mut acc = T::zero();
                        for kd in 0..g.k {
                            let sd = (pd * g.stride + kd) as isize - g.pad as isize;
                            if sd < 0 || sd >= g.sd as isize {
                                continue;
                            }
                            for kh in 0..g.k {
                                let sh = (ph * g.stride + kh) as isize - g.pad as isize;
                                if sh < 0 || sh >= g.sh as isize {
                                    continue;
                                }
                                let base = (sd as usize * g.sh + sh as usize) * g.sw;
                                let krow = (kd * g.k + kh) * g.k;
                                for kw in 0..g.k {
                                    let sw = (pw * g.stride + kw) as isize - g.pad as isize;
                                    if sw >= 0 && sw < g.sw as isize {
                                        acc += src[base + sw as usize] * ker[krow + kw];
                                    }
                                }
                            }
                        }
                        dst[idx] = acc;
                        idx += 1;
                    }
                }
            }
        }
    }
}

/// source_grad += scatter of patch values through the kernel (adjoint of
/// `depthwise_forward` w.r.t. the source).
fn depthwise_input_grad<T: Scalar>(patches: &[T], wd: &[T], source_grad: &mut [T], n: usize, c: usize, g: &Geom) {
    let k3 = g.k * g.k * g.k;
    let svol = g.source_volume();
    let p = g.patch_count();
    for i in 0..n {
        for ch in 0..c {
            let src = &patches[(i * c + ch) * p..(i * c + ch + 1) * p];
            let ker = &wd[ch * k3..(ch + 1) * k3];
            let dst = &mut source_grad[(i * c + ch) * svol..(i * c + ch + 1) * svol];
            let mut idx = 0;
            for pd in 0..g.pd {
                for ph in 0..g.ph {
                    for pw in 0..g.pw {
                        let v = src[idx];
                        idx += 1;
                        if v == T::zero() {
                            continue;
                        }
                        for kd in 0..g.k {
                            let sd = (pd * g.stride + kd) as isize - g.pad as isize;
                            if sd < 0 || sd >= g.sd as isize {
                                continue;
                            }
                            for kh in 0..g.k {
                                let sh = (ph * g.stride + kh) as isize - g.pad as isize;
                                if sh < 0 || sh >= g.sh as isize {
                                    continue;
                                }
                                let base = (sd as usize * g.sh + sh as usize) * g.sw;
                                let krow = (kd * g.k + kh) * g.k;
                                for kw in 0..g.k {
                                    let sw = (pw * g.stride + kw) as isize - g.pad as isize;
                                    if sw >= 0 && sw < g.sw as isize {
                                        dst[base + sw as usize] += v * ker[krow + kw];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// weight_grad[c,kidx] += sum over patches of source * patch value.
fn depthwise_weight_grad<T: Scalar>(patches: &[T], source: &[T], weight_grad: &mut [T], n: usize, c: usize, g: &Geom) {
    let k3 = g.k * g.k * g.k;
    let svol = g.source_volume();
    let p = g.patch_count();
    for i in 0..n {
        for ch in 0..c {
            let pat = &patches[(i * c + ch) * p..(i * c + ch + 1) * p];
            let src = &source[(i * c + ch) * svol..(i * c + ch + 1) * svol];
            let ker = &mut weight_grad[ch * k3..(ch + 1) * k3];
            let mut idx = 0;
            for pd in 0..g.pd {
                for ph in 0..g.ph {
                    for pw in 0..g.pw {
                        let v = pat[idx];
                        idx += 1;
                        if v == T::zero() {
                            continue;
                        }
                        for kd in 0..g.k {
                            let sd = (pd * g.stride + kd) as isize - g.pad as isize;
                            if sd < 0 || sd >= g.sd as isize {
                                continue;
                            }
                            for kh in 0..g.k {
                                let sh = (ph * g.stride + kh) as isize - g.pad as isize;
                                if sh < 0 || sh >= g.sh as isize {
                                    continue;
                                }
                                let base = (sd as usize * g.sh + sh as usize) * g.sw;
                                let krow = (kd * g.k + kh) * g.k;
                                for kw in 0..g.k {
                                    let sw = (pw * g.stride + kw) as isize - g.pad as isize;
                                    if sw >= 0 && sw < g.sw as isize {
                                        ker[krow + kw] += v * src[base + sw as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 1x1x1 convolution: a per-voxel linear map across channels.
/// weight is [Cout,Cin,1,1,1].
pub fn pointwise_conv3d<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "pointwise_conv3d";
    let [n, cin, d, h, w] = dims5(OP, input, "input")?;
    let wdims = dims5(OP, weight, "weight")?;
    if wdims[2] != 1 || wdims[3] != 1 || wdims[4] != 1 {
        return shape_err(OP, format!("kernel must be 1x1x1, got {:?}", &wdims[2..]));
    }
    if wdims[1] != cin {
        return shape_err(
            OP,
            format!("input has {cin} channels but weight expects {} (weight {:?})", wdims[1], weight.shape()),
        );
    }
    let cout = wdims[0];
    let p = d * h * w;
    let mut out = vec![T::zero(); n * cout * p];
    {
        let x = input.data();
        let wd = weight.data();
        for i in 0..n {
            T::gemm(
                cout, cin, p,
                T::one(), &wd, cin as isize, 1,
                &x[i * cin * p..(i + 1) * cin * p], p as isize, 1,
                T::zero(), &mut out[i * cout * p..(i + 1) * cout * p], p as isize, 1,
            );
        }
    }
    Ok(Tensor::from_op(
        vec![n, cout, d, h, w],
        out,
        vec![input.clone(), weight.clone()],
        Box::new(move |args| {
            let x = args.parents[0].data();
            let wd = args.parents[1].data();
            let gy = args.out_grad;
            let dx = args.needs[0].then(|| {
                let mut dx = vec![T::zero(); x.len()];
                for i in 0..n {
                    T::gemm(
                        cin, cout, p,
                        T::one(), &wd, 1, cin as isize,
                        &gy[i * cout * p..(i + 1) * cout * p], p as isize, 1,
                        T::zero(), &mut dx[i * cin * p..(i + 1) * cin * p], p as isize, 1,
                    );
                }
                dx
            });
            let dw = args.needs[1].then(|| {
                let mut dw = vec![T::zero(); wd.len()];
                for i in 0..n {
                    T::gemm(
                        cout, p, cin,
                        T::one(), &gy[i * cout * p..(i + 1) * cout * p], p as isize, 1,
                        &x[i * cin * p..(i + 1) * cin * p], 1, p as isize,
                        T::one(), &mut dw, cin as isize, 1,
                    );
                }
                dw
            });
            vec![dx, dw]
        }),
    ))
}
