//! Network building blocks.
//!
//! `MBConv3D` is the mobile inverted bottleneck: a pointwise expansion to
//! `expand * c_in` channels, a depthwise spatial convolution, a
//! squeeze-and-excite gate, and a pointwise projection back down, with batch
//! norm and SiLU between stages and a residual skip when stride is 1 and the
//! channel counts match. `MBConvTranspose3D` inverts it for the decoder: the
//! depthwise convolution becomes a depthwise transposed convolution (strided
//! for upsampling) and the expansion is sized by the output channels,
//! `expand * c_out`, which balances encoder and decoder parameter counts.
//! Plain `Conv3D`/`Conv3DTranspose`/`MaxPool3D`/`Dropout` blocks cover the
//! reference CNN-DCNN autoencoder.

use std::fmt;

use vxae_tensor::rng::SplitMix64;
use vxae_tensor::{ops, Mode, Scalar, Tensor};

use crate::error::{spec_err, Result};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    MBConv3D,
    MBConvTranspose3D,
    Conv3D,
    Conv3DTranspose,
    MaxPool3D,
    Dropout,
    Dense,
    Flatten,
    Reshape,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::MBConv3D => "MBConv3D",
            BlockKind::MBConvTranspose3D => "MBConvTranspose3D",
            BlockKind::Conv3D => "Conv3D",
            BlockKind::Conv3DTranspose => "Conv3DTranspose",
            BlockKind::MaxPool3D => "MaxPool3D",
            BlockKind::Dropout => "Dropout",
            BlockKind::Dense => "Dense",
            BlockKind::Flatten => "Flatten",
            BlockKind::Reshape => "Reshape",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "MBConv3D" => BlockKind::MBConv3D,
            "MBConvTranspose3D" => BlockKind::MBConvTranspose3D,
            "Conv3D" => BlockKind::Conv3D,
            "Conv3DTranspose" => BlockKind::Conv3DTranspose,
            "MaxPool3D" => BlockKind::MaxPool3D,
            "Dropout" => BlockKind::Dropout,
            "Dense" => BlockKind::Dense,
            "Flatten" => BlockKind::Flatten,
            "Reshape" => BlockKind::Reshape,
            _ => return None,
        })
    }
}

/// One layer of a model description. Field meaning varies slightly by kind:
/// `Dense` uses c_in/c_out as feature counts, `Reshape` restores c_out
/// channels from a flat vector, `Dropout` only reads `dropout`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub se_ratio: f64,
    pub expand: usize,
    pub dropout: f64,
}

impl BlockSpec {
    fn base(kind: BlockKind) -> Self {
        BlockSpec {
            kind,
            c_in: 1,
            c_out: 1,
            kernel: 1,
            stride: 1,
            se_ratio: 0.0,
            expand: 1,
            dropout: 0.0,
        }
    }

    pub fn conv3d(c_in: usize, c_out: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec { c_in, c_out, kernel, stride, ..Self::base(BlockKind::Conv3D) }
    }

    pub fn conv3d_transpose(c_in: usize, c_out: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec { c_in, c_out, kernel, stride, ..Self::base(BlockKind::Conv3DTranspose) }
    }

    pub fn mbconv(c_in: usize, c_out: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec {
            c_in,
            c_out,
            kernel,
            stride,
            se_ratio: 0.25,
            expand: 4,
            ..Self::base(BlockKind::MBConv3D)
        }
    }

    pub fn mbconv_transpose(c_in: usize, c_out: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec {
            c_in,
            c_out,
            kernel,
            stride,
            se_ratio: 0.25,
            expand: 4,
            ..Self::base(BlockKind::MBConvTranspose3D)
        }
    }

    pub fn max_pool(kernel: usize, stride: usize) -> Self {
        BlockSpec { kernel, stride, ..Self::base(BlockKind::MaxPool3D) }
    }

    pub fn dropout(rate: f64) -> Self {
        BlockSpec { dropout: rate, ..Self::base(BlockKind::Dropout) }
    }

    pub fn dense(c_in: usize, c_out: usize) -> Self {
        BlockSpec { c_in, c_out, ..Self::base(BlockKind::Dense) }
    }

    pub fn flatten() -> Self {
        Self::base(BlockKind::Flatten)
    }

    pub fn reshape(channels: usize) -> Self {
        BlockSpec { c_out: channels, ..Self::base(BlockKind::Reshape) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_in == 0 || self.c_out == 0 {
            return spec_err(format!("{}: channel counts must be >= 1", self.kind.as_str()));
        }
        if !(self.stride == 1 || self.stride == 2) {
            return spec_err(format!("{}: stride must be 1 or 2, got {}", self.kind.as_str(), self.stride));
        }
        if !(0.0..=1.0).contains(&self.se_ratio) {
            return spec_err(format!("{}: se_ratio must be in [0,1], got {}", self.kind.as_str(), self.se_ratio));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return spec_err(format!("{}: dropout must be in [0,1), got {}", self.kind.as_str(), self.dropout));
        }
        if self.kernel == 0 || self.expand == 0 {
            return spec_err(format!("{}: kernel and expand must be >= 1", self.kind.as_str()));
        }
        Ok(())
    }

    /// Symmetric zero padding: "same" for forward convolutions with odd
    /// kernels; for transposed convolutions, the padding that makes a
    /// stride-s block scale extents by exactly s ((k - s) even).
    pub fn padding(&self) -> usize {
        match self.kind {
            BlockKind::Conv3DTranspose | BlockKind::MBConvTranspose3D => {
                (self.kernel.max(self.stride) - self.stride) / 2
            }
            _ => (self.kernel - 1) / 2,
        }
    }

    /// Expanded channel width of the bottleneck: `expand * c_in` for
    /// MBConv3D, `expand * c_out` for MBConvTranspose3D.
    pub fn expanded_channels(&self) -> usize {
        match self.kind {
            BlockKind::MBConvTranspose3D => self.expand * self.c_out,
            _ => self.expand * self.c_in,
        }
    }

    /// Hidden width of the squeeze-and-excite gate.
    pub fn se_hidden(&self) -> usize {
        ((self.se_ratio * self.expanded_channels() as f64).round() as usize).max(1)
    }

    /// Serialize as one whitespace-separated line:
    /// kind c_in c_out kernel stride se_ratio expand dropout
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {}",
            self.kind.as_str(),
            self.c_in,
            self.c_out,
            self.kernel,
            self.stride,
            self.se_ratio,
            self.expand,
            self.dropout
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 8 {
            return spec_err(format!("block line needs 8 fields, got {}: '{line}'", parts.len()));
        }
        let kind = BlockKind::parse(parts[0])
            .ok_or_else(|| crate::error::NetError::Spec { detail: format!("unknown block kind '{}'", parts[0]) })?;
        let num = |i: usize| -> Result<usize> {
            parts[i]
                .parse()
                .map_err(|_| crate::error::NetError::Spec { detail: format!("bad integer '{}' in '{line}'", parts[i]) })
        };
        let fnum = |i: usize| -> Result<f64> {
            parts[i]
                .parse()
                .map_err(|_| crate::error::NetError::Spec { detail: format!("bad number '{}' in '{line}'", parts[i]) })
        };
        let spec = BlockSpec {
            kind,
            c_in: num(1)?,
            c_out: num(2)?,
            kernel: num(3)?,
            stride: num(4)?,
            se_ratio: fnum(5)?,
            expand: num(6)?,
            dropout: fnum(7)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_line())
    }
}

/// Trainable parameter count of one block (weights, biases, norm
/// gamma/beta; running statistics are buffers, not parameters).
pub fn block_param_count(spec: &BlockSpec) -> usize {
    let k3 = spec.kernel * spec.kernel * spec.kernel;
    match spec.kind {
        BlockKind::Conv3D | BlockKind::Conv3DTranspose => k3 * spec.c_in * spec.c_out + spec.c_out,
        BlockKind::Dense => spec.c_in * spec.c_out + spec.c_out,
        BlockKind::MBConv3D | BlockKind::MBConvTranspose3D => {
            let e = spec.expanded_channels();
            let h = spec.se_hidden();
            let expand = spec.c_in * e + 2 * e; // pointwise + bn
            let depthwise = e * k3 + 2 * e; // depthwise + bn
            let se = e * h + h + h * e + e; // two dense layers with biases
            let project = e * spec.c_out + 2 * spec.c_out; // pointwise + bn
            expand + depthwise + se + project
        }
        BlockKind::MaxPool3D | BlockKind::Dropout | BlockKind::Flatten | BlockKind::Reshape => 0,
    }
}

/// Total trainable parameter count of a block sequence.
pub fn count_params(specs: &[BlockSpec]) -> usize {
    specs.iter().map(block_param_count).sum()
}

/// Shape of the value flowing between blocks: either a feature map with
/// cubic spatial extent or a flat feature vector (batch axis implicit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeState {
    Spatial { channels: usize, extent: usize },
    Flat { features: usize },
}

impl fmt::Display for ShapeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeState::Spatial { channels, extent } => {
                write!(f, "({extent},{extent},{extent},{channels})")
            }
            ShapeState::Flat { features } => write!(f, "({features})"),
        }
    }
}

/// Closed-form output shape of one block.
pub fn block_output_shape(spec: &BlockSpec, input: ShapeState) -> Result<ShapeState> {
    let kind = spec.kind.as_str();
    match spec.kind {
        BlockKind::Conv3D | BlockKind::MBConv3D => {
            let ShapeState::Spatial { channels, extent } = input else {
                return spec_err(format!("{kind} needs a spatial input, got {input}"));
            };
            if channels != spec.c_in {
                return spec_err(format!("{kind} expects {} channels, got {channels}", spec.c_in));
            }
            let out = vxae_tensor::ops::conv_output_extent(extent, spec.kernel, spec.stride, spec.padding())
                .ok_or_else(|| crate::error::NetError::Spec {
                    detail: format!("{kind}: kernel {} does not fit extent {extent}", spec.kernel),
                })?;
            Ok(ShapeState::Spatial { channels: spec.c_out, extent: out })
        }
        BlockKind::Conv3DTranspose | BlockKind::MBConvTranspose3D => {
            let ShapeState::Spatial { channels, extent } = input else {
                return spec_err(format!("{kind} needs a spatial input, got {input}"));
            };
            if channels != spec.c_in {
                return spec_err(format!("{kind} expects {} channels, got {channels}", spec.c_in));
            }
            let out = vxae_tensor::ops::conv_transpose_output_extent(extent, spec.kernel, spec.stride, spec.padding())
                .ok_or_else(|| crate::error::NetError::Spec {
                    detail: format!("{kind}: non-positive output extent from {extent}"),
                })?;
            Ok(ShapeState::Spatial { channels: spec.c_out, extent: out })
        }
        BlockKind::MaxPool3D => {
            let ShapeState::Spatial { channels, extent } = input else {
                return spec_err(format!("{kind} needs a spatial input, got {input}"));
            };
            let out = vxae_tensor::ops::conv_output_extent(extent, spec.kernel, spec.stride, 0)
                .ok_or_else(|| crate::error::NetError::Spec {
                    detail: format!("{kind}: window does not fit extent {extent}"),
                })?;
            Ok(ShapeState::Spatial { channels, extent: out })
        }
        BlockKind::Dropout => Ok(input),
        BlockKind::Flatten => match input {
            ShapeState::Spatial { channels, extent } => Ok(ShapeState::Flat {
                features: channels * extent * extent * extent,
            }),
            ShapeState::Flat { features } => Ok(ShapeState::Flat { features }),
        },
        BlockKind::Dense => {
            let ShapeState::Flat { features } = input else {
                return spec_err(format!("{kind} needs a flat input, got {input}"));
            };
            if features != spec.c_in {
                return spec_err(format!("{kind} expects {} features, got {features}", spec.c_in));
            }
            Ok(ShapeState::Flat { features: spec.c_out })
        }
        BlockKind::Reshape => {
            let ShapeState::Flat { features } = input else {
                return spec_err(format!("{kind} needs a flat input, got {input}"));
            };
            if features % spec.c_out != 0 {
                return spec_err(format!("{kind}: {features} values do not split into {} channels", spec.c_out));
            }
            let vol = features / spec.c_out;
            let extent = (vol as f64).cbrt().round() as usize;
            if extent * extent * extent != vol {
                return spec_err(format!("{kind}: {vol} voxels per channel is not a cube"));
            }
            Ok(ShapeState::Spatial { channels: spec.c_out, extent })
        }
    }
}

/// Instantiated parameters of one block. Running batch-norm statistics live
/// here as non-trainable buffer tensors.
pub enum BlockParams<T: Scalar> {
    Conv { weight: Tensor<T>, bias: Tensor<T> },
    MbConv(MbConvParams<T>),
    Dense { weight: Tensor<T>, bias: Tensor<T> },
    Stateless,
}

pub struct BnParams<T: Scalar> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
}

pub struct SeParams<T: Scalar> {
    pub w1: Tensor<T>,
    pub b1: Tensor<T>,
    pub w2: Tensor<T>,
    pub b2: Tensor<T>,
}

pub struct MbConvParams<T: Scalar> {
    pub expand_w: Tensor<T>,
    pub expand_bn: BnParams<T>,
    pub depthwise_w: Tensor<T>,
    pub depthwise_bn: BnParams<T>,
    pub se: SeParams<T>,
    pub project_w: Tensor<T>,
    pub project_bn: BnParams<T>,
}

fn normal_tensor<T: Scalar>(shape: &[usize], std: f64, rng: &mut SplitMix64, trainable: bool) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data: Vec<T> = (0..n).map(|_| T::from_f64(rng.next_normal() * std)).collect();
    if trainable {
        Tensor::param(shape, data).expect("shape/data length agree")
    } else {
        Tensor::from_vec(shape, data).expect("shape/data length agree")
    }
}

fn const_tensor<T: Scalar>(shape: &[usize], value: f64, trainable: bool) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = vec![T::from_f64(value); n];
    if trainable {
        Tensor::param(shape, data).expect("shape/data length agree")
    } else {
        Tensor::from_vec(shape, data).expect("shape/data length agree")
    }
}

fn bn_params<T: Scalar>(channels: usize, trainable: bool) -> BnParams<T> {
    BnParams {
        gamma: const_tensor(&[channels], 1.0, trainable),
        beta: const_tensor(&[channels], 0.0, trainable),
        running_mean: const_tensor(&[channels], 0.0, false),
        running_var: const_tensor(&[channels], 1.0, false),
    }
}

/// Initialize a block's parameters: fan-in-scaled normal weights, zero
/// biases, unit gamma. Every tensor shape is a deterministic function of the
/// spec, and values are a deterministic function of the RNG state.
pub fn init_block<T: Scalar>(spec: &BlockSpec, rng: &mut SplitMix64, trainable: bool) -> BlockParams<T> {
    let k = spec.kernel;
    let k3 = k * k * k;
    match spec.kind {
        BlockKind::Conv3D => {
            let std = (2.0 / (spec.c_in * k3) as f64).sqrt();
            BlockParams::Conv {
                weight: normal_tensor(&[spec.c_out, spec.c_in, k, k, k], std, rng, trainable),
                bias: const_tensor(&[spec.c_out], 0.0, trainable),
            }
        }
        BlockKind::Conv3DTranspose => {
            let std = (2.0 / (spec.c_in * k3) as f64).sqrt();
            BlockParams::Conv {
                weight: normal_tensor(&[spec.c_in, spec.c_out, k, k, k], std, rng, trainable),
                bias: const_tensor(&[spec.c_out], 0.0, trainable),
            }
        }
        BlockKind::Dense => {
            let std = (2.0 / spec.c_in as f64).sqrt();
            BlockParams::Dense {
                weight: normal_tensor(&[spec.c_in, spec.c_out], std, rng, trainable),
                bias: const_tensor(&[spec.c_out], 0.0, trainable),
            }
        }
        BlockKind::MBConv3D | BlockKind::MBConvTranspose3D => {
            let e = spec.expanded_channels();
            let h = spec.se_hidden();
            let expand_std = (2.0 / spec.c_in as f64).sqrt();
            let dw_std = (2.0 / k3 as f64).sqrt();
            let project_std = (2.0 / e as f64).sqrt();
            BlockParams::MbConv(MbConvParams {
                expand_w: normal_tensor(&[e, spec.c_in, 1, 1, 1], expand_std, rng, trainable),
                expand_bn: bn_params(e, trainable),
                depthwise_w: normal_tensor(&[e, 1, k, k, k], dw_std, rng, trainable),
                depthwise_bn: bn_params(e, trainable),
                se: SeParams {
                    w1: normal_tensor(&[e, h], (2.0 / e as f64).sqrt(), rng, trainable),
                    b1: const_tensor(&[h], 0.0, trainable),
                    w2: normal_tensor(&[h, e], (2.0 / h as f64).sqrt(), rng, trainable),
                    b2: const_tensor(&[e], 0.0, trainable),
                },
                project_w: normal_tensor(&[spec.c_out, e, 1, 1, 1], project_std, rng, trainable),
                project_bn: bn_params(spec.c_out, trainable),
            })
        }
        BlockKind::MaxPool3D | BlockKind::Dropout | BlockKind::Flatten | BlockKind::Reshape => {
            BlockParams::Stateless
        }
    }
}

/// Visit every tensor of a block: trainable parameters and buffers, with
/// stable names. Order is the creation order, shared by checkpoints and the
/// optimizer.
pub fn visit_block_tensors<T: Scalar>(
    params: &BlockParams<T>,
    prefix: &str,
    f: &mut dyn FnMut(String, &Tensor<T>, bool),
) {
    let bn = |name: &str, p: &BnParams<T>, f: &mut dyn FnMut(String, &Tensor<T>, bool)| {
        f(format!("{prefix}.{name}.gamma"), &p.gamma, true);
        f(format!("{prefix}.{name}.beta"), &p.beta, true);
        f(format!("{prefix}.{name}.running_mean"), &p.running_mean, false);
        f(format!("{prefix}.{name}.running_var"), &p.running_var, false);
    };
    match params {
        BlockParams::Conv { weight, bias } | BlockParams::Dense { weight, bias } => {
            f(format!("{prefix}.weight"), weight, true);
            f(format!("{prefix}.bias"), bias, true);
        }
        BlockParams::MbConv(p) => {
            f(format!("{prefix}.expand.weight"), &p.expand_w, true);
            bn("expand_bn", &p.expand_bn, f);
            f(format!("{prefix}.depthwise.weight"), &p.depthwise_w, true);
            bn("depthwise_bn", &p.depthwise_bn, f);
            f(format!("{prefix}.se.w1"), &p.se.w1, true);
            f(format!("{prefix}.se.b1"), &p.se.b1, true);
            f(format!("{prefix}.se.w2"), &p.se.w2, true);
            f(format!("{prefix}.se.b2"), &p.se.b2, true);
            f(format!("{prefix}.project.weight"), &p.project_w, true);
            bn("project_bn", &p.project_bn, f);
        }
        BlockParams::Stateless => {}
    }
}

fn bn_forward<T: Scalar>(x: &Tensor<T>, p: &BnParams<T>, mode: Mode) -> Result<Tensor<T>> {
    Ok(ops::batch_norm(
        x,
        &p.gamma,
        &p.beta,
        &p.running_mean,
        &p.running_var,
        mode,
        T::from_f64(BN_MOMENTUM),
        T::from_f64(BN_EPS),
    )?)
}

/// Squeeze-and-excite: global average pool, a two-layer gate with SiLU and
/// sigmoid, then a per-channel rescale of the input.
pub fn squeeze_excite<T: Scalar>(x: &Tensor<T>, p: &SeParams<T>) -> Result<Tensor<T>> {
    let squeezed = ops::global_avg_pool3d(x)?;
    let hidden = ops::silu(&ops::dense(&squeezed, &p.w1, &p.b1)?);
    let gate = ops::sigmoid(&ops::dense(&hidden, &p.w2, &p.b2)?);
    Ok(ops::scale_channels(x, &gate)?)
}

fn mbconv_forward<T: Scalar>(
    spec: &BlockSpec,
    p: &MbConvParams<T>,
    x: &Tensor<T>,
    mode: Mode,
) -> Result<Tensor<T>> {
    let pad = spec.padding();
    let h = ops::pointwise_conv3d(x, &p.expand_w)?;
    let h = ops::silu(&bn_forward(&h, &p.expand_bn, mode)?);
    let h = match spec.kind {
        BlockKind::MBConv3D => ops::depthwise_conv3d(&h, &p.depthwise_w, spec.stride, pad)?,
        BlockKind::MBConvTranspose3D => {
            ops::depthwise_conv3d_transpose(&h, &p.depthwise_w, spec.stride, pad)?
        }
        _ => unreachable!("mbconv_forward on non-MBConv spec"),
    };
    let h = ops::silu(&bn_forward(&h, &p.depthwise_bn, mode)?);
    let h = squeeze_excite(&h, &p.se)?;
    let h = ops::pointwise_conv3d(&h, &p.project_w)?;
    let h = bn_forward(&h, &p.project_bn, mode)?;
    if spec.stride == 1 && spec.c_in == spec.c_out {
        Ok(ops::add(&h, x)?)
    } else {
        Ok(h)
    }
}

/// Run one block. `salt` keys this block's dropout mask; `activate` controls
/// the SiLU after plain (transposed) convolutions, which the model assembly
/// turns off for the output layer.
pub fn block_forward<T: Scalar>(
    spec: &BlockSpec,
    params: &BlockParams<T>,
    x: &Tensor<T>,
    mode: Mode,
    salt: u64,
    activate: bool,
) -> Result<Tensor<T>> {
    spec.validate()?;
    match (spec.kind, params) {
        (BlockKind::Conv3D, BlockParams::Conv { weight, bias }) => {
            let y = ops::conv3d(x, weight, Some(bias), spec.stride, spec.padding())?;
            Ok(if activate { ops::silu(&y) } else { y })
        }
        (BlockKind::Conv3DTranspose, BlockParams::Conv { weight, bias }) => {
            let y = ops::conv3d_transpose(x, weight, Some(bias), spec.stride, spec.padding())?;
            Ok(if activate { ops::silu(&y) } else { y })
        }
        (BlockKind::MBConv3D | BlockKind::MBConvTranspose3D, BlockParams::MbConv(p)) => {
            mbconv_forward(spec, p, x, mode)
        }
        (BlockKind::MaxPool3D, BlockParams::Stateless) => {
            Ok(ops::max_pool3d(x, spec.kernel, spec.stride)?)
        }
        (BlockKind::Dropout, BlockParams::Stateless) => Ok(ops::dropout(x, spec.dropout, mode, salt)?),
        (BlockKind::Dense, BlockParams::Dense { weight, bias }) => {
            Ok(ops::dense(x, weight, bias)?)
        }
        (BlockKind::Flatten, BlockParams::Stateless) => Ok(ops::flatten(x)?),
        (BlockKind::Reshape, BlockParams::Stateless) => {
            let n = x.shape()[0];
            let flat: usize = x.shape()[1..].iter().product();
            let vol = flat / spec.c_out;
            let extent = (vol as f64).cbrt().round() as usize;
            if spec.c_out * extent * extent * extent != flat {
                return spec_err(format!("Reshape: cannot view {flat} values as {} cubic channels", spec.c_out));
            }
            Ok(ops::reshape(x, &[n, spec.c_out, extent, extent, extent])?)
        }
        (kind, _) => spec_err(format!("{}: parameters do not match block kind", kind.as_str())),
    }
}
