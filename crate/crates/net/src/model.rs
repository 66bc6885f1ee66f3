//! Model assembly: the two complete autoencoders and their runtime form.
//!
//! Both models compress a [N,1,dim,dim,dim] occupancy grid through a
//! 256-value latent bottleneck and reconstruct it through a sigmoid output.

use vxae_tensor::rng::{derive_seed, SplitMix64};
use vxae_tensor::{ops, Mode, Tensor};

use crate::blocks::{
    block_forward, block_output_shape, count_params, init_block, visit_block_tensors, BlockParams,
    BlockSpec, ShapeState,
};
use crate::error::{spec_err, NetError, Result};

pub const LATENT_DIM: usize = 256;

/// Declarative description of one autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub input_dim: usize,
    pub latent_dim: usize,
    pub encoder: Vec<BlockSpec>,
    pub decoder: Vec<BlockSpec>,
}

/// Residual-model width presets. `Compact` is tuned so the total parameter
/// count lands beside the reference autoencoder's; `Wide` trades that for
/// more capacity per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthPreset {
    #[default]
    Compact,
    Wide,
}

impl WidthPreset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "compact" => Some(WidthPreset::Compact),
            "wide" => Some(WidthPreset::Wide),
            _ => None,
        }
    }

    /// MBConv stage channel path, starting at the stem width.
    fn stages(self) -> Vec<usize> {
        match self {
            WidthPreset::Compact => vec![8, 12, 16, 20, 24],
            WidthPreset::Wide => vec![8, 16, 24, 32, 32],
        }
    }
}

fn trace(blocks: &[BlockSpec], input: ShapeState) -> Result<Vec<ShapeState>> {
    let mut shapes = Vec::with_capacity(blocks.len());
    let mut state = input;
    for b in blocks {
        b.validate()?;
        state = block_output_shape(b, state)?;
        shapes.push(state);
    }
    Ok(shapes)
}

impl ModelSpec {
    /// Output shape after every encoder block for a single sample.
    pub fn encoder_trace(&self) -> Result<Vec<ShapeState>> {
        trace(&self.encoder, ShapeState::Spatial { channels: 1, extent: self.input_dim })
    }

    pub fn decoder_trace(&self) -> Result<Vec<ShapeState>> {
        trace(&self.decoder, ShapeState::Flat { features: self.latent_dim })
    }

    /// Check the whole pipeline: encoder must end at exactly `latent_dim`
    /// features and the decoder (when present) must restore one channel at
    /// the input resolution.
    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 2 {
            return spec_err(format!("input_dim must be >= 2, got {}", self.input_dim));
        }
        let enc = self.encoder_trace()?;
        match enc.last() {
            Some(ShapeState::Flat { features }) if *features == self.latent_dim => {}
            Some(other) => {
                return spec_err(format!(
                    "encoder must produce a flat {}-value latent, got {other}",
                    self.latent_dim
                ))
            }
            None => return spec_err("encoder has no blocks".to_string()),
        }
        if !self.decoder.is_empty() {
            let dec = self.decoder_trace()?;
            match dec.last() {
                Some(ShapeState::Spatial { channels: 1, extent }) if *extent == self.input_dim => {}
                Some(other) => {
                    return spec_err(format!(
                        "decoder must restore (1,{0},{0},{0}), got {other}",
                        self.input_dim
                    ))
                }
                None => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn encoder_param_count(&self) -> usize {
        count_params(&self.encoder)
    }

    pub fn decoder_param_count(&self) -> usize {
        count_params(&self.decoder)
    }

    pub fn param_count(&self) -> usize {
        self.encoder_param_count() + self.decoder_param_count()
    }

    /// Human-readable text form, one block per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("name {}\n", self.name));
        out.push_str(&format!("input_dim {}\n", self.input_dim));
        out.push_str(&format!("latent_dim {}\n", self.latent_dim));
        out.push_str("[encoder]\n");
        for b in &self.encoder {
            out.push_str(&b.to_line());
            out.push('\n');
        }
        out.push_str("[decoder]\n");
        for b in &self.decoder {
            out.push_str(&b.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<ModelSpec> {
        let mut name = None;
        let mut input_dim = None;
        let mut latent_dim = None;
        let mut encoder = Vec::new();
        let mut decoder = Vec::new();
        #[derive(PartialEq)]
        enum Section {
            Header,
            Encoder,
            Decoder,
        }
        let mut section = Section::Header;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[encoder]" => {
                    section = Section::Encoder;
                    continue;
                }
                "[decoder]" => {
                    section = Section::Decoder;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::Header => {
                    let (key, value) = line
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| NetError::Spec { detail: format!("line {}: bad header '{line}'", ln + 1) })?;
                    match key {
                        "name" => name = Some(value.trim().to_string()),
                        "input_dim" => {
                            input_dim = Some(value.trim().parse().map_err(|_| NetError::Spec {
                                detail: format!("line {}: bad input_dim", ln + 1),
                            })?)
                        }
                        "latent_dim" => {
                            latent_dim = Some(value.trim().parse().map_err(|_| NetError::Spec {
                                detail: format!("line {}: bad latent_dim", ln + 1),
                            })?)
                        }
                        other => return spec_err(format!("line {}: unknown header key '{other}'", ln + 1)),
                    }
                }
                Section::Encoder => encoder.push(BlockSpec::parse_line(line)?),
                Section::Decoder => decoder.push(BlockSpec::parse_line(line)?),
            }
        }
        let spec = ModelSpec {
            name: name.ok_or_else(|| NetError::Spec { detail: "missing name".into() })?,
            input_dim: input_dim.ok_or_else(|| NetError::Spec { detail: "missing input_dim".into() })?,
            latent_dim: latent_dim.ok_or_else(|| NetError::Spec { detail: "missing latent_dim".into() })?,
            encoder,
            decoder,
        };
        Ok(spec)
    }
}

/// The reference CNN-DCNN autoencoder: stacked 3x3x3 convolutions with max
/// pooling on the way down and transposed convolutions (stride-2 where the
/// encoder pooled) on the way back up, dropout interleaved. At 64^3 input
/// the flattened encoder output is exactly the 256-value latent; at other
/// resolutions a dense bottleneck adapts the width.
pub fn build_baseline(input_dim: usize) -> Result<ModelSpec> {
    let dropout = 0.2;
    let mut encoder = vec![
        BlockSpec::conv3d(1, 4, 3, 1),
        BlockSpec::conv3d(4, 4, 3, 1),
        BlockSpec::conv3d(4, 4, 3, 1),
        BlockSpec::max_pool(2, 2),
        BlockSpec::dropout(dropout),
        BlockSpec::conv3d(4, 8, 3, 1),
        BlockSpec::conv3d(8, 8, 3, 1),
        BlockSpec::max_pool(2, 2),
        BlockSpec::conv3d(8, 8, 3, 1),
        BlockSpec::conv3d(8, 16, 3, 1),
        BlockSpec::max_pool(2, 2),
        BlockSpec::conv3d(16, 32, 3, 1),
        BlockSpec::conv3d(32, 32, 3, 1),
        BlockSpec::max_pool(2, 2),
        BlockSpec::conv3d(32, 32, 3, 1),
        BlockSpec::conv3d(32, 4, 3, 1),
        BlockSpec::dropout(dropout),
        BlockSpec::flatten(),
    ];
    if input_dim % 16 != 0 || input_dim < 16 {
        return spec_err(format!("baseline needs input_dim divisible by 16, got {input_dim}"));
    }
    let spatial = input_dim / 16;
    let flat = 4 * spatial * spatial * spatial;
    if flat != LATENT_DIM {
        encoder.push(BlockSpec::dense(flat, LATENT_DIM));
    }

    let mut decoder = Vec::new();
    if flat != LATENT_DIM {
        decoder.push(BlockSpec::dense(LATENT_DIM, flat));
    }
    decoder.extend([
        BlockSpec::reshape(4),
        BlockSpec::dropout(dropout),
        BlockSpec::conv3d_transpose(4, 32, 3, 1),
        BlockSpec::conv3d_transpose(32, 32, 3, 1),
        BlockSpec::conv3d_transpose(32, 32, 2, 2),
        BlockSpec::conv3d_transpose(32, 32, 3, 1),
        BlockSpec::conv3d_transpose(32, 16, 3, 1),
        BlockSpec::conv3d_transpose(16, 16, 2, 2),
        BlockSpec::conv3d_transpose(16, 8, 3, 1),
        BlockSpec::conv3d_transpose(8, 8, 3, 1),
        BlockSpec::conv3d_transpose(8, 8, 2, 2),
        BlockSpec::conv3d_transpose(8, 8, 3, 1),
        BlockSpec::conv3d_transpose(8, 4, 3, 1),
        BlockSpec::dropout(dropout),
        BlockSpec::conv3d_transpose(4, 4, 2, 2),
        BlockSpec::conv3d_transpose(4, 4, 3, 1),
        BlockSpec::conv3d_transpose(4, 4, 3, 1),
        BlockSpec::conv3d_transpose(4, 1, 3, 1),
    ]);

    let spec = ModelSpec {
        name: "baseline".to_string(),
        input_dim,
        latent_dim: LATENT_DIM,
        encoder,
        decoder,
    };
    spec.validate()?;
    Ok(spec)
}

/// The residual autoencoder: a strided conv stem, MBConv3D stages down to a
/// 4-channel map, and a dense bottleneck to 256 values; the decoder mirrors
/// the stages with MBConvTranspose3D blocks (stride-2 upsampling, expansion
/// sized by output channels) and a final pointwise projection to one channel.
pub fn build_residual(preset: WidthPreset, input_dim: usize) -> Result<ModelSpec> {
    let stages = preset.stages();
    if input_dim % 16 != 0 || input_dim < 16 {
        return spec_err(format!("residual model needs input_dim divisible by 16, got {input_dim}"));
    }

    let mut encoder = vec![BlockSpec::conv3d(1, stages[0], 3, 2)];
    for w in stages.windows(2) {
        let stride = if w[0] == *stages.last().unwrap() { 1 } else { 2 };
        let _ = stride;
        encoder.push(BlockSpec::mbconv(w[0], w[1], 3, 2));
    }
    // Last stage keeps resolution.
    if let Some(last) = encoder.last_mut() {
        last.stride = 1;
    }
    let head = *stages.last().unwrap();
    encoder.push(BlockSpec::conv3d(head, 4, 1, 1));
    encoder.push(BlockSpec::flatten());
    // Spatial extent after the stem and the stride-2 stages: /16 overall.
    let spatial = input_dim / 16;
    let flat = 4 * spatial * spatial * spatial;
    encoder.push(BlockSpec::dense(flat, LATENT_DIM));

    let mut decoder = vec![
        BlockSpec::dense(LATENT_DIM, flat),
        BlockSpec::reshape(4),
        BlockSpec::conv3d(4, head, 1, 1),
    ];
    let mut rev: Vec<usize> = stages.clone();
    rev.reverse(); // e.g. [24, 20, 16, 12, 8]
    decoder.push(BlockSpec::mbconv_transpose(rev[0], rev[1], 3, 1));
    for w in rev[1..].windows(2) {
        decoder.push(BlockSpec::mbconv_transpose(w[0], w[1], 4, 2));
    }
    // Stem mirror: upsample at constant width, then project to one channel.
    decoder.push(BlockSpec::mbconv_transpose(rev[rev.len() - 1], rev[rev.len() - 1], 4, 2));
    decoder.push(BlockSpec::conv3d(rev[rev.len() - 1], 1, 1, 1));

    let spec = ModelSpec {
        name: match preset {
            WidthPreset::Compact => "residual".to_string(),
            WidthPreset::Wide => "residual-wide".to_string(),
        },
        input_dim,
        latent_dim: LATENT_DIM,
        encoder,
        decoder,
    };
    spec.validate()?;
    if let Some(ShapeState::Flat { features }) = spec.encoder_trace()?.last() {
        if *features != LATENT_DIM {
            return spec_err(format!("preset produced latent {features}, expected {LATENT_DIM}"));
        }
    }
    Ok(spec)
}

pub fn build_by_name(name: &str, input_dim: usize) -> Result<ModelSpec> {
    match name {
        "baseline" => build_baseline(input_dim),
        "residual" => build_residual(WidthPreset::Compact, input_dim),
        "residual-wide" => build_residual(WidthPreset::Wide, input_dim),
        other => spec_err(format!("unknown model '{other}' (expected baseline|residual|residual-wide)")),
    }
}

/// A spec plus instantiated parameters, ready to run.
pub struct Model {
    pub spec: ModelSpec,
    encoder_params: Vec<BlockParams<f32>>,
    decoder_params: Vec<BlockParams<f32>>,
}

/// Offset separating encoder and decoder dropout salts.
const DECODER_SALT_BASE: u64 = 1_000;

impl Model {
    /// Initialize parameters from the seed (deterministic).
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Model> {
        Self::init(spec, seed, true)
    }

    fn init(spec: ModelSpec, seed: u64, trainable: bool) -> Result<Model> {
        spec.validate()?;
        let mut rng = SplitMix64::new(derive_seed(seed, 0x1217));
        let encoder_params = spec
            .encoder
            .iter()
            .map(|b| init_block(b, &mut rng, trainable))
            .collect();
        let decoder_params = spec
            .decoder
            .iter()
            .map(|b| init_block(b, &mut rng, trainable))
            .collect();
        Ok(Model { spec, encoder_params, decoder_params })
    }

    pub fn is_encoder_only(&self) -> bool {
        self.spec.decoder.is_empty()
    }

    /// Latent code for a batch: [N,1,dim,dim,dim] -> [N,latent_dim].
    pub fn encode(&self, x: &Tensor<f32>, mode: Mode) -> Result<Tensor<f32>> {
        let mut h = x.clone();
        for (i, (spec, params)) in self.spec.encoder.iter().zip(&self.encoder_params).enumerate() {
            h = block_forward(spec, params, &h, mode, i as u64, true)?;
        }
        Ok(h)
    }

    /// Full autoencoder pass: returns (reconstruction, latent). The
    /// reconstruction passes through a sigmoid, keeping values in (0,1).
    pub fn forward(&self, x: &Tensor<f32>, mode: Mode) -> Result<(Tensor<f32>, Tensor<f32>)> {
        if self.is_encoder_only() {
            return spec_err("model has no decoder (encoder-only checkpoint)".to_string());
        }
        let latent = self.encode(x, mode)?;
        let mut h = latent.clone();
        let last = self.decoder_params.len() - 1;
        for (i, (spec, params)) in self.spec.decoder.iter().zip(&self.decoder_params).enumerate() {
            // The final (transposed) convolution feeds the sigmoid directly.
            let activate = i != last;
            h = block_forward(spec, params, &h, mode, DECODER_SALT_BASE + i as u64, activate)?;
        }
        let recon = ops::sigmoid(&h);
        Ok((recon, latent))
    }

    /// Tensors in deterministic order: (name, tensor, trainable).
    pub fn named_tensors(&self) -> Vec<(String, Tensor<f32>, bool)> {
        let mut out = Vec::new();
        for (i, p) in self.encoder_params.iter().enumerate() {
            visit_block_tensors(p, &format!("enc.{i}"), &mut |name, t, trainable| {
                out.push((name, t.clone(), trainable));
            });
        }
        for (i, p) in self.decoder_params.iter().enumerate() {
            visit_block_tensors(p, &format!("dec.{i}"), &mut |name, t, trainable| {
                out.push((name, t.clone(), trainable));
            });
        }
        out
    }

    /// Trainable parameters in deterministic order.
    pub fn parameters(&self) -> Vec<Tensor<f32>> {
        self.named_tensors()
            .into_iter()
            .filter(|(_, _, trainable)| *trainable)
            .map(|(_, t, _)| t)
            .collect()
    }

    pub fn zero_grads(&self) {
        for p in self.parameters() {
            p.zero_grad();
        }
    }

    /// Actual parameter count of the instantiated tensors (trainable only).
    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|t| t.len()).sum()
    }
}

/// Build a model and overwrite its tensors from named checkpoint data.
/// `trainable: false` yields a frozen feature extractor.
pub(crate) fn model_from_tensors(
    spec: ModelSpec,
    tensors: &[(String, Vec<usize>, Vec<f32>)],
    trainable: bool,
) -> Result<Model> {
    let model = Model::init(spec, 0, trainable)?;
    let own = model.named_tensors();
    let mut by_name: std::collections::HashMap<&str, &Tensor<f32>> =
        own.iter().map(|(n, t, _)| (n.as_str(), t)).collect();
    for (name, shape, data) in tensors {
        let Some(t) = by_name.remove(name.as_str()) else {
            return crate::error::ckpt_err(format!("checkpoint tensor '{name}' not in model"));
        };
        if t.shape() != &shape[..] {
            return crate::error::ckpt_err(format!(
                "checkpoint tensor '{name}' has shape {:?}, model expects {:?}",
                shape,
                t.shape()
            ));
        }
        t.data_mut().copy_from_slice(data);
    }
    if !by_name.is_empty() {
        let mut missing: Vec<&str> = by_name.into_keys().collect();
        missing.sort_unstable();
        return crate::error::ckpt_err(format!("checkpoint is missing tensors: {missing:?}"));
    }
    Ok(model)
}
