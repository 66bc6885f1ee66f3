//! Checkpoint container.
//!
//! Binary layout, all integers little-endian:
//!   magic "VXAE", version u16,
//!   spec text (u32 length + bytes),
//!   step u64, seed u64,
//!   parameter table, buffer table,
//!   optimizer flag u8, then (when set) t u64, lr/beta1/beta2/eps f32 and
//!   the first/second moment tables aligned with the parameter table.
//! Each tensor record is: name (u32 length + bytes), rank u32, extents as
//! u32, then the raw f32 payload. Loading then saving reproduces the bytes
//! exactly.

use std::path::Path;

use vxae_tensor::Adam;

use crate::error::{ckpt_err, NetError, Result};
use crate::model::{model_from_tensors, Model, ModelSpec};

pub const MAGIC: &[u8; 4] = b"VXAE";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensorData {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamSnapshot {
    pub t: u64,
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub m: Vec<NamedTensorData>,
    pub v: Vec<NamedTensorData>,
}

/// Everything needed to resume: model description, parameters, batch-norm
/// buffers, optimizer moments, the global step and the run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub step: u64,
    pub seed: u64,
    pub params: Vec<NamedTensorData>,
    pub buffers: Vec<NamedTensorData>,
    pub optimizer: Option<AdamSnapshot>,
}

/// Capture the current state of a model (and optionally its optimizer).
pub fn snapshot_model(model: &Model, optimizer: Option<&Adam<f32>>, step: u64, seed: u64) -> Checkpoint {
    let mut params = Vec::new();
    let mut buffers = Vec::new();
    for (name, tensor, trainable) in model.named_tensors() {
        let rec = NamedTensorData {
            name,
            shape: tensor.shape().to_vec(),
            data: tensor.to_vec(),
        };
        if trainable {
            params.push(rec);
        } else {
            buffers.push(rec);
        }
    }
    let optimizer = optimizer.map(|opt| {
        let (m, v) = opt.moments();
        let pack = |bufs: &[Vec<f32>]| -> Vec<NamedTensorData> {
            params
                .iter()
                .zip(bufs)
                .map(|(p, b)| NamedTensorData { name: p.name.clone(), shape: p.shape.clone(), data: b.clone() })
                .collect()
        };
        AdamSnapshot {
            t: opt.step_count(),
            lr: opt.lr,
            beta1: opt.beta1,
            beta2: opt.beta2,
            eps: opt.eps,
            m: pack(m),
            v: pack(v),
        }
    });
    Checkpoint {
        spec: model.spec.clone(),
        step,
        seed,
        params,
        buffers,
        optimizer,
    }
}

/// Encoder-only checkpoint for transfer learning: the decoder section is
/// dropped from the spec and only `enc.*` tensors are kept.
pub fn export_encoder(model: &Model, step: u64, seed: u64) -> Checkpoint {
    let full = snapshot_model(model, None, step, seed);
    let mut spec = full.spec.clone();
    spec.decoder.clear();
    Checkpoint {
        spec,
        step,
        seed,
        params: full.params.into_iter().filter(|p| p.name.starts_with("enc.")).collect(),
        buffers: full.buffers.into_iter().filter(|p| p.name.starts_with("enc.")).collect(),
        optimizer: None,
    }
}

/// Rebuild a model from checkpoint tensors. With `trainable: false` the
/// result is a frozen feature extractor.
pub fn restore_model(ck: &Checkpoint, trainable: bool) -> Result<Model> {
    let tensors: Vec<(String, Vec<usize>, Vec<f32>)> = ck
        .params
        .iter()
        .chain(&ck.buffers)
        .map(|r| (r.name.clone(), r.shape.clone(), r.data.clone()))
        .collect();
    model_from_tensors(ck.spec.clone(), &tensors, trainable)
}

/// Rebuild the optimizer aligned with `model.parameters()` order.
pub fn restore_optimizer(ck: &Checkpoint, model: &Model) -> Result<Option<Adam<f32>>> {
    let Some(snap) = &ck.optimizer else {
        return Ok(None);
    };
    let mut by_name: std::collections::HashMap<&str, (&NamedTensorData, &NamedTensorData)> = snap
        .m
        .iter()
        .zip(&snap.v)
        .map(|(m, v)| (m.name.as_str(), (m, v)))
        .collect();
    let mut m = Vec::new();
    let mut v = Vec::new();
    for (name, tensor, trainable) in model.named_tensors() {
        if !trainable {
            continue;
        }
        let Some((mr, vr)) = by_name.remove(name.as_str()) else {
            return ckpt_err(format!("optimizer state missing for parameter '{name}'"));
        };
        if mr.data.len() != tensor.len() {
            return ckpt_err(format!("optimizer moment size mismatch for '{name}'"));
        }
        m.push(mr.data.clone());
        v.push(vr.data.clone());
    }
    let mut opt = Adam::new(snap.lr);
    opt.beta1 = snap.beta1;
    opt.beta2 = snap.beta2;
    opt.eps = snap.eps;
    opt.restore(snap.t, m, v);
    Ok(Some(opt))
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_record(out: &mut Vec<u8>, rec: &NamedTensorData) {
    push_u32(out, rec.name.len() as u32);
    out.extend_from_slice(rec.name.as_bytes());
    push_u32(out, rec.shape.len() as u32);
    for &e in &rec.shape {
        push_u32(out, e as u32);
    }
    for v in &rec.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let spec_text = ck.spec.to_text();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    push_u32(&mut out, spec_text.len() as u32);
    out.extend_from_slice(spec_text.as_bytes());
    out.extend_from_slice(&ck.step.to_le_bytes());
    out.extend_from_slice(&ck.seed.to_le_bytes());
    push_u32(&mut out, ck.params.len() as u32);
    for r in &ck.params {
        push_record(&mut out, r);
    }
    push_u32(&mut out, ck.buffers.len() as u32);
    for r in &ck.buffers {
        push_record(&mut out, r);
    }
    match &ck.optimizer {
        None => out.push(0),
        Some(opt) => {
            out.push(1);
            out.extend_from_slice(&opt.t.to_le_bytes());
            for v in [opt.lr, opt.beta1, opt.beta2, opt.eps] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            push_u32(&mut out, opt.m.len() as u32);
            for r in &opt.m {
                push_record(&mut out, r);
            }
            push_u32(&mut out, opt.v.len() as u32);
            for r in &opt.v {
                push_record(&mut out, r);
            }
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return ckpt_err(format!("truncated while reading {what} at offset {}", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn record(&mut self) -> Result<NamedTensorData> {
        let name_len = self.u32("tensor name length")? as usize;
        let name = std::str::from_utf8(self.take(name_len, "tensor name")?)
            .map_err(|_| NetError::Checkpoint { detail: "tensor name is not utf-8".into() })?
            .to_string();
        let rank = self.u32("tensor rank")? as usize;
        if rank > 8 {
            return ckpt_err(format!("implausible rank {rank} for '{name}'"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u32("tensor extent")? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = self.take(numel * 4, "tensor payload")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(NamedTensorData { name, shape, data })
    }

    fn table(&mut self, what: &str) -> Result<Vec<NamedTensorData>> {
        let count = self.u32(what)? as usize;
        if count > 100_000 {
            return ckpt_err(format!("implausible {what} count {count}"));
        }
        (0..count).map(|_| self.record()).collect()
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic = c.take(4, "magic")?;
    if magic != MAGIC {
        return ckpt_err(format!("bad magic {magic:?}, expected {MAGIC:?}"));
    }
    let version = c.u16("version")?;
    if version != VERSION {
        return ckpt_err(format!("unsupported version {version}"));
    }
    let spec_len = c.u32("spec length")? as usize;
    let spec_text = std::str::from_utf8(c.take(spec_len, "spec text")?)
        .map_err(|_| NetError::Checkpoint { detail: "spec text is not utf-8".into() })?;
    let spec = ModelSpec::parse(spec_text)?;
    let step = c.u64("step")?;
    let seed = c.u64("seed")?;
    let params = c.table("parameter table")?;
    let buffers = c.table("buffer table")?;
    let has_opt = c.take(1, "optimizer flag")?[0];
    let optimizer = match has_opt {
        0 => None,
        1 => {
            let t = c.u64("optimizer step")?;
            let lr = c.f32("lr")?;
            let beta1 = c.f32("beta1")?;
            let beta2 = c.f32("beta2")?;
            let eps = c.f32("eps")?;
            let m = c.table("first-moment table")?;
            let v = c.table("second-moment table")?;
            Some(AdamSnapshot { t, lr, beta1, beta2, eps, m, v })
        }
        other => return ckpt_err(format!("bad optimizer flag {other}")),
    };
    if c.pos != bytes.len() {
        return ckpt_err(format!("{} trailing bytes after checkpoint", bytes.len() - c.pos));
    }
    Ok(Checkpoint { spec, step, seed, params, buffers, optimizer })
}

/// Write atomically: encode to a sibling temp file, then rename into place.
pub fn save_checkpoint_file(path: &Path, ck: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ck);
    crate::atomic_write(path, &bytes).map_err(|source| NetError::Io { path: path.to_path_buf(), source })
}

pub fn load_checkpoint_file(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|source| NetError::Io { path: path.to_path_buf(), source })?;
    decode_checkpoint(&bytes)
}
