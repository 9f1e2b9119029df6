//! Checkpoint format, the 5-layer downstream stack, and freezing plans.
//!
//! Checkpoints are little-endian binary files: magic `NARX`, a u16
//! version, config echo (hidden/triplet dims, algorithm tag, seed), then
//! named f32 tensors. Round-trips are byte-exact.

use crate::model::{
    init_encoder, init_processor, processor_entry_names, Initializer, ModelConfig, ModelError,
    Params,
};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NARX";
pub const CHECKPOINT_VERSION: u16 = 1;
/// Processor layers in the downstream stack.
pub const STACK_LAYERS: usize = 5;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("checkpoint format error at byte {offset}: {what}")]
    Format { offset: u64, what: String },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("plan {0:?} needs a pretrained checkpoint")]
    MissingCheckpoint(FreezePlan),
    #[error("checkpoint dims (hidden {ck_h}, triplet {ck_t}) do not match config (hidden {cfg_h}, triplet {cfg_t})")]
    DimMismatch {
        ck_h: usize,
        ck_t: usize,
        cfg_h: usize,
        cfg_t: usize,
    },
    #[error("checkpoint is missing processor entry '{0}'")]
    MissingEntry(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Named tensors plus a config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u16,
    pub hidden_dim: usize,
    pub triplet_dim: usize,
    pub algo: String,
    pub seed: u64,
    pub entries: Vec<(String, Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    pub fn from_params(
        params: &Params,
        cfg: &ModelConfig,
        algo: &str,
        seed: u64,
    ) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            hidden_dim: cfg.hidden_dim,
            triplet_dim: cfg.triplet_dim,
            algo: algo.to_string(),
            seed,
            entries: params
                .entries()
                .iter()
                .map(|e| (e.name.clone(), e.shape.clone(), e.data.clone()))
                .collect(),
        }
    }

    pub fn entry(&self, name: &str) -> Option<&(String, Vec<usize>, Vec<f32>)> {
        self.entries.iter().find(|(n, _, _)| n == name)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), TransferError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&ckpt.version.to_le_bytes());
    buf.extend_from_slice(&(ckpt.hidden_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(ckpt.triplet_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(ckpt.algo.len() as u32).to_le_bytes());
    buf.extend_from_slice(ckpt.algo.as_bytes());
    buf.extend_from_slice(&ckpt.seed.to_le_bytes());
    buf.extend_from_slice(&(ckpt.entries.len() as u32).to_le_bytes());
    for (name, shape, data) in &ckpt.entries {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &d in shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct Reader {
    buf: Vec<u8>,
    pos: usize,
}

impl Reader {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8], TransferError> {
        if self.pos + n > self.buf.len() {
            return Err(TransferError::Format {
                offset: self.pos as u64,
                what: format!("truncated while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, TransferError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, TransferError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, TransferError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String, TransferError> {
        let len = self.u32(what)? as usize;
        let offset = self.pos as u64;
        let bytes = self.take(len, what)?.to_vec();
        String::from_utf8(bytes).map_err(|_| TransferError::Format {
            offset,
            what: format!("invalid utf-8 in {what}"),
        })
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, TransferError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut r = Reader { buf, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(TransferError::Format {
            offset: 0,
            what: format!("bad magic {magic:?}"),
        });
    }
    let version = r.u16("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(TransferError::Format {
            offset: 4,
            what: format!("unsupported version {version}"),
        });
    }
    let hidden_dim = r.u32("hidden_dim")? as usize;
    let triplet_dim = r.u32("triplet_dim")? as usize;
    let algo = r.string("algo name")?;
    let seed = r.u64("seed")?;
    let count = r.u32("entry count")? as usize;
    let mut entries = Vec::with_capacity(count);
    let mut seen = std::collections::HashSet::new();
    for i in 0..count {
        let name = r.string(&format!("entry {i} name"))?;
        if !seen.insert(name.clone()) {
            return Err(TransferError::Format {
                offset: r.pos as u64,
                what: format!("duplicate entry '{name}'"),
            });
        }
        let ndim = r.u32(&format!("entry '{name}' rank"))? as usize;
        let shape_offset = r.pos as u64;
        let mut shape = Vec::with_capacity(ndim);
        let mut numel = 1usize;
        for _ in 0..ndim {
            let d = r.u32(&format!("entry '{name}' shape"))? as usize;
            numel = numel.saturating_mul(d);
            shape.push(d);
        }
        let remaining = r.buf.len() - r.pos;
        if numel.saturating_mul(4) > remaining {
            return Err(TransferError::Format {
                offset: shape_offset,
                what: format!(
                    "entry '{name}': shape {shape:?} needs {} bytes, {remaining} remain",
                    numel * 4
                ),
            });
        }
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            let b = r.take(4, &format!("entry '{name}' data"))?;
            data.push(f32::from_le_bytes(b.try_into().unwrap()));
        }
        entries.push((name, shape, data));
    }
    if r.pos != r.buf.len() {
        return Err(TransferError::Format {
            offset: r.pos as u64,
            what: format!("{} trailing bytes", r.buf.len() - r.pos),
        });
    }
    Ok(Checkpoint {
        version,
        hidden_dim,
        triplet_dim,
        algo,
        seed,
        entries,
    })
}

/// The four freezing strategies for the 5-layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezePlan {
    /// all layers random, all trainable
    Baseline,
    /// layers 2 and 4 pretrained and frozen
    Alternating,
    /// layers 1 and 2 pretrained and frozen
    Early,
    /// pretrained slots as in alternating, but every layer trainable
    FullFinetune,
}

impl std::str::FromStr for FreezePlan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(FreezePlan::Baseline),
            "alternating" => Ok(FreezePlan::Alternating),
            "early" => Ok(FreezePlan::Early),
            "full" | "full_finetune" => Ok(FreezePlan::FullFinetune),
            other => Err(format!(
                "unknown plan '{other}'; expected baseline|alternating|early|full"
            )),
        }
    }
}

impl std::fmt::Display for FreezePlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FreezePlan::Baseline => "baseline",
            FreezePlan::Alternating => "alternating",
            FreezePlan::Early => "early",
            FreezePlan::FullFinetune => "full_finetune",
        })
    }
}

/// Per-layer (init from pretrained, trainable) flags, layers 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub pretrained: bool,
    pub trainable: bool,
}

impl FreezePlan {
    pub fn layer_specs(self) -> [LayerSpec; STACK_LAYERS] {
        let spec = |pretrained, trainable| LayerSpec {
            pretrained,
            trainable,
        };
        match self {
            FreezePlan::Baseline => [spec(false, true); STACK_LAYERS],
            FreezePlan::Alternating => [
                spec(false, true),
                spec(true, false),
                spec(false, true),
                spec(true, false),
                spec(false, true),
            ],
            FreezePlan::Early => [
                spec(true, false),
                spec(true, false),
                spec(false, true),
                spec(false, true),
                spec(false, true),
            ],
            FreezePlan::FullFinetune => [
                spec(false, true),
                spec(true, true),
                spec(false, true),
                spec(true, true),
                spec(false, true),
            ],
        }
    }

    pub fn needs_checkpoint(self) -> bool {
        self.layer_specs().iter().any(|s| s.pretrained)
    }
}

/// The downstream model: an encoder, five stacked processor layers with a
/// per-parameter freeze mask, and a pooled binary classification head.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub params: Params,
    pub config: ModelConfig,
    pub plan: FreezePlan,
}

impl LayerStack {
    pub fn layer_prefix(layer: usize) -> String {
        format!("stack.l{layer}")
    }
}

/// Build the stack. Pretrained slots copy the checkpoint's processor
/// weights bitwise (a single pretrained processor fills every pretrained
/// slot); random layers draw from independent seeded streams.
pub fn build_stack(
    plan: FreezePlan,
    ckpt: Option<&Checkpoint>,
    cfg: &ModelConfig,
    feature_dims: (usize, usize, usize),
    seed: u64,
) -> Result<LayerStack, TransferError> {
    cfg.validate()?;
    if plan.needs_checkpoint() && ckpt.is_none() {
        return Err(TransferError::MissingCheckpoint(plan));
    }
    if let Some(c) = ckpt {
        if c.hidden_dim != cfg.hidden_dim || c.triplet_dim != cfg.triplet_dim {
            return Err(TransferError::DimMismatch {
                ck_h: c.hidden_dim,
                ck_t: c.triplet_dim,
                cfg_h: cfg.hidden_dim,
                cfg_t: cfg.triplet_dim,
            });
        }
    }
    let mut params = Params::new();
    let mut init = Initializer::new(seed);
    let (dn, de, dg) = feature_dims;
    init_encoder(&mut init, &mut params, "enc", dn, de, dg, cfg.hidden_dim);
    for layer in 1..=STACK_LAYERS {
        init_processor(&mut init, &mut params, &LayerStack::layer_prefix(layer), cfg);
    }
    crate::model::init_graph_head(&mut init, &mut params, "dec.out", cfg.hidden_dim, 1);

    let specs = plan.layer_specs();
    for (layer, spec) in specs.iter().enumerate() {
        let prefix = LayerStack::layer_prefix(layer + 1);
        if spec.pretrained {
            let c = ckpt.expect("checked above");
            for (src, dst) in processor_entry_names("proc")
                .into_iter()
                .zip(processor_entry_names(&prefix))
            {
                let (_, shape, data) = c
                    .entry(&src)
                    .ok_or_else(|| TransferError::MissingEntry(src.clone()))?;
                let e = params.get_mut(&dst)?;
                if e.shape != *shape {
                    return Err(TransferError::Format {
                        offset: 0,
                        what: format!("entry '{src}' shape {shape:?} vs stack {:?}", e.shape),
                    });
                }
                e.data = data.clone();
            }
        }
    }
    for (layer, spec) in specs.iter().enumerate() {
        let prefix = LayerStack::layer_prefix(layer + 1);
        let trainable = spec.trainable;
        for e in params.entries_mut() {
            if e.name.starts_with(&format!("{prefix}.")) {
                e.trainable = trainable;
            }
        }
    }
    Ok(LayerStack {
        params,
        config: *cfg,
        plan,
    })
}

/// Freeze verification between two parameter snapshots of the same stack.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeReport {
    pub violations: Vec<String>,
    pub trainable_changed: bool,
    pub note: Option<String>,
}

impl FreezeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Frozen parameters must be bit-identical between snapshots; at least
/// one trainable parameter should have changed (a zero-gradient run is
/// reported as a note, not a violation).
pub fn assert_frozen(before: &Params, after: &Params) -> FreezeReport {
    let mut violations = Vec::new();
    let mut trainable_changed = false;
    for (b, a) in before.entries().iter().zip(after.entries()) {
        if b.name != a.name || b.trainable != a.trainable {
            violations.push(format!(
                "snapshot mismatch at '{}' vs '{}'",
                b.name, a.name
            ));
            continue;
        }
        let identical = b.data.len() == a.data.len()
            && b.data
                .iter()
                .zip(&a.data)
                .all(|(x, y)| x.to_bits() == y.to_bits());
        if !b.trainable && !identical {
            violations.push(format!("frozen parameter '{}' changed", b.name));
        }
        if b.trainable && !identical {
            trainable_changed = true;
        }
    }
    let note = if violations.is_empty() && !trainable_changed {
        Some("no trainable parameter changed (zero-gradient run?)".to_string())
    } else {
        None
    };
    FreezeReport {
        violations,
        trainable_changed,
        note,
    }
}
