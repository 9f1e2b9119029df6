//! The encode–process–decode network: per-probe linear encoders, a
//! triplet-message processor, and per-probe decoder heads.
//!
//! Parameters live in a flat named store ([`Params`]) so the optimizer,
//! checkpoints and freezing plans can address them uniformly; the forward
//! pass binds them onto a fresh tape per step.

mod forward;

pub use forward::{
    decode_edge_mask, decode_graph_head, decode_node_mask, decode_pointer_scores, encode,
    init_edge_mask_head, init_graph_head, init_mask_head, init_pointer_head, message_step,
    pooled_embeddings, topology, triplet_step, BatchTopology, State, TRIPLET_NODE_CAP,
};

use crate::tensor::{Tape, TensorId, TensorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("graph with {n} nodes exceeds the triplet cap {cap}")]
    TripletCap { n: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
}

/// Processor width configuration. The aggregator is max and the
/// activation relu throughout.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub triplet_dim: usize,
    /// Processor iterations; 0 means "decided by the caller" (trace length
    /// during pretraining, one round per stacked layer downstream).
    pub num_steps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            triplet_dim: 8,
            num_steps: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_dim == 0 {
            return Err(ModelError::Config("hidden_dim must be positive".into()));
        }
        if self.triplet_dim == 0 {
            return Err(ModelError::Config("triplet_dim must be positive".into()));
        }
        Ok(())
    }
}

/// One named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub trainable: bool,
}

impl ParamEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Flat named parameter store with deterministic iteration order
/// (insertion order).
#[derive(Debug, Clone, Default)]
pub struct Params {
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<f32>) {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "param '{name}' shape/data mismatch"
        );
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter '{name}'"
        );
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push(ParamEntry {
            name: name.to_string(),
            shape,
            data,
            trainable: true,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry] {
        &mut self.entries
    }

    pub fn get(&self, name: &str) -> Result<&ParamEntry, ModelError> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| ModelError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut ParamEntry, ModelError> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i]),
            None => Err(ModelError::UnknownParam(name.to_string())),
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Mark entries trainable or frozen by name predicate.
    pub fn set_trainable(&mut self, pred: impl Fn(&str) -> bool) {
        for e in &mut self.entries {
            e.trainable = pred(&e.name);
        }
    }

    /// Register every entry on a tape; trainable entries become params,
    /// frozen ones plain leaves.
    pub fn bind(&self, tape: &mut Tape) -> Result<Bound, TensorError> {
        let mut ids = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let id = if e.trainable {
                tape.param(&e.shape, e.data.clone())?
            } else {
                tape.leaf(&e.shape, e.data.clone())?
            };
            ids.push(id);
        }
        Ok(Bound { ids })
    }

    /// Collect gradients accumulated on a tape after backward, in entry
    /// order; frozen entries yield None.
    pub fn collect_grads(&self, tape: &Tape, bound: &Bound) -> Vec<Option<Vec<f32>>> {
        bound
            .ids
            .iter()
            .map(|&id| tape.grad(id).map(|g| g.to_vec()))
            .collect()
    }
}

/// Tape handles for a bound parameter set, parallel to `Params::entries`.
pub struct Bound {
    ids: Vec<TensorId>,
}

impl Bound {
    pub fn id(&self, params: &Params, name: &str) -> Result<TensorId, ModelError> {
        params
            .position(name)
            .map(|i| self.ids[i])
            .ok_or_else(|| ModelError::UnknownParam(name.to_string()))
    }

    pub fn ids(&self) -> &[TensorId] {
        &self.ids
    }
}

/// Deterministic uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initializer.
pub struct Initializer {
    rng: ChaCha8Rng,
}

impl Initializer {
    pub fn new(seed: u64) -> Self {
        Initializer {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self, n: usize, bound: f32) -> Vec<f32> {
        (0..n).map(|_| self.rng.random_range(-bound..bound)).collect()
    }

    /// Weight [in, out] and bias [out] under `{prefix}.w` / `{prefix}.b`.
    pub fn linear(&mut self, params: &mut Params, prefix: &str, in_dim: usize, out_dim: usize) {
        let bound = 1.0 / (in_dim as f32).sqrt();
        let w = self.uniform(in_dim * out_dim, bound);
        let b = self.uniform(out_dim, bound);
        params.insert(&format!("{prefix}.w"), vec![in_dim, out_dim], w);
        params.insert(&format!("{prefix}.b"), vec![out_dim], b);
    }

    /// Weight only (no bias), as `{name}`.
    pub fn matrix(&mut self, params: &mut Params, name: &str, in_dim: usize, out_dim: usize) {
        let bound = 1.0 / (in_dim as f32).sqrt();
        let w = self.uniform(in_dim * out_dim, bound);
        params.insert(name, vec![in_dim, out_dim], w);
    }

    /// Bias only, as `{name}`.
    pub fn bias(&mut self, params: &mut Params, name: &str, dim: usize, fan_in: usize) {
        let bound = 1.0 / (fan_in as f32).sqrt();
        let b = self.uniform(dim, bound);
        params.insert(name, vec![dim], b);
    }
}

/// Encoder parameter names under a prefix: three linear maps into the
/// hidden space.
pub fn init_encoder(
    init: &mut Initializer,
    params: &mut Params,
    prefix: &str,
    d_node: usize,
    d_edge: usize,
    d_graph: usize,
    hidden: usize,
) {
    init.linear(params, &format!("{prefix}.node"), d_node, hidden);
    init.linear(params, &format!("{prefix}.edge"), d_edge, hidden);
    init.linear(params, &format!("{prefix}.graph"), d_graph, hidden);
}

/// Processor parameters under a prefix: message MLP (4 inputs), triplet
/// MLP (4 inputs -> triplet_dim), edge readout, and the node update MLP.
pub fn init_processor(
    init: &mut Initializer,
    params: &mut Params,
    prefix: &str,
    cfg: &ModelConfig,
) {
    let h = cfg.hidden_dim;
    let t = cfg.triplet_dim;
    // message MLP: relu(h_i W + h_j W + h_ij W + h_g W + b) W2 + b2
    init.matrix(params, &format!("{prefix}.msg.w_src"), h, h);
    init.matrix(params, &format!("{prefix}.msg.w_dst"), h, h);
    init.matrix(params, &format!("{prefix}.msg.w_edge"), h, h);
    init.matrix(params, &format!("{prefix}.msg.w_graph"), h, h);
    init.bias(params, &format!("{prefix}.msg.b1"), h, 4 * h);
    init.matrix(params, &format!("{prefix}.msg.w2"), h, h);
    init.bias(params, &format!("{prefix}.msg.b2"), h, h);
    // triplet MLP over (h_i, h_j, h_k, h_ij), max over k
    init.matrix(params, &format!("{prefix}.tri.w_a"), h, h);
    init.matrix(params, &format!("{prefix}.tri.w_b"), h, h);
    init.matrix(params, &format!("{prefix}.tri.w_c"), h, h);
    init.matrix(params, &format!("{prefix}.tri.w_edge"), h, h);
    init.bias(params, &format!("{prefix}.tri.b1"), h, 4 * h);
    init.matrix(params, &format!("{prefix}.tri.w2"), h, t);
    init.bias(params, &format!("{prefix}.tri.b2"), t, h);
    // edge readout back into the hidden space
    init.matrix(params, &format!("{prefix}.tri.w_out"), t, h);
    init.bias(params, &format!("{prefix}.tri.b_out"), h, t);
    // node update MLP on (h_i, m_i)
    init.matrix(params, &format!("{prefix}.upd.w_node"), h, h);
    init.matrix(params, &format!("{prefix}.upd.w_msg"), h, h);
    init.bias(params, &format!("{prefix}.upd.b1"), h, 2 * h);
    init.matrix(params, &format!("{prefix}.upd.w2"), h, h);
    init.bias(params, &format!("{prefix}.upd.b2"), h, h);
}

/// Names of the processor entries under a prefix, in insertion order.
pub fn processor_entry_names(prefix: &str) -> Vec<String> {
    [
        "msg.w_src",
        "msg.w_dst",
        "msg.w_edge",
        "msg.w_graph",
        "msg.b1",
        "msg.w2",
        "msg.b2",
        "tri.w_a",
        "tri.w_b",
        "tri.w_c",
        "tri.w_edge",
        "tri.b1",
        "tri.w2",
        "tri.b2",
        "tri.w_out",
        "tri.b_out",
        "upd.w_node",
        "upd.w_msg",
        "upd.b1",
        "upd.w2",
        "upd.b2",
    ]
    .iter()
    .map(|s| format!("{prefix}.{s}"))
    .collect()
}

/// Zero all triplet-branch entries under a processor prefix; with these
/// zeroed the triplet step degenerates to the plain message step.
pub fn zero_triplet_params(params: &mut Params, prefix: &str) {
    for e in params.entries_mut() {
        if e.name.starts_with(&format!("{prefix}.tri.")) {
            e.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}
