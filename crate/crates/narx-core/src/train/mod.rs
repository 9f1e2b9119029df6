//! Losses per probe kind, the Adam optimizer with global-norm gradient
//! clipping, the algorithm pretraining loop, and downstream fine-tuning.

mod adam;
mod downstream;
mod loss;
mod pretrain;

pub use adam::{adam_step, clip_global_norm, OptimizerState};
pub use downstream::{graph_embeddings, train_downstream, DownstreamResult};
pub use loss::{compute_loss, scalar_from_train_space, scalar_to_train_space, Predictions, Targets};
pub use pretrain::{evaluate_validation, pretrain_clrs, pretrain_multitask, PretrainResult};

use crate::tasks::AlgoName;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite gradient for '{name}' at step {step}")]
    NonFiniteGradient { name: String, step: u64 },
    #[error("training diverged (non-finite loss) at step {step}")]
    Diverged { step: u64 },
    #[error("dataset has no {0} split")]
    MissingSplit(&'static str),
    #[error("frozen parameter '{0}' received a gradient")]
    FrozenGradient(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Task(#[from] crate::tasks::TaskError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// Loss weighting and teacher forcing controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// weight of the output-probe loss
    pub output_weight: f32,
    /// weight of per-step hint losses (0 disables hint supervision)
    pub hint_weight: f32,
    /// probability of feeding ground-truth hint state per step
    pub teacher_forcing_prob: f32,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            output_weight: 1.0,
            hint_weight: 0.0,
            teacher_forcing_prob: 0.0,
        }
    }
}

impl LossSpec {
    /// Per-algorithm preset: string matching trains with teacher forcing
    /// by default, everything else without.
    pub fn default_for(algo: AlgoName) -> Self {
        let mut spec = LossSpec::default();
        if algo == AlgoName::NaiveStringMatcher {
            spec.teacher_forcing_prob = 0.5;
        }
        spec
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.output_weight < 0.0 || self.hint_weight < 0.0 {
            return Err("loss weights must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing_prob) {
            return Err("teacher_forcing_prob must be in [0, 1]".into());
        }
        Ok(())
    }
}

/// Loop controls shared by pretraining and downstream fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub grad_clip_norm: f32,
    pub learning_rate: f32,
    /// node count of sampled training instances (pretraining only)
    pub instance_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            batch_size: 32,
            seed: 0,
            eval_every: 100,
            grad_clip_norm: 1.0,
            learning_rate: 1e-3,
            instance_size: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.steps == 0 {
            return Err("steps must be positive".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be positive".into());
        }
        Ok(())
    }
}

/// One training-log row: `(step, train_loss, val_metric)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub train_loss: f32,
    pub val_metric: f32,
}

/// Write log rows as the run-directory CSV.
pub fn write_log_csv(path: &std::path::Path, rows: &[LogRow]) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "step,train_loss,val_metric")?;
    for r in rows {
        writeln!(f, "{},{},{}", r.step, r.train_loss, r.val_metric)?;
    }
    Ok(())
}
