//! Downstream fine-tuning of the 5-layer stack on a binary graph
//! classification dataset, honoring the stack's freeze mask.
//!
//! Model selection is by validation accuracy: the best-so-far parameter
//! snapshot is kept and restored before the final test evaluation.

use super::{adam_step, LogRow, OptimizerState, TrainConfig, TrainError};
use crate::data::MolDataset;
use crate::graph::batch;
use crate::model::{
    decode_graph_head, encode, pooled_embeddings, topology, triplet_step, Bound, Params,
};
use crate::tensor::{Tape, TensorId};
use crate::transfer::{LayerStack, STACK_LAYERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone)]
pub struct DownstreamResult {
    pub test_accuracy: f32,
    pub best_val_accuracy: f32,
    pub test_roc_auc: f32,
    pub log: Vec<LogRow>,
}

struct ForwardOut {
    tape: Tape,
    bound: Bound,
    logits: TensorId,
    labels: Vec<f32>,
}

fn forward_logits(
    params: &Params,
    data: &MolDataset,
    indices: &[usize],
) -> Result<ForwardOut, TrainError> {
    let graphs: Vec<_> = indices.iter().map(|&i| data.graphs[i].clone()).collect();
    let labels: Vec<f32> = indices.iter().map(|&i| data.labels[i] as f32).collect();
    let gb = batch(&graphs)?;
    let topo = topology(&gb, true)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape)?;
    let mut state = encode(&mut tape, &gb, &topo, params, &bound, "enc")?;
    for layer in 1..=STACK_LAYERS {
        state = triplet_step(
            &mut tape,
            state,
            &topo,
            params,
            &bound,
            &LayerStack::layer_prefix(layer),
        )?;
    }
    let logits = decode_graph_head(&mut tape, state.nodes, &topo, params, &bound, "dec.out")?;
    Ok(ForwardOut {
        tape,
        bound,
        logits,
        labels,
    })
}

/// Raw logits and labels over a split, in index order.
pub fn split_scores(
    params: &Params,
    data: &MolDataset,
    indices: &[usize],
) -> Result<(Vec<f32>, Vec<u8>), TrainError> {
    let mut scores = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let out = forward_logits(params, data, chunk)?;
        scores.extend_from_slice(out.tape.data(out.logits));
        labels.extend(chunk.iter().map(|&i| data.labels[i]));
    }
    Ok((scores, labels))
}

fn accuracy_of(scores: &[f32], labels: &[u8]) -> f32 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|&(&z, &y)| (z > 0.0) == (y == 1))
        .count();
    correct as f32 / labels.len().max(1) as f32
}

/// Train the stack's trainable parameters; returns test metrics of the
/// best-validation snapshot. The stack is left holding that snapshot.
pub fn train_downstream(
    stack: &mut LayerStack,
    data: &MolDataset,
    cfg: &TrainConfig,
) -> Result<DownstreamResult, TrainError> {
    if data.split.train.is_empty() {
        return Err(TrainError::MissingSplit("train"));
    }
    if data.split.valid.is_empty() {
        return Err(TrainError::MissingSplit("valid"));
    }
    if data.split.test.is_empty() {
        return Err(TrainError::MissingSplit("test"));
    }
    let mut params = stack.params.clone();
    let mut opt = OptimizerState::new(&params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = data.split.train.clone();
    let mut cursor = order.len(); // forces a shuffle on first use
    let mut best: Option<(f32, Params)> = None;
    let mut log = Vec::new();
    for step in 1..=cfg.steps {
        let mut indices = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            if cursor >= order.len() {
                for i in (1..order.len()).rev() {
                    let j = rng.random_range(0..=i);
                    order.swap(i, j);
                }
                cursor = 0;
            }
            indices.push(order[cursor]);
            cursor += 1;
        }
        let mut out = forward_logits(&params, data, &indices)?;
        let loss = out.tape.bce_with_logits_mean(out.logits, &out.labels)?;
        match out.tape.backward(loss) {
            Err(crate::tensor::TensorError::NonFinite { .. }) => {
                return Err(TrainError::Diverged { step: step as u64 })
            }
            other => other?,
        }
        let loss_value = out.tape.data(loss)[0];
        let mut grads = params.collect_grads(&out.tape, &out.bound);
        adam_step(&mut params, &mut grads, &mut opt, cfg.grad_clip_norm)?;
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let (scores, labels) = split_scores(&params, data, &data.split.valid)?;
            let val_acc = accuracy_of(&scores, &labels);
            if best.as_ref().map(|(b, _)| val_acc > *b).unwrap_or(true) {
                best = Some((val_acc, params.clone()));
            }
            log.push(LogRow {
                step,
                train_loss: loss_value,
                val_metric: val_acc,
            });
        }
    }
    let (best_val_accuracy, best_params) = best.expect("at least one evaluation ran");
    stack.params = best_params;
    let (scores, labels) = split_scores(&stack.params, data, &data.split.test)?;
    Ok(DownstreamResult {
        test_accuracy: accuracy_of(&scores, &labels),
        best_val_accuracy,
        test_roc_auc: crate::stats::roc_auc(&scores, &labels),
        log,
    })
}

/// Pooled (max then mean) final-layer embedding per graph, with labels.
pub fn graph_embeddings(
    stack: &LayerStack,
    data: &MolDataset,
    indices: &[usize],
) -> Result<Vec<(usize, u8, Vec<f32>)>, TrainError> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let graphs: Vec<_> = chunk.iter().map(|&i| data.graphs[i].clone()).collect();
        let gb = batch(&graphs)?;
        let topo = topology(&gb, true)?;
        let mut tape = Tape::new();
        let bound = stack.params.bind(&mut tape)?;
        let mut state = encode(&mut tape, &gb, &topo, &stack.params, &bound, "enc")?;
        for layer in 1..=STACK_LAYERS {
            state = triplet_step(
                &mut tape,
                state,
                &topo,
                &stack.params,
                &bound,
                &LayerStack::layer_prefix(layer),
            )?;
        }
        let (mx, mn) = pooled_embeddings(&mut tape, state.nodes, &topo)?;
        let h = stack.config.hidden_dim;
        for (row, &i) in chunk.iter().enumerate() {
            let mut emb = Vec::with_capacity(2 * h);
            emb.extend_from_slice(&tape.data(mx)[row * h..(row + 1) * h]);
            emb.extend_from_slice(&tape.data(mn)[row * h..(row + 1) * h]);
            out.push((i, data.labels[i], emb));
        }
    }
    Ok(out)
}
