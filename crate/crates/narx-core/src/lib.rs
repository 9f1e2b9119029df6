//! Pretraining message-passing networks on classical algorithm execution and
//! transferring the learned processor weights into a downstream graph
//! classifier with per-layer freezing.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`tensor`] — dense f32 tensors with tape-based reverse-mode autodiff
//! - [`graph`] — graph containers and batching
//! - [`tasks`] — samplers, exact executors and brute-force oracles for the
//!   24 supported classical algorithms
//! - [`model`] — the encode / process / decode network with a
//!   triplet-message processor
//! - [`train`] — losses, Adam, pretraining and downstream fine-tuning loops
//! - [`transfer`] — checkpoints, the 5-layer stack and freezing plans
//! - [`data`] — molecular-graph CSV ingestion and synthetic datasets
//! - [`stats`] — accuracy, win/tie/loss comparison, Welch's t-test, reports
//! - [`config`] — experiment configuration files for the `narx` CLI

// pub mod config;
pub mod data;
pub mod graph;
pub mod model;
pub mod stats;
pub mod tasks;
pub mod tensor;
pub mod train;
pub mod transfer;
