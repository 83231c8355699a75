//! Continual training for temporal knowledge-graph completion.
//!
//! A link predictor is updated over a stream of graph snapshots while
//! forgetting of earlier snapshots is held back by two mechanisms: a
//! Fisher-weighted quadratic penalty whose per-task weight decays with task
//! age, and a fixed-size replay memory filled by density-based clustering of
//! event embeddings. The evaluation harness reports, after every task, the
//! model's ranking quality on the current and all earlier test sets.
//!
//! Modules, bottom-up:
//!
//! * [`dataset`]: quadruple ingestion, snapshot windowing, task splits.
//! * [`model`]: the scorer, its exact gradients, Adam, model artifacts.
//! * [`clustering`]: HDBSCAN from scratch.
//! * [`replay`]: the per-task slotted memory buffer and its selection rules.
//! * [`regularizer`]: Fisher estimation and the consolidation penalties.
//! * [`eval`]: ranks, MRR / Hit@10, the averaged protocol.
//! * [`trainer`]: the continual loop and the strategy presets.
//! * [`cli`]: prepare / train / sweep / report commands and their files.
//! * [`synthetic`]: drifting synthetic streams for experiments and tests.

pub mod cli;
pub mod clustering;
mod codec;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod model;
pub mod regularizer;
pub mod replay;
pub mod rng;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
