//! Maximum-entropy inverse reinforcement learning for abstractive summarization.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic piece:
//!
//! - [`corpus`]: word-level tokenization, vocabularies and a synthetic corpus
//!   generator with known reference statistics.
//! - [`metrics`]: the four summary sub-rewards (ROUGE-L, n-gram novelty,
//!   extractive fragment coverage, compression) and their n-gram machinery.
//! - [`reward`]: the linear reward model, importance weights over policy
//!   samples, and the MaxEnt gradient estimator used to learn the weights.
//! - [`policy`]: a compact recurrent summarizer with hand-derived gradients.
//! - [`trainer`]: MLE pretraining, self-critical RL, and the alternating
//!   reward/policy IRL loop.
//! - [`report`]: component tables, novel n-gram profiles and entity overlap.
//!
//! File formats, checkpoints and the command-line front end live in the
//! `irlsum` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod policy;
pub mod report;
pub mod reward;
pub mod rng;
pub mod synthetic;
pub mod trainer;

pub use corpus::{build_vocab, tokenize, ExamplePair, TokenId, TokenSeq, Vocab};
pub use error::{Error, Result};
pub use metrics::{components, ComponentVector, MetricsConfig};
pub use policy::{PolicyParams, Sample};
pub use reward::{ImportanceBatch, RewardWeights, SampleRecord};
pub use synthetic::{gen_synthetic, ReferenceStrategy, SyntheticConfig};
pub use trainer::{TrainConfig, WeightSnapshot, WeightTrajectory};
