//! Training regimes: MLE pretraining, self-critical RL with a fixed ROUGE-L
//! reward, and the alternating reward/policy IRL loop.
//!
//! Every random draw comes from a stream derived from `(seed, phase, epoch, …)`,
//! so a run is fully determined by its corpus, configuration and seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{ExamplePair, TokenId, Vocab};
use crate::error::{Error, Result};
use crate::metrics::{components, rouge_l, ComponentVector, MetricsConfig, NUM_COMPONENTS};
use crate::policy::{self, PolicyGrad, PolicyParams, Sample};
use crate::reward::{self, RewardWeights, SampleRecord};
use crate::rng;

// Stream labels.
const INIT: u64 = 1;
const PRETRAIN: u64 = 2;
const RL: u64 = 3;
const IRL_REWARD: u64 = 4;
const IRL_POLICY: u64 = 5;

/// Hyperparameters shared by the three regimes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrainConfig {
    /// Policy learning rate during RL and IRL policy updates.
    pub policy_lr: f64,
    /// Reward-weight learning rate.
    pub reward_lr: f64,
    /// RL / IRL epochs.
    pub epochs: usize,
    /// A reward update runs in epoch `h` (1-indexed) when `h % F == 0`.
    pub reward_update_frequency: usize,
    /// Demonstrations per reward update (N).
    pub demos_per_update: usize,
    /// Policy samples per reward update (M).
    pub samples_per_update: usize,
    /// Weight of the MLE term in the mixed loss.
    pub mix_gamma: f64,
    pub novelty_order: usize,
    pub max_decode_len: usize,
    pub batch_size: usize,
    /// Policy-gradient samples per example per update.
    pub samples_per_example: usize,
    pub seed: u64,
    pub pretrain_lr: f64,
    pub pretrain_epochs: usize,
    pub embed_dim: usize,
    pub max_vocab: usize,
    /// Keep only the first this-many training pairs.
    pub max_examples: Option<usize>,
}

impl TrainConfig {
    /// Settings sized for the compact policy on a laptop.
    pub fn desk() -> Self {
        TrainConfig {
            policy_lr: 1e-2,
            reward_lr: 1.0,
            epochs: 20,
            reward_update_frequency: 1,
            demos_per_update: 100,
            samples_per_update: 100,
            mix_gamma: 0.0016,
            novelty_order: 2,
            max_decode_len: 16,
            batch_size: 8,
            samples_per_example: 4,
            seed: 7,
            pretrain_lr: 0.2,
            pretrain_epochs: 60,
            embed_dim: 32,
            max_vocab: 256,
            max_examples: None,
        }
    }

    /// Hyperparameters of the original large-model setup.
    pub fn full_scale() -> Self {
        TrainConfig {
            policy_lr: 1e-6,
            max_examples: Some(10_000),
            ..TrainConfig::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" | "desk-scale" => Ok(TrainConfig::desk()),
            "paper" | "paper-scale" => Ok(TrainConfig::full_scale()),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }

    pub fn metrics(&self) -> MetricsConfig {
        MetricsConfig {
            novelty_order: self.novelty_order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("policy_lr", self.policy_lr),
            ("reward_lr", self.reward_lr),
            ("pretrain_lr", self.pretrain_lr),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("reward_update_frequency", self.reward_update_frequency),
            ("demos_per_update", self.demos_per_update),
            ("samples_per_update", self.samples_per_update),
            ("novelty_order", self.novelty_order),
            ("max_decode_len", self.max_decode_len),
            ("batch_size", self.batch_size),
            ("samples_per_example", self.samples_per_example),
            ("embed_dim", self.embed_dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.max_vocab < 5 {
            return Err(Error::InvalidArgument("max_vocab must be at least 5".into()));
        }
        if !(0.0..=1.0).contains(&self.mix_gamma) {
            return Err(Error::InvalidArgument(format!(
                "mix_gamma {} outside [0, 1]",
                self.mix_gamma
            )));
        }
        if self.max_examples == Some(0) {
            return Err(Error::InvalidArgument("max_examples must be positive".into()));
        }
        Ok(())
    }

    /// The leading `max_examples` pairs of `corpus`.
    pub fn truncate<'a>(&self, corpus: &'a [ExamplePair]) -> &'a [ExamplePair] {
        match self.max_examples {
            Some(n) if n < corpus.len() => &corpus[..n],
            _ => corpus,
        }
    }
}

/// One reward update.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightSnapshot {
    /// 1-based update index.
    pub update: usize,
    /// 1-based epoch in which the update ran.
    pub epoch: usize,
    /// Weights the gradient was computed at.
    pub phi: [f64; NUM_COMPONENTS],
    /// Weights after the update.
    pub phi_next: [f64; NUM_COMPONENTS],
    pub grad: [f64; NUM_COMPONENTS],
    pub data_mean: [f64; NUM_COMPONENTS],
    pub model_mean: [f64; NUM_COMPONENTS],
}

/// Chronological record of reward updates.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightTrajectory {
    pub snapshots: Vec<WeightSnapshot>,
}

/// Training pairs with ids resolved against a vocabulary.
pub struct Workspace<'a> {
    pub pairs: &'a [ExamplePair],
    pub vocab: &'a Vocab,
    articles: Vec<Vec<TokenId>>,
    references: Vec<Vec<TokenId>>,
}

impl<'a> Workspace<'a> {
    pub fn new(pairs: &'a [ExamplePair], vocab: &'a Vocab) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        Ok(Workspace {
            pairs,
            vocab,
            articles: pairs.iter().map(|p| vocab.encode(&p.article).ids).collect(),
            references: pairs.iter().map(|p| vocab.encode(&p.reference).ids).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn article_ids(&self, i: usize) -> &[TokenId] {
        &self.articles[i]
    }

    pub fn reference_ids(&self, i: usize) -> &[TokenId] {
        &self.references[i]
    }

    /// Components of generated ids against pair `i`.
    pub fn score(&self, i: usize, ids: &[TokenId], cfg: &MetricsConfig) -> Result<ComponentVector> {
        let summary = reward::surfaces(self.vocab, ids)?;
        let pair = &self.pairs[i];
        components(&summary, &pair.article_refs(), &pair.reference_refs(), cfg)
    }

    /// Components of pair `i`'s own reference (the demonstration side).
    pub fn reference_components(&self, i: usize, cfg: &MetricsConfig) -> Result<ComponentVector> {
        let pair = &self.pairs[i];
        let r = pair.reference_refs();
        components(&r, &pair.article_refs(), &r, cfg)
    }
}

/// Greedy summaries (surface tokens) for every pair.
pub fn greedy_summaries(params: &PolicyParams, ws: &Workspace<'_>, max_len: usize) -> Result<Vec<Vec<String>>> {
    (0..ws.len())
        .map(|i| {
            let ids = policy::greedy(params, ws.article_ids(i), max_len)?;
            Ok(ws.vocab.decode(&ids)?.surface)
        })
        .collect()
}

/// Mean ROUGE-L of greedy decodes against the references.
pub fn mean_greedy_rouge(params: &PolicyParams, ws: &Workspace<'_>, max_len: usize) -> Result<f64> {
    let summaries = greedy_summaries(params, ws, max_len)?;
    let total: f64 = summaries
        .iter()
        .zip(ws.pairs)
        .map(|(s, p)| rouge_l(s, &p.reference))
        .sum();
    Ok(total / ws.len() as f64)
}

/// Mean training loss per epoch plus the selected checkpoint.
#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub params: PolicyParams,
    /// Mean per-example loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    /// Validation ROUGE-L after each epoch.
    pub validation_rouge: Vec<f64>,
    /// 1-based epoch of the returned checkpoint.
    pub best_epoch: usize,
}

fn shuffled<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Teacher-forcing MLE with shuffled mini-batches; returns the epoch with the
/// best validation ROUGE-L (first one on ties).
pub fn pretrain_mle(
    corpus: &[ExamplePair],
    validation: &[ExamplePair],
    vocab: &Vocab,
    config: &TrainConfig,
) -> Result<PretrainOutcome> {
    config.validate()?;
    let corpus = config.truncate(corpus);
    let ws = Workspace::new(corpus, vocab)?;
    let valid = Workspace::new(if validation.is_empty() { corpus } else { validation }, vocab)?;
    let mut params = PolicyParams::random(vocab.len(), config.embed_dim, &mut rng::stream(config.seed, &[INIT]));

    let mut best: Option<(f64, usize, PolicyParams)> = None;
    let mut epoch_losses = Vec::new();
    let mut validation_rouge = Vec::new();
    for epoch in 1..=config.pretrain_epochs {
        let order = shuffled(ws.len(), &mut rng::stream(config.seed, &[PRETRAIN, epoch as u64]));
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = params.zeros_like();
            for &i in batch {
                let (loss, g) = policy::mle_grad(&params, ws.article_ids(i), ws.reference_ids(i))?;
                loss_sum += loss;
                grad.add_scaled(&g, 1.0 / batch.len() as f64)?;
            }
            params = policy::apply_grads(&params, &grad, config.pretrain_lr)?;
        }
        epoch_losses.push(loss_sum / ws.len() as f64);
        let score = mean_greedy_rouge(&params, &valid, config.max_decode_len)?;
        validation_rouge.push(score);
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, epoch, params.clone()));
        }
    }
    let (params, best_epoch) = match best {
        Some((_, e, p)) => (p, e),
        None => (params, 0),
    };
    Ok(PretrainOutcome {
        params,
        epoch_losses,
        validation_rouge,
        best_epoch,
    })
}

/// `R_φ(sample) − R_φ(greedy)`: the self-critical advantage.
pub fn advantage(sample_comps: &ComponentVector, greedy_comps: &ComponentVector, phi: &RewardWeights) -> f64 {
    reward::reward(phi, sample_comps) - reward::reward(phi, greedy_comps)
}

/// `(1 − γ) · pg_grad + γ · mle_grad`
pub fn mixed_loss_grad(
    params: &PolicyParams,
    article: &[TokenId],
    reference: &[TokenId],
    sample: &Sample,
    advantage: f64,
    gamma: f64,
) -> Result<PolicyGrad> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("mixing weight {gamma} outside [0, 1]")));
    }
    let mut grad = params.zeros_like();
    if gamma < 1.0 {
        grad.add_scaled(&policy::pg_grad(params, article, sample, advantage)?, 1.0 - gamma)?;
    }
    if gamma > 0.0 {
        grad.add_scaled(&policy::mle_grad(params, article, reference)?.1, gamma)?;
    }
    Ok(grad)
}

/// Statistics of one self-critical policy epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyEpochStats {
    pub mean_advantage: f64,
    pub mean_sample_reward: f64,
    pub mean_greedy_reward: f64,
}

/// One pass of self-critical mixed-loss updates with the reward `φ` held fixed.
pub fn policy_epoch(
    params: &PolicyParams,
    ws: &Workspace<'_>,
    phi: &RewardWeights,
    config: &TrainConfig,
    stream_path: &[u64],
) -> Result<(PolicyParams, PolicyEpochStats)> {
    let metrics = config.metrics();
    let mut rng = rng::stream(config.seed, stream_path);
    let order = shuffled(ws.len(), &mut rng);
    let mut params = params.clone();
    let mut stats = PolicyEpochStats::default();
    let k = config.samples_per_example;
    let draws = (ws.len() * k) as f64;
    for batch in order.chunks(config.batch_size) {
        let mut grad = params.zeros_like();
        let share = 1.0 / (batch.len() * k) as f64;
        for &i in batch {
            let article = ws.article_ids(i);
            let greedy = policy::greedy(&params, article, config.max_decode_len)?;
            let greedy_comps = ws.score(i, &greedy, &metrics)?;
            let greedy_reward = reward::reward(phi, &greedy_comps);
            for _ in 0..k {
                let s = policy::sample(&params, article, config.max_decode_len, &mut rng)?;
                let sample_comps = ws.score(i, &s.ids, &metrics)?;
                let adv = advantage(&sample_comps, &greedy_comps, phi);
                stats.mean_advantage += adv / draws;
                stats.mean_sample_reward += reward::reward(phi, &sample_comps) / draws;
                stats.mean_greedy_reward += greedy_reward / draws;
                let g = mixed_loss_grad(&params, article, ws.reference_ids(i), &s, adv, config.mix_gamma)?;
                grad.add_scaled(&g, share)?;
            }
        }
        params = policy::apply_grads(&params, &grad, config.policy_lr)?;
    }
    Ok((params, stats))
}

/// Self-critical RL with the reward fixed to ROUGE-L against the reference.
pub fn train_rl(
    params: &PolicyParams,
    corpus: &[ExamplePair],
    vocab: &Vocab,
    config: &TrainConfig,
) -> Result<PolicyParams> {
    config.validate()?;
    let ws = Workspace::new(config.truncate(corpus), vocab)?;
    let rouge_only = RewardWeights::new([1.0, 0.0, 0.0, 0.0])?;
    let mut params = params.clone();
    for epoch in 1..=config.epochs {
        params = policy_epoch(&params, &ws, &rouge_only, config, &[RL, epoch as u64])?.0;
    }
    Ok(params)
}

/// Draws N demonstrations and M policy samples, estimates the MaxEnt gradient
/// and takes one ascent step on `φ`.
pub fn reward_step(
    params: &PolicyParams,
    phi: &RewardWeights,
    ws: &Workspace<'_>,
    config: &TrainConfig,
    update: usize,
    epoch: usize,
) -> Result<WeightSnapshot> {
    let metrics = config.metrics();
    let mut rng = rng::stream(config.seed, &[IRL_REWARD, update as u64]);
    let n = config.demos_per_update;
    let demos: Vec<usize> = if n <= ws.len() {
        index::sample(&mut rng, ws.len(), n).into_vec()
    } else {
        (0..n).map(|_| rng.gen_range(0..ws.len())).collect()
    };
    let data: Vec<ComponentVector> = demos
        .iter()
        .map(|&i| ws.reference_components(i, &metrics))
        .collect::<Result<_>>()?;

    // Policy samples are drawn for the demonstration articles, cycling through them.
    let mut records = Vec::with_capacity(config.samples_per_update);
    for m in 0..config.samples_per_update {
        let i = demos[m % demos.len()];
        let s = policy::sample(params, ws.article_ids(i), config.max_decode_len, &mut rng)?;
        let comps = ws.score(i, &s.ids, &metrics)?;
        records.push(SampleRecord::new(&s, comps));
    }
    let batch = reward::beta_weights(records, phi)?;
    let est = reward::irl_estimate(&data, &batch)?;
    let next = reward::reward_update(phi, &est.grad, config.reward_lr)?;
    Ok(WeightSnapshot {
        update,
        epoch,
        phi: phi.phi,
        phi_next: next.phi,
        grad: est.grad,
        data_mean: est.data_mean,
        model_mean: est.model_mean,
    })
}

/// Result of the alternating loop.
#[derive(Debug, Clone)]
pub struct IrlOutcome {
    pub params: PolicyParams,
    pub phi: RewardWeights,
    pub trajectory: WeightTrajectory,
}

/// Alternates reward updates (every `F` epochs) with self-critical policy
/// epochs under the frozen learned reward.
pub fn train_irl(
    params: &PolicyParams,
    phi0: &RewardWeights,
    corpus: &[ExamplePair],
    vocab: &Vocab,
    config: &TrainConfig,
) -> Result<IrlOutcome> {
    config.validate()?;
    let ws = Workspace::new(config.truncate(corpus), vocab)?;
    let mut params = params.clone();
    let mut phi = *phi0;
    let mut trajectory = WeightTrajectory::default();
    for epoch in 1..=config.epochs {
        if epoch % config.reward_update_frequency == 0 {
            let snap = reward_step(&params, &phi, &ws, config, trajectory.snapshots.len() + 1, epoch)?;
            phi = RewardWeights::new(snap.phi_next)?;
            trajectory.snapshots.push(snap);
        }
        let frozen = phi;
        params = policy_epoch(&params, &ws, &frozen, config, &[IRL_POLICY, epoch as u64])?.0;
    }
    Ok(IrlOutcome {
        params,
        phi,
        trajectory,
    })
}
