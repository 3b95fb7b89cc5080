//! Linear reward over sub-reward components and its MaxEnt IRL estimation.
//!
//! The reward is `R_φ(y) = φᵀ C(y)`. Under the maximum-entropy model
//! `p_φ(y) ∝ exp R_φ(y)` the log-likelihood gradient for weight `k` is the
//! demonstration mean of `C_k` minus its expectation under `p_φ`. The model
//! expectation is estimated from policy samples with self-normalized
//! importance weights `β_m ∝ exp R_φ(S_m) / q_θ(S_m)`.

use alloc::vec::Vec;

use crate::corpus::{TokenId, Vocab, EOS};
use crate::error::{Error, Result};
use crate::metrics::{components, ComponentVector, MetricsConfig, NUM_COMPONENTS};
use crate::policy::{PolicyParams, Sample};

/// Learnable weights over (rouge, novelty, coverage, compression).
///
/// No sign or norm constraint is imposed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardWeights {
    pub phi: [f64; NUM_COMPONENTS],
}

impl RewardWeights {
    /// Every component equally weighted, `1/k` each.
    pub fn uniform() -> Self {
        RewardWeights {
            phi: [1.0 / NUM_COMPONENTS as f64; NUM_COMPONENTS],
        }
    }

    pub fn new(phi: [f64; NUM_COMPONENTS]) -> Result<Self> {
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reward weights"));
        }
        Ok(RewardWeights { phi })
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights::uniform()
    }
}

/// `φᵀ C`
pub fn reward(phi: &RewardWeights, comps: &ComponentVector) -> f64 {
    phi.phi.iter().zip(comps.to_array()).map(|(w, c)| w * c).sum()
}

/// A policy sample with its sequence log-probability and components.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub tokens: Vec<TokenId>,
    pub logq: f64,
    pub comps: ComponentVector,
}

impl SampleRecord {
    pub fn new(sample: &Sample, comps: ComponentVector) -> Self {
        SampleRecord {
            tokens: sample.ids.clone(),
            logq: sample.logq,
            comps,
        }
    }
}

/// Policy samples with their normalized importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceBatch {
    pub records: Vec<SampleRecord>,
    pub betas: Vec<f64>,
}

impl ImportanceBatch {
    /// `Σ_m β_m C(y^m)`
    pub fn weighted_mean(&self) -> [f64; NUM_COMPONENTS] {
        let mut mean = [0.0; NUM_COMPONENTS];
        for (rec, &beta) in self.records.iter().zip(&self.betas) {
            for (m, c) in mean.iter_mut().zip(rec.comps.to_array()) {
                *m += beta * c;
            }
        }
        mean
    }
}

/// Self-normalized importance weights: `softmax(R_φ(S_m) − log q(S_m))`.
pub fn beta_weights(records: Vec<SampleRecord>, phi: &RewardWeights) -> Result<ImportanceBatch> {
    if records.is_empty() {
        return Err(Error::Empty("sample records"));
    }
    if records.iter().any(|r| !r.logq.is_finite()) {
        return Err(Error::NonFinite("sample log-probability"));
    }
    let scores: Vec<f64> = records.iter().map(|r| reward(phi, &r.comps) - r.logq).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut betas: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let total: f64 = betas.iter().sum();
    for b in &mut betas {
        *b /= total;
    }
    Ok(ImportanceBatch { records, betas })
}

/// Arithmetic mean of component vectors.
pub fn mean_components(comps: &[ComponentVector]) -> Result<[f64; NUM_COMPONENTS]> {
    if comps.is_empty() {
        return Err(Error::Empty("component list"));
    }
    let mut mean = [0.0; NUM_COMPONENTS];
    for c in comps {
        for (m, v) in mean.iter_mut().zip(c.to_array()) {
            *m += v;
        }
    }
    let n = comps.len() as f64;
    Ok(mean.map(|m| m / n))
}

/// Gradient estimate with the two expectations it was formed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlEstimate {
    pub grad: [f64; NUM_COMPONENTS],
    pub data_mean: [f64; NUM_COMPONENTS],
    pub model_mean: [f64; NUM_COMPONENTS],
}

/// Importance-sampled MaxEnt gradient with its data and model expectations.
pub fn irl_estimate(data_comps: &[ComponentVector], batch: &ImportanceBatch) -> Result<IrlEstimate> {
    if batch.records.is_empty() {
        return Err(Error::Empty("importance batch"));
    }
    if batch.records.len() != batch.betas.len() {
        return Err(Error::CountMismatch {
            what: "importance weights",
            expected: batch.records.len(),
            found: batch.betas.len(),
        });
    }
    let data_mean = mean_components(data_comps)?;
    let model_mean = batch.weighted_mean();
    let mut grad = [0.0; NUM_COMPONENTS];
    for k in 0..NUM_COMPONENTS {
        grad[k] = data_mean[k] - model_mean[k];
    }
    Ok(IrlEstimate {
        grad,
        data_mean,
        model_mean,
    })
}

/// `(1/N) Σ_n C_k(yⁿ) − Σ_m β_m C_k(yᵐ)` per component. Linearity of the
/// reward makes `∇_φk R_φ(y) = C_k(y)`.
pub fn irl_gradient(data_comps: &[ComponentVector], batch: &ImportanceBatch) -> Result<[f64; NUM_COMPONENTS]> {
    irl_estimate(data_comps, batch).map(|e| e.grad)
}

/// Gradient ascent step `φ + lr · grad`.
pub fn reward_update(phi: &RewardWeights, grad: &[f64; NUM_COMPONENTS], lr: f64) -> Result<RewardWeights> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(
            "reward learning rate must be positive and finite".into(),
        ));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("reward gradient"));
    }
    let mut next = *phi;
    for (p, g) in next.phi.iter_mut().zip(grad) {
        *p += lr * g;
    }
    Ok(next)
}

/// Largest outcome space [`exact_gradient_enumeration`] will walk.
pub const ENUMERATION_LIMIT: u128 = 100_000;

/// Every outcome the sampler can produce with `max_len`: content sequences of
/// length `< max_len` (terminated by `EOS`) and truncated ones of length
/// exactly `max_len`. Content tokens are all ids except `EOS`.
pub fn enumerate_outcomes(vocab_size: usize, max_len: usize) -> Result<Vec<Vec<TokenId>>> {
    if (EOS as usize) >= vocab_size {
        return Err(Error::InvalidArgument("vocabulary has no EOS id".into()));
    }
    let alphabet: Vec<TokenId> = (0..vocab_size as TokenId).filter(|&t| t != EOS).collect();
    let k = alphabet.len() as u128;
    let mut size: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=max_len {
        size = size.saturating_add(level);
        level = level.saturating_mul(k);
    }
    if size > ENUMERATION_LIMIT {
        return Err(Error::SpaceTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut all = Vec::with_capacity(size as usize);
    let mut frontier: Vec<Vec<TokenId>> = alloc::vec![Vec::new()];
    for len in 0..=max_len {
        if len > 0 {
            frontier = frontier
                .iter()
                .flat_map(|seq| {
                    alphabet.iter().map(move |&t| {
                        let mut s = seq.clone();
                        s.push(t);
                        s
                    })
                })
                .collect();
        }
        all.extend(frontier.iter().cloned());
    }
    Ok(all)
}

/// Exact `E_{p_φ}[C]` over the policy's outcome space, with `p_φ = exp(R_φ) / Z`.
pub fn exact_model_expectation(
    phi: &RewardWeights,
    policy: &PolicyParams,
    article: &[&str],
    reference: &[&str],
    max_len: usize,
    vocab: &Vocab,
    cfg: &MetricsConfig,
) -> Result<[f64; NUM_COMPONENTS]> {
    let outcomes = enumerate_outcomes(policy.vocab_size(), max_len)?;
    let mut comps = Vec::with_capacity(outcomes.len());
    let mut surface: Vec<&str> = Vec::new();
    for ids in &outcomes {
        surface.clear();
        for &id in ids {
            surface.push(vocab.surface(id)?);
        }
        comps.push(components(&surface, article, reference, cfg)?);
    }
    let scores: Vec<f64> = comps.iter().map(|c| reward(phi, c)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let z: f64 = weights.iter().sum();
    let mut expectation = [0.0; NUM_COMPONENTS];
    for (w, c) in weights.iter().zip(&comps) {
        for (e, v) in expectation.iter_mut().zip(c.to_array()) {
            *e += w / z * v;
        }
    }
    Ok(expectation)
}

/// Exact MaxEnt gradient for one pair: the reference's components minus the
/// enumerated model expectation. Test oracle for the sampled estimator.
pub fn exact_gradient_enumeration(
    phi: &RewardWeights,
    policy: &PolicyParams,
    article: &[&str],
    reference: &[&str],
    max_len: usize,
    vocab: &Vocab,
    cfg: &MetricsConfig,
) -> Result<[f64; NUM_COMPONENTS]> {
    let data = components(reference, article, reference, cfg)?.to_array();
    let model = exact_model_expectation(phi, policy, article, reference, max_len, vocab, cfg)?;
    let mut grad = [0.0; NUM_COMPONENTS];
    for k in 0..NUM_COMPONENTS {
        grad[k] = data[k] - model[k];
    }
    Ok(grad)
}

/// Surfaces for a list of ids, for component evaluation.
pub fn surfaces<'v>(vocab: &'v Vocab, ids: &[TokenId]) -> Result<Vec<&'v str>> {
    ids.iter().map(|&id| vocab.surface(id)).collect()
}
