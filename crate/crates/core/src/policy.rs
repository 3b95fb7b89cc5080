//! Compact autoregressive summarizer with exact, hand-derived gradients.
//!
//! The article is encoded as the mean of its token embeddings `c`. Decoding
//! runs a tanh recurrence
//!
//! ```text
//! h_t = tanh(W · [embed(y_{t-1}); c] + U · h_{t-1} + b)
//! logits_t = V_out · h_t
//! ```
//!
//! starting from `h_0 = 0` and `y_0 = BOS`, so the sequence probability is the
//! product of per-step softmax probabilities.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{TokenId, BOS, EOS};
use crate::error::{Error, Result};
use crate::linalg::{axpy, log_softmax, softmax, Matrix};

/// All trainable parameters. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    /// Token embeddings, `|V| × d`.
    pub embed: Matrix,
    /// Input weights over `[embed(prev); context]`, `d × 2d`.
    pub w: Matrix,
    /// Recurrent weights, `d × d`.
    pub u: Matrix,
    pub b: Vec<f64>,
    /// Output projection, `|V| × d`.
    pub out: Matrix,
}

/// Gradient with respect to [`PolicyParams`].
pub type PolicyGrad = PolicyParams;

impl PolicyParams {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        PolicyParams {
            embed: Matrix::zeros(vocab_size, dim),
            w: Matrix::zeros(dim, 2 * dim),
            u: Matrix::zeros(dim, dim),
            b: vec![0.0; dim],
            out: Matrix::zeros(vocab_size, dim),
        }
    }

    /// Uniform initialization; recurrent and input weights are scaled by fan-in.
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let mut p = PolicyParams::zeros(vocab_size, dim);
        let mut fill = |m: &mut [f64], s: f64| {
            for v in m {
                *v = rng.gen_range(-s..s);
            }
        };
        let fan = 1.0 / libm::sqrt(dim as f64);
        fill(p.embed.as_mut_slice(), 0.5);
        fill(p.w.as_mut_slice(), fan);
        fill(p.u.as_mut_slice(), fan);
        fill(p.out.as_mut_slice(), fan);
        p
    }

    /// Assembles parameters, checking that all shapes agree.
    pub fn from_parts(embed: Matrix, w: Matrix, u: Matrix, b: Vec<f64>, out: Matrix) -> Result<Self> {
        let p = PolicyParams { embed, w, u, b, out };
        let (v, d) = (p.vocab_size(), p.dim());
        let ok = d > 0
            && v > 0
            && p.w.rows() == d
            && p.w.cols() == 2 * d
            && p.u.rows() == d
            && p.u.cols() == d
            && p.b.len() == d
            && p.out.rows() == v
            && p.out.cols() == d;
        if !ok {
            return Err(Error::InvalidArgument("inconsistent policy parameter shapes".into()));
        }
        Ok(p)
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.rows()
    }

    pub fn dim(&self) -> usize {
        self.embed.cols()
    }

    pub fn zeros_like(&self) -> Self {
        PolicyParams::zeros(self.vocab_size(), self.dim())
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter blocks in a fixed order: embed, w, u, b, out.
    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.embed.as_slice(),
            self.w.as_slice(),
            self.u.as_slice(),
            &self.b,
            self.out.as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.embed.as_mut_slice(),
            self.w.as_mut_slice(),
            self.u.as_mut_slice(),
            &mut self.b,
            self.out.as_mut_slice(),
        ]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.vocab_size() == other.vocab_size() && self.dim() == other.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// `self += k · other`
    pub fn add_scaled(&mut self, other: &Self, k: f64) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::InvalidArgument(
                "gradient shape does not match parameters".into(),
            ));
        }
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            axpy(k, src, dst);
        }
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        for block in self.slices_mut() {
            for v in block {
                *v *= k;
            }
        }
    }

    fn check_token(&self, id: TokenId) -> Result<()> {
        if (id as usize) < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::TokenOutOfRange {
                id,
                vocab_size: self.vocab_size(),
            })
        }
    }

    fn check_tokens(&self, ids: &[TokenId]) -> Result<()> {
        ids.iter().try_for_each(|&id| self.check_token(id))
    }
}

/// Recurrent decoder state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeState {
    pub hidden: Vec<f64>,
    pub context: Vec<f64>,
    pub step: usize,
}

/// Mean of the article's token embeddings.
pub fn encode(params: &PolicyParams, article: &[TokenId]) -> Result<Vec<f64>> {
    if article.is_empty() {
        return Err(Error::Empty("article"));
    }
    params.check_tokens(article)?;
    let mut c = vec![0.0; params.dim()];
    for &id in article {
        axpy(1.0, params.embed.row(id as usize), &mut c);
    }
    let n = article.len() as f64;
    for v in &mut c {
        *v /= n;
    }
    Ok(c)
}

pub fn initial_state(params: &PolicyParams, article: &[TokenId]) -> Result<DecodeState> {
    Ok(DecodeState {
        hidden: vec![0.0; params.dim()],
        context: encode(params, article)?,
        step: 0,
    })
}

fn recur(params: &PolicyParams, hidden: &[f64], context: &[f64], prev: TokenId) -> Vec<f64> {
    let d = params.dim();
    let mut input = Vec::with_capacity(2 * d);
    input.extend_from_slice(params.embed.row(prev as usize));
    input.extend_from_slice(context);
    let mut a = params.b.clone();
    params.w.matvec_acc(&input, &mut a);
    params.u.matvec_acc(hidden, &mut a);
    a.iter().map(|&x| libm::tanh(x)).collect()
}

/// One decoding step: returns the next-token logits and the advanced state.
pub fn step(params: &PolicyParams, state: &DecodeState, prev: TokenId) -> Result<(Vec<f64>, DecodeState)> {
    params.check_token(prev)?;
    let hidden = recur(params, &state.hidden, &state.context, prev);
    let logits = params.out.matvec(&hidden);
    Ok((
        logits,
        DecodeState {
            hidden,
            context: state.context.clone(),
            step: state.step + 1,
        },
    ))
}

/// Teacher-forced log-probability of `path` (the summary tokens, normally ending in `EOS`).
pub fn log_prob(params: &PolicyParams, article: &[TokenId], path: &[TokenId]) -> Result<f64> {
    params.check_tokens(path)?;
    let mut state = initial_state(params, article)?;
    let mut prev = BOS;
    let mut total = 0.0;
    for &y in path {
        let (logits, next) = step(params, &state, prev)?;
        total += log_softmax(&logits)[y as usize];
        state = next;
        prev = y;
    }
    Ok(total)
}

/// One policy sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Summary tokens, without the terminating `EOS`.
    pub ids: Vec<TokenId>,
    /// Whether decoding stopped by emitting `EOS` (otherwise it hit `max_len`).
    pub terminated: bool,
    /// Exact log-probability of this outcome under the sampling process.
    pub logq: f64,
}

impl Sample {
    /// The decoded token path, including `EOS` when it was emitted.
    pub fn path(&self) -> Vec<TokenId> {
        let mut p = self.ids.clone();
        if self.terminated {
            p.push(EOS);
        }
        p
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative total; take the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Ancestral sampling of up to `max_len` tokens.
///
/// Decoding stops at `EOS` or after `max_len` emitted tokens; a truncated
/// sample carries no `EOS` and its `logq` covers exactly the tokens drawn, so
/// the outcome probabilities form a proper distribution.
pub fn sample<R: Rng + ?Sized>(
    params: &PolicyParams,
    article: &[TokenId],
    max_len: usize,
    rng: &mut R,
) -> Result<Sample> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let mut state = initial_state(params, article)?;
    let mut prev = BOS;
    let mut ids = Vec::new();
    let mut logq = 0.0;
    for _ in 0..max_len {
        let (logits, next) = step(params, &state, prev)?;
        let logp = log_softmax(&logits);
        let probs: Vec<f64> = logp.iter().map(|&l| libm::exp(l)).collect();
        let y = draw(&probs, rng) as TokenId;
        logq += logp[y as usize];
        if y == EOS {
            return Ok(Sample {
                ids,
                terminated: true,
                logq,
            });
        }
        ids.push(y);
        state = next;
        prev = y;
    }
    Ok(Sample {
        ids,
        terminated: false,
        logq,
    })
}

/// Greedy decoding; ties go to the smallest id.
pub fn greedy(params: &PolicyParams, article: &[TokenId], max_len: usize) -> Result<Vec<TokenId>> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let mut state = initial_state(params, article)?;
    let mut prev = BOS;
    let mut ids = Vec::new();
    for _ in 0..max_len {
        let (logits, next) = step(params, &state, prev)?;
        let mut best = 0;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        let y = best as TokenId;
        if y == EOS {
            break;
        }
        ids.push(y);
        state = next;
        prev = y;
    }
    Ok(ids)
}

/// Negative log-likelihood of `path` and its exact gradient (backpropagation
/// through the softmax, the tanh recurrence and the mean encoder).
pub fn sequence_nll_grad(params: &PolicyParams, article: &[TokenId], path: &[TokenId]) -> Result<(f64, PolicyGrad)> {
    params.check_tokens(path)?;
    let context = encode(params, article)?;
    let d = params.dim();

    // Forward pass, keeping inputs, hidden states and probabilities.
    let mut prevs = Vec::with_capacity(path.len());
    let mut hiddens = vec![vec![0.0; d]];
    let mut probs = Vec::with_capacity(path.len());
    let mut nll = 0.0;
    let mut prev = BOS;
    for &y in path {
        let h = recur(params, hiddens.last().unwrap(), &context, prev);
        let logits = params.out.matvec(&h);
        nll -= log_softmax(&logits)[y as usize];
        probs.push(softmax(&logits));
        prevs.push(prev);
        hiddens.push(h);
        prev = y;
    }

    let mut grad = params.zeros_like();
    let mut d_context = vec![0.0; d];
    let mut d_hidden_next = vec![0.0; d];
    let mut input = vec![0.0; 2 * d];
    let mut d_input = vec![0.0; 2 * d];
    for t in (0..path.len()).rev() {
        let h = &hiddens[t + 1];
        let h_prev = &hiddens[t];
        let mut d_logits = probs[t].clone();
        d_logits[path[t] as usize] -= 1.0;
        grad.out.add_outer(&d_logits, h);

        let mut d_h = core::mem::take(&mut d_hidden_next);
        params.out.matvec_t_acc(&d_logits, &mut d_h);
        let d_a: Vec<f64> = d_h.iter().zip(h).map(|(g, hv)| g * (1.0 - hv * hv)).collect();

        input[..d].copy_from_slice(params.embed.row(prevs[t] as usize));
        input[d..].copy_from_slice(&context);
        grad.w.add_outer(&d_a, &input);
        grad.u.add_outer(&d_a, h_prev);
        axpy(1.0, &d_a, &mut grad.b);

        d_input.iter_mut().for_each(|v| *v = 0.0);
        params.w.matvec_t_acc(&d_a, &mut d_input);
        axpy(1.0, &d_input[..d], grad.embed.row_mut(prevs[t] as usize));
        axpy(1.0, &d_input[d..], &mut d_context);

        d_hidden_next = vec![0.0; d];
        params.u.matvec_t_acc(&d_a, &mut d_hidden_next);
    }

    let share = 1.0 / article.len() as f64;
    for &id in article {
        axpy(share, &d_context, grad.embed.row_mut(id as usize));
    }
    Ok((nll, grad))
}

/// Teacher-forcing MLE loss of a reference summary (with `EOS` appended) and its gradient.
pub fn mle_grad(params: &PolicyParams, article: &[TokenId], reference: &[TokenId]) -> Result<(f64, PolicyGrad)> {
    if reference.is_empty() {
        return Err(Error::Empty("reference summary"));
    }
    let mut path = reference.to_vec();
    path.push(EOS);
    sequence_nll_grad(params, article, &path)
}

/// Score-function gradient of `-advantage · log q(sample)`, with the advantage held constant.
pub fn pg_grad(params: &PolicyParams, article: &[TokenId], sampled: &Sample, advantage: f64) -> Result<PolicyGrad> {
    if advantage == 0.0 {
        return Ok(params.zeros_like());
    }
    let (_, mut grad) = sequence_nll_grad(params, article, &sampled.path())?;
    grad.scale(advantage);
    Ok(grad)
}

/// Plain gradient-descent step `θ - lr · grad`.
pub fn apply_grads(params: &PolicyParams, grad: &PolicyGrad, lr: f64) -> Result<PolicyParams> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(
            "learning rate must be positive and finite".into(),
        ));
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("policy gradient"));
    }
    let mut next = params.clone();
    next.add_scaled(grad, -lr)?;
    Ok(next)
}
