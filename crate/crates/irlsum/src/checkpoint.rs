//! Policy checkpoints and vocabulary files.
//!
//! A checkpoint stores its dimensions, the hash of the vocabulary it was
//! trained with, every parameter as nested decimal lists and, for IRL runs,
//! the learned reward weights. Floats are written in shortest round-trip form,
//! so `load(save(p))` is bit-identical.

use std::fs;
use std::path::Path;

use irlsum_core::linalg::Matrix;
use irlsum_core::{PolicyParams, RewardWeights, Vocab};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::fsutil::{atomic_write, sha256_hex};

pub const VOCAB_FILE: &str = "vocab.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub vocab_size: usize,
    pub embed_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamLists {
    embed: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    b: Vec<f64>,
    out: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    dims: Dims,
    vocab_hash: String,
    params: ParamLists,
    phi: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab_hash: String,
    pub params: PolicyParams,
    pub phi: Option<RewardWeights>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    tokens: Vec<String>,
}

/// Content hash identifying a vocabulary: SHA-256 of its token list as JSON.
pub fn vocab_hash(vocab: &Vocab) -> String {
    sha256_hex(&serde_json::to_vec(vocab.tokens()).expect("token list serializes"))
}

pub fn save_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let file = VocabFile {
        tokens: vocab.tokens().to_vec(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("vocabulary serializes");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn load_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: VocabFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    Ok(Vocab::from_tokens(file.tokens)?)
}

impl Checkpoint {
    pub fn new(params: PolicyParams, vocab: &Vocab, phi: Option<RewardWeights>) -> Result<Self> {
        if params.vocab_size() != vocab.len() {
            return Err(Error::Config(format!(
                "policy has {} output rows but the vocabulary has {} entries",
                params.vocab_size(),
                vocab.len()
            )));
        }
        Ok(Checkpoint {
            vocab_hash: vocab_hash(vocab),
            params,
            phi,
        })
    }

    pub fn to_json(&self) -> String {
        let p = &self.params;
        let file = CheckpointFile {
            dims: Dims {
                vocab_size: p.vocab_size(),
                embed_dim: p.dim(),
            },
            vocab_hash: self.vocab_hash.clone(),
            params: ParamLists {
                embed: p.embed.to_rows(),
                w: p.w.to_rows(),
                u: p.u.to_rows(),
                b: p.b.clone(),
                out: p.out.to_rows(),
            },
            phi: self.phi.map(|w| w.phi),
        };
        let mut s = serde_json::to_string(&file).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        let bad = |what: &str| Error::Config(format!("{}: malformed {what} matrix", path.display()));
        let matrix = |rows: &[Vec<f64>], what: &str| Matrix::from_rows(rows).ok_or_else(|| bad(what));
        let ParamLists { embed, w, u, b, out } = &file.params;
        let params = PolicyParams::from_parts(
            matrix(embed, "embed")?,
            matrix(w, "w")?,
            matrix(u, "u")?,
            b.clone(),
            matrix(out, "out")?,
        )?;
        if params.vocab_size() != file.dims.vocab_size || params.dim() != file.dims.embed_dim {
            return Err(Error::Config(format!(
                "{}: parameter shapes disagree with dims {:?}",
                path.display(),
                file.dims
            )));
        }
        let phi = file.phi.map(RewardWeights::new).transpose()?;
        Ok(Checkpoint {
            vocab_hash: file.vocab_hash,
            params,
            phi,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Checkpoint::from_json(&text, path)
    }

    /// Fails unless `vocab` is the vocabulary this checkpoint was trained with.
    pub fn check_vocab(&self, vocab: &Vocab) -> Result<()> {
        let found = vocab_hash(vocab);
        if found != self.vocab_hash {
            return Err(Error::VocabMismatch {
                expected: self.vocab_hash.clone(),
                found,
            });
        }
        Ok(())
    }
}

/// Loads a checkpoint together with the `vocab.json` stored next to it and
/// verifies that the two belong together.
pub fn load_with_vocab(path: &Path) -> Result<(Checkpoint, Vocab)> {
    let ckpt = Checkpoint::load(path)?;
    let vocab_path = path.parent().unwrap_or(Path::new(".")).join(VOCAB_FILE);
    let vocab = load_vocab(&vocab_path)?;
    ckpt.check_vocab(&vocab)?;
    Ok((ckpt, vocab))
}
