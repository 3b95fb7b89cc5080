//! Tokenization, vocabularies and the example-pair type.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Index into a [`Vocab`].
pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

/// Surface forms of the reserved ids, in id order.
pub const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Splits `text` into word and punctuation tokens, keeping the original case.
///
/// Whitespace separates tokens; every character that is neither alphanumeric
/// nor whitespace becomes a token of its own.
pub fn tokenize_cased(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            out.push(core::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Lowercased word-level tokenization used for every metric.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_cased(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Token ids paired with their surface strings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq {
    pub ids: Vec<TokenId>,
    pub surface: Vec<String>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn surface_refs(&self) -> Vec<&str> {
        self.surface.iter().map(String::as_str).collect()
    }
}

/// One article with its human-written reference summary.
///
/// Token lists hold lowercased surfaces; ids are assigned through a [`Vocab`]
/// so that vocabulary truncation never changes metric values. The raw texts
/// are kept for case-sensitive analyses such as the entity proxy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplePair {
    pub id: String,
    pub article: Vec<String>,
    pub reference: Vec<String>,
    pub raw_article: String,
    pub raw_reference: String,
}

impl ExamplePair {
    /// Tokenizes both texts. Fails if either side has no tokens.
    pub fn from_text(id: impl Into<String>, article: &str, reference: &str) -> Result<Self> {
        let pair = ExamplePair {
            id: id.into(),
            article: tokenize(article),
            reference: tokenize(reference),
            raw_article: article.into(),
            raw_reference: reference.into(),
        };
        if pair.article.is_empty() {
            return Err(Error::Empty("article"));
        }
        if pair.reference.is_empty() {
            return Err(Error::Empty("reference summary"));
        }
        Ok(pair)
    }

    pub fn article_refs(&self) -> Vec<&str> {
        self.article.iter().map(String::as_str).collect()
    }

    pub fn reference_refs(&self) -> Vec<&str> {
        self.reference.iter().map(String::as_str).collect()
    }
}

/// Bidirectional token/id map with four reserved ids (`PAD`, `BOS`, `EOS`, `UNK`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
}

impl Vocab {
    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() {
            return Err(Error::InvalidArgument(format!(
                "vocabulary needs at least {} entries",
                RESERVED.len()
            )));
        }
        for (i, r) in RESERVED.iter().enumerate() {
            if tokens[i] != *r {
                return Err(Error::InvalidArgument(format!(
                    "reserved id {i} must be {r}, found {}",
                    tokens[i]
                )));
            }
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn surface(&self, id: TokenId) -> Result<&str> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or(Error::TokenOutOfRange {
                id,
                vocab_size: self.tokens.len(),
            })
    }

    /// Maps tokens to ids; out-of-vocabulary tokens keep their surface but get `UNK`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> TokenSeq {
        TokenSeq {
            ids: tokens.iter().map(|t| self.id(t.as_ref())).collect(),
            surface: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        }
    }

    pub fn encode_text(&self, text: &str) -> TokenSeq {
        self.encode(&tokenize(text))
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<TokenSeq> {
        let surface = ids
            .iter()
            .map(|&id| self.surface(id).map(ToString::to_string))
            .collect::<Result<Vec<_>>>()?;
        Ok(TokenSeq {
            ids: ids.to_vec(),
            surface,
        })
    }

    /// Space-joined surface text of `ids`.
    pub fn decode_text(&self, ids: &[TokenId]) -> Result<String> {
        Ok(self.decode(ids)?.surface.join(" "))
    }
}

/// Builds a vocabulary from article and reference tokens.
///
/// Keeps the `max_size - 4` most frequent tokens, breaking frequency ties
/// lexicographically.
pub fn build_vocab(pairs: &[ExamplePair], max_size: usize) -> Result<Vocab> {
    if pairs.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if max_size < RESERVED.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "max vocabulary size must be at least {}, got {max_size}",
            RESERVED.len() + 1
        )));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in pairs {
        for t in pair.article.iter().chain(pair.reference.iter()) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic and the sort is stable.
    ranked.sort_by_key(|&(_, n)| core::cmp::Reverse(n));

    let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    tokens.extend(
        ranked
            .into_iter()
            .take(max_size - RESERVED.len())
            .map(|(t, _)| t.to_string()),
    );
    Vocab::from_tokens(tokens)
}
