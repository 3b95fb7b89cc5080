//! Template-grammar corpora with controlled reference statistics.
//!
//! Articles are sequences of template sentences over a small lexicon. Every
//! lexicon word has a paraphrase drawn from a disjoint lexicon that never
//! occurs in an article, so replacing reference tokens with paraphrases
//! raises novelty in a controlled way.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::ExamplePair;
use crate::error::{Error, Result};
use crate::rng;

/// How reference summaries are derived from articles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ReferenceStrategy {
    /// Reference is the first article sentence.
    LeadCopy,
    /// First sentence with a fraction of tokens replaced by paraphrases.
    Paraphrase,
    /// Each pair picks lead-copy or paraphrase with equal probability.
    Mixed,
}

impl core::str::FromStr for ReferenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lead-copy" => Ok(ReferenceStrategy::LeadCopy),
            "paraphrase" | "paraphrase-k" => Ok(ReferenceStrategy::Paraphrase),
            "mixed" => Ok(ReferenceStrategy::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown reference strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticConfig {
    pub pairs: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub strategy: ReferenceStrategy,
    /// Fraction of reference tokens replaced under the paraphrase strategy.
    pub paraphrase_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            pairs: 200,
            min_sentences: 3,
            max_sentences: 5,
            strategy: ReferenceStrategy::LeadCopy,
            paraphrase_rate: 0.3,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidArgument("pair count must be positive".into()));
        }
        if self.min_sentences == 0 || self.max_sentences < self.min_sentences {
            return Err(Error::InvalidArgument(format!(
                "sentence range {}..={} is invalid",
                self.min_sentences, self.max_sentences
            )));
        }
        if !(0.0..=1.0).contains(&self.paraphrase_rate) {
            return Err(Error::InvalidArgument(format!(
                "paraphrase rate {} outside [0, 1]",
                self.paraphrase_rate
            )));
        }
        Ok(())
    }
}

// (article form, paraphrase form); paraphrase forms never occur in articles.
const NAMES: &[(&str, &str)] = &[
    ("Alice", "Alicia"),
    ("Bruno", "Bruce"),
    ("Chen", "Cheng"),
    ("Dara", "Darla"),
    ("Elena", "Ellen"),
    ("Farid", "Fareed"),
];
const CITIES: &[(&str, &str)] = &[
    ("Paris", "Parisville"),
    ("Lagos", "Lagoon"),
    ("Osaka", "Osakan"),
    ("Quito", "Quitoa"),
    ("Oslo", "Oslon"),
    ("Perth", "Perthshire"),
];
const NOUNS: &[(&str, &str)] = &[
    ("council", "board"),
    ("market", "bazaar"),
    ("river", "stream"),
    ("school", "academy"),
    ("bridge", "span"),
    ("team", "squad"),
    ("festival", "fair"),
    ("library", "archive"),
];
const VERBS: &[(&str, &str)] = &[
    ("opened", "launched"),
    ("visited", "toured"),
    ("praised", "lauded"),
    ("closed", "shut"),
    ("funded", "financed"),
    ("inspected", "examined"),
];
const ADJS: &[(&str, &str)] = &[
    ("new", "novel"),
    ("old", "aged"),
    ("local", "nearby"),
    ("large", "huge"),
    ("small", "tiny"),
    ("busy", "bustling"),
];
const NUMBERS: &[(&str, &str)] = &[("12", "dozen"), ("40", "forty"), ("7", "seven"), ("300", "hundreds")];
const FUNCTION: &[(&str, &str)] = &[
    ("the", "this"),
    ("in", "within"),
    ("and", "plus"),
    ("with", "alongside"),
    ("people", "residents"),
    ("for", "towards"),
    (".", ";"),
];

fn function_word(w: &str) -> (&'static str, &'static str) {
    *FUNCTION
        .iter()
        .find(|(a, _)| *a == w)
        .expect("function word in lexicon")
}

type Word = (&'static str, &'static str);

fn pick<R: Rng + ?Sized>(list: &[Word], rng: &mut R) -> Word {
    *list.choose(rng).expect("non-empty lexicon")
}

fn sentence<R: Rng + ?Sized>(rng: &mut R) -> Vec<Word> {
    let f = function_word;
    match rng.gen_range(0..4) {
        0 => alloc::vec![
            pick(NAMES, rng),
            pick(VERBS, rng),
            f("the"),
            pick(ADJS, rng),
            pick(NOUNS, rng),
            f("in"),
            pick(CITIES, rng),
            f("."),
        ],
        1 => alloc::vec![
            f("the"),
            pick(NOUNS, rng),
            f("in"),
            pick(CITIES, rng),
            pick(VERBS, rng),
            pick(NUMBERS, rng),
            f("people"),
            f("."),
        ],
        2 => alloc::vec![
            pick(NAMES, rng),
            f("and"),
            pick(NAMES, rng),
            pick(VERBS, rng),
            f("the"),
            pick(NOUNS, rng),
            f("."),
        ],
        _ => alloc::vec![
            f("the"),
            pick(ADJS, rng),
            pick(NOUNS, rng),
            pick(VERBS, rng),
            f("the"),
            pick(NOUNS, rng),
            f("with"),
            pick(NAMES, rng),
            f("."),
        ],
    }
}

/// Renders tokens as prose: capitalized sentence starts, no space before punctuation.
fn render(words: &[&str]) -> String {
    let mut out = String::new();
    let mut sentence_start = true;
    for w in words {
        let is_punct = w.chars().all(|c| !c.is_alphanumeric());
        if !out.is_empty() && !is_punct {
            out.push(' ');
        }
        if sentence_start && !is_punct {
            let mut chars = w.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(w);
        }
        sentence_start = is_punct;
    }
    out
}

fn paraphrase<R: Rng + ?Sized>(lead: &[Word], rate: f64, rng: &mut R) -> Vec<&'static str> {
    let count = libm::round(rate * lead.len() as f64) as usize;
    let mut positions: Vec<usize> = (0..lead.len()).collect();
    positions.shuffle(rng);
    let mut replace = alloc::vec![false; lead.len()];
    for &p in positions.iter().take(count) {
        replace[p] = true;
    }
    lead.iter()
        .zip(replace)
        .map(|(&(orig, para), r)| if r { para } else { orig })
        .collect()
}

/// Generates a corpus; a pure function of `synth`.
pub fn gen_synthetic(synth: &SyntheticConfig) -> Result<Vec<ExamplePair>> {
    synth.validate()?;
    let mut pairs = Vec::with_capacity(synth.pairs);
    for i in 0..synth.pairs {
        let mut r = rng::stream(synth.seed, &[0x5_e7, i as u64]);
        let n = r.gen_range(synth.min_sentences..=synth.max_sentences);
        let sentences: Vec<Vec<Word>> = (0..n).map(|_| sentence(&mut r)).collect();
        let article: Vec<&str> = sentences.iter().flatten().map(|w| w.0).collect();
        let lead = &sentences[0];
        let paraphrased = match synth.strategy {
            ReferenceStrategy::LeadCopy => false,
            ReferenceStrategy::Paraphrase => true,
            ReferenceStrategy::Mixed => r.gen_bool(0.5),
        };
        let reference: Vec<&str> = if paraphrased {
            paraphrase(lead, synth.paraphrase_rate, &mut r)
        } else {
            lead.iter().map(|w| w.0).collect()
        };
        pairs.push(ExamplePair::from_text(
            format!("syn-{}-{i:05}", synth.seed),
            &render(&article),
            &render(&reference),
        )?);
    }
    Ok(pairs)
}
