//! Evaluation surfaces: per-system component tables, novel n-gram profiles,
//! ROUGE-N, and entity overlap through a rule-based proxy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{tokenize_cased, ExamplePair};
use crate::error::{Error, Result};
use crate::metrics::{components, f1, ngram_set, novelty, MetricsConfig, NUM_COMPONENTS};

/// Mean component percentages of one system.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentRow {
    pub system: String,
    pub rouge_l: f64,
    pub novelty: f64,
    pub coverage: f64,
    pub compression: f64,
}

impl ComponentRow {
    pub fn values(&self) -> [f64; NUM_COMPONENTS] {
        [self.rouge_l, self.novelty, self.coverage, self.compression]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentTable {
    pub rows: Vec<ComponentRow>,
}

impl ComponentTable {
    pub fn row(&self, system: &str) -> Option<&ComponentRow> {
        self.rows.iter().find(|r| r.system == system)
    }
}

/// A named system's summaries, one token list per corpus pair.
pub type SystemOutputs = (String, Vec<Vec<String>>);

/// The reference summaries as a system named `REF`.
pub fn reference_system(corpus: &[ExamplePair]) -> SystemOutputs {
    ("REF".to_string(), corpus.iter().map(|p| p.reference.clone()).collect())
}

fn check_count(summaries: &[Vec<String>], corpus: &[ExamplePair]) -> Result<()> {
    if summaries.len() != corpus.len() {
        return Err(Error::CountMismatch {
            what: "system summaries",
            expected: corpus.len(),
            found: summaries.len(),
        });
    }
    Ok(())
}

/// Mean of the four components for each system, as percentages.
pub fn component_table(
    systems: &[SystemOutputs],
    corpus: &[ExamplePair],
    cfg: &MetricsConfig,
) -> Result<ComponentTable> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut rows = Vec::with_capacity(systems.len());
    for (name, summaries) in systems {
        check_count(summaries, corpus)?;
        let mut sum = [0.0; NUM_COMPONENTS];
        for (s, pair) in summaries.iter().zip(corpus) {
            let c = components(s, &pair.article, &pair.reference, cfg)?;
            for (acc, v) in sum.iter_mut().zip(c.to_array()) {
                *acc += v;
            }
        }
        let n = corpus.len() as f64;
        let [r, nv, cv, cp] = sum.map(|v| 100.0 * v / n);
        rows.push(ComponentRow {
            system: name.clone(),
            rouge_l: r,
            novelty: nv,
            coverage: cv,
            compression: cp,
        });
    }
    Ok(ComponentTable { rows })
}

/// Mean novelty percentage for each n-gram order.
pub fn novel_ngram_profile(
    summaries: &[Vec<String>],
    corpus: &[ExamplePair],
    orders: &[usize],
) -> Result<Vec<(usize, f64)>> {
    check_count(summaries, corpus)?;
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    orders
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            for (s, pair) in summaries.iter().zip(corpus) {
                total += novelty(s, &pair.article, n)?;
            }
            Ok((n, 100.0 * total / corpus.len() as f64))
        })
        .collect()
}

/// ROUGE-N F1 with clipped n-gram counts.
pub fn rouge_n<T: Ord>(candidate: &[T], reference: &[T], n: usize) -> Result<f64> {
    // Validates n.
    ngram_set(candidate, n)?;
    fn count<T: Ord>(seq: &[T], n: usize) -> BTreeMap<&[T], usize> {
        let mut m: BTreeMap<&[T], usize> = BTreeMap::new();
        for g in seq.windows(n) {
            *m.entry(g).or_default() += 1;
        }
        m
    }
    let cand = count(candidate, n);
    let refs = count(reference, n);
    let total_c: usize = cand.values().sum();
    let total_r: usize = refs.values().sum();
    if total_c == 0 || total_r == 0 {
        return Ok(0.0);
    }
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    Ok(f1(overlap as f64 / total_c as f64, overlap as f64 / total_r as f64))
}

/// Fraction of summary tokens that occur anywhere in the article.
pub fn unigram_overlap<T: Ord>(summary: &[T], article: &[T]) -> f64 {
    if summary.is_empty() {
        return 0.0;
    }
    let vocab: BTreeSet<&T> = article.iter().collect();
    summary.iter().filter(|t| vocab.contains(t)).count() as f64 / summary.len() as f64
}

/// Evaluation-only overlap scores of one system, as percentages.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapRow {
    pub system: String,
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub unigram_overlap: f64,
}

pub fn overlap_row(system: &SystemOutputs, corpus: &[ExamplePair]) -> Result<OverlapRow> {
    check_count(&system.1, corpus)?;
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let (mut r1, mut r2, mut ov) = (0.0, 0.0, 0.0);
    for (s, pair) in system.1.iter().zip(corpus) {
        r1 += rouge_n(s, &pair.reference, 1)?;
        r2 += rouge_n(s, &pair.reference, 2)?;
        ov += unigram_overlap(s, &pair.article);
    }
    let n = corpus.len() as f64;
    Ok(OverlapRow {
        system: system.0.clone(),
        rouge_1: 100.0 * r1 / n,
        rouge_2: 100.0 * r2 / n,
        unigram_overlap: 100.0 * ov / n,
    })
}

/// Capitalized words that commonly start sentences without naming anything.
const COMMON_STARTERS: &[&str] = &[
    "a",
    "an",
    "the",
    "this",
    "that",
    "these",
    "those",
    "it",
    "its",
    "he",
    "she",
    "they",
    "we",
    "i",
    "you",
    "his",
    "her",
    "their",
    "our",
    "my",
    "your",
    "there",
    "here",
    "in",
    "on",
    "at",
    "by",
    "for",
    "from",
    "with",
    "after",
    "before",
    "during",
    "when",
    "while",
    "if",
    "but",
    "and",
    "or",
    "so",
    "as",
    "officials",
    "some",
    "many",
    "most",
    "all",
    "one",
    "two",
    "of",
    "to",
    "what",
    "who",
    "how",
    "why",
    "where",
];

fn is_sentence_end(tok: &str) -> bool {
    matches!(tok, "." | "!" | "?")
}

fn is_capitalized(tok: &str) -> bool {
    tok.chars().next().is_some_and(char::is_uppercase)
}

fn is_number(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| c.is_ascii_digit())
}

/// Proxy named entities in cased text: maximal runs of capitalized tokens plus
/// standalone numbers. A sentence-initial capitalized common word is skipped.
pub fn proxy_entities(raw: &str) -> BTreeSet<String> {
    let toks = tokenize_cased(raw);
    let mut out = BTreeSet::new();
    let mut run: Vec<&str> = Vec::new();
    let flush = |run: &mut Vec<&str>, out: &mut BTreeSet<String>| {
        if !run.is_empty() {
            out.insert(run.join(" "));
            run.clear();
        }
    };
    for (i, tok) in toks.iter().enumerate() {
        let initial = i == 0 || is_sentence_end(&toks[i - 1]);
        if is_number(tok) {
            flush(&mut run, &mut out);
            out.insert(tok.clone());
        } else if is_capitalized(tok) && !(initial && COMMON_STARTERS.contains(&tok.to_lowercase().as_str())) {
            run.push(tok);
        } else {
            flush(&mut run, &mut out);
        }
    }
    flush(&mut run, &mut out);
    out
}

/// Entity precision, recall and F1 (macro-averaged over pairs for a corpus),
/// and mean summary length in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntityStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub length: f64,
}

/// Entity overlap of one summary with one reference; `0/0` counts as 0.
pub fn entity_prf(summary_raw: &str, reference_raw: &str) -> EntityStats {
    let s = proxy_entities(summary_raw);
    let r = proxy_entities(reference_raw);
    let hit = s.intersection(&r).count() as f64;
    let precision = if s.is_empty() { 0.0 } else { hit / s.len() as f64 };
    let recall = if r.is_empty() { 0.0 } else { hit / r.len() as f64 };
    EntityStats {
        precision,
        recall,
        f1: f1(precision, recall),
        length: tokenize_cased(summary_raw).len() as f64,
    }
}

/// Corpus entity statistics of cased system summaries against the references.
pub fn entity_stats(summaries_raw: &[String], corpus: &[ExamplePair]) -> Result<EntityStats> {
    if summaries_raw.len() != corpus.len() {
        return Err(Error::CountMismatch {
            what: "system summaries",
            expected: corpus.len(),
            found: summaries_raw.len(),
        });
    }
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut acc = EntityStats::default();
    for (s, pair) in summaries_raw.iter().zip(corpus) {
        let e = entity_prf(s, &pair.raw_reference);
        acc.precision += e.precision;
        acc.recall += e.recall;
        acc.f1 += e.f1;
        acc.length += e.length;
    }
    let n = corpus.len() as f64;
    Ok(EntityStats {
        precision: acc.precision / n,
        recall: acc.recall / n,
        f1: acc.f1 / n,
        length: acc.length / n,
    })
}

/// Re-cases lowercased generated tokens using the article's casing and renders
/// them as prose, so the entity proxy can run on model output.
///
/// Each token takes its most frequent non-sentence-initial form in the article;
/// tokens seen only sentence-initially keep that form unless they are common
/// sentence starters.
pub fn restore_case<S: AsRef<str>>(tokens: &[S], raw_article: &str) -> String {
    let cased = tokenize_cased(raw_article);
    let mut forms: BTreeMap<String, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut initial_forms: BTreeMap<String, &str> = BTreeMap::new();
    for (i, tok) in cased.iter().enumerate() {
        let lower = tok.to_lowercase();
        if i == 0 || is_sentence_end(&cased[i - 1]) {
            initial_forms.entry(lower).or_insert(tok);
        } else {
            *forms.entry(lower).or_default().entry(tok).or_default() += 1;
        }
    }
    let mut out = String::new();
    let mut sentence_start = true;
    for tok in tokens {
        let tok = tok.as_ref();
        let form = match forms.get(tok) {
            Some(counts) => counts
                .iter()
                .fold((tok, 0usize), |best, (f, &c)| if c > best.1 { (f, c) } else { best })
                .0
                .to_string(),
            None => match initial_forms.get(tok) {
                Some(f) if !COMMON_STARTERS.contains(&tok) => f.to_string(),
                _ => tok.to_string(),
            },
        };
        let punct = form.chars().all(|c| !c.is_alphanumeric());
        if !out.is_empty() && !punct {
            out.push(' ');
        }
        if sentence_start && !punct {
            let mut chars = form.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(&form);
        }
        sentence_start = is_sentence_end(&form);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn entity_proxy_rules() {
        assert_eq!(
            proxy_entities("Obama met Putin in Moscow"),
            set(&["Obama", "Putin", "Moscow"])
        );
        assert_eq!(
            proxy_entities("The council met in New York. It cost 40 dollars."),
            set(&["New York", "40"])
        );
        assert!(proxy_entities("nothing here").is_empty());
    }

    #[test]
    fn entity_fixture() {
        let e = entity_prf("Obama visited Moscow", "Obama met Putin in Moscow");
        assert_eq!(e.precision, 1.0);
        assert_eq!(e.recall, 2.0 / 3.0);
        assert!((e.f1 - 0.8).abs() < 1e-15);
        assert_eq!(e.length, 3.0);

        let same = entity_prf("Obama met Putin", "Obama met Putin");
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let none = entity_prf("the cat sat", "Obama met Putin");
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
    }

    #[test]
    fn rouge_n_counts_are_clipped() {
        let c = ["a", "a", "a"];
        let r = ["a", "b"];
        // overlap 1, P = 1/3, R = 1/2.
        assert!((rouge_n(&c, &r, 1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(rouge_n(&c, &r, 2).unwrap(), 0.0);
        assert!(rouge_n(&c, &r, 0).is_err());
    }

    #[test]
    fn unigram_overlap_fraction() {
        assert_eq!(unigram_overlap(&["a", "x"], &["a", "b"]), 0.5);
        assert_eq!(unigram_overlap::<&str>(&[], &["a"]), 0.0);
    }

    #[test]
    fn restore_case_uses_article_forms() {
        let article = "The team met Alice in Paris. Alice praised the team.";
        let toks = ["alice", "praised", "the", "team", "in", "paris", "."];
        assert_eq!(restore_case(&toks, article), "Alice praised the team in Paris.");
        assert_eq!(restore_case(&["the", "team"], article), "The team");
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let pair = ExamplePair::from_text("0", "a b c", "a").unwrap();
        let cfg = MetricsConfig::default();
        let sys = ("X".to_string(), vec![]);
        assert!(component_table(&[sys], core::slice::from_ref(&pair), &cfg).is_err());
        assert!(entity_stats(&[], &[pair]).is_err());
    }
}
