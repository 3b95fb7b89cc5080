//! Summary sub-reward components and the n-gram machinery they share.
//!
//! All functions work on token slices of any ordered type; callers pass
//! surface strings so that vocabulary truncation never changes a value.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of sub-reward components.
pub const NUM_COMPONENTS: usize = 4;

/// Short component names, in vector order.
pub const COMPONENT_NAMES: [&str; NUM_COMPONENTS] = ["rouge", "nov", "cov", "comp"];

/// The four sub-reward values of one summary, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentVector {
    pub c_rouge: f64,
    pub c_nov: f64,
    pub c_cov: f64,
    pub c_comp: f64,
}

impl ComponentVector {
    pub const ZERO: ComponentVector = ComponentVector {
        c_rouge: 0.0,
        c_nov: 0.0,
        c_cov: 0.0,
        c_comp: 0.0,
    };

    pub fn to_array(self) -> [f64; NUM_COMPONENTS] {
        [self.c_rouge, self.c_nov, self.c_cov, self.c_comp]
    }

    pub fn from_array(a: [f64; NUM_COMPONENTS]) -> Self {
        ComponentVector {
            c_rouge: a[0],
            c_nov: a[1],
            c_cov: a[2],
            c_comp: a[3],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }
}

/// Settings shared by every component evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsConfig {
    /// n-gram order of the novelty component.
    pub novelty_order: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { novelty_order: 2 }
    }
}

/// Length of the longest common subsequence, by dynamic programming in O(|a|·|b|).
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Short sequences use a stack row; the metric runs in tight sampling loops.
    const STACK: usize = 64;
    if b.len() < STACK {
        let mut row = [0u32; STACK];
        lcs_row(a, b, &mut row[..=b.len()])
    } else {
        lcs_row(a, b, &mut vec![0u32; b.len() + 1])
    }
}

// Single rolling row over b; `row[0]` stays zero.
#[inline]
fn lcs_row<T: PartialEq>(a: &[T], b: &[T], row: &mut [u32]) -> usize {
    for x in a {
        let (mut diag, mut left) = (0, 0);
        for (y, cell) in b.iter().zip(row[1..].iter_mut()) {
            let up = *cell;
            let v = if x == y { diag + 1 } else { left.max(up) };
            *cell = v;
            diag = up;
            left = v;
        }
    }
    row[b.len()] as usize
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall <= 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// ROUGE-L F1 between a candidate and a reference.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    f1(p, r)
}

/// Distinct contiguous n-token windows of `seq`.
pub fn ngram_set<T: Ord>(seq: &[T], n: usize) -> Result<BTreeSet<&[T]>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    Ok(seq.windows(n).collect())
}

/// Fraction of the summary's distinct n-grams that do not occur in the article.
///
/// Zero when the summary has no n-grams.
pub fn novelty<T: Ord>(summary: &[T], article: &[T], n: usize) -> Result<f64> {
    let summary_grams = ngram_set(summary, n)?;
    if summary_grams.is_empty() {
        return Ok(0.0);
    }
    let article_grams = ngram_set(article, n)?;
    let novel = summary_grams.iter().filter(|g| !article_grams.contains(*g)).count();
    Ok(novel as f64 / summary_grams.len() as f64)
}

/// A contiguous run of summary tokens copied from the article.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fragment {
    pub summary_start: usize,
    pub article_start: usize,
    pub len: usize,
}

/// Greedy extractive fragments: at each summary position take the longest
/// article match (earliest article start on ties), otherwise skip one token.
pub fn extractive_fragments<T: PartialEq>(summary: &[T], article: &[T]) -> Vec<Fragment> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < summary.len() {
        let mut best: Option<Fragment> = None;
        for j in 0..article.len() {
            let len = summary[i..]
                .iter()
                .zip(&article[j..])
                .take_while(|(s, a)| s == a)
                .count();
            if len > best.map_or(0, |f| f.len) {
                best = Some(Fragment {
                    summary_start: i,
                    article_start: j,
                    len,
                });
            }
        }
        match best {
            Some(f) => {
                i += f.len;
                out.push(f);
            }
            None => i += 1,
        }
    }
    out
}

/// Fraction of summary tokens that lie inside greedy extractive fragments.
pub fn fragment_coverage<T: PartialEq>(summary: &[T], article: &[T]) -> Result<f64> {
    if summary.is_empty() {
        return Err(Error::Empty("summary"));
    }
    let covered: usize = extractive_fragments(summary, article).iter().map(|f| f.len).sum();
    Ok(covered as f64 / summary.len() as f64)
}

/// Summary-to-article length ratio, clamped to 1.
pub fn compression<T>(summary: &[T], article: &[T]) -> Result<f64> {
    if article.is_empty() {
        return Err(Error::Empty("article"));
    }
    Ok((summary.len() as f64 / article.len() as f64).min(1.0))
}

/// All four sub-rewards for one summary.
///
/// An empty summary scores zero on every component.
pub fn components<T: Ord>(
    summary: &[T],
    article: &[T],
    reference: &[T],
    cfg: &MetricsConfig,
) -> Result<ComponentVector> {
    if article.is_empty() {
        return Err(Error::Empty("article"));
    }
    if reference.is_empty() {
        return Err(Error::Empty("reference summary"));
    }
    if summary.is_empty() {
        return Ok(ComponentVector::ZERO);
    }
    Ok(ComponentVector {
        c_rouge: rouge_l(summary, reference),
        c_nov: novelty(summary, article, cfg.novelty_order)?,
        c_cov: fragment_coverage(summary, article)?,
        c_comp: compression(summary, article)?,
    })
}
