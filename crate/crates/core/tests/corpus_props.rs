use irlsum_core::corpus::tokenize;
use irlsum_core::metrics::{fragment_coverage, novelty};
use irlsum_core::{build_vocab, gen_synthetic, ExamplePair, ReferenceStrategy, SyntheticConfig};
use proptest::prelude::*;

proptest! {
    #[test]
    fn decode_inverts_encode(words in prop::collection::vec("[a-z]{1,6}|[0-9]{1,3}|[.,;!?]", 1..30)) {
        let text = words.join(" ");
        let pair = ExamplePair::from_text("p", &text, &text).unwrap();
        let vocab = build_vocab(&[pair], 1000).unwrap();
        let ids = vocab.encode_text(&text).ids;
        prop_assert!(ids.iter().all(|&i| i >= 4));
        prop_assert_eq!(vocab.decode_text(&ids).unwrap(), text.clone());
        prop_assert_eq!(tokenize(&text), words);
    }

    #[test]
    fn synthetic_corpora_are_pure(seed in any::<u64>(), pairs in 1usize..20, rate in 0.0f64..=1.0) {
        let synth = SyntheticConfig { pairs, seed, paraphrase_rate: rate, strategy: ReferenceStrategy::Mixed, ..SyntheticConfig::default() };
        prop_assert_eq!(gen_synthetic(&synth).unwrap(), gen_synthetic(&synth).unwrap());
    }

    #[test]
    fn lead_copy_references_are_extractive(seed in any::<u64>()) {
        let synth = SyntheticConfig { pairs: 20, seed, ..SyntheticConfig::default() };
        for p in gen_synthetic(&synth).unwrap() {
            prop_assert_eq!(fragment_coverage(&p.reference, &p.article).unwrap(), 1.0);
            prop_assert_eq!(novelty(&p.reference, &p.article, 2).unwrap(), 0.0);
        }
    }
}

#[test]
fn truncated_vocabulary_does_not_change_metrics() {
    let corpus = gen_synthetic(&SyntheticConfig {
        pairs: 30,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let small = build_vocab(&corpus, 10).unwrap();
    let p = &corpus[0];
    let seq = small.encode(&p.reference);
    assert!(seq.ids.contains(&irlsum_core::corpus::UNK));
    assert_eq!(seq.surface, p.reference);
}
