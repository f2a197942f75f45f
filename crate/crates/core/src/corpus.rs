//! Fold construction and dataset statistics over canonical corpora.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Corpus, ISCategory};

/// One train/test partition of a document-level k-fold split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_id: usize,
    pub train_doc_ids: BTreeSet<String>,
    pub test_doc_ids: BTreeSet<String>,
}

/// Splits documents into `k` folds: the document ids are shuffled with a
/// seeded generator and dealt round-robin, so fold sizes differ by at most one.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidConfig(alloc::format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > corpus.len() {
        return Err(Error::TooFewDocuments {
            k,
            docs: corpus.len(),
        });
    }
    let mut ids: Vec<String> = corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let mut tests: Vec<BTreeSet<String>> = (0..k).map(|_| BTreeSet::new()).collect();
    for (i, id) in ids.iter().enumerate() {
        tests[i % k].insert(id.clone());
    }
    let all: BTreeSet<String> = ids.into_iter().collect();
    Ok(tests
        .into_iter()
        .enumerate()
        .map(|(fold_id, test_doc_ids)| FoldSplit {
            fold_id,
            train_doc_ids: all.difference(&test_doc_ids).cloned().collect(),
            test_doc_ids,
        })
        .collect())
}

/// Number of length buckets: lengths 1..=10 and one bucket for 11+.
pub const LENGTH_BUCKETS: usize = 11;

/// Bucket index for a mention of `len` tokens.
pub fn length_bucket(len: usize) -> usize {
    len.clamp(1, LENGTH_BUCKETS) - 1
}

pub fn bucket_label(bucket: usize) -> String {
    if bucket + 1 >= LENGTH_BUCKETS {
        alloc::format!("{}+", LENGTH_BUCKETS)
    } else {
        alloc::format!("{}", bucket + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub mentions: usize,
    pub per_category: BTreeMap<ISCategory, usize>,
    pub unlabeled: usize,
    /// Mention counts for lengths 1..=10 followed by the 11+ bucket.
    pub length_histogram: [usize; LENGTH_BUCKETS],
    pub fraction_longer_than_10: f64,
    pub mean_sentence_length: f64,
}

impl StatsReport {
    /// Sum over the mediated subtypes.
    pub fn mediated(&self) -> usize {
        ISCategory::ALL[1..7]
            .iter()
            .map(|c| self.per_category.get(c).copied().unwrap_or(0))
            .sum()
    }
}

pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let mut per_category: BTreeMap<ISCategory, usize> =
        ISCategory::ALL.iter().map(|&c| (c, 0)).collect();
    let mut length_histogram = [0usize; LENGTH_BUCKETS];
    let mut unlabeled = 0;
    let mut sentences = 0;
    let mut tokens = 0;
    let mut mentions = 0;
    for doc in &corpus.documents {
        sentences += doc.sentences.len();
        tokens += doc.token_count();
        for m in &doc.gold_mentions {
            mentions += 1;
            match m.is_category {
                Some(c) => *per_category.entry(c).or_default() += 1,
                None => unlabeled += 1,
            }
            length_histogram[length_bucket(m.len())] += 1;
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    StatsReport {
        documents: corpus.len(),
        sentences,
        tokens,
        mentions,
        per_category,
        unlabeled,
        fraction_longer_than_10: ratio(length_histogram[LENGTH_BUCKETS - 1], mentions),
        length_histogram,
        mean_sentence_length: ratio(tokens, sentences),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Document, Mention, Sentence};
    use alloc::vec;

    fn corpus(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| Document {
                    doc_id: alloc::format!("doc{i}"),
                    sentences: vec![Sentence::from_words(&alloc::format!("doc{i}"), 0, &["a"])],
                    ..Default::default()
                })
                .collect(),
        )
    }

    #[test]
    fn fifty_docs_ten_folds() {
        let folds = make_folds(&corpus(50), 10, 7).unwrap();
        assert_eq!(folds.len(), 10);
        for f in &folds {
            assert_eq!(f.test_doc_ids.len(), 5);
            assert_eq!(f.train_doc_ids.len(), 45);
            assert!(f.train_doc_ids.is_disjoint(&f.test_doc_ids));
        }
    }

    #[test]
    fn two_docs_two_folds() {
        let folds = make_folds(&corpus(2), 2, 0).unwrap();
        let tested: BTreeSet<_> = folds.iter().flat_map(|f| f.test_doc_ids.iter()).collect();
        assert_eq!(tested.len(), 2);
        assert!(folds.iter().all(|f| f.test_doc_ids.len() == 1));
    }

    #[test]
    fn folds_are_seed_deterministic() {
        let c = corpus(23);
        assert_eq!(make_folds(&c, 4, 99).unwrap(), make_folds(&c, 4, 99).unwrap());
    }

    #[test]
    fn fold_errors() {
        assert!(matches!(
            make_folds(&corpus(3), 4, 0),
            Err(Error::TooFewDocuments { k: 4, docs: 3 })
        ));
        assert!(make_folds(&corpus(3), 1, 0).is_err());
    }

    #[test]
    fn empty_corpus_stats_are_zero() {
        let s = corpus_stats(&Corpus::default());
        assert_eq!(s.mentions, 0);
        assert_eq!(s.documents, 0);
        assert_eq!(s.fraction_longer_than_10, 0.0);
        assert_eq!(s.mean_sentence_length, 0.0);
        assert!(s.per_category.values().all(|&v| v == 0));
        assert_eq!(s.length_histogram, [0; LENGTH_BUCKETS]);
    }

    #[test]
    fn stats_histogram_and_totals() {
        let words: Vec<String> = (0..15).map(|i| alloc::format!("w{i}")).collect();
        let doc = Document {
            doc_id: "d".into(),
            sentences: vec![
                Sentence::from_words("d", 0, &words),
                Sentence::from_words("d", 1, &words[..5]),
            ],
            gold_mentions: vec![
                Mention::labeled("d", 0, 0, 0, ISCategory::Old),
                Mention::labeled("d", 0, 0, 11, ISCategory::New),
                Mention::labeled("d", 1, 1, 4, ISCategory::Bridging),
                Mention::new("d", 1, 0, 0),
            ],
            metadata: BTreeMap::new(),
        };
        let s = corpus_stats(&Corpus::new(vec![doc]));
        assert_eq!(s.mentions, 4);
        assert_eq!(s.unlabeled, 1);
        assert_eq!(s.per_category.values().sum::<usize>() + s.unlabeled, s.mentions);
        assert_eq!(s.length_histogram[0], 2);
        assert_eq!(s.length_histogram[3], 1);
        assert_eq!(s.length_histogram[10], 1);
        assert_eq!(s.fraction_longer_than_10, 0.25);
        assert_eq!(s.mean_sentence_length, 10.0);
        assert_eq!(s.mediated(), 1);
        assert_eq!(bucket_label(10), "11+");
        assert_eq!(bucket_label(0), "1");
    }
}
