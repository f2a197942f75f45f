//! Paired approximate randomization test at document granularity.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{f_score, label_map};
use crate::error::{Error, Result};
use crate::types::{Mention, MentionKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matching {
    /// Boundaries only.
    Span,
    /// Boundaries and IS category.
    SpanAndLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Recall,
    Precision,
    F1,
    /// Correct over gold; used in the gold-mention setting.
    Accuracy,
}

/// A corpus-level metric computed from pooled counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scorer {
    pub matching: Matching,
    pub statistic: Statistic,
}

const NAMES: [(&str, Matching, Statistic); 7] = [
    ("mention-f1", Matching::Span, Statistic::F1),
    ("mention-recall", Matching::Span, Statistic::Recall),
    ("mention-precision", Matching::Span, Statistic::Precision),
    ("is-f1", Matching::SpanAndLabel, Statistic::F1),
    ("is-recall", Matching::SpanAndLabel, Statistic::Recall),
    ("is-precision", Matching::SpanAndLabel, Statistic::Precision),
    ("is-accuracy", Matching::SpanAndLabel, Statistic::Accuracy),
];

impl Scorer {
    pub fn names() -> impl Iterator<Item = &'static str> {
        NAMES.iter().map(|(n, _, _)| *n)
    }

    fn value(&self, c: Counts) -> f64 {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let recall = ratio(c.correct, c.gold);
        let precision = ratio(c.correct, c.pred);
        match self.statistic {
            Statistic::Recall | Statistic::Accuracy => recall,
            Statistic::Precision => precision,
            Statistic::F1 => f_score(precision, recall),
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = NAMES
            .iter()
            .find(|(_, m, s)| *m == self.matching && *s == self.statistic)
            .map_or("custom", |(n, _, _)| *n);
        f.write_str(name)
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NAMES
            .iter()
            .find(|(n, _, _)| *n == s)
            .map(|&(_, matching, statistic)| Scorer {
                matching,
                statistic,
            })
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    gold: usize,
    pred: usize,
    correct: usize,
}

impl core::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.gold += o.gold;
        self.pred += o.pred;
        self.correct += o.correct;
    }
}

/// Per-document counts of both systems; gold is shared.
#[derive(Debug, Clone, Copy, Default)]
struct DocPair {
    a: Counts,
    b: Counts,
}

fn system_counts(
    gold: &BTreeMap<MentionKey, Option<crate::types::ISCategory>>,
    pred: &[Mention],
    matching: Matching,
    docs: &BTreeMap<String, usize>,
    out: &mut [Counts],
) -> Result<()> {
    let mut seen = BTreeSet::new();
    for m in pred {
        let key = m.key();
        if !seen.insert(key.clone()) {
            return Err(Error::DuplicateMention(key));
        }
        let Some(&d) = docs.get(&m.doc_id) else {
            return Err(Error::DocumentSetMismatch(alloc::format!(
                "prediction {key} refers to document {} outside the evaluated set",
                m.doc_id
            )));
        };
        if matching == Matching::SpanAndLabel && m.is_category.is_none() {
            return Err(Error::MissingLabel(key));
        }
        out[d].pred += 1;
        let hit = match gold.get(&key) {
            None => false,
            Some(g) => matching == Matching::Span || *g == m.is_category,
        };
        if hit {
            out[d].correct += 1;
        }
    }
    Ok(())
}

fn doc_pairs(
    documents: &BTreeSet<String>,
    gold: &[Mention],
    pred_a: &[Mention],
    pred_b: &[Mention],
    matching: Matching,
) -> Result<Vec<DocPair>> {
    let docs: BTreeMap<String, usize> = documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.clone(), i))
        .collect();
    let gold_map: BTreeMap<MentionKey, Option<crate::types::ISCategory>> = match matching {
        Matching::SpanAndLabel => label_map(gold)?
            .into_iter()
            .map(|(k, v)| (k, Some(v)))
            .collect(),
        Matching::Span => {
            let mut map = BTreeMap::new();
            for m in gold {
                if map.insert(m.key(), None).is_some() {
                    return Err(Error::DuplicateMention(m.key()));
                }
            }
            map
        }
    };
    let mut gold_counts = alloc::vec![Counts::default(); docs.len()];
    for k in gold_map.keys() {
        let d = docs.get(&k.doc_id).ok_or_else(|| {
            Error::DocumentSetMismatch(alloc::format!("gold document {} not evaluated", k.doc_id))
        })?;
        gold_counts[*d].gold += 1;
    }
    let mut a = alloc::vec![Counts::default(); docs.len()];
    let mut b = alloc::vec![Counts::default(); docs.len()];
    system_counts(&gold_map, pred_a, matching, &docs, &mut a)?;
    system_counts(&gold_map, pred_b, matching, &docs, &mut b)?;
    Ok((0..docs.len())
        .map(|i| DocPair {
            a: Counts {
                gold: gold_counts[i].gold,
                ..a[i]
            },
            b: Counts {
                gold: gold_counts[i].gold,
                ..b[i]
            },
        })
        .collect())
}

fn abs_difference(scorer: &Scorer, pairs: &[DocPair], swapped: impl Fn(usize) -> bool) -> f64 {
    let mut ta = Counts::default();
    let mut tb = Counts::default();
    for (i, p) in pairs.iter().enumerate() {
        if swapped(i) {
            ta += p.b;
            tb += p.a;
        } else {
            ta += p.a;
            tb += p.b;
        }
    }
    libm::fabs(scorer.value(ta) - scorer.value(tb))
}

/// Two-sided p-value over the documents that carry gold mentions.
pub fn randomization_test(
    gold: &[Mention],
    pred_a: &[Mention],
    pred_b: &[Mention],
    scorer: Scorer,
    n_shuffles: usize,
    seed: u64,
) -> Result<f64> {
    let documents: BTreeSet<String> = gold.iter().map(|m| m.doc_id.clone()).collect();
    randomization_test_over(&documents, gold, pred_a, pred_b, scorer, n_shuffles, seed)
}

/// Two-sided p-value over an explicit document set.
///
/// Each shuffle swaps the two systems' outputs on each document with
/// probability one half and recomputes the pooled metric difference. The
/// observed assignment counts as one arrangement:
/// `p = (#{|d_shuffled| >= |d_observed|} + 1) / (n_shuffles + 1)`.
pub fn randomization_test_over(
    documents: &BTreeSet<String>,
    gold: &[Mention],
    pred_a: &[Mention],
    pred_b: &[Mention],
    scorer: Scorer,
    n_shuffles: usize,
    seed: u64,
) -> Result<f64> {
    if n_shuffles < 1000 {
        return Err(Error::InvalidConfig(alloc::format!(
            "n_shuffles must be at least 1000, got {n_shuffles}"
        )));
    }
    if documents.is_empty() {
        return Err(Error::DocumentSetMismatch("no documents to compare".to_string()));
    }
    let pairs = doc_pairs(documents, gold, pred_a, pred_b, scorer.matching)?;
    let observed = abs_difference(&scorer, &pairs, |_| false);
    let tolerance = 1e-12 * observed.max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swaps = alloc::vec![false; pairs.len()];
    let mut at_least = 0usize;
    for _ in 0..n_shuffles {
        for s in swaps.iter_mut() {
            *s = rng.random::<bool>();
        }
        if abs_difference(&scorer, &pairs, |i| swaps[i]) + tolerance >= observed {
            at_least += 1;
        }
    }
    Ok((at_least + 1) as f64 / (n_shuffles + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ISCategory;

    #[test]
    fn names_parse_and_print() {
        for name in Scorer::names() {
            assert_eq!(name.parse::<Scorer>().unwrap().to_string(), name);
        }
        assert!("bleu".parse::<Scorer>().is_err());
    }

    #[test]
    fn identical_systems_give_one() {
        let gold = [
            Mention::labeled("a", 0, 0, 0, ISCategory::Old),
            Mention::labeled("b", 0, 0, 1, ISCategory::New),
        ];
        let pred = [Mention::labeled("a", 0, 0, 0, ISCategory::New)];
        let scorer: Scorer = "is-f1".parse().unwrap();
        assert_eq!(randomization_test(&gold, &pred, &pred, scorer, 1000, 3).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let gold = [Mention::new("a", 0, 0, 0)];
        let foreign = [Mention::new("z", 0, 0, 0)];
        let scorer: Scorer = "mention-f1".parse().unwrap();
        assert!(matches!(
            randomization_test(&gold, &gold, &foreign, scorer, 1000, 0),
            Err(Error::DocumentSetMismatch(_))
        ));
        assert!(randomization_test(&gold, &gold, &gold, scorer, 999, 0).is_err());
    }
}
