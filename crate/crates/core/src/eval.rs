//! Exact-match scoring for mention extraction and IS classification.
//!
//! A predicted mention is correct only if its `(doc, sent, start, end)` equals
//! a gold mention's; for IS scoring the category must match as well.

mod significance;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{bucket_label, length_bucket, LENGTH_BUCKETS};
use crate::error::{Error, Result};
use crate::types::{ISCategory, Mention, MentionKey};

pub use significance::{randomization_test, randomization_test_over, Matching, Scorer, Statistic};

/// Recall, precision and F1 with their supporting counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub gold: usize,
    pub pred: usize,
    pub correct: usize,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Prf {
    pub fn from_counts(gold: usize, pred: usize, correct: usize) -> Prf {
        let recall = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
        let precision = if pred == 0 { 0.0 } else { correct as f64 / pred as f64 };
        Prf {
            recall,
            precision,
            f1: f_score(precision, recall),
            gold,
            pred,
            correct,
        }
    }
}

/// Counts indexed `[gold class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[usize; ISCategory::COUNT]; ISCategory::COUNT]);

impl ConfusionMatrix {
    pub fn get(&self, gold: ISCategory, pred: ISCategory) -> usize {
        self.0[gold.index()][pred.index()]
    }

    pub fn row_sum(&self, gold: ISCategory) -> usize {
        self.0[gold.index()].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    /// `"1"` .. `"10"`, `"11+"`.
    pub bucket: String,
    pub prf: Prf,
    /// Share of gold mentions falling in this bucket.
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mention: Prf,
    pub per_class: BTreeMap<ISCategory, Prf>,
    /// Gold-mention setting only.
    pub accuracy: Option<f64>,
    /// End-to-end setting only: micro PRF over all classes.
    pub overall: Option<Prf>,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub length_buckets: Vec<BucketScore>,
}

fn key_set(mentions: &[Mention]) -> Result<BTreeSet<MentionKey>> {
    let mut set = BTreeSet::new();
    for m in mentions {
        if !set.insert(m.key()) {
            return Err(Error::DuplicateMention(m.key()));
        }
    }
    Ok(set)
}

fn label_map(mentions: &[Mention]) -> Result<BTreeMap<MentionKey, ISCategory>> {
    let mut map = BTreeMap::new();
    for m in mentions {
        let cat = m.is_category.ok_or_else(|| Error::MissingLabel(m.key()))?;
        if map.insert(m.key(), cat).is_some() {
            return Err(Error::DuplicateMention(m.key()));
        }
    }
    Ok(map)
}

/// Span-only exact match; labels are ignored.
pub fn eval_mentions(gold: &[Mention], pred: &[Mention]) -> Result<Prf> {
    let g = key_set(gold)?;
    let p = key_set(pred)?;
    Ok(Prf::from_counts(g.len(), p.len(), g.intersection(&p).count()))
}

fn class_counts(labels: &BTreeMap<MentionKey, ISCategory>) -> [usize; ISCategory::COUNT] {
    let mut counts = [0; ISCategory::COUNT];
    for c in labels.values() {
        counts[c.index()] += 1;
    }
    counts
}

fn per_class(
    gold_counts: &[usize; ISCategory::COUNT],
    pred_counts: &[usize; ISCategory::COUNT],
    correct: &[usize; ISCategory::COUNT],
) -> BTreeMap<ISCategory, Prf> {
    ISCategory::ALL
        .iter()
        .map(|&c| {
            let i = c.index();
            (c, Prf::from_counts(gold_counts[i], pred_counts[i], correct[i]))
        })
        .collect()
}

/// Gold-mention setting: predictions must cover exactly the gold spans.
pub fn eval_is_gold(gold_labeled: &[Mention], pred_labels: &[Mention]) -> Result<MetricReport> {
    let gold = label_map(gold_labeled)?;
    let pred = label_map(pred_labels)?;
    if let Some(k) = gold.keys().find(|k| !pred.contains_key(*k)) {
        return Err(Error::SpanMismatch(alloc::format!("gold mention {k} has no prediction")));
    }
    if let Some(k) = pred.keys().find(|k| !gold.contains_key(*k)) {
        return Err(Error::SpanMismatch(alloc::format!("prediction {k} is not a gold mention")));
    }

    let mut confusion = ConfusionMatrix::default();
    let mut correct = [0usize; ISCategory::COUNT];
    for (k, g) in &gold {
        let p = pred[k];
        confusion.0[g.index()][p.index()] += 1;
        if *g == p {
            correct[g.index()] += 1;
        }
    }
    let total_correct: usize = correct.iter().sum();
    Ok(MetricReport {
        mention: Prf::from_counts(gold.len(), pred.len(), gold.len()),
        per_class: per_class(&class_counts(&gold), &class_counts(&pred), &correct),
        accuracy: Some(if gold.is_empty() {
            0.0
        } else {
            total_correct as f64 / gold.len() as f64
        }),
        overall: None,
        confusion,
        length_buckets: Vec::new(),
    })
}

/// End-to-end setting: a prediction is correct iff it matches a gold span
/// exactly and carries the same category.
pub fn eval_is_e2e(gold_labeled: &[Mention], pred_labeled: &[Mention]) -> Result<MetricReport> {
    let gold = label_map(gold_labeled)?;
    let pred = label_map(pred_labeled)?;

    let mut confusion = ConfusionMatrix::default();
    let mut correct = [0usize; ISCategory::COUNT];
    let mut span_correct = 0;
    for (k, p) in &pred {
        if let Some(g) = gold.get(k) {
            span_correct += 1;
            confusion.0[g.index()][p.index()] += 1;
            if g == p {
                correct[g.index()] += 1;
            }
        }
    }
    let total_correct: usize = correct.iter().sum();
    Ok(MetricReport {
        mention: Prf::from_counts(gold.len(), pred.len(), span_correct),
        per_class: per_class(&class_counts(&gold), &class_counts(&pred), &correct),
        accuracy: None,
        overall: Some(Prf::from_counts(gold.len(), pred.len(), total_correct)),
        confusion,
        length_buckets: Vec::new(),
    })
}

/// Span-match PRF per mention length (1..=10, 11+) and the share of gold
/// mentions in each bucket.
pub fn length_bucket_report(gold: &[Mention], pred: &[Mention]) -> Result<Vec<BucketScore>> {
    let g = key_set(gold)?;
    let p = key_set(pred)?;
    let len = |k: &MentionKey| k.end + 1 - k.start;
    let mut gold_n = [0usize; LENGTH_BUCKETS];
    let mut pred_n = [0usize; LENGTH_BUCKETS];
    let mut correct = [0usize; LENGTH_BUCKETS];
    for k in &g {
        gold_n[length_bucket(len(k))] += 1;
    }
    for k in &p {
        let b = length_bucket(len(k));
        pred_n[b] += 1;
        if g.contains(k) {
            correct[b] += 1;
        }
    }
    Ok((0..LENGTH_BUCKETS)
        .map(|b| BucketScore {
            bucket: bucket_label(b),
            prf: Prf::from_counts(gold_n[b], pred_n[b], correct[b]),
            freq: if g.is_empty() {
                0.0
            } else {
                gold_n[b] as f64 / g.len() as f64
            },
        })
        .collect())
}
