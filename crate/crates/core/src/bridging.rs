//! Bridging-anaphor recognition on top of IS predictions.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, Prf};
use crate::types::{Corpus, ISCategory, Mention};

/// Subtype tag marking anaphors whose antecedent is embedded in them.
pub const CONTAINING_INFERRABLE: &str = "containing-inferrable";

/// First words that mark a mention as containing its own antecedent when no
/// subtype tags are available.
pub const POSSESSIVE_PRONOUNS: [&str; 7] = ["my", "your", "his", "her", "its", "our", "their"];

pub fn default_determiners() -> BTreeSet<String> {
    ["the", "this", "that", "these", "those"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnaphorPrediction {
    pub mention: Mention,
    /// Either mediated/bridging or mediated/comparative.
    pub source_category: ISCategory,
}

fn labeled(m: &Mention) -> Result<ISCategory> {
    m.is_category.ok_or_else(|| Error::MissingLabel(m.key()))
}

/// Mentions predicted as bridging or comparative; both count as bridging
/// anaphors under the BASHI annotation scheme.
pub fn bashi_anaphors(pred_mentions: &[Mention]) -> Result<Vec<AnaphorPrediction>> {
    let mut out = Vec::new();
    for m in pred_mentions {
        let cat = labeled(m)?;
        if matches!(cat, ISCategory::Bridging | ISCategory::Comparative) {
            out.push(AnaphorPrediction {
                mention: m.clone(),
                source_category: cat,
            });
        }
    }
    Ok(out)
}

fn first_word(corpus: &Corpus, m: &Mention) -> Result<String> {
    let doc = corpus
        .document(&m.doc_id)
        .ok_or_else(|| Error::UnknownMention(m.key()))?;
    Ok(doc.span_tokens(m)?[0].text.to_lowercase())
}

/// Bridging predictions introduced by a definite determiner. Comparative
/// predictions are not included.
pub fn scicorp_anaphors(
    pred_mentions: &[Mention],
    corpus: &Corpus,
    determiners: &BTreeSet<String>,
) -> Result<Vec<AnaphorPrediction>> {
    if determiners.is_empty() {
        return Err(Error::InvalidConfig("determiner set is empty".to_string()));
    }
    let mut out = Vec::new();
    for m in pred_mentions {
        if labeled(m)? != ISCategory::Bridging {
            continue;
        }
        if determiners.contains(&first_word(corpus, m)?) {
            out.push(AnaphorPrediction {
                mention: m.clone(),
                source_category: ISCategory::Bridging,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub kept: Vec<Mention>,
    pub removed: Vec<Mention>,
    /// True when no anaphor carried a subtype tag and the possessive-pronoun
    /// approximation was applied instead.
    pub used_fallback: bool,
}

/// Drops containing-inferrable anaphors. Uses subtype tags when any anaphor
/// has one, otherwise falls back to removing anaphors that start with a
/// possessive pronoun.
pub fn filter_containing_inferrable(gold_anaphors: &[Mention], corpus: &Corpus) -> Result<FilterOutcome> {
    let tagged = gold_anaphors.iter().any(|m| m.subtype.is_some());
    let mut outcome = FilterOutcome {
        used_fallback: !tagged && !gold_anaphors.is_empty(),
        ..Default::default()
    };
    for m in gold_anaphors {
        let drop = if tagged {
            m.subtype.as_deref() == Some(CONTAINING_INFERRABLE)
        } else {
            POSSESSIVE_PRONOUNS.contains(&first_word(corpus, m)?.as_str())
        };
        if drop {
            outcome.removed.push(m.clone());
        } else {
            outcome.kept.push(m.clone());
        }
    }
    Ok(outcome)
}

/// Exact-boundary PRF between gold anaphors and predicted anaphors.
pub fn eval_bridging(gold_anaphors: &[Mention], pred_anaphors: &[AnaphorPrediction]) -> Result<Prf> {
    let pred: Vec<Mention> = pred_anaphors.iter().map(|a| a.mention.clone()).collect();
    eval::eval_mentions(gold_anaphors, &pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Document, Sentence};
    use alloc::vec;
    use ISCategory::*;

    fn corpus() -> Corpus {
        Corpus::new(vec![Document {
            doc_id: "d".into(),
            sentences: vec![
                Sentence::from_words("d", 0, &["the", "target", "mRNA", "and", "a", "computer"]),
                Sentence::from_words("d", 1, &["their", "interest", "in", "the", "objective", "function"]),
            ],
            ..Default::default()
        }])
    }

    #[test]
    fn bashi_merges_bridging_and_comparative() {
        let preds = vec![
            Mention::labeled("d", 0, 0, 0, Old),
            Mention::labeled("d", 0, 1, 1, Bridging),
            Mention::labeled("d", 0, 2, 2, Comparative),
            Mention::labeled("d", 0, 3, 3, New),
        ];
        let a = bashi_anaphors(&preds).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].source_category, Comparative);
        assert!(bashi_anaphors(&[Mention::labeled("d", 0, 0, 0, New)]).unwrap().is_empty());
        assert!(matches!(
            bashi_anaphors(&[Mention::new("d", 0, 0, 0)]),
            Err(Error::MissingLabel(_))
        ));
    }

    #[test]
    fn scicorp_keeps_definite_bridging_only() {
        let c = corpus();
        let preds = vec![
            Mention::labeled("d", 0, 0, 2, Bridging),
            Mention::labeled("d", 0, 4, 5, Bridging),
            Mention::labeled("d", 1, 3, 5, Comparative),
        ];
        let a = scicorp_anaphors(&preds, &c, &default_determiners()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].mention, preds[0]);
        assert!(scicorp_anaphors(&preds, &c, &BTreeSet::new()).is_err());
    }

    #[test]
    fn containing_inferrable_fallback_and_tags() {
        let c = corpus();
        let gold = vec![Mention::new("d", 1, 0, 1), Mention::new("d", 1, 3, 5)];
        let out = filter_containing_inferrable(&gold, &c).unwrap();
        assert!(out.used_fallback);
        assert_eq!(out.kept, vec![gold[1].clone()]);
        assert_eq!(out.removed, vec![gold[0].clone()]);

        let mut tagged = gold.clone();
        tagged[1].subtype = Some(CONTAINING_INFERRABLE.into());
        let out = filter_containing_inferrable(&tagged, &c).unwrap();
        assert!(!out.used_fallback);
        assert_eq!(out.kept, vec![tagged[0].clone()]);

        let out = filter_containing_inferrable(&[], &c).unwrap();
        assert!(out.kept.is_empty() && !out.used_fallback);
    }

    #[test]
    fn bridging_scores() {
        let gold = vec![Mention::new("d", 0, 0, 2)];
        let hit = vec![AnaphorPrediction {
            mention: Mention::labeled("d", 0, 0, 2, Bridging),
            source_category: Bridging,
        }];
        assert_eq!(eval_bridging(&gold, &hit).unwrap().f1, 1.0);
        let miss = vec![AnaphorPrediction {
            mention: Mention::labeled("d", 0, 4, 5, Bridging),
            source_category: Bridging,
        }];
        assert_eq!(eval_bridging(&gold, &miss).unwrap().f1, 0.0);
    }
}
