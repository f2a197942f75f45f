//! Binary span classifier deciding mention vs. non-mention.
//!
//! Training uses every span of at most `L` words; inference scores every span
//! of the sentence with no length limit unless `test_max_len` is given.

use alloc::vec::Vec;

use crate::encoder::{EncoderBackend, SpanClassifier};
use crate::error::{Error, Result};
use crate::nn::{TrainConfig, TrainLog};
use crate::spangen::{self, MarkedSequence, SpanGenConfig};
use crate::types::{Document, Mention, Sentence};

/// Class index of "is a mention" in the two-way head.
pub const POSITIVE: usize = 1;

/// Probability threshold on the positive class.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct MentionModel<B> {
    pub classifier: SpanClassifier<B>,
    pub spans: SpanGenConfig,
    pub train_config: TrainConfig,
}

fn check_budget(train: &TrainConfig, spans: &SpanGenConfig, max_len: usize) -> Result<()> {
    if train.max_seq_len != spans.max_seq_len {
        return Err(Error::InvalidConfig(alloc::format!(
            "training max_seq_len {} differs from span config max_seq_len {}",
            train.max_seq_len,
            spans.max_seq_len
        )));
    }
    if spans.max_seq_len > max_len {
        return Err(Error::InvalidConfig(alloc::format!(
            "max_seq_len {} exceeds the backend limit {max_len}",
            spans.max_seq_len
        )));
    }
    Ok(())
}

pub fn train_mention_extractor<B: EncoderBackend>(
    train_docs: &[Document],
    train: &TrainConfig,
    spans: &SpanGenConfig,
    backend: B,
) -> Result<(MentionModel<B>, TrainLog)> {
    train.validate()?;
    spans.validate()?;
    check_budget(train, spans, backend.max_len())?;

    let mut instances: Vec<(MarkedSequence, usize)> = Vec::new();
    for doc in train_docs {
        for sentence in &doc.sentences {
            let words = sentence.words();
            for cand in spangen::enumerate_training_spans(sentence, &doc.gold_mentions, spans) {
                let marked = spangen::insert_markers(&words, cand.start, cand.end, spans)?;
                let marked = spangen::truncate(&marked, spans.max_seq_len, &backend)?;
                let y = usize::from(cand.label == Some(true));
                instances.push((marked, y));
            }
        }
    }
    if !instances.iter().any(|(_, y)| *y == POSITIVE) {
        return Err(Error::NoPositiveInstances);
    }

    let mut classifier = SpanClassifier::new(backend, 2, train.seed);
    let log = classifier.fit(&instances, train)?;
    Ok((
        MentionModel {
            classifier,
            spans: spans.clone(),
            train_config: train.clone(),
        },
        log,
    ))
}

impl<B: EncoderBackend> MentionModel<B> {
    fn marked(&self, sentence: &Sentence, start: usize, end: usize) -> Result<MarkedSequence> {
        let marked = spangen::insert_markers(&sentence.words(), start, end, &self.spans)?;
        spangen::truncate(&marked, self.spans.max_seq_len, &self.classifier.backend)
    }

    /// `[p(non-mention), p(mention)]` for one span.
    pub fn span_probabilities(&self, sentence: &Sentence, start: usize, end: usize) -> Result<[f64; 2]> {
        let marked = self.marked(sentence, start, end)?;
        let p = self.classifier.probabilities(core::slice::from_ref(&marked))?;
        Ok([p[0][0], p[0][1]])
    }
}

/// Probability that the span is a mention.
pub fn score_span<B: EncoderBackend>(
    model: &MentionModel<B>,
    sentence: &Sentence,
    start: usize,
    end: usize,
) -> Result<f64> {
    Ok(model.span_probabilities(sentence, start, end)?[POSITIVE])
}

/// Scores every inference span and keeps those with positive-class
/// probability above [`THRESHOLD`]. Nested and overlapping predictions are all
/// kept; output is in document order.
///
/// Spans too long to fit the sequence budget even with all context removed
/// cannot be encoded and are treated as non-mentions.
pub fn predict_mentions<B: EncoderBackend>(
    model: &MentionModel<B>,
    document: &Document,
    heuristic_on: bool,
    test_max_len: Option<usize>,
) -> Result<Vec<Mention>> {
    let batch_size = model.train_config.batch_size.max(1);
    let mut out = Vec::new();
    for sentence in &document.sentences {
        let words = sentence.words();
        let mut pending: Vec<(usize, usize, MarkedSequence)> = Vec::new();
        for cand in spangen::enumerate_inference_spans(sentence, heuristic_on, &model.spans) {
            if test_max_len.is_some_and(|cap| cand.len() > cap) {
                continue;
            }
            let marked = spangen::insert_markers(&words, cand.start, cand.end, &model.spans)?;
            match spangen::truncate(&marked, model.spans.max_seq_len, &model.classifier.backend) {
                Ok(m) => pending.push((cand.start, cand.end, m)),
                Err(Error::SpanExceedsBudget { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        for chunk in pending.chunks(batch_size) {
            let batch: Vec<MarkedSequence> = chunk.iter().map(|(_, _, m)| m.clone()).collect();
            let probs = model.classifier.probabilities(&batch)?;
            for ((start, end, _), p) in chunk.iter().zip(probs) {
                if p[POSITIVE] > THRESHOLD {
                    let mut m = Mention::new(&document.doc_id, sentence.sent_index, *start, *end);
                    m.score = Some(p[POSITIVE]);
                    out.push(m);
                }
            }
        }
    }
    out.sort_by_key(Mention::order_key);
    Ok(out)
}
