//! Eight-way information status classifier over marked mention inputs.

use alloc::vec::Vec;

use crate::encoder::{EncoderBackend, SpanClassifier};
use crate::error::{Error, Result};
use crate::nn::{self, TrainConfig, TrainLog};
use crate::spangen::{self, LengthModel, MarkedSequence, SpanGenConfig};
use crate::types::{Document, ISCategory, Mention};

#[derive(Debug, Clone)]
pub struct ISModel<B> {
    pub classifier: SpanClassifier<B>,
    pub spans: SpanGenConfig,
    pub train_config: TrainConfig,
    /// Category of each head output, in class-index order.
    pub classes: [ISCategory; ISCategory::COUNT],
}

/// Model inputs for `mentions`, in document order, with the seen flag
/// computed over `mentions` itself. Returns the sorted mentions alongside.
pub fn is_inputs(
    spans: &SpanGenConfig,
    lengths: &(impl LengthModel + ?Sized),
    document: &Document,
    mentions: &[Mention],
) -> Result<(Vec<Mention>, Vec<MarkedSequence>)> {
    let mut ordered = mentions.to_vec();
    ordered.sort_by_key(Mention::order_key);
    let flags = spangen::seen_flags(document, &ordered)?;
    let mut inputs = Vec::with_capacity(ordered.len());
    for (m, seen) in ordered.iter().zip(flags) {
        let sentence = document
            .sentence(m.sent)
            .ok_or_else(|| Error::UnknownMention(m.key()))?;
        let marked = spangen::build_is_input(&sentence.words(), m, seen, spans)?;
        inputs.push(spangen::truncate(&marked, spans.max_seq_len, lengths)?);
    }
    Ok((ordered, inputs))
}

pub fn train_is_assigner<B: EncoderBackend>(
    train_docs: &[Document],
    train: &TrainConfig,
    spans: &SpanGenConfig,
    backend: B,
) -> Result<(ISModel<B>, TrainLog)> {
    train.validate()?;
    spans.validate()?;
    if train.max_seq_len != spans.max_seq_len || spans.max_seq_len > backend.max_len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "inconsistent sequence budget: train {}, spans {}, backend {}",
            train.max_seq_len,
            spans.max_seq_len,
            backend.max_len()
        )));
    }

    let mut instances = Vec::new();
    for doc in train_docs {
        if let Some(m) = doc.gold_mentions.iter().find(|m| m.is_category.is_none()) {
            return Err(Error::MissingLabel(m.key()));
        }
        let (ordered, inputs) = is_inputs(spans, &backend, doc, &doc.gold_mentions)?;
        for (m, input) in ordered.iter().zip(inputs) {
            let class = m.is_category.map(ISCategory::index).unwrap_or_default();
            instances.push((input, class));
        }
    }
    if instances.is_empty() {
        return Err(Error::InvalidConfig("no gold mentions to train on".into()));
    }

    let mut classifier = SpanClassifier::new(backend, ISCategory::COUNT, train.seed);
    let log = classifier.fit(&instances, train)?;
    Ok((
        ISModel {
            classifier,
            spans: spans.clone(),
            train_config: train.clone(),
            classes: ISCategory::ALL,
        },
        log,
    ))
}

impl<B: EncoderBackend> ISModel<B> {
    /// Class probabilities for `mentions` in document order.
    pub fn class_probabilities(
        &self,
        document: &Document,
        mentions: &[Mention],
    ) -> Result<(Vec<Mention>, Vec<Vec<f64>>)> {
        let (ordered, inputs) =
            is_inputs(&self.spans, &self.classifier.backend, document, mentions)?;
        let batch_size = self.train_config.batch_size.max(1);
        let mut probs = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(batch_size) {
            probs.extend(self.classifier.probabilities(chunk)?);
        }
        Ok((ordered, probs))
    }
}

/// Labels every mention with its most probable category (ties go to the
/// lower class index) and sets `score` to that probability. Output is in
/// document order; spans are unchanged.
pub fn assign_is<B: EncoderBackend>(
    model: &ISModel<B>,
    document: &Document,
    mentions: &[Mention],
) -> Result<Vec<Mention>> {
    let (mut ordered, probs) = model.class_probabilities(document, mentions)?;
    for (m, p) in ordered.iter_mut().zip(probs) {
        let best = nn::argmax(&p);
        m.is_category = Some(model.classes[best]);
        m.score = Some(p[best]);
    }
    Ok(ordered)
}
