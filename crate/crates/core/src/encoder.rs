//! Sequence encoders and the boundary-pair span representation.
//!
//! A backend maps a [`MarkedSequence`] to its final-layer hidden vectors at the
//! two marker positions. Backends that support fine-tuning also accept the
//! loss gradient with respect to those two vectors and update their own
//! weights ([`EncoderBackend::train_step`]).

mod reference;

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, Adam, Linear, LinearSchedule, StepRecord, TrainConfig, TrainLog};
use crate::spangen::{LengthModel, MarkedSequence};

pub use reference::{ReferenceEncoder, ReferenceEncoderConfig};

/// Final-layer hidden states at the opening and closing markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStates {
    pub open: Vec<f32>,
    pub close: Vec<f32>,
}

pub trait EncoderBackend: LengthModel {
    fn name(&self) -> &str;

    fn hidden_dim(&self) -> usize;

    /// Largest encoded length the backend accepts.
    fn max_len(&self) -> usize;

    fn supports_training(&self) -> bool;

    /// Computes boundary states without any length check; callers go
    /// through [`encode_batch`].
    fn forward(&self, batch: &[MarkedSequence]) -> Result<Vec<BoundaryStates>>;

    /// Back-propagates `grads` (gradients of the loss with respect to the
    /// boundary states of `batch`) and applies one update at rate `lr`.
    fn train_step(
        &mut self,
        batch: &[MarkedSequence],
        grads: &[BoundaryStates],
        lr: f32,
    ) -> Result<()>;
}

fn check_budget<B: EncoderBackend + ?Sized>(backend: &B, batch: &[MarkedSequence]) -> Result<()> {
    for marked in batch {
        let len = backend.encoded_length(marked)?;
        if len > backend.max_len() {
            return Err(Error::OverBudget {
                len,
                budget: backend.max_len(),
            });
        }
    }
    Ok(())
}

/// Encodes a batch, returning one boundary pair per input in input order.
pub fn encode_batch<B: EncoderBackend + ?Sized>(
    backend: &B,
    batch: &[MarkedSequence],
) -> Result<Vec<BoundaryStates>> {
    check_budget(backend, batch)?;
    let out = backend.forward(batch)?;
    if out.len() != batch.len() {
        return Err(Error::Backend(alloc::format!(
            "{} returned {} results for {} inputs",
            backend.name(),
            out.len(),
            batch.len()
        )));
    }
    Ok(out)
}

/// `[h_open; h_close]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanRepresentation(pub Vec<f32>);

impl SpanRepresentation {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

pub fn span_representation(h_open: &[f32], h_close: &[f32]) -> Result<SpanRepresentation> {
    if h_open.len() != h_close.len() {
        return Err(Error::DimensionMismatch {
            left: h_open.len(),
            right: h_close.len(),
        });
    }
    let mut v = Vec::with_capacity(2 * h_open.len());
    v.extend_from_slice(h_open);
    v.extend_from_slice(h_close);
    Ok(SpanRepresentation(v))
}

/// An encoder backend with a linear softmax head over the boundary
/// representation.
#[derive(Debug, Clone)]
pub struct SpanClassifier<B> {
    pub backend: B,
    pub head: Linear,
}

impl<B: EncoderBackend> SpanClassifier<B> {
    pub fn new(backend: B, classes: usize, seed: u64) -> SpanClassifier<B> {
        let head = Linear::new(2 * backend.hidden_dim(), classes, seed);
        SpanClassifier { backend, head }
    }

    pub fn classes(&self) -> usize {
        self.head.out_dim
    }

    pub fn logits(&self, batch: &[MarkedSequence]) -> Result<Vec<Vec<f32>>> {
        encode_batch(&self.backend, batch)?
            .iter()
            .map(|s| {
                let rep = span_representation(&s.open, &s.close)?;
                self.head.forward(rep.as_slice())
            })
            .collect()
    }

    /// Class probabilities for each input.
    pub fn probabilities(&self, batch: &[MarkedSequence]) -> Result<Vec<Vec<f64>>> {
        Ok(self.logits(batch)?.iter().map(|l| nn::softmax(l)).collect())
    }

    /// Cross-entropy training over `(input, class)` pairs.
    ///
    /// Instances are reshuffled every epoch by a generator seeded from
    /// `config.seed`; the learning rate decays linearly to zero.
    pub fn fit(
        &mut self,
        instances: &[(MarkedSequence, usize)],
        config: &TrainConfig,
    ) -> Result<TrainLog> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        config.validate()?;
        if instances.iter().any(|(_, y)| *y >= self.classes()) {
            return Err(Error::InvalidConfig("class index out of range".to_string()));
        }
        let total = config.total_steps(instances.len());
        let schedule = LinearSchedule {
            base: config.learning_rate,
            total,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let mut adam = Adam::new(&[self.head.weight.len(), self.head.bias.len()]);
        let mut log = TrainLog::default();
        let hidden = self.backend.hidden_dim();
        let mut order: Vec<usize> = (0..instances.len()).collect();

        'epochs: for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(config.batch_size) {
                let step = log.steps.len();
                if step >= total {
                    break 'epochs;
                }
                let lr = schedule.rate(step);
                let batch: Vec<MarkedSequence> =
                    chunk.iter().map(|&i| instances[i].0.clone()).collect();
                let states = encode_batch(&self.backend, &batch)?;
                let scale = 1.0 / chunk.len() as f32;
                let mut grads = self.head.zero_grads();
                let mut state_grads = Vec::with_capacity(chunk.len());
                let mut loss = 0.0f64;
                for (&i, s) in chunk.iter().zip(&states) {
                    let y = instances[i].1;
                    let rep = span_representation(&s.open, &s.close)?;
                    let logits = self.head.forward(rep.as_slice())?;
                    let probs = nn::softmax(&logits);
                    loss -= libm::log(probs[y].max(1e-300));
                    let dlogits: Vec<f32> = probs
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| (p as f32 - if k == y { 1.0 } else { 0.0 }) * scale)
                        .collect();
                    let drep = self.head.backward(rep.as_slice(), &dlogits, &mut grads);
                    state_grads.push(BoundaryStates {
                        open: drep[..hidden].to_vec(),
                        close: drep[hidden..].to_vec(),
                    });
                }
                if self.backend.supports_training() {
                    self.backend.train_step(&batch, &state_grads, lr as f32)?;
                }
                let Linear { weight, bias, .. } = &mut self.head;
                adam.step(
                    &mut [&mut weight[..], &mut bias[..]],
                    &[&grads.weight[..], &grads.bias[..]],
                    lr as f32,
                );
                log.steps.push(StepRecord {
                    step,
                    epoch,
                    loss: loss / chunk.len() as f64,
                    learning_rate: lr,
                });
            }
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spangen::{insert_markers, SpanGenConfig};

    #[test]
    fn concatenation_examples() {
        let r = span_representation(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.0, alloc::vec![1.0, 2.0, 3.0, 4.0]);
        let z = span_representation(&[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(z.0, alloc::vec![0.0; 4]);
        assert_eq!(span_representation(&[0.0; 1024], &[0.0; 1024]).unwrap().dim(), 2048);
        assert_eq!(
            span_representation(&[0.0; 3], &[0.0; 2]),
            Err(Error::DimensionMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn over_budget_sequences_are_rejected() {
        let enc = ReferenceEncoder::new(ReferenceEncoderConfig {
            max_len: 8,
            ..Default::default()
        });
        let cfg = SpanGenConfig::default();
        let words: Vec<_> = (0..10).map(|i| alloc::format!("w{i}")).collect();
        let m = insert_markers(&words, 2, 3, &cfg).unwrap();
        assert_eq!(
            encode_batch(&enc, &[m]),
            Err(Error::OverBudget { len: 12, budget: 8 })
        );
    }
}
