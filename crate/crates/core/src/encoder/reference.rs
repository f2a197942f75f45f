//! Small deterministic encoder for CPU-only runs and tests.
//!
//! Each word gets a fixed pseudo-random embedding derived from a hash of its
//! text. The hidden state at position `i` is
//! `tanh(W_local · [e(i-w) .. e(i+w)] + W_global · mean(e) + b)`, where the
//! window is zero-padded at the sequence edges. Only the two mixer matrices
//! and the bias are trained.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundaryStates, EncoderBackend};
use crate::error::{Error, Result};
use crate::nn::Adam;
use crate::spangen::{LengthModel, MarkedSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceEncoderConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Context words on each side of a position.
    pub window: usize,
    pub seed: u64,
    pub max_len: usize,
}

impl Default for ReferenceEncoderConfig {
    fn default() -> Self {
        ReferenceEncoderConfig {
            embed_dim: 32,
            hidden_dim: 32,
            window: 2,
            seed: 17,
            max_len: 512,
        }
    }
}

impl ReferenceEncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.embed_dim > 64 {
            return Err(Error::InvalidConfig(
                "reference encoder embed_dim must be in 1..=64".to_string(),
            ));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig(
                "reference encoder hidden_dim must be positive".to_string(),
            ));
        }
        if self.max_len < 8 {
            return Err(Error::InvalidConfig(
                "reference encoder max_len must be at least 8".to_string(),
            ));
        }
        Ok(())
    }

    fn local_width(&self) -> usize {
        (2 * self.window + 1) * self.embed_dim
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceEncoder {
    pub config: ReferenceEncoderConfig,
    /// `hidden_dim × local_width`, row-major.
    pub local: Vec<f32>,
    /// `hidden_dim × embed_dim`, row-major.
    pub global: Vec<f32>,
    pub bias: Vec<f32>,
    #[serde(skip)]
    optimizer: Option<Adam>,
}

impl PartialEq for ReferenceEncoder {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.local == other.local
            && self.global == other.global
            && self.bias == other.bias
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fixed embedding of a word: components uniform in [-1, 1).
pub(crate) fn hashed_embedding(word: &str, dim: usize) -> Vec<f32> {
    let mut state = fnv1a(word.as_bytes());
    (0..dim)
        .map(|_| {
            let bits = splitmix(&mut state) >> 40;
            (bits as f32 / (1u64 << 24) as f32) * 2.0 - 1.0
        })
        .collect()
}

/// Per-position inputs shared by the forward and backward passes.
struct Features {
    embeddings: Vec<Vec<f32>>,
    mean: Vec<f32>,
}

impl ReferenceEncoder {
    pub fn new(config: ReferenceEncoderConfig) -> ReferenceEncoder {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let width = config.local_width();
        let h = config.hidden_dim;
        let b_local = libm::sqrtf(6.0 / (width + h) as f32);
        let b_global = libm::sqrtf(6.0 / (config.embed_dim + h) as f32);
        let local = (0..h * width)
            .map(|_| rng.random_range(-b_local..b_local))
            .collect();
        let global = (0..h * config.embed_dim)
            .map(|_| rng.random_range(-b_global..b_global))
            .collect();
        ReferenceEncoder {
            bias: alloc::vec![0.0; h],
            config,
            local,
            global,
            optimizer: None,
        }
    }

    fn features(&self, words: &[String]) -> Features {
        let d = self.config.embed_dim;
        let embeddings: Vec<Vec<f32>> = words.iter().map(|w| hashed_embedding(w, d)).collect();
        let mut mean = alloc::vec![0.0f32; d];
        for e in &embeddings {
            for (m, v) in mean.iter_mut().zip(e) {
                *m += v;
            }
        }
        let n = embeddings.len().max(1) as f32;
        mean.iter_mut().for_each(|m| *m /= n);
        Features { embeddings, mean }
    }

    fn window_input(&self, feats: &Features, pos: usize) -> Vec<f32> {
        let d = self.config.embed_dim;
        let w = self.config.window as isize;
        let mut x = Vec::with_capacity(self.config.local_width());
        for off in -w..=w {
            let p = pos as isize + off;
            if p >= 0 && (p as usize) < feats.embeddings.len() {
                x.extend_from_slice(&feats.embeddings[p as usize]);
            } else {
                x.extend(core::iter::repeat_n(0.0, d));
            }
        }
        x
    }

    fn hidden_at(&self, feats: &Features, x: &[f32]) -> Vec<f32> {
        let width = self.config.local_width();
        let d = self.config.embed_dim;
        (0..self.config.hidden_dim)
            .map(|k| {
                let z = crate::nn::dot(&self.local[k * width..(k + 1) * width], x)
                    + crate::nn::dot(&self.global[k * d..(k + 1) * d], &feats.mean)
                    + self.bias[k];
                libm::tanhf(z)
            })
            .collect()
    }

    fn encode_one(&self, marked: &MarkedSequence) -> BoundaryStates {
        let feats = self.features(&marked.words);
        let xo = self.window_input(&feats, marked.marker_open_pos);
        let xc = self.window_input(&feats, marked.marker_close_pos);
        BoundaryStates {
            open: self.hidden_at(&feats, &xo),
            close: self.hidden_at(&feats, &xc),
        }
    }
}

impl LengthModel for ReferenceEncoder {
    fn sequence_overhead(&self) -> usize {
        0
    }

    fn piece_counts(&self, words: &[String]) -> Result<Vec<usize>> {
        Ok(alloc::vec![1; words.len()])
    }
}

impl EncoderBackend for ReferenceEncoder {
    fn name(&self) -> &str {
        "reference_deterministic"
    }

    fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    fn supports_training(&self) -> bool {
        true
    }

    fn forward(&self, batch: &[MarkedSequence]) -> Result<Vec<BoundaryStates>> {
        Ok(batch.iter().map(|m| self.encode_one(m)).collect())
    }

    fn train_step(
        &mut self,
        batch: &[MarkedSequence],
        grads: &[BoundaryStates],
        lr: f32,
    ) -> Result<()> {
        if batch.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                left: batch.len(),
                right: grads.len(),
            });
        }
        let width = self.config.local_width();
        let d = self.config.embed_dim;
        let h = self.config.hidden_dim;
        let mut g_local = alloc::vec![0.0f32; self.local.len()];
        let mut g_global = alloc::vec![0.0f32; self.global.len()];
        let mut g_bias = alloc::vec![0.0f32; h];

        for (marked, g) in batch.iter().zip(grads) {
            if g.open.len() != h || g.close.len() != h {
                return Err(Error::DimensionMismatch {
                    left: g.open.len().max(g.close.len()),
                    right: h,
                });
            }
            let feats = self.features(&marked.words);
            for (pos, dh) in [
                (marked.marker_open_pos, &g.open),
                (marked.marker_close_pos, &g.close),
            ] {
                let x = self.window_input(&feats, pos);
                let hidden = self.hidden_at(&feats, &x);
                for k in 0..h {
                    let dz = dh[k] * (1.0 - hidden[k] * hidden[k]);
                    if dz == 0.0 {
                        continue;
                    }
                    for (gw, xi) in g_local[k * width..(k + 1) * width].iter_mut().zip(&x) {
                        *gw += dz * xi;
                    }
                    for (gw, mi) in g_global[k * d..(k + 1) * d].iter_mut().zip(&feats.mean) {
                        *gw += dz * mi;
                    }
                    g_bias[k] += dz;
                }
            }
        }

        let sizes = [self.local.len(), self.global.len(), h];
        let adam = self.optimizer.get_or_insert_with(|| Adam::new(&sizes));
        adam.step(
            &mut [&mut self.local[..], &mut self.global[..], &mut self.bias[..]],
            &[&g_local[..], &g_global[..], &g_bias[..]],
            lr,
        );
        Ok(())
    }
}
