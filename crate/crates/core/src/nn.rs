//! Linear heads, softmax, Adam and the training configuration shared by both
//! classifiers.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense layer `y = W x + b`, weights stored row-major (`out_dim × in_dim`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Linear {
    /// Xavier-uniform weights, zero bias.
    pub fn new(in_dim: usize, out_dim: usize, seed: u64) -> Linear {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = libm::sqrtf(6.0 / (in_dim + out_dim) as f32);
        let weight = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Linear {
            in_dim,
            out_dim,
            weight,
            bias: alloc::vec![0.0; out_dim],
        }
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.in_dim,
            });
        }
        Ok(self
            .weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| dot(row, x) + b)
            .collect())
    }

    /// Accumulates parameter gradients for one example and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, x: &[f32], grad_out: &[f32], grads: &mut LinearGrads) -> Vec<f32> {
        let mut grad_in = alloc::vec![0.0f32; self.in_dim];
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grads.weight[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * x[i];
                grad_in[i] += g * row[i];
            }
            grads.bias[o] += g;
        }
        grad_in
    }

    pub fn zero_grads(&self) -> LinearGrads {
        LinearGrads {
            weight: alloc::vec![0.0; self.weight.len()],
            bias: alloc::vec![0.0; self.bias.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax, evaluated in double precision.
pub fn softmax(logits: &[f32]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l as f64));
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l as f64 - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Adam over a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f32,
    beta2: f32,
    eps: f32,
    beta1_pow: f32,
    beta2_pow: f32,
    first: Vec<Vec<f32>>,
    second: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(sizes: &[usize]) -> Adam {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            first: sizes.iter().map(|&n| alloc::vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| alloc::vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f32]], grads: &[&[f32]], lr: f32) {
        assert_eq!(params.len(), self.first.len());
        self.beta1_pow *= self.beta1;
        self.beta2_pow *= self.beta2;
        let c1 = 1.0 - self.beta1_pow;
        let c2 = 1.0 - self.beta2_pow;
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first[k];
            let v = &mut self.second[k];
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= lr * mhat / (libm::sqrtf(vhat) + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub max_seq_len: usize,
    /// Optional hard cap on optimizer steps.
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl TrainConfig {
    /// Mention extractor: one epoch, 1e-5, batch 32.
    pub fn mention_default() -> TrainConfig {
        TrainConfig {
            epochs: 1,
            learning_rate: 1e-5,
            batch_size: 32,
            seed: 42,
            max_seq_len: 128,
            max_steps: None,
        }
    }

    /// IS assigner: three epochs, 3e-5, batch 32.
    pub fn is_default() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            learning_rate: 3e-5,
            ..TrainConfig::mention_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".to_string()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".to_string()));
        }
        if self.max_steps == Some(0) {
            return Err(Error::InvalidConfig("max_steps must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Number of optimizer steps for `instances` training examples.
    pub fn total_steps(&self, instances: usize) -> usize {
        let planned = self.epochs * instances.div_ceil(self.batch_size);
        self.max_steps.map_or(planned, |cap| planned.min(cap))
    }
}

/// Linear decay from the base rate to zero over `total` steps, no warmup.
#[derive(Debug, Clone, Copy)]
pub struct LinearSchedule {
    pub base: f64,
    pub total: usize,
}

impl LinearSchedule {
    pub fn rate(&self, step: usize) -> f64 {
        if self.total == 0 {
            return self.base;
        }
        self.base * (self.total.saturating_sub(step)) as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
}
