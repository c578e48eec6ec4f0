use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::features::{FeatureVector, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

pub const HIDDEN: usize = 12;
pub const DIMS: [usize; 3] = [FEATURE_COUNT, HIDDEN, 1];
pub const PARAMETER_COUNT: usize = FEATURE_COUNT * HIDDEN + HIDDEN + HIDDEN + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 300, batch_size: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Mean BCE over the full dataset before training, then after every epoch.
    pub loss_curve: Vec<f64>,
    /// Only one label class was present in the training data.
    pub single_class: bool,
}

/// 9→12→1 gate: `π = σ(W2·relu(W1·φ + b1) + b2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateModel {
    pub w1: [[f64; FEATURE_COUNT]; HIDDEN],
    pub b1: [f64; HIDDEN],
    pub w2: [f64; HIDDEN],
    pub b2: f64,
    pub metadata: TrainingMetadata,
}

impl Default for GateModel {
    fn default() -> Self {
        Self {
            w1: [[0.0; FEATURE_COUNT]; HIDDEN],
            b1: [0.0; HIDDEN],
            w2: [0.0; HIDDEN],
            b2: 0.0,
            metadata: TrainingMetadata::default(),
        }
    }
}

impl GateModel {
    /// He-initialized weights (`N(0, 2/fan_in)`), zero biases.
    pub fn he_init(seed: u64) -> Self {
        let mut r = rng::rng(seed);
        let n1 = Normal::new(0.0, math::sqrt(2.0 / FEATURE_COUNT as f64)).expect("finite std");
        let n2 = Normal::new(0.0, math::sqrt(2.0 / HIDDEN as f64)).expect("finite std");
        let mut m = Self::default();
        for row in &mut m.w1 {
            for w in row.iter_mut() {
                *w = n1.sample(&mut r);
            }
        }
        for w in &mut m.w2 {
            *w = n2.sample(&mut r);
        }
        m
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() * self.w1[0].len() + self.b1.len() + self.w2.len() + 1
    }

    /// Parameters in the order W1 (row-major), b1, W2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(PARAMETER_COUNT);
        self.w1.iter().for_each(|row| p.extend_from_slice(row));
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != PARAMETER_COUNT {
            return Err(Error::CorruptModel);
        }
        let mut it = p.iter().copied();
        for row in &mut self.w1 {
            row.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.b1.iter_mut().for_each(|w| *w = it.next().unwrap());
        self.w2.iter_mut().for_each(|w| *w = it.next().unwrap());
        self.b2 = it.next().unwrap();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_flat().iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::CorruptModel)
        }
    }

    fn hidden(&self, x: &[f64; FEATURE_COUNT]) -> [f64; HIDDEN] {
        let mut h = [0.0; HIDDEN];
        for (j, hj) in h.iter_mut().enumerate() {
            let z: f64 = self.w1[j].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
            *hj = z.max(0.0);
        }
        h
    }

    fn logit(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let h = self.hidden(x);
        self.w2.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2
    }

    pub fn forward(&self, phi: &FeatureVector) -> Result<f64> {
        self.validate()?;
        Ok(math::sigmoid(self.logit(&phi.values)))
    }
}

pub fn gate_forward(m: &GateModel, phi: &FeatureVector) -> Result<f64> {
    m.forward(phi)
}

/// Mean binary cross-entropy over `(φ, y)` pairs and its gradient in [`GateModel::to_flat`] order.
pub fn loss_and_gradient(m: &GateModel, data: &[([f64; FEATURE_COUNT], f64)]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; PARAMETER_COUNT];
    if data.is_empty() {
        return (0.0, grad);
    }
    let (gw1, rest) = grad.split_at_mut(FEATURE_COUNT * HIDDEN);
    let (gb1, rest) = rest.split_at_mut(HIDDEN);
    let (gw2, gb2) = rest.split_at_mut(HIDDEN);
    let mut loss = 0.0;
    for (x, y) in data {
        let h = m.hidden(x);
        let z = m.w2.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + m.b2;
        // log(1 + e^z) - y·z, evaluated without overflow
        loss += z.max(0.0) + math::ln_1p(math::exp(-math::abs(z))) - y * z;
        let dz = math::sigmoid(z) - y;
        gb2[0] += dz;
        for j in 0..HIDDEN {
            gw2[j] += dz * h[j];
            if h[j] > 0.0 {
                let dh = dz * m.w2[j];
                gb1[j] += dh;
                for (k, xk) in x.iter().enumerate() {
                    gw1[j * FEATURE_COUNT + k] += dh * xk;
                }
            }
        }
    }
    let inv = 1.0 / data.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    (loss * inv, grad)
}

/// A labelled gate example: `Y = 1` iff the hyperbolic margin is at least the Euclidean one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateExample {
    pub features: FeatureVector,
    pub label: bool,
    pub margin_hyp: f64,
    pub margin_euc: f64,
}

impl GateExample {
    pub fn from_margins(features: FeatureVector, margin_hyp: f64, margin_euc: f64) -> Self {
        Self { features, label: margin_hyp >= margin_euc, margin_hyp, margin_euc }
    }

    pub fn target(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }
}

/// Mini-batch gradient descent on BCE from a He initialization. Returns the model with the
/// lowest full-dataset loss seen (the initial weights included), so training never ends worse
/// than it started. A single-class dataset trains anyway and sets `metadata.single_class`.
pub fn train_gate(data: &[GateExample], cfg: &TrainConfig) -> Result<GateModel> {
    if data.is_empty() {
        return Err(Error::InvalidInput("gate training set is empty"));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidInput("gate batch size and learning rate must be positive"));
    }
    let rows: Vec<([f64; FEATURE_COUNT], f64)> = data.iter().map(|e| (e.features.values, e.target())).collect();
    let positives = data.iter().filter(|e| e.label).count();
    let single_class = positives == 0 || positives == data.len();

    let mut model = GateModel::he_init(rng::derive_seed(cfg.seed, 0));
    let mut order_rng = rng::rng(rng::derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut params = model.to_flat();
    let mut curve = Vec::with_capacity(cfg.epochs + 1);
    let (initial, _) = loss_and_gradient(&model, &rows);
    curve.push(initial);
    let mut best = (initial, params.clone());
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| rows[i]));
            let (_, grad) = loss_and_gradient(&model, &batch);
            params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= cfg.learning_rate * g);
            model.set_flat(&params)?;
        }
        let (loss, _) = loss_and_gradient(&model, &rows);
        curve.push(loss);
        if loss < best.0 {
            best = (loss, params.clone());
        }
    }
    model.set_flat(&best.1)?;
    model.validate()?;
    model.metadata = TrainingMetadata {
        seed: cfg.seed,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        loss_curve: curve,
        single_class,
    };
    Ok(model)
}
