use std::collections::HashMap;

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{check_vector, FeatureVector};
use super::split::split_dataset;
use super::ClassifierError;
use crate::corpus::PaintingType;

/// Output classes in logit order. Ties resolve to the first.
pub const CLASSES: [PaintingType; 2] = [PaintingType::Gongbi, PaintingType::Xieyi];

fn class_index(t: PaintingType) -> Option<usize> {
    CLASSES.iter().position(|&c| c == t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub hidden_width: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub train_ratio: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            hidden_width: 256,
            dropout_rate: 0.5,
            learning_rate: 0.01,
            epochs: 30,
            seed: 0,
            batch_size: 32,
            train_ratio: 0.7,
        }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.into()));
        if self.hidden_width == 0 {
            return bad("hidden_width must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

/// Fully connected layer, weights stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, limit: f64, rng: &mut impl Rng) -> Dense {
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub config: HeadConfig,
    pub train_size: usize,
    pub validation_size: usize,
    pub final_train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub validation_ids: Vec<String>,
}

/// Two dense layers with a rectifier and dropout between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub layer1: Dense,
    pub layer2: Dense,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TrainingMeta>,
}

/// Gradients with the same shapes as the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ClassifierModel {
    /// Randomly initialized network: He-uniform for the rectified layer,
    /// Glorot-uniform for the output layer.
    pub fn init(input_dim: usize, hidden_width: usize, seed: u64) -> ClassifierModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l1 = Dense::init(input_dim, hidden_width, (6.0 / input_dim as f64).sqrt(), &mut rng);
        let l2 = Dense::init(
            hidden_width,
            CLASSES.len(),
            (6.0 / (hidden_width + CLASSES.len()) as f64).sqrt(),
            &mut rng,
        );
        ClassifierModel { layer1: l1, layer2: l2, meta: None }
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.inputs
    }

    /// Logits with dropout disabled.
    pub fn logits(&self, x: &[f64]) -> [f64; 2] {
        let mut hidden = vec![0.0; self.layer1.outputs];
        self.layer1.forward(x, &mut hidden);
        hidden.iter_mut().for_each(|h| *h = h.max(0.0));
        let mut out = [0.0; 2];
        self.layer2.forward(&hidden, &mut out);
        out
    }

    /// Mean cross-entropy over a batch and its analytic gradients.
    ///
    /// `masks`, when given, holds one multiplicative mask per example applied
    /// to the rectified hidden layer (already scaled for inverted dropout).
    pub fn loss_and_gradients(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
        masks: Option<&[Vec<f64>]>,
    ) -> (f64, Gradients) {
        let (d, h) = (self.layer1.inputs, self.layer1.outputs);
        let mut g = Gradients {
            w1: vec![0.0; d * h],
            b1: vec![0.0; h],
            w2: vec![0.0; h * 2],
            b2: vec![0.0; 2],
        };
        let mut loss = 0.0;
        let mut pre = vec![0.0; h];
        let mut act = vec![0.0; h];
        let mut dact = vec![0.0; h];
        let scale = 1.0 / inputs.len() as f64;

        for (n, (x, &y)) in inputs.iter().zip(labels).enumerate() {
            self.layer1.forward(x, &mut pre);
            for j in 0..h {
                let m = masks.map_or(1.0, |m| m[n][j]);
                act[j] = pre[j].max(0.0) * m;
            }
            let mut logits = [0.0; 2];
            self.layer2.forward(&act, &mut logits);
            let p = softmax(logits);
            loss -= log_softmax(logits)[y] * scale;

            let mut dlogit = p;
            dlogit[y] -= 1.0;
            for k in 0..2 {
                let dk = dlogit[k] * scale;
                g.b2[k] += dk;
                for j in 0..h {
                    g.w2[k * h + j] += dk * act[j];
                }
            }
            for j in 0..h {
                let upstream: f64 = (0..2).map(|k| dlogit[k] * scale * self.layer2.weights[k * h + j]).sum();
                let m = masks.map_or(1.0, |m| m[n][j]);
                dact[j] = if pre[j] > 0.0 { upstream * m } else { 0.0 };
            }
            for j in 0..h {
                if dact[j] == 0.0 {
                    continue;
                }
                g.b1[j] += dact[j];
                let row = &mut g.w1[j * d..(j + 1) * d];
                for (gw, xi) in row.iter_mut().zip(x.iter()) {
                    *gw += dact[j] * xi;
                }
            }
        }
        (loss, g)
    }

    fn apply(&mut self, g: &Gradients, lr: f64) {
        let step = |p: &mut [f64], g: &[f64]| p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
        step(&mut self.layer1.weights, &g.w1);
        step(&mut self.layer1.bias, &g.b1);
        step(&mut self.layer2.weights, &g.w2);
        step(&mut self.layer2.bias, &g.b2);
    }

    /// Mutable views of every parameter, in a fixed order.
    pub fn parameters_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.layer1.weights,
            &mut self.layer1.bias,
            &mut self.layer2.weights,
            &mut self.layer2.bias,
        ]
    }
}

pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

fn log_softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    [logits[0] - lse, logits[1] - lse]
}

/// Argmax class (first on ties) and its softmax probability.
pub fn classify(
    model: &ClassifierModel,
    feature: &FeatureVector,
) -> Result<(PaintingType, f64), ClassifierError> {
    check_vector(model.input_dim(), feature)?;
    let p = softmax(model.logits(&feature.values));
    let idx = if p[1] > p[0] { 1 } else { 0 };
    Ok((CLASSES[idx], p[idx]))
}

/// A feature row with its known painting type.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub feature: FeatureVector,
    pub label: PaintingType,
}

/// Trains the head by mini-batch SGD on cross-entropy.
///
/// Examples are split `train_ratio : 1 − train_ratio` by [`split_dataset`];
/// the reported accuracy is measured on the held-out part with dropout off.
/// All randomness (split, initialization, per-epoch shuffles, dropout masks)
/// derives from `config.seed`.
pub fn train_head(
    examples: &[LabeledFeature],
    config: &HeadConfig,
) -> Result<(ClassifierModel, f64), ClassifierError> {
    config.validate()?;
    let first = examples.first().ok_or(ClassifierError::EmptyDataset)?;
    let dim = first.feature.values.len();
    let mut by_id: HashMap<&str, (&[f64], usize)> = HashMap::with_capacity(examples.len());
    for ex in examples {
        check_vector(dim, &ex.feature)?;
        let y = class_index(ex.label).ok_or_else(|| {
            ClassifierError::InvalidLabel(ex.feature.record_id.clone())
        })?;
        if by_id.insert(&ex.feature.record_id, (&ex.feature.values, y)).is_some() {
            return Err(ClassifierError::InvalidConfig(format!(
                "duplicate record `{}`",
                ex.feature.record_id
            )));
        }
    }

    let ids: Vec<String> = by_id.keys().map(|s| s.to_string()).collect();
    let (mut train_ids, validation_ids) = split_dataset(&ids, config.train_ratio, config.seed)?;
    let mut per_class = [0usize; 2];
    for id in &train_ids {
        per_class[by_id[id.as_str()].1] += 1;
    }
    if per_class.iter().any(|&c| c < 2) {
        return Err(ClassifierError::SingleClass { per_class });
    }

    let mut model = ClassifierModel::init(dim, config.hidden_width, config.seed.wrapping_add(1));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let keep = 1.0 - config.dropout_rate;
    let mut last_loss = f64::NAN;

    for _epoch in 0..config.epochs {
        train_ids.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_ids.chunks(config.batch_size) {
            let inputs: Vec<&[f64]> = batch.iter().map(|id| by_id[id.as_str()].0).collect();
            let labels: Vec<usize> = batch.iter().map(|id| by_id[id.as_str()].1).collect();
            let masks: Vec<Vec<f64>> = batch
                .iter()
                .map(|_| {
                    (0..config.hidden_width)
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect()
                })
                .collect();
            let (loss, grads) = model.loss_and_gradients(&inputs, &labels, Some(&masks));
            epoch_loss += loss * batch.len() as f64;
            model.apply(&grads, config.learning_rate);
        }
        last_loss = epoch_loss / train_ids.len() as f64;
        tracing::debug!(epoch = _epoch, loss = last_loss, "epoch done");
    }

    let accuracy = |ids: &[String]| -> f64 {
        if ids.is_empty() {
            return 0.0;
        }
        let hits = ids
            .iter()
            .filter(|id| {
                let (x, y) = by_id[id.as_str()];
                let p = softmax(model.logits(x));
                let pred = if p[1] > p[0] { 1 } else { 0 };
                pred == y
            })
            .count();
        hits as f64 / ids.len() as f64
    };
    let train_accuracy = accuracy(&train_ids);
    let validation_accuracy = accuracy(&validation_ids);

    let mut validation_sorted = validation_ids;
    validation_sorted.sort();
    model.meta = Some(TrainingMeta {
        config: config.clone(),
        train_size: train_ids.len(),
        validation_size: validation_sorted.len(),
        final_train_loss: last_loss,
        train_accuracy,
        validation_accuracy,
        validation_ids: validation_sorted,
    });
    Ok((model, validation_accuracy))
}
