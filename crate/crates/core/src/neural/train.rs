use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::adam::{Adam, AdamConfig};
use super::model::{build_model, cross_entropy, ModelState};
use super::{ModelConfig, NeuralError, Scalar};
use crate::dataset::{Dataset, Label};
use crate::dsp::argmax_lowest;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            batch_size: 32,
            epochs: 6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidTrainConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

/// Borrowed labeled training windows.
#[derive(Debug, Clone, Default)]
pub struct Examples<'a> {
    pub inputs: Vec<&'a [f32]>,
    pub labels: Vec<usize>,
}

impl<'a> Examples<'a> {
    /// Data records of a dataset; sync records are rejected because the
    /// network has no sync output.
    pub fn from_dataset(dataset: &'a Dataset) -> Result<Self, NeuralError> {
        let mut out = Examples::default();
        for r in &dataset.records {
            match r.label {
                Label::Data(l) => {
                    out.inputs.push(&r.samples);
                    out.labels.push(l as usize);
                }
                Label::Sync => {
                    return Err(NeuralError::LabelOutOfRange {
                        label: Label::SYNC_CODE as usize,
                        classes: dataset.tone_count as usize,
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    /// Fraction of the batch classified correctly by the train-mode pass.
    pub accuracy: f64,
}

/// One gradient update on a `batch x input_len` buffer.
pub fn train_step<T: Scalar>(
    state: &mut ModelState<T>,
    optimizer: &mut Adam<T>,
    inputs: &[T],
    labels: &[usize],
) -> Result<StepOutcome, NeuralError> {
    let cfg = state.config();
    let rows = inputs.len() / cfg.input_len.max(1);
    if rows != labels.len() || !inputs.len().is_multiple_of(cfg.input_len) {
        return Err(NeuralError::LabelCount {
            inputs: rows,
            labels: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= cfg.classes) {
        return Err(NeuralError::LabelOutOfRange {
            label,
            classes: cfg.classes,
        });
    }
    let cache = state.forward_train(inputs)?;
    let loss = cross_entropy(&cache.probs, labels, cfg.classes);
    if !loss.is_finite() {
        return Err(NeuralError::NonFiniteLoss {
            step: optimizer.steps() + 1,
        });
    }
    let correct = cache
        .probs
        .chunks_exact(cfg.classes)
        .zip(labels)
        .filter(|(row, &y)| argmax_lowest(row) == y)
        .count();
    let grads = state.backward(&cache, labels);
    state.commit_running_stats(&cache);
    optimizer.apply(state, &grads);
    Ok(StepOutcome {
        loss,
        accuracy: correct as f64 / labels.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Sample-weighted mean of the batch losses.
    pub loss: f64,
    pub accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    /// The `epoch,loss,accuracy,seconds` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,accuracy,seconds\n");
        for (i, e) in self.epochs.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", i + 1, e.loss, e.accuracy, e.seconds));
        }
        s
    }
}

/// Trains a fresh model. Each epoch visits every example once in an order
/// reshuffled from the seeded stream; the final batch may be short.
pub fn train<T: Scalar>(
    config: ModelConfig,
    train_cfg: &TrainConfig,
    examples: &Examples<'_>,
) -> Result<(ModelState<T>, TrainLog), NeuralError> {
    train_with_progress(config, train_cfg, examples, |_, _| {})
}

/// [`train`] with a callback invoked after each epoch.
pub fn train_with_progress<T: Scalar>(
    config: ModelConfig,
    train_cfg: &TrainConfig,
    examples: &Examples<'_>,
    mut on_epoch: impl FnMut(usize, &EpochStats),
) -> Result<(ModelState<T>, TrainLog), NeuralError> {
    config.validate()?;
    train_cfg.validate()?;
    if examples.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    if examples.inputs.len() != examples.labels.len() {
        return Err(NeuralError::LabelCount {
            inputs: examples.inputs.len(),
            labels: examples.labels.len(),
        });
    }
    for x in &examples.inputs {
        if x.len() != config.input_len {
            return Err(NeuralError::ShapeMismatch {
                expected: config.input_len,
                got: x.len(),
            });
        }
    }
    let mut state = build_model::<T>(config, train_cfg.seed)?;
    let mut optimizer = Adam::new(train_cfg.adam(), &state);
    let mut shuffle_rng = ChaCha20Rng::seed_from_u64(train_cfg.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = TrainLog::default();
    let mut batch = Vec::with_capacity(train_cfg.batch_size * config.input_len);
    let mut labels = Vec::with_capacity(train_cfg.batch_size);

    for epoch in 0..train_cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct_sum) = (0.0, 0.0);
        for chunk in order.chunks(train_cfg.batch_size) {
            batch.clear();
            labels.clear();
            for &i in chunk {
                batch.extend(examples.inputs[i].iter().map(|&v| T::of(v as f64)));
                labels.push(examples.labels[i]);
            }
            let out = train_step(&mut state, &mut optimizer, &batch, &labels)?;
            loss_sum += out.loss * chunk.len() as f64;
            correct_sum += out.accuracy * chunk.len() as f64;
        }
        let stats = EpochStats {
            loss: loss_sum / examples.len() as f64,
            accuracy: correct_sum / examples.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(epoch + 1, &stats);
        log.epochs.push(stats);
    }
    Ok((state, log))
}
