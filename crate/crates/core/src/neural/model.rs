use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::layers::{BatchNorm, BnCache, Conv1d, Dense};
use super::{ModelConfig, NeuralError, Scalar};
use crate::dsp::argmax_lowest;

/// Canonical names of the trainable tensors, in storage and optimizer order.
pub const TRAINABLE_NAMES: [&str; 12] = [
    "bn_input.gamma",
    "bn_input.beta",
    "conv.kernel",
    "conv.bias",
    "bn_conv.gamma",
    "bn_conv.beta",
    "dense_hidden.kernel",
    "dense_hidden.bias",
    "bn_hidden.gamma",
    "bn_hidden.beta",
    "dense_output.kernel",
    "dense_output.bias",
];

/// Floor applied to probabilities before the log in the loss.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in every normalization, running statistics updated.
    Train,
    /// Running statistics only; the state is not touched.
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterCounts {
    pub total: usize,
    pub trainable: usize,
    pub non_trainable: usize,
}

/// Every parameter and running statistic of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<T> {
    pub(crate) config: ModelConfig,
    pub bn_input: BatchNorm<T>,
    pub conv: Conv1d<T>,
    pub bn_conv: BatchNorm<T>,
    pub hidden: Dense<T>,
    pub bn_hidden: BatchNorm<T>,
    pub output: Dense<T>,
}

/// Gradients of the trainable tensors in [`TRAINABLE_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(pub Vec<Vec<T>>);

pub(crate) struct ForwardCache<T> {
    batch: usize,
    bn_input: BnCache<T>,
    a1: Vec<T>,
    bn_conv: BnCache<T>,
    a2: Vec<T>,
    z: Vec<T>,
    bn_hidden: BnCache<T>,
    a3: Vec<T>,
    pub(crate) probs: Vec<T>,
}

fn glorot<T: Scalar, R: Rng>(rng: &mut R, len: usize, fan_in: usize, fan_out: usize) -> Vec<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| T::of(rng.random_range(-limit..limit))).collect()
}

/// Builds a freshly initialized network.
///
/// Kernels are Glorot-uniform (conv fan-in K, fan-out K*F), biases zero,
/// normalization scales one and shifts zero, running mean 0, variance 1.
pub fn build_model<T: Scalar>(config: ModelConfig, seed: u64) -> Result<ModelState<T>, NeuralError> {
    config.validate()?;
    let ModelConfig {
        input_len: n,
        conv_filters: f,
        conv_kernel: k,
        hidden_units: h,
        classes: m,
    } = config;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let conv_kernel = glorot(&mut rng, k * f, k, k * f);
    let hidden_kernel = glorot(&mut rng, n * f * h, n * f, h);
    let output_kernel = glorot(&mut rng, h * m, h, m);
    Ok(ModelState {
        config,
        bn_input: BatchNorm::new(1),
        conv: Conv1d {
            kernel: conv_kernel,
            bias: vec![T::zero(); f],
            kernel_len: k,
            filters: f,
        },
        bn_conv: BatchNorm::new(f),
        hidden: Dense {
            weight: hidden_kernel,
            bias: vec![T::zero(); h],
            inputs: n * f,
            outputs: h,
        },
        bn_hidden: BatchNorm::new(h),
        output: Dense {
            weight: output_kernel,
            bias: vec![T::zero(); m],
            inputs: h,
            outputs: m,
        },
    })
}

fn softmax_rows<T: Scalar>(logits: &mut [T], width: usize) {
    for row in logits.chunks_exact_mut(width) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Mean categorical cross-entropy, probabilities floored at 1e-12.
pub fn cross_entropy<T: Scalar>(probs: &[T], labels: &[usize], classes: usize) -> f64 {
    let total: f64 = probs
        .chunks_exact(classes)
        .zip(labels)
        .map(|(row, &y)| {
            let p = row[y].f64();
            // max() would swallow a NaN.
            if p.is_nan() { f64::NAN } else { -p.max(PROB_FLOOR).ln() }
        })
        .sum();
    total / labels.len() as f64
}

impl<T: Scalar> ModelState<T> {
    pub fn config(&self) -> ModelConfig {
        self.config
    }

    pub fn parameter_counts(&self) -> ParameterCounts {
        let trainable: usize = self.trainable().iter().map(|(_, t)| t.len()).sum();
        let non_trainable: usize = [&self.bn_input, &self.bn_conv, &self.bn_hidden]
            .iter()
            .map(|bn| bn.moving_mean.len() + bn.moving_variance.len())
            .sum();
        ParameterCounts {
            total: trainable + non_trainable,
            trainable,
            non_trainable,
        }
    }

    pub fn trainable(&self) -> [(&'static str, &[T]); 12] {
        let n = TRAINABLE_NAMES;
        [
            (n[0], &self.bn_input.gamma),
            (n[1], &self.bn_input.beta),
            (n[2], &self.conv.kernel),
            (n[3], &self.conv.bias),
            (n[4], &self.bn_conv.gamma),
            (n[5], &self.bn_conv.beta),
            (n[6], &self.hidden.weight),
            (n[7], &self.hidden.bias),
            (n[8], &self.bn_hidden.gamma),
            (n[9], &self.bn_hidden.beta),
            (n[10], &self.output.weight),
            (n[11], &self.output.bias),
        ]
    }

    pub fn trainable_mut(&mut self) -> [&mut Vec<T>; 12] {
        [
            &mut self.bn_input.gamma,
            &mut self.bn_input.beta,
            &mut self.conv.kernel,
            &mut self.conv.bias,
            &mut self.bn_conv.gamma,
            &mut self.bn_conv.beta,
            &mut self.hidden.weight,
            &mut self.hidden.bias,
            &mut self.bn_hidden.gamma,
            &mut self.bn_hidden.beta,
            &mut self.output.weight,
            &mut self.output.bias,
        ]
    }

    fn check_batch(&self, inputs: &[T]) -> Result<usize, NeuralError> {
        let n = self.config.input_len;
        if inputs.is_empty() || !inputs.len().is_multiple_of(n) {
            return Err(NeuralError::ShapeMismatch {
                expected: n,
                got: inputs.len(),
            });
        }
        Ok(inputs.len() / n)
    }

    /// Runs the network on a `batch x input_len` buffer and returns
    /// `batch x classes` probabilities.
    pub fn forward(&mut self, inputs: &[T], mode: Mode) -> Result<Vec<T>, NeuralError> {
        match mode {
            Mode::Infer => self.infer(inputs),
            Mode::Train => {
                let cache = self.forward_train(inputs)?;
                self.commit_running_stats(&cache);
                Ok(cache.probs)
            }
        }
    }

    /// Inference-mode forward pass. Never mutates the state.
    pub fn infer(&self, inputs: &[T]) -> Result<Vec<T>, NeuralError> {
        self.check_batch(inputs)?;
        let n = self.config.input_len;
        let a1 = self.bn_input.forward_infer(inputs);
        let c = self.conv.forward(&a1, n);
        let a2 = self.bn_conv.forward_infer(&c);
        let mut z = self.hidden.forward(&a2);
        z.iter_mut().for_each(|v| *v = v.max(T::zero()));
        let a3 = self.bn_hidden.forward_infer(&z);
        let mut probs = self.output.forward(&a3);
        softmax_rows(&mut probs, self.config.classes);
        Ok(probs)
    }

    /// Train-mode forward pass with everything backward needs. Running
    /// statistics are left alone; see [`ModelState::commit_running_stats`].
    pub(crate) fn forward_train(&self, inputs: &[T]) -> Result<ForwardCache<T>, NeuralError> {
        let batch = self.check_batch(inputs)?;
        let n = self.config.input_len;
        let (a1, bn_input) = self.bn_input.forward_train(inputs);
        let c = self.conv.forward(&a1, n);
        let (a2, bn_conv) = self.bn_conv.forward_train(&c);
        drop(c);
        let z = self.hidden.forward(&a2);
        let r: Vec<T> = z.iter().map(|v| v.max(T::zero())).collect();
        let (a3, bn_hidden) = self.bn_hidden.forward_train(&r);
        let mut probs = self.output.forward(&a3);
        softmax_rows(&mut probs, self.config.classes);
        Ok(ForwardCache {
            batch,
            bn_input,
            a1,
            bn_conv,
            a2,
            z,
            bn_hidden,
            a3,
            probs,
        })
    }

    pub(crate) fn commit_running_stats(&mut self, cache: &ForwardCache<T>) {
        self.bn_input.update_running(&cache.bn_input);
        self.bn_conv.update_running(&cache.bn_conv);
        self.bn_hidden.update_running(&cache.bn_hidden);
    }

    /// Exact gradients of the mean cross-entropy through a train-mode pass.
    pub(crate) fn backward(&self, cache: &ForwardCache<T>, labels: &[usize]) -> Gradients<T> {
        let m = self.config.classes;
        let n = self.config.input_len;
        let mut grads: Vec<Vec<T>> = self.trainable().iter().map(|(_, t)| vec![T::zero(); t.len()]).collect();
        let [g_bn1_g, g_bn1_b, g_conv_w, g_conv_b, g_bn2_g, g_bn2_b, g_h_w, g_h_b, g_bn3_g, g_bn3_b, g_o_w, g_o_b] =
            grads.as_mut_slice()
        else {
            unreachable!("twelve trainable tensors")
        };

        // Softmax and cross-entropy fused: d logits = (p - y) / B.
        let inv_b = T::of(1.0 / cache.batch as f64);
        let mut dlogits = cache.probs.clone();
        for (row, &y) in dlogits.chunks_exact_mut(m).zip(labels) {
            row[y] = row[y] - T::one();
            row.iter_mut().for_each(|v| *v = *v * inv_b);
        }
        let da3 = self.output.backward(&cache.a3, &dlogits, g_o_w, g_o_b);
        let mut dz = self.bn_hidden.backward(&da3, &cache.bn_hidden, g_bn3_g, g_bn3_b);
        for (d, &z) in dz.iter_mut().zip(&cache.z) {
            if z <= T::zero() {
                *d = T::zero();
            }
        }
        let da2 = self.hidden.backward(&cache.a2, &dz, g_h_w, g_h_b);
        let dc = self.bn_conv.backward(&da2, &cache.bn_conv, g_bn2_g, g_bn2_b);
        let da1 = self.conv.backward(&cache.a1, &dc, n, g_conv_w, g_conv_b);
        self.bn_input.backward(&da1, &cache.bn_input, g_bn1_g, g_bn1_b);
        Gradients(grads)
    }

    /// Most probable class of one window and the full probability vector.
    /// Ties go to the lowest index.
    pub fn predict(&self, window: &[T]) -> Result<(usize, Vec<T>), NeuralError> {
        if window.len() != self.config.input_len {
            return Err(NeuralError::ShapeMismatch {
                expected: self.config.input_len,
                got: window.len(),
            });
        }
        let probs = self.infer(window)?;
        Ok((argmax_lowest(&probs), probs))
    }

    /// Predicted class per row of a `batch x input_len` buffer.
    pub fn predict_batch(&self, inputs: &[T]) -> Result<Vec<usize>, NeuralError> {
        let probs = self.infer(inputs)?;
        Ok(probs.chunks_exact(self.config.classes).map(argmax_lowest).collect())
    }
}

impl ModelConfig {
    /// Parameter totals computed layer by layer without allocating a model.
    pub fn parameter_counts(&self) -> ParameterCounts {
        let ModelConfig {
            input_len: n,
            conv_filters: f,
            conv_kernel: k,
            hidden_units: h,
            classes: m,
        } = *self;
        let trainable = 2 + (k * f + f) + 2 * f + (n * f * h + h) + 2 * h + (h * m + m);
        let non_trainable = 2 + 2 * f + 2 * h;
        ParameterCounts {
            total: trainable + non_trainable,
            trainable,
            non_trainable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn random_batch(rows: usize, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..rows * n).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect()
    }

    #[test]
    fn reduced_parameter_count() {
        let cfg = ModelConfig::reduced_m8();
        let state = build_model::<f32>(cfg, 1).unwrap();
        let c = state.parameter_counts();
        assert_eq!(c.total, 525_388);
        assert_eq!(c.non_trainable, 130);
        assert_eq!(c, cfg.parameter_counts());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = ModelConfig::reduced_m8();
        cfg.conv_filters = 0;
        assert!(matches!(build_model::<f32>(cfg, 0), Err(NeuralError::InvalidConfig(_))));
    }

    #[test]
    fn build_is_seed_deterministic() {
        let cfg = ModelConfig::grad_check_small();
        let a = build_model::<f32>(cfg, 4).unwrap();
        let b = build_model::<f32>(cfg, 4).unwrap();
        let c = build_model::<f32>(cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let cfg = ModelConfig::grad_check_small();
        let mut state = build_model::<f64>(cfg, 2).unwrap();
        let x = random_batch(5, cfg.input_len, 9);
        for mode in [Mode::Train, Mode::Infer] {
            let p = state.forward(&x, mode).unwrap();
            for row in p.chunks_exact(cfg.classes) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }

    #[test]
    fn fresh_model_is_near_uniform() {
        // Unit-scale inputs only: before training the running statistics
        // do not rescale the input.
        for (cfg, seeds) in [(ModelConfig::reduced_m8(), 0..3), (ModelConfig::jt65a_full(), 0..1)] {
            for seed in seeds {
                let state = build_model::<f32>(cfg, seed).unwrap();
                let mut rng = ChaCha20Rng::seed_from_u64(seed + 10);
                let x: Vec<f32> = (0..6 * cfg.input_len).map(|_| rng.random_range(-1.0..1.0)).collect();
                let p = state.infer(&x).unwrap();
                let u = 1.0 / cfg.classes as f32;
                assert!(p.iter().all(|&v| v > u / 3.0 && v < u * 3.0), "{p:?}");
            }
        }
    }

    #[test]
    fn infer_is_pure() {
        let cfg = ModelConfig::grad_check_small();
        let mut state = build_model::<f64>(cfg, 2).unwrap();
        let x = random_batch(3, cfg.input_len, 4);
        state.forward(&x, Mode::Train).unwrap();
        let before = state.clone();
        let a = state.forward(&x, Mode::Infer).unwrap();
        let b = state.forward(&x, Mode::Infer).unwrap();
        assert_eq!(a, b);
        assert_eq!(state, before);
    }

    #[test]
    fn train_mode_updates_running_stats() {
        let cfg = ModelConfig::grad_check_small();
        let mut state = build_model::<f64>(cfg, 2).unwrap();
        let x = random_batch(3, cfg.input_len, 4);
        state.forward(&x, Mode::Train).unwrap();
        assert_ne!(state.bn_input.moving_variance[0], 1.0);
    }

    #[test]
    fn shape_mismatch() {
        let cfg = ModelConfig::grad_check_small();
        let state = build_model::<f64>(cfg, 2).unwrap();
        assert!(matches!(state.infer(&[0.0; 65]), Err(NeuralError::ShapeMismatch { .. })));
        assert!(matches!(state.predict(&[0.0; 128]), Err(NeuralError::ShapeMismatch { .. })));
    }

    #[test]
    fn cross_entropy_cases() {
        let u = vec![1.0 / 64.0f64; 64];
        assert!((cross_entropy(&u, &[5], 64) - 64f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0f64, 1.0], &[1], 2), 0.0);
        let p = [0.5f64, 0.5, 0.9, 0.1];
        let a = -(0.5f64).ln();
        let b = -(0.1f64).ln();
        assert!((cross_entropy(&p, &[0, 1], 2) - (a + b) / 2.0).abs() < 1e-12);
        assert!(cross_entropy(&[1.0f64, 0.0], &[1], 2).is_finite());
    }

    #[test]
    fn untrained_predict_is_valid() {
        let cfg = ModelConfig::reduced_m8();
        let state = build_model::<f32>(cfg, 8).unwrap();
        let x = vec![0.25f32; cfg.input_len];
        let (cls, p) = state.predict(&x).unwrap();
        assert!(cls < cfg.classes);
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
