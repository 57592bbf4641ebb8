//! Finite-difference verification of the backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::model::{build_model, cross_entropy, ModelState, TRAINABLE_NAMES};
use super::{ModelConfig, NeuralError};

/// Gradients smaller than this are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub batch: usize,
    /// Parameters sampled per trainable tensor (capped at its size).
    pub samples_per_tensor: usize,
    /// Shift the hidden bias so every ReLU input is positive, making the
    /// network a smooth function of its parameters.
    pub force_linear: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            batch: 4,
            samples_per_tensor: 8,
            force_linear: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Worst error per trainable tensor, [`TRAINABLE_NAMES`] order.
    pub per_tensor: Vec<(&'static str, f64)>,
    pub checked: usize,
}

fn loss_at(state: &ModelState<f64>, x: &[f64], labels: &[usize]) -> f64 {
    let cache = state.forward_train(x).expect("shapes checked");
    cross_entropy(&cache.probs, labels, state.config().classes)
}

/// Compares analytic gradients of a train-mode pass, batch statistics
/// included, against central differences with `h = 1e-5 max(1, |theta|)`.
pub fn grad_check(
    config: ModelConfig,
    seed: u64,
    options: GradCheckOptions,
) -> Result<GradCheckReport, NeuralError> {
    let mut state = build_model::<f64>(config, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let x: Vec<f64> = (0..options.batch * config.input_len)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let labels: Vec<usize> = (0..options.batch).map(|_| rng.random_range(0..config.classes)).collect();
    // Non-default scales and shifts so no gradient vanishes by symmetry.
    for bn in [&mut state.bn_input, &mut state.bn_conv, &mut state.bn_hidden] {
        for (g, b) in bn.gamma.iter_mut().zip(bn.beta.iter_mut()) {
            *g = rng.random_range(0.5..1.5);
            *b = rng.random_range(-0.5..0.5);
        }
    }
    for b in state.output.bias.iter_mut() {
        *b = rng.random_range(-0.2..0.2);
    }
    if options.force_linear {
        let z = state.hidden.forward(&state.bn_conv.forward_train(&state.conv.forward(
            &state.bn_input.forward_train(&x).0,
            config.input_len,
        )).0);
        let min = z.iter().copied().fold(f64::INFINITY, f64::min);
        state.hidden.bias.iter_mut().for_each(|b| *b += 1.0 - min.min(0.0));
    }

    let cache = state.forward_train(&x)?;
    let analytic = state.backward(&cache, &labels);

    let mut per_tensor = Vec::with_capacity(TRAINABLE_NAMES.len());
    let mut checked = 0;
    for (t, name) in TRAINABLE_NAMES.iter().enumerate() {
        let len = analytic.0[t].len();
        let picks: Vec<usize> = if len <= options.samples_per_tensor {
            (0..len).collect()
        } else {
            (0..options.samples_per_tensor).map(|_| rng.random_range(0..len)).collect()
        };
        let mut worst = 0f64;
        for i in picks {
            let original = state.trainable_mut()[t][i];
            let h = 1e-5 * original.abs().max(1.0);
            state.trainable_mut()[t][i] = original + h;
            let up = loss_at(&state, &x, &labels);
            state.trainable_mut()[t][i] = original - h;
            let down = loss_at(&state, &x, &labels);
            state.trainable_mut()[t][i] = original;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.0[t][i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(ABS_FLOOR);
            worst = worst.max(err);
            checked += 1;
        }
        per_tensor.push((*name, worst));
    }
    let max_relative_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_relative_error,
        per_tensor,
        checked,
    })
}
