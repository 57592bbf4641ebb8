//! Layer kernels. Activations are flat row-major buffers of `rows x width`.

use super::Scalar;

/// Added to the variance before the square root.
pub const BN_EPSILON: f64 = 1e-3;
/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.99;

/// Batch normalization over the last axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub moving_mean: Vec<T>,
    pub moving_variance: Vec<T>,
}

/// What the backward pass needs from a train-mode normalization.
#[derive(Debug, Clone)]
pub(crate) struct BnCache<T> {
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            moving_mean: vec![T::zero(); channels],
            moving_variance: vec![T::one(); channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Normalizes with the batch's own (biased) statistics.
    pub(crate) fn forward_train(&self, x: &[T]) -> (Vec<T>, BnCache<T>) {
        let c = self.channels();
        let rows = x.len() / c;
        let mut mean = vec![0f64; c];
        for row in x.chunks_exact(c) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v.f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows as f64);
        let mut var = vec![0f64; c];
        for row in x.chunks_exact(c) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v.f64() - m;
                *s += d * d;
            }
        }
        var.iter_mut().for_each(|s| *s /= rows as f64);

        let inv_std: Vec<T> = var.iter().map(|v| T::of(1.0 / (v + BN_EPSILON).sqrt())).collect();
        let mean_t: Vec<T> = mean.iter().map(|&m| T::of(m)).collect();
        let mut xhat = vec![T::zero(); x.len()];
        let mut y = vec![T::zero(); x.len()];
        for ((xr, hr), yr) in x.chunks_exact(c).zip(xhat.chunks_exact_mut(c)).zip(y.chunks_exact_mut(c)) {
            for j in 0..c {
                let h = (xr[j] - mean_t[j]) * inv_std[j];
                hr[j] = h;
                yr[j] = self.gamma[j] * h + self.beta[j];
            }
        }
        (
            y,
            BnCache {
                xhat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        )
    }

    /// Folds one batch's statistics into the running estimates.
    pub(crate) fn update_running(&mut self, cache: &BnCache<T>) {
        let mom = BN_MOMENTUM;
        for j in 0..self.channels() {
            self.moving_mean[j] = T::of(self.moving_mean[j].f64() * mom + cache.batch_mean[j] * (1.0 - mom));
            self.moving_variance[j] =
                T::of(self.moving_variance[j].f64() * mom + cache.batch_var[j] * (1.0 - mom));
        }
    }

    /// Affine normalization with the running statistics.
    pub(crate) fn forward_infer(&self, x: &[T]) -> Vec<T> {
        let c = self.channels();
        let eps = T::of(BN_EPSILON);
        let scale: Vec<T> = (0..c)
            .map(|j| self.gamma[j] / (self.moving_variance[j] + eps).sqrt())
            .collect();
        let shift: Vec<T> = (0..c).map(|j| self.beta[j] - self.moving_mean[j] * scale[j]).collect();
        let mut y = vec![T::zero(); x.len()];
        for (xr, yr) in x.chunks_exact(c).zip(y.chunks_exact_mut(c)) {
            for j in 0..c {
                yr[j] = xr[j] * scale[j] + shift[j];
            }
        }
        y
    }

    /// Returns dx and accumulates dgamma, dbeta.
    pub(crate) fn backward(
        &self,
        dy: &[T],
        cache: &BnCache<T>,
        dgamma: &mut [T],
        dbeta: &mut [T],
    ) -> Vec<T> {
        let c = self.channels();
        let rows = dy.len() / c;
        let mut sum_dy = vec![0f64; c];
        let mut sum_dy_xhat = vec![0f64; c];
        for (dr, hr) in dy.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for j in 0..c {
                sum_dy[j] += dr[j].f64();
                sum_dy_xhat[j] += (dr[j] * hr[j]).f64();
            }
        }
        for j in 0..c {
            dgamma[j] += T::of(sum_dy_xhat[j]);
            dbeta[j] += T::of(sum_dy[j]);
        }
        // dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy * xhat))
        let coef: Vec<T> = (0..c).map(|j| self.gamma[j] * cache.inv_std[j]).collect();
        let mean_dy: Vec<T> = sum_dy.iter().map(|s| T::of(s / rows as f64)).collect();
        let mean_dyx: Vec<T> = sum_dy_xhat.iter().map(|s| T::of(s / rows as f64)).collect();
        let mut dx = vec![T::zero(); dy.len()];
        for ((dr, hr), xr) in dy.chunks_exact(c).zip(cache.xhat.chunks_exact(c)).zip(dx.chunks_exact_mut(c)) {
            for j in 0..c {
                xr[j] = coef[j] * (dr[j] - mean_dy[j] - hr[j] * mean_dyx[j]);
            }
        }
        dx
    }
}

/// Single-input-channel 1-D convolution, stride 1, zero "same" padding.
///
/// `kernel` is laid out `[K][F]`. For even K the extra pad goes on the right,
/// so output position t reads inputs `t - (K-1)/2 ..= t + K/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
    pub kernel_len: usize,
    pub filters: usize,
}

impl<T: Scalar> Conv1d<T> {
    pub fn pad_left(&self) -> usize {
        (self.kernel_len - 1) / 2
    }

    /// `x` is `batch x len`, output `batch x len x filters`.
    pub(crate) fn forward(&self, x: &[T], len: usize) -> Vec<T> {
        let f = self.filters;
        let pl = self.pad_left() as isize;
        let mut out = vec![T::zero(); x.len() * f];
        for (xb, ob) in x.chunks_exact(len).zip(out.chunks_exact_mut(len * f)) {
            for (t, orow) in ob.chunks_exact_mut(f).enumerate() {
                orow.copy_from_slice(&self.bias);
                for k in 0..self.kernel_len {
                    let s = t as isize + k as isize - pl;
                    if s < 0 || s >= len as isize {
                        continue;
                    }
                    let v = xb[s as usize];
                    let w = &self.kernel[k * f..(k + 1) * f];
                    for (o, &wk) in orow.iter_mut().zip(w) {
                        *o += v * wk;
                    }
                }
            }
        }
        out
    }

    /// Returns dx and accumulates dkernel, dbias.
    pub(crate) fn backward(
        &self,
        x: &[T],
        dout: &[T],
        len: usize,
        dkernel: &mut [T],
        dbias: &mut [T],
    ) -> Vec<T> {
        let f = self.filters;
        let pl = self.pad_left() as isize;
        let mut dx = vec![T::zero(); x.len()];
        for ((xb, db), dxb) in x
            .chunks_exact(len)
            .zip(dout.chunks_exact(len * f))
            .zip(dx.chunks_exact_mut(len))
        {
            for (t, drow) in db.chunks_exact(f).enumerate() {
                for (b, &d) in dbias.iter_mut().zip(drow) {
                    *b += d;
                }
                for k in 0..self.kernel_len {
                    let s = t as isize + k as isize - pl;
                    if s < 0 || s >= len as isize {
                        continue;
                    }
                    let s = s as usize;
                    let w = &self.kernel[k * f..(k + 1) * f];
                    let dw = &mut dkernel[k * f..(k + 1) * f];
                    let v = xb[s];
                    let mut acc = T::zero();
                    for j in 0..f {
                        acc += drow[j] * w[j];
                        dw[j] += v * drow[j];
                    }
                    dxb[s] += acc;
                }
            }
        }
        dx
    }
}

/// Fully connected layer, `weight` laid out `[inputs][outputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub inputs: usize,
    pub outputs: usize,
}

impl<T: Scalar> Dense<T> {
    /// `x` is `rows x inputs`.
    pub(crate) fn forward(&self, x: &[T]) -> Vec<T> {
        let (n_in, n_out) = (self.inputs, self.outputs);
        let rows = x.len() / n_in;
        let mut out = Vec::with_capacity(rows * n_out);
        for _ in 0..rows {
            out.extend_from_slice(&self.bias);
        }
        // Input-major traversal streams the weight matrix once per batch.
        for (i, wrow) in self.weight.chunks_exact(n_out).enumerate() {
            for (r, orow) in out.chunks_exact_mut(n_out).enumerate() {
                let v = x[r * n_in + i];
                for (o, &w) in orow.iter_mut().zip(wrow) {
                    *o += v * w;
                }
            }
        }
        out
    }

    /// Returns dx and accumulates dweight, dbias.
    pub(crate) fn backward(&self, x: &[T], dout: &[T], dweight: &mut [T], dbias: &mut [T]) -> Vec<T> {
        let (n_in, n_out) = (self.inputs, self.outputs);
        let rows = x.len() / n_in;
        let mut dx = vec![T::zero(); x.len()];
        for drow in dout.chunks_exact(n_out) {
            for (b, &d) in dbias.iter_mut().zip(drow) {
                *b += d;
            }
        }
        for (i, (wrow, dwrow)) in self
            .weight
            .chunks_exact(n_out)
            .zip(dweight.chunks_exact_mut(n_out))
            .enumerate()
        {
            for r in 0..rows {
                let drow = &dout[r * n_out..(r + 1) * n_out];
                let v = x[r * n_in + i];
                let mut acc = T::zero();
                for j in 0..n_out {
                    acc += drow[j] * wrow[j];
                    dwrow[j] += v * drow[j];
                }
                dx[r * n_in + i] = acc;
            }
        }
        dx
    }
}
