//! Spectral analysis and the classical non-coherent MFSK detector.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use thiserror::Error;

use crate::signal::{ModemProfile, ToneSymbol, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("lag {max_lag} out of range for {len} samples")]
    LagOutOfRange { max_lag: usize, len: usize },
    #[error("waveform has zero energy")]
    ZeroEnergy,
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// One-sided energy spectrum of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bin_energies: Vec<f64>,
    pub bin_width_hz: f64,
}

impl Spectrum {
    pub fn frequency_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz
    }

    /// Index of the most energetic bin, lowest index on ties.
    pub fn peak_bin(&self) -> usize {
        argmax_lowest(&self.bin_energies)
    }

    pub fn total_energy(&self) -> f64 {
        self.bin_energies.iter().sum()
    }

    /// Mean per-bin noise energy estimated as `median / ln 2`, which is
    /// unbiased for exponentially distributed bins and ignores a few strong
    /// tones.
    pub fn noise_floor(&self) -> f64 {
        let mut sorted = self.bin_energies.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        median / std::f64::consts::LN_2
    }

    /// Energy of `bin` relative to [`Spectrum::noise_floor`].
    pub fn floor_ratio(&self, bin: usize) -> f64 {
        self.bin_energies[bin] / self.noise_floor()
    }
}

/// Energy per DFT bin, scaled so the bins sum to the time-domain energy.
///
/// Interior bins carry both the positive and negative frequency halves
/// (`2|X_k|^2 / N`); DC and Nyquist carry `|X_k|^2 / N`. No window function
/// is applied and the input length must be a power of two.
pub fn energy_spectrum(waveform: &Waveform) -> Result<Spectrum, DspError> {
    let n = waveform.len();
    if !n.is_power_of_two() {
        return Err(DspError::NotPowerOfTwo(n));
    }
    let mut buf: Vec<Complex<f64>> = waveform.samples().iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let scale = 1.0 / n as f64;
    let bin_energies = (0..=half)
        .map(|k| {
            let e = buf[k].norm_sqr() * scale;
            if k == 0 || k == half {
                e
            } else {
                2.0 * e
            }
        })
        .collect();
    Ok(Spectrum {
        bin_energies,
        bin_width_hz: waveform.sample_rate_hz() / n as f64,
    })
}

/// Biased sample autocorrelation for lags `0..=max_lag`, normalized to 1 at lag 0.
pub fn autocorrelation(waveform: &Waveform, max_lag: usize) -> Result<Vec<f64>, DspError> {
    let x = waveform.samples();
    if max_lag >= x.len() {
        return Err(DspError::LagOutOfRange {
            max_lag,
            len: x.len(),
        });
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(DspError::ZeroEnergy);
    }
    Ok((0..=max_lag)
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / energy)
        .collect())
}

/// Non-coherent detector: picks the data tone with the largest DFT
/// magnitude. Ties go to the lowest tone index, so silence decodes as 0.
pub struct ClassicalDemodulator {
    profile: ModemProfile,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    energies: Vec<f64>,
}

impl ClassicalDemodulator {
    pub fn new(profile: &ModemProfile) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(profile.symbol_len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            profile: profile.clone(),
            buf: vec![Complex::default(); profile.symbol_len],
            scratch,
            energies: vec![0.0; profile.tone_count],
            fft,
        }
    }

    pub fn profile(&self) -> &ModemProfile {
        &self.profile
    }

    /// Squared magnitudes of the M data-tone bins from the last call to
    /// [`ClassicalDemodulator::demodulate`].
    pub fn tone_energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn demodulate<S: Copy + Into<f64>>(&mut self, samples: &[S]) -> Result<ToneSymbol, DspError> {
        if samples.len() != self.profile.symbol_len {
            return Err(DspError::LengthMismatch {
                expected: self.profile.symbol_len,
                got: samples.len(),
            });
        }
        for (c, &s) in self.buf.iter_mut().zip(samples) {
            *c = Complex::new(s.into(), 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let first = self.profile.sync_bin + self.profile.tone_offset;
        for (e, c) in self.energies.iter_mut().zip(&self.buf[first..]) {
            *e = c.norm_sqr();
        }
        Ok(ToneSymbol::from_raw(argmax_lowest(&self.energies) as u16))
    }
}

/// One-shot form of [`ClassicalDemodulator::demodulate`].
pub fn classical_demod(profile: &ModemProfile, waveform: &Waveform) -> Result<ToneSymbol, DspError> {
    ClassicalDemodulator::new(profile).demodulate(waveform.samples())
}

pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
