//! Protocol constants, tone plan, symbol and frame synthesis, AWGN channel.
//!
//! All tones are placed on the DFT bin grid of one symbol window, so every
//! data tone and the sync tone complete an integer number of cycles per
//! symbol and are mutually orthogonal over the window.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Number of symbol intervals in one transmission.
pub const FRAME_INTERVALS: usize = 126;

/// Value returned by [`measure_snr`] when the residual is exactly zero.
pub const SNR_SATURATION_DB: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid modem profile: {0}")]
    InvalidProfile(String),
    #[error("tone index {index} out of range for {tone_count}-tone profile")]
    ToneOutOfRange { index: usize, tone_count: usize },
    #[error("amplitude must be finite and non-negative, got {0}")]
    InvalidAmplitude(f64),
    #[error("SNR must be finite, got {0}")]
    NonFiniteSnr(f64),
    #[error("waveform must be non-empty with finite samples")]
    InvalidWaveform,
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: f64, right: f64 },
    #[error("reference waveform has zero power")]
    ZeroPowerReference,
    #[error("signal power must be finite and non-negative, got {0}")]
    InvalidSignalPower(f64),
    #[error("bit count {len} is not a multiple of {bits_per_symbol}")]
    BitCount { len: usize, bits_per_symbol: usize },
    #[error("frame pattern has {got} intervals, expected {expected}")]
    FrameLength { expected: usize, got: usize },
}

/// Protocol constants of one MFSK configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModemProfile {
    pub sample_rate_hz: f64,
    /// Samples per symbol (N).
    pub symbol_len: usize,
    /// Number of data tones (M).
    pub tone_count: usize,
    /// DFT bin of the sync tone.
    pub sync_bin: usize,
    /// Bin offset of data tone 0 above the sync bin.
    pub tone_offset: usize,
    /// Bandwidth the SNR is referenced to.
    pub ref_bandwidth_hz: f64,
}

impl ModemProfile {
    /// Builds and validates a profile.
    pub fn new(
        sample_rate_hz: f64,
        symbol_len: usize,
        tone_count: usize,
        sync_bin: usize,
        tone_offset: usize,
        ref_bandwidth_hz: f64,
    ) -> Result<Self, SignalError> {
        let profile = Self {
            sample_rate_hz,
            symbol_len,
            tone_count,
            sync_bin,
            tone_offset,
            ref_bandwidth_hz,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// JT65A: 11025 Hz, 4096-sample symbols, 64 tones, sync at bin 472.
    pub fn jt65a_full() -> Self {
        Self {
            sample_rate_hz: 11025.0,
            symbol_len: 4096,
            tone_count: 64,
            sync_bin: 472,
            tone_offset: 2,
            ref_bandwidth_hz: 2500.0,
        }
    }

    /// Desk-scale profile: 512-sample symbols and 8 tones on the same
    /// sample rate, sync tone at the bin closest to 1270.5 Hz.
    pub fn reduced_m8() -> Self {
        Self {
            sample_rate_hz: 11025.0,
            symbol_len: 512,
            tone_count: 8,
            sync_bin: 59,
            tone_offset: 2,
            ref_bandwidth_hz: 2500.0,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = |msg: String| Err(SignalError::InvalidProfile(msg));
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate {} Hz", self.sample_rate_hz));
        }
        if !(self.ref_bandwidth_hz.is_finite() && self.ref_bandwidth_hz > 0.0) {
            return bad(format!("reference bandwidth {} Hz", self.ref_bandwidth_hz));
        }
        if !self.symbol_len.is_power_of_two() || self.symbol_len < 2 {
            return bad(format!("symbol length {} is not a power of two", self.symbol_len));
        }
        if !self.tone_count.is_power_of_two() || self.tone_count < 2 {
            return bad(format!("tone count {} is not a power of two >= 2", self.tone_count));
        }
        if self.tone_count > u16::MAX as usize {
            return bad(format!("tone count {} too large", self.tone_count));
        }
        let top = self.sync_bin + self.tone_offset + self.tone_count - 1;
        if top >= self.symbol_len / 2 {
            return bad(format!(
                "highest tone bin {top} is not below Nyquist bin {}",
                self.symbol_len / 2
            ));
        }
        if self.tone_offset == 0 {
            return bad("tone offset 0 puts data tone 0 on the sync bin".into());
        }
        Ok(())
    }

    /// k = log2(M).
    pub fn bits_per_symbol(&self) -> usize {
        self.tone_count.trailing_zeros() as usize
    }

    /// Tone spacing fs/N.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.symbol_len as f64
    }

    /// Symbol duration T = N/fs in seconds.
    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_len as f64 / self.sample_rate_hz
    }

    /// DFT bin carrying the given interval's tone.
    pub fn bin_of(&self, interval: Interval) -> usize {
        match interval {
            Interval::Sync => self.sync_bin,
            Interval::Data(tone) => self.sync_bin + self.tone_offset + tone.index(),
        }
    }

    pub fn tone(&self, index: usize) -> Result<ToneSymbol, SignalError> {
        ToneSymbol::new(index, self)
    }
}

/// One information symbol, an index into the profile's tone alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToneSymbol(u16);

impl ToneSymbol {
    pub fn new(index: usize, profile: &ModemProfile) -> Result<Self, SignalError> {
        if index >= profile.tone_count {
            return Err(SignalError::ToneOutOfRange {
                index,
                tone_count: profile.tone_count,
            });
        }
        Ok(Self(index as u16))
    }

    /// Wraps an index without profile validation.
    pub(crate) fn from_raw(index: u16) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Content of one symbol interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    Sync,
    Data(ToneSymbol),
}

/// A real-valued sample sequence tagged with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate_hz));
        }
        if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
            return Err(SignalError::InvalidWaveform);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean_power(&self) -> f64 {
        mean_square(&self.samples)
    }
}

/// Signal power over noise power within the reference bandwidth, in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrDb(f64);

impl SnrDb {
    pub fn new(value: f64) -> Result<Self, SignalError> {
        if !value.is_finite() {
            return Err(SignalError::NonFiniteSnr(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

/// Frequency of a sync or data tone. Always an integer multiple of fs/N.
pub fn tone_frequency(profile: &ModemProfile, interval: Interval) -> Result<f64, SignalError> {
    if let Interval::Data(tone) = interval {
        if tone.index() >= profile.tone_count {
            return Err(SignalError::ToneOutOfRange {
                index: tone.index(),
                tone_count: profile.tone_count,
            });
        }
    }
    Ok(profile.bin_of(interval) as f64 * profile.bin_width_hz())
}

/// One symbol window of `amplitude * sin(2 pi f n / fs + phase)`.
pub fn synthesize_symbol(
    profile: &ModemProfile,
    interval: Interval,
    phase: f64,
    amplitude: f64,
) -> Result<Waveform, SignalError> {
    let mut samples = vec![0.0; profile.symbol_len];
    write_symbol(profile, interval, phase, amplitude, &mut samples)?;
    Waveform::new(samples, profile.sample_rate_hz)
}

/// Fills `out` (one symbol window) with a tone.
pub(crate) fn write_symbol(
    profile: &ModemProfile,
    interval: Interval,
    phase: f64,
    amplitude: f64,
    out: &mut [f64],
) -> Result<(), SignalError> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(SignalError::InvalidAmplitude(amplitude));
    }
    tone_frequency(profile, interval)?;
    let bin = profile.bin_of(interval);
    let n_len = profile.symbol_len;
    // The phase argument is reduced modulo N in integer arithmetic so that
    // the cycle count stays exact for long windows.
    for (n, x) in out.iter_mut().enumerate() {
        let cycles = (bin * n) % n_len;
        *x = amplitude * (TAU * cycles as f64 / n_len as f64 + phase).sin();
    }
    Ok(())
}

/// How phases are chosen for the intervals of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePolicy {
    Fixed(f64),
    /// Independent uniform phase in [0, 2 pi) per interval.
    RandomPerSymbol,
}

/// Concatenates the 126 symbol intervals of one transmission.
pub fn synthesize_frame<R: Rng + ?Sized>(
    profile: &ModemProfile,
    pattern: &[Interval],
    phases: PhasePolicy,
    amplitude: f64,
    rng: &mut R,
) -> Result<Waveform, SignalError> {
    if pattern.len() != FRAME_INTERVALS {
        return Err(SignalError::FrameLength {
            expected: FRAME_INTERVALS,
            got: pattern.len(),
        });
    }
    let n = profile.symbol_len;
    let mut samples = vec![0.0; n * FRAME_INTERVALS];
    for (interval, window) in pattern.iter().zip(samples.chunks_exact_mut(n)) {
        let phase = match phases {
            PhasePolicy::Fixed(p) => p,
            PhasePolicy::RandomPerSymbol => rng.random::<f64>() * TAU,
        };
        write_symbol(profile, *interval, phase, amplitude, window)?;
    }
    Waveform::new(samples, profile.sample_rate_hz)
}

/// Per-sample noise variance that puts `snr` of signal power `signal_power`
/// into the reference bandwidth, with the noise white over 0..fs/2.
pub fn noise_variance(profile: &ModemProfile, signal_power: f64, snr: SnrDb) -> f64 {
    signal_power * (profile.sample_rate_hz / 2.0) / (profile.ref_bandwidth_hz * snr.linear())
}

/// Adds white Gaussian noise at the requested reference-bandwidth SNR.
///
/// `signal_power` is the mean square of the clean signal; when `None` it is
/// measured from `waveform`. Normal variates come from `rand_distr`'s
/// Ziggurat sampler, so the output is a deterministic function of the rng
/// state.
pub fn apply_awgn<R: Rng + ?Sized>(
    profile: &ModemProfile,
    waveform: &Waveform,
    snr: SnrDb,
    signal_power: Option<f64>,
    rng: &mut R,
) -> Result<Waveform, SignalError> {
    let mut samples = waveform.samples.clone();
    add_awgn_in_place(profile, &mut samples, snr, signal_power, rng)?;
    Waveform::new(samples, waveform.sample_rate_hz)
}

pub(crate) fn add_awgn_in_place<R: Rng + ?Sized>(
    profile: &ModemProfile,
    samples: &mut [f64],
    snr: SnrDb,
    signal_power: Option<f64>,
    rng: &mut R,
) -> Result<(), SignalError> {
    if !snr.value().is_finite() {
        return Err(SignalError::NonFiniteSnr(snr.value()));
    }
    let power = signal_power.unwrap_or_else(|| mean_square(samples));
    if !(power.is_finite() && power >= 0.0) {
        return Err(SignalError::InvalidSignalPower(power));
    }
    let sigma = noise_variance(profile, power, snr).sqrt();
    for x in samples.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x += sigma * z;
    }
    Ok(())
}

/// Reference-bandwidth SNR of `noisy` against its clean reference.
///
/// A zero residual saturates at [`SNR_SATURATION_DB`].
pub fn measure_snr(
    profile: &ModemProfile,
    noisy: &Waveform,
    clean: &Waveform,
) -> Result<SnrDb, SignalError> {
    if noisy.len() != clean.len() {
        return Err(SignalError::LengthMismatch {
            left: noisy.len(),
            right: clean.len(),
        });
    }
    if noisy.sample_rate_hz != clean.sample_rate_hz {
        return Err(SignalError::SampleRateMismatch {
            left: noisy.sample_rate_hz,
            right: clean.sample_rate_hz,
        });
    }
    let power = clean.mean_power();
    if power == 0.0 {
        return Err(SignalError::ZeroPowerReference);
    }
    let residual: Vec<f64> = noisy
        .samples
        .iter()
        .zip(&clean.samples)
        .map(|(a, b)| a - b)
        .collect();
    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    let var = residual.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / residual.len() as f64;
    if var == 0.0 {
        return Ok(SnrDb(SNR_SATURATION_DB));
    }
    let in_band = var * profile.ref_bandwidth_hz / (noisy.sample_rate_hz / 2.0);
    let db = 10.0 * (power / in_band).log10();
    Ok(SnrDb(db.min(SNR_SATURATION_DB)))
}

/// Natural binary mapping, most significant bit first.
pub fn bits_to_symbols(bits: &[bool], profile: &ModemProfile) -> Result<Vec<ToneSymbol>, SignalError> {
    let k = profile.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(SignalError::BitCount {
            len: bits.len(),
            bits_per_symbol: k,
        });
    }
    Ok(bits
        .chunks_exact(k)
        .map(|chunk| {
            let value = chunk.iter().fold(0u16, |acc, &b| (acc << 1) | b as u16);
            ToneSymbol(value)
        })
        .collect())
}

pub fn symbols_to_bits(symbols: &[ToneSymbol], profile: &ModemProfile) -> Result<Vec<bool>, SignalError> {
    let k = profile.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for s in symbols {
        if s.index() >= profile.tone_count {
            return Err(SignalError::ToneOutOfRange {
                index: s.index(),
                tone_count: profile.tone_count,
            });
        }
        bits.extend((0..k).rev().map(|b| (s.0 >> b) & 1 == 1));
    }
    Ok(bits)
}

pub(crate) fn mean_square(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn full() -> ModemProfile {
        ModemProfile::jt65a_full()
    }

    #[test]
    fn profiles_validate() {
        full().validate().unwrap();
        ModemProfile::reduced_m8().validate().unwrap();
        assert_eq!(full().bits_per_symbol(), 6);
        assert!(ModemProfile::new(11025.0, 4000, 64, 472, 2, 2500.0).is_err());
        assert!(ModemProfile::new(11025.0, 4096, 60, 472, 2, 2500.0).is_err());
        assert!(ModemProfile::new(11025.0, 1024, 64, 472, 2, 2500.0).is_err());
    }

    #[test]
    fn sync_and_data_frequencies() {
        let p = full();
        let sync = tone_frequency(&p, Interval::Sync).unwrap();
        assert_relative_eq!(sync, 472.0 * 11025.0 / 4096.0, max_relative = 1e-15);
        assert!((sync - 1270.5).abs() < 0.05);
        let t0 = tone_frequency(&p, Interval::Data(p.tone(0).unwrap())).unwrap();
        assert_relative_eq!(t0, 474.0 * 11025.0 / 4096.0, max_relative = 1e-15);
        assert!((t0 - 1275.84).abs() < 0.005);

        let r = ModemProfile::reduced_m8();
        let r0 = tone_frequency(&r, Interval::Data(r.tone(0).unwrap())).unwrap();
        assert_relative_eq!(r0, 61.0 * 11025.0 / 512.0, max_relative = 1e-15);
    }

    #[test]
    fn tone_out_of_range() {
        let p = full();
        assert!(matches!(
            p.tone(64),
            Err(SignalError::ToneOutOfRange { index: 64, tone_count: 64 })
        ));
        let raw = Interval::Data(ToneSymbol::from_raw(70));
        assert!(tone_frequency(&p, raw).is_err());
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let p = full();
        let w = synthesize_symbol(&p, Interval::Data(p.tone(5).unwrap()), 1.0, 0.0).unwrap();
        assert!(w.samples().iter().all(|&x| x == 0.0));
        assert!(synthesize_symbol(&p, Interval::Sync, 0.0, -1.0).is_err());
    }

    #[test]
    fn second_sample_matches_formula() {
        let p = full();
        let w = synthesize_symbol(&p, Interval::Data(p.tone(0).unwrap()), 0.0, 1.0).unwrap();
        let f = 474.0 * 11025.0 / 4096.0;
        assert_relative_eq!(w.samples()[1], (TAU * f / 11025.0).sin(), max_relative = 1e-12);
        assert_eq!(w.samples()[0], 0.0);
    }

    #[test]
    fn unit_tone_has_half_power() {
        let p = full();
        for &(tone, phase) in &[(0usize, 0.0), (17, 1.3), (63, 5.9)] {
            let w = synthesize_symbol(&p, Interval::Data(p.tone(tone).unwrap()), phase, 1.0).unwrap();
            assert_relative_eq!(w.mean_power(), 0.5, max_relative = 1e-12);
        }
        let w = synthesize_symbol(&p, Interval::Sync, 0.4, 1.0).unwrap();
        assert_relative_eq!(w.mean_power(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn distinct_tones_are_orthogonal() {
        let p = ModemProfile::reduced_m8();
        let mut waves: Vec<Vec<f64>> = vec![synthesize_symbol(&p, Interval::Sync, 0.3, 1.0)
            .unwrap()
            .into_samples()];
        for i in 0..p.tone_count {
            waves.push(
                synthesize_symbol(&p, Interval::Data(p.tone(i).unwrap()), 0.3 + i as f64, 1.0)
                    .unwrap()
                    .into_samples(),
            );
        }
        for a in 0..waves.len() {
            for b in 0..waves.len() {
                if a == b {
                    continue;
                }
                let dot: f64 = waves[a].iter().zip(&waves[b]).map(|(x, y)| x * y).sum();
                let na: f64 = waves[a].iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = waves[b].iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((dot / (na * nb)).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn noise_variance_at_minus_25() {
        let var = noise_variance(&full(), 0.5, SnrDb::new(-25.0).unwrap());
        assert_relative_eq!(var, 0.5 * 5512.5 / (2500.0 * 10f64.powf(-2.5)), max_relative = 1e-12);
        assert!((var - 348.6).abs() < 0.1);
    }

    #[test]
    fn awgn_vanishes_at_high_snr() {
        let p = full();
        let clean = synthesize_symbol(&p, Interval::Sync, 0.0, 1.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let noisy = apply_awgn(&p, &clean, SnrDb::new(100.0).unwrap(), None, &mut rng).unwrap();
        let diff: f64 = noisy
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / clean.len() as f64;
        assert!(diff < 1e-8 * clean.mean_power());
    }

    #[test]
    fn awgn_is_seed_deterministic() {
        let p = full();
        let clean = synthesize_symbol(&p, Interval::Sync, 0.0, 1.0).unwrap();
        let snr = SnrDb::new(-10.0).unwrap();
        let a = apply_awgn(&p, &clean, snr, None, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let b = apply_awgn(&p, &clean, snr, None, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(SnrDb::new(f64::NAN).is_err());
    }

    #[test]
    fn measure_snr_edges() {
        let p = full();
        let clean = synthesize_symbol(&p, Interval::Sync, 0.0, 1.0).unwrap();
        assert_eq!(measure_snr(&p, &clean, &clean).unwrap().value(), SNR_SATURATION_DB);
        let zero = Waveform::new(vec![0.0; 4096], 11025.0).unwrap();
        assert_eq!(measure_snr(&p, &clean, &zero), Err(SignalError::ZeroPowerReference));
        let short = Waveform::new(vec![1.0; 10], 11025.0).unwrap();
        assert!(matches!(measure_snr(&p, &clean, &short), Err(SignalError::LengthMismatch { .. })));
    }

    #[test]
    fn measure_snr_round_trip() {
        let p = full();
        let pattern = vec![Interval::Sync; FRAME_INTERVALS];
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let clean =
            synthesize_frame(&p, &pattern[..], PhasePolicy::Fixed(0.0), 1.0, &mut rng).unwrap();
        let samples = Waveform::new(clean.samples()[..40960].to_vec(), 11025.0).unwrap();
        for target in [-30.0, -25.0, -20.0, -10.0, 0.0] {
            let noisy = apply_awgn(&p, &samples, SnrDb::new(target).unwrap(), None, &mut rng).unwrap();
            let got = measure_snr(&p, &noisy, &samples).unwrap().value();
            assert!((got - target).abs() < 0.2, "{target}: {got}");
        }
    }

    #[test]
    fn bit_mapping_examples() {
        let p = full();
        let to = |bits: &str| {
            let b: Vec<bool> = bits.chars().map(|c| c == '1').collect();
            bits_to_symbols(&b, &p).unwrap()[0].index()
        };
        assert_eq!(to("000000"), 0);
        assert_eq!(to("111111"), 63);
        assert_eq!(to("100101"), 37);
        assert!(matches!(
            bits_to_symbols(&[true; 7], &p),
            Err(SignalError::BitCount { len: 7, bits_per_symbol: 6 })
        ));
    }

    #[test]
    fn bit_mapping_exhaustive_inverse() {
        for p in [full(), ModemProfile::reduced_m8()] {
            let symbols: Vec<ToneSymbol> = (0..p.tone_count).map(|i| p.tone(i).unwrap()).collect();
            let bits = symbols_to_bits(&symbols, &p).unwrap();
            assert_eq!(bits.len(), p.tone_count * p.bits_per_symbol());
            assert_eq!(bits_to_symbols(&bits, &p).unwrap(), symbols);
        }
    }

    #[test]
    fn frame_length_and_duration() {
        let p = full();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let pattern: Vec<Interval> = (0..FRAME_INTERVALS)
            .map(|i| if i % 2 == 0 { Interval::Sync } else { Interval::Data(p.tone(i % 64).unwrap()) })
            .collect();
        let w = synthesize_frame(&p, &pattern, PhasePolicy::RandomPerSymbol, 1.0, &mut rng).unwrap();
        assert_eq!(w.len(), 126 * 4096);
        assert!((w.duration_s() - 46.81).abs() < 0.005);
        assert!(matches!(
            synthesize_frame(&p, &pattern[..10], PhasePolicy::Fixed(0.0), 1.0, &mut rng),
            Err(SignalError::FrameLength { expected: 126, got: 10 })
        ));
        assert!(synthesize_frame(&p, &[], PhasePolicy::Fixed(0.0), 1.0, &mut rng).is_err());
    }

    #[test]
    fn all_sync_frame_repeats_sync_symbol() {
        let p = ModemProfile::reduced_m8();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let pattern = vec![Interval::Sync; FRAME_INTERVALS];
        let w = synthesize_frame(&p, &pattern, PhasePolicy::Fixed(0.7), 1.0, &mut rng).unwrap();
        let one = synthesize_symbol(&p, Interval::Sync, 0.7, 1.0).unwrap();
        for window in w.samples().chunks_exact(p.symbol_len) {
            assert_eq!(window, one.samples());
        }
    }

    proptest! {
        #[test]
        fn symbols_bits_inverse(indices in proptest::collection::vec(0usize..64, 0..50)) {
            let p = full();
            let symbols: Vec<ToneSymbol> = indices.iter().map(|&i| p.tone(i).unwrap()).collect();
            let bits = symbols_to_bits(&symbols, &p).unwrap();
            prop_assert_eq!(bits_to_symbols(&bits, &p).unwrap(), symbols);
        }

        #[test]
        fn power_is_half_square_amplitude(tone in 0usize..64, phase in 0.0f64..TAU, amp in 0.01f64..100.0) {
            let p = full();
            let w = synthesize_symbol(&p, Interval::Data(p.tone(tone).unwrap()), phase, amp).unwrap();
            let rel = (w.mean_power() - amp * amp / 2.0).abs() / (amp * amp / 2.0);
            prop_assert!(rel < 1e-12);
        }
    }
}
