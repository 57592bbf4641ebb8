//! Browser bindings for three workbench operations: a noisy symbol's
//! spectrum, the closed-form error curves, and a Monte-Carlo SER point
//! of the classical demodulator.
//!
//! The plain functions are usable natively; the `#[wasm_bindgen]`
//! wrappers only convert errors.

use std::f64::consts::TAU;

use mfsk_core::dataset::{generate_record, DatasetError, DatasetSpec, Label, SnrMode};
use mfsk_core::dsp::{energy_spectrum, ClassicalDemodulator, DspError};
use mfsk_core::signal::{apply_awgn, synthesize_symbol, Interval, ModemProfile, SignalError, SnrDb};
use mfsk_core::theory::{self, SymbolSnr, TheoryError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;
use wasm_bindgen::prelude::*;

/// Bins shown on either side of the tone band.
const MARGIN_BINS: usize = 24;
pub const MAX_SER_SYMBOLS: u32 = 20_000;
const MAX_CURVE_POINTS: usize = 2_000;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("unknown profile {0:?}; use jt65a-full or reduced-m8")]
    UnknownProfile(String),
    #[error("tone {tone} out of range for {count} tones")]
    BadTone { tone: i32, count: usize },
    #[error("{0}")]
    BadArgument(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

pub fn profile_by_name(name: &str) -> Result<ModemProfile, DemoError> {
    match name {
        "jt65a-full" => Ok(ModemProfile::jt65a_full()),
        "reduced-m8" => Ok(ModemProfile::reduced_m8()),
        other => Err(DemoError::UnknownProfile(other.to_string())),
    }
}

/// One noisy symbol: waveform excerpt, the energy spectrum around the
/// tone band (in dB), and the classical decision.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SymbolView {
    waveform: Vec<f64>,
    spectrum_db: Vec<f64>,
    first_bin: usize,
    bin_width_hz: f64,
    tone_bin: usize,
    peak_bin: usize,
    floor_db: f64,
    floor_ratio: f64,
    decided: u32,
}

#[wasm_bindgen]
impl SymbolView {
    /// First `excerpt` samples of the noisy symbol.
    pub fn waveform(&self) -> Vec<f64> {
        self.waveform.clone()
    }

    #[wasm_bindgen(js_name = spectrumDb)]
    pub fn spectrum_db(&self) -> Vec<f64> {
        self.spectrum_db.clone()
    }

    /// DFT bin of `spectrumDb()[0]`.
    #[wasm_bindgen(getter, js_name = firstBin)]
    pub fn first_bin(&self) -> usize {
        self.first_bin
    }

    #[wasm_bindgen(getter, js_name = binWidthHz)]
    pub fn bin_width_hz(&self) -> f64 {
        self.bin_width_hz
    }

    #[wasm_bindgen(getter, js_name = toneBin)]
    pub fn tone_bin(&self) -> usize {
        self.tone_bin
    }

    #[wasm_bindgen(getter, js_name = peakBin)]
    pub fn peak_bin(&self) -> usize {
        self.peak_bin
    }

    #[wasm_bindgen(getter, js_name = floorDb)]
    pub fn floor_db(&self) -> f64 {
        self.floor_db
    }

    /// Transmitted-bin energy over the estimated noise floor.
    #[wasm_bindgen(getter, js_name = floorRatio)]
    pub fn floor_ratio(&self) -> f64 {
        self.floor_ratio
    }

    /// Data tone picked by the classical demodulator.
    #[wasm_bindgen(getter)]
    pub fn decided(&self) -> u32 {
        self.decided
    }
}

/// `tone < 0` sends the sync tone. The phase is drawn from `seed`.
pub fn symbol_view(profile: &str, tone: i32, snr_db: f64, seed: u32, excerpt: usize) -> Result<SymbolView, DemoError> {
    let p = profile_by_name(profile)?;
    let interval = if tone < 0 {
        Interval::Sync
    } else if (tone as usize) < p.tone_count {
        Interval::Data(p.tone(tone as usize)?)
    } else {
        return Err(DemoError::BadTone { tone, count: p.tone_count });
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed as u64);
    let clean = synthesize_symbol(&p, interval, rng.random::<f64>() * TAU, 1.0)?;
    let noisy = apply_awgn(&p, &clean, SnrDb::new(snr_db)?, Some(0.5), &mut rng)?;
    let spectrum = energy_spectrum(&noisy)?;
    let first = p.sync_bin.saturating_sub(MARGIN_BINS);
    let last = (p.sync_bin + p.tone_offset + p.tone_count - 1 + MARGIN_BINS).min(spectrum.bin_energies.len() - 1);
    let to_db = |e: f64| 10.0 * e.max(1e-300).log10();
    let mut demod = ClassicalDemodulator::new(&p);
    let decided = demod.demodulate(noisy.samples())?.index() as u32;
    let tone_bin = p.bin_of(interval);
    Ok(SymbolView {
        waveform: noisy.samples().iter().take(excerpt).copied().collect(),
        spectrum_db: spectrum.bin_energies[first..=last].iter().map(|&e| to_db(e)).collect(),
        first_bin: first,
        bin_width_hz: spectrum.bin_width_hz,
        tone_bin,
        peak_bin: spectrum.peak_bin(),
        floor_db: to_db(spectrum.noise_floor()),
        floor_ratio: spectrum.floor_ratio(tone_bin),
        decided,
    })
}

#[wasm_bindgen(js_name = noisySymbol)]
pub fn noisy_symbol_js(profile: &str, tone: i32, snr_db: f64, seed: u32, excerpt: usize) -> Result<SymbolView, JsError> {
    symbol_view(profile, tone, snr_db, seed, excerpt).map_err(js)
}

/// Closed-form SER and BER against Eb/N0.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Curve {
    ebn0_db: Vec<f64>,
    ser: Vec<f64>,
    ber: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(js_name = ebn0Db)]
    pub fn ebn0_db(&self) -> Vec<f64> {
        self.ebn0_db.clone()
    }

    pub fn ser(&self) -> Vec<f64> {
        self.ser.clone()
    }

    pub fn ber(&self) -> Vec<f64> {
        self.ber.clone()
    }
}

pub fn theory_curve(order: u32, lo_db: f64, hi_db: f64, step_db: f64) -> Result<Curve, DemoError> {
    if !(lo_db.is_finite() && hi_db.is_finite() && step_db > 0.0 && lo_db <= hi_db) {
        return Err(DemoError::BadArgument(format!("grid {lo_db}..{hi_db} step {step_db}")));
    }
    let points = ((hi_db - lo_db) / step_db + 1e-9).floor() as usize + 1;
    if points > MAX_CURVE_POINTS {
        return Err(DemoError::BadArgument(format!("{points} points, at most {MAX_CURVE_POINTS}")));
    }
    let m = order as usize;
    let mut curve = Curve {
        ebn0_db: Vec::with_capacity(points),
        ser: Vec::with_capacity(points),
        ber: Vec::with_capacity(points),
    };
    for i in 0..points {
        let eb = lo_db + i as f64 * step_db;
        let es = theory::ebn0_to_esn0(m, eb)?;
        let ser = theory::ser_noncoherent_mfsk(m, SymbolSnr::Db(es))?;
        curve.ebn0_db.push(eb);
        curve.ser.push(ser.value());
        curve.ber.push(theory::ser_to_ber(m, ser)?.value());
    }
    Ok(curve)
}

#[wasm_bindgen(js_name = theoryCurve)]
pub fn theory_curve_js(order: u32, lo_db: f64, hi_db: f64, step_db: f64) -> Result<Curve, JsError> {
    theory_curve(order, lo_db, hi_db, step_db).map_err(js)
}

/// Simulated classical SER at one SNR next to the closed form.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerPoint {
    pub snr_db: f64,
    pub esn0_db: f64,
    pub ebn0_db: f64,
    pub ser: f64,
    pub stderr: f64,
    pub theory_ser: f64,
    pub n: u32,
}

/// Runs sequentially; the browser has no thread pool.
pub fn ser_point(profile: &str, snr_db: f64, n: u32, seed: u32) -> Result<SerPoint, DemoError> {
    let p = profile_by_name(profile)?;
    if n == 0 || n > MAX_SER_SYMBOLS {
        return Err(DemoError::BadArgument(format!("n must be in 1..={MAX_SER_SYMBOLS}")));
    }
    let spec = DatasetSpec {
        profile: p.clone(),
        count: n as u64,
        snr: SnrMode::Fixed(snr_db),
        seed: seed as u64,
        include_sync: false,
    };
    spec.validate()?;
    let mut demod = ClassicalDemodulator::new(&p);
    let mut errors = 0u32;
    for i in 0..spec.count {
        let r = generate_record(&spec, i)?;
        let decided = demod.demodulate(&r.samples)?.index();
        if r.label != Label::Data(decided as u16) {
            errors += 1;
        }
    }
    let ser = errors as f64 / n as f64;
    let esn0_db = theory::snr_to_esn0(&p, snr_db);
    Ok(SerPoint {
        snr_db,
        esn0_db,
        ebn0_db: theory::snr_to_ebn0(&p, snr_db),
        ser,
        stderr: (ser * (1.0 - ser) / n as f64).sqrt(),
        theory_ser: theory::ser_noncoherent_mfsk_db(p.tone_count, esn0_db)?.value(),
        n,
    })
}

#[wasm_bindgen(js_name = serPoint)]
pub fn ser_point_js(profile: &str, snr_db: f64, n: u32, seed: u32) -> Result<SerPoint, JsError> {
    ser_point(profile, snr_db, n, seed).map_err(js)
}

/// SNR (reference bandwidth) that gives Es/N0 `esn0_db` on `profile`.
#[wasm_bindgen(js_name = esn0ToSnr)]
pub fn esn0_to_snr_js(profile: &str, esn0_db: f64) -> Result<f64, JsError> {
    Ok(theory::esn0_to_snr(&profile_by_name(profile).map_err(js)?, esn0_db))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_sync_symbol_peaks_on_sync_bin() {
        let v = symbol_view("jt65a-full", -1, 60.0, 1, 256).unwrap();
        assert_eq!(v.peak_bin, 472);
        assert_eq!(v.tone_bin, 472);
        assert_eq!(v.waveform.len(), 256);
        assert_eq!(v.first_bin, 472 - MARGIN_BINS);
        assert_eq!(v.spectrum_db.len(), 2 + 64 + 2 * MARGIN_BINS);
        assert!(v.floor_ratio > 1e4);
    }

    #[test]
    fn data_tone_is_decided_at_high_snr() {
        for tone in [0, 5, 63] {
            let v = symbol_view("jt65a-full", tone, 10.0, 3, 16).unwrap();
            assert_eq!(v.decided, tone as u32);
            assert_eq!(v.peak_bin, 474 + tone as usize);
        }
        assert!(matches!(symbol_view("reduced-m8", 8, 0.0, 0, 1), Err(DemoError::BadTone { .. })));
        assert!(matches!(symbol_view("x", 0, 0.0, 0, 1), Err(DemoError::UnknownProfile(_))));
    }

    #[test]
    fn curve_is_monotone_and_bounded() {
        let c = theory_curve(64, -2.0, 12.0, 0.5).unwrap();
        assert_eq!(c.ebn0_db.len(), 29);
        assert!(c.ser.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.ber.iter().zip(&c.ser).all(|(b, s)| b <= s));
        assert!(theory_curve(128, 0.0, 1.0, 0.5).is_err());
        assert!(theory_curve(8, 1.0, 0.0, 0.5).is_err());
        assert!(theory_curve(8, 0.0, 1e6, 0.001).is_err());
    }

    #[test]
    fn ser_point_tracks_theory() {
        let p = ModemProfile::reduced_m8();
        let snr = theory::esn0_to_snr(&p, 8.0);
        let pt = ser_point("reduced-m8", snr, 4000, 7).unwrap();
        let sigma = (pt.theory_ser * (1.0 - pt.theory_ser) / 4000.0).sqrt();
        assert!((pt.ser - pt.theory_ser).abs() < 4.0 * sigma, "{pt:?}");
        assert!((pt.esn0_db - 8.0).abs() < 1e-9);
        assert!(ser_point("reduced-m8", 0.0, 0, 0).is_err());
        assert!(ser_point("reduced-m8", 0.0, MAX_SER_SYMBOLS + 1, 0).is_err());
    }
}
