//! Confusion-matrix metrics, SER/BER sweeps against theory, and the
//! per-symbol latency benchmark.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{generate_record, DatasetError, DatasetSpec, Label, SnrMode};
use crate::dsp::ClassicalDemodulator;
use crate::neural::{ModelState, NeuralError};
use crate::signal::ModemProfile;
use crate::theory::{self, ErrorProbability, SymbolSnr, TheoryError};

/// Symbols generated per parallel chunk inside a sweep point.
const CHUNK: u64 = 512;
/// Warm-up calls excluded from latency statistics.
pub const BENCH_WARMUP: usize = 100;
pub const BENCH_MIN_SYMBOLS: usize = 100;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("need at least {min} symbols, got {got}")]
    TooFewSymbols { min: usize, got: usize },
    #[error("demodulator expects {expected} classes, profile has {got}")]
    ClassMismatch { expected: usize, got: usize },
    #[error("demodulator failed: {0}")]
    Demodulator(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Counts of (true, predicted) pairs; rows are the true class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn accumulate(&mut self, truth: usize, predicted: usize) -> Result<(), EvalError> {
        for index in [truth, predicted] {
            if index >= self.classes {
                return Err(EvalError::ClassOutOfRange {
                    index,
                    classes: self.classes,
                });
            }
        }
        self.counts[truth * self.classes + predicted] += 1;
        Ok(())
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth * self.classes..(truth + 1) * self.classes].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, predicted)).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Bit mismatches under the natural binary labeling, summed over all
    /// (true, predicted) pairs.
    pub fn bit_errors(&self) -> u64 {
        let mut total = 0;
        for t in 0..self.classes {
            for p in 0..self.classes {
                total += self.get(t, p) * ((t ^ p).count_ones() as u64);
            }
        }
        total
    }

    pub fn symbol_errors(&self) -> u64 {
        self.total() - self.trace()
    }

    /// CSV with header `true,pred_0,...,pred_{M-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut s = String::from("true");
        for p in 0..self.classes {
            write!(s, ",pred_{p}").unwrap();
        }
        s.push('\n');
        for t in 0..self.classes {
            write!(s, "{t}").unwrap();
            for p in 0..self.classes {
                write!(s, ",{}", self.get(t, p)).unwrap();
            }
            s.push('\n');
        }
        out.write_all(s.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub support: u64,
    pub predicted: u64,
    /// `None` when the class never occurs.
    pub recall: Option<f64>,
    /// Zero when the class is never predicted.
    pub precision: f64,
    /// One-vs-rest accuracy, `(TP + TN) / total`.
    pub accuracy: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Averages {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub error_rate: f64,
}

/// Everything derived from one confusion matrix.
///
/// Macro averages run over classes with non-zero support only. Micro
/// averages pool the one-vs-rest counts, so micro recall and micro
/// precision both equal the overall accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub total: u64,
    pub accuracy: f64,
    pub ser: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub micro_avg: Averages,
    pub ber_measured: f64,
    pub ber_from_ser: f64,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let m = cm.classes();
    let tf = total as f64;
    let per_class: Vec<ClassMetrics> = (0..m)
        .map(|c| {
            let tp = cm.get(c, c);
            let support = cm.row_sum(c);
            let predicted = cm.col_sum(c);
            let tn = total - support - predicted + tp;
            let accuracy = (tp + tn) as f64 / tf;
            ClassMetrics {
                support,
                predicted,
                recall: (support > 0).then(|| tp as f64 / support as f64),
                precision: if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 },
                accuracy,
                error_rate: 1.0 - accuracy,
            }
        })
        .collect();
    let supported: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.support > 0).collect();
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| supported.iter().map(|c| f(c)).sum::<f64>() / supported.len() as f64;
    let macro_avg = Averages {
        recall: mean(&|c| c.recall.unwrap_or(0.0)),
        precision: mean(&|c| c.precision),
        accuracy: mean(&|c| c.accuracy),
        error_rate: mean(&|c| c.error_rate),
    };
    let trace = cm.trace();
    let accuracy = trace as f64 / tf;
    // Pooled one-vs-rest: TP = trace, FP = FN = total - trace, TN = the rest.
    let pooled_correct = (m as u64 * total) - 2 * (total - trace);
    let micro_accuracy = pooled_correct as f64 / (m as u64 * total) as f64;
    let micro_avg = Averages {
        recall: accuracy,
        precision: accuracy,
        accuracy: micro_accuracy,
        error_rate: 1.0 - micro_accuracy,
    };
    let ser = 1.0 - accuracy;
    let (ber_measured, ber_from_ser) = if m.is_power_of_two() && m >= 2 {
        let k = m.trailing_zeros() as f64;
        (
            cm.bit_errors() as f64 / (tf * k),
            theory::ser_to_ber(m, ErrorProbability::new(ser.clamp(0.0, 1.0))?)?.value(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(MetricsReport {
        total,
        accuracy,
        ser,
        per_class,
        macro_avg,
        micro_avg,
        ber_measured,
        ber_from_ser,
    })
}

impl MetricsReport {
    /// Flat `key=value` lines. Global keys first, then
    /// `class_<i>_{support,predicted,recall,precision,accuracy,error_rate}`;
    /// `recall` is omitted for classes that never occur.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(s, "{k}={v}").unwrap();
        };
        kv("total", self.total.to_string());
        kv("classes", self.per_class.len().to_string());
        kv("accuracy", self.accuracy.to_string());
        kv("error_rate", (1.0 - self.accuracy).to_string());
        kv("ser", self.ser.to_string());
        kv("ber_measured", self.ber_measured.to_string());
        kv("ber_from_ser", self.ber_from_ser.to_string());
        for (prefix, a) in [("macro", &self.macro_avg), ("micro", &self.micro_avg)] {
            kv(&format!("{prefix}_recall"), a.recall.to_string());
            kv(&format!("{prefix}_precision"), a.precision.to_string());
            kv(&format!("{prefix}_accuracy"), a.accuracy.to_string());
            kv(&format!("{prefix}_error_rate"), a.error_rate.to_string());
        }
        for (i, c) in self.per_class.iter().enumerate() {
            kv(&format!("class_{i}_support"), c.support.to_string());
            kv(&format!("class_{i}_predicted"), c.predicted.to_string());
            if let Some(r) = c.recall {
                kv(&format!("class_{i}_recall"), r.to_string());
            }
            kv(&format!("class_{i}_precision"), c.precision.to_string());
            kv(&format!("class_{i}_accuracy"), c.accuracy.to_string());
            kv(&format!("class_{i}_error_rate"), c.error_rate.to_string());
        }
        s
    }
}

/// Anything that maps symbol windows to tone indices.
pub trait Demodulator {
    fn name(&self) -> String;

    fn classes(&self) -> usize;

    fn demodulate_batch(&mut self, windows: &[&[f32]]) -> Result<Vec<usize>, EvalError>;
}

impl Demodulator for ClassicalDemodulator {
    fn name(&self) -> String {
        "classical".into()
    }

    fn classes(&self) -> usize {
        self.profile().tone_count
    }

    fn demodulate_batch(&mut self, windows: &[&[f32]]) -> Result<Vec<usize>, EvalError> {
        windows
            .iter()
            .map(|w| {
                self.demodulate(w)
                    .map(|s| s.index())
                    .map_err(|e| EvalError::Demodulator(e.to_string()))
            })
            .collect()
    }
}

/// CNN demodulator in inference mode.
pub struct NeuralDemodulator {
    state: ModelState<f32>,
    buf: Vec<f32>,
}

impl NeuralDemodulator {
    /// Windows per inference pass.
    const MAX_BATCH: usize = 32;

    pub fn new(state: ModelState<f32>) -> Self {
        Self { state, buf: Vec::new() }
    }

    pub fn state(&self) -> &ModelState<f32> {
        &self.state
    }
}

impl Demodulator for NeuralDemodulator {
    fn name(&self) -> String {
        "cnn".into()
    }

    fn classes(&self) -> usize {
        self.state.config().classes
    }

    fn demodulate_batch(&mut self, windows: &[&[f32]]) -> Result<Vec<usize>, EvalError> {
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(Self::MAX_BATCH) {
            self.buf.clear();
            for w in chunk {
                self.buf.extend_from_slice(w);
            }
            out.extend(self.state.predict_batch(&self.buf)?);
        }
        Ok(out)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dataset spec behind sweep point `point` (fresh uniform labels, random
/// phase, fixed SNR).
pub fn sweep_point_spec(profile: &ModemProfile, snr_db: f64, n: u64, seed: u64, point: usize) -> DatasetSpec {
    DatasetSpec {
        profile: profile.clone(),
        count: n,
        snr: SnrMode::Fixed(snr_db),
        seed: splitmix64(seed ^ splitmix64(point as u64)),
        include_sync: false,
    }
}

/// Confusion matrix of `demod` on `n` fresh symbols at one SNR.
pub fn run_point(
    demod: &mut dyn Demodulator,
    spec: &DatasetSpec,
) -> Result<ConfusionMatrix, EvalError> {
    spec.validate()?;
    let m = spec.profile.tone_count;
    if demod.classes() != m {
        return Err(EvalError::ClassMismatch {
            expected: demod.classes(),
            got: m,
        });
    }
    let mut cm = ConfusionMatrix::new(m);
    let mut start = 0;
    while start < spec.count {
        let end = (start + CHUNK).min(spec.count);
        let records = (start..end)
            .into_par_iter()
            .map(|i| generate_record(spec, i))
            .collect::<Result<Vec<_>, _>>()?;
        let windows: Vec<&[f32]> = records.iter().map(|r| &r.samples[..]).collect();
        let decided = demod.demodulate_batch(&windows)?;
        for (r, p) in records.iter().zip(decided) {
            let Label::Data(t) = r.label else { unreachable!("sweeps exclude sync") };
            cm.accumulate(t as usize, p)?;
        }
        start = end;
    }
    Ok(cm)
}

/// Confusion matrices for every SNR point of a sweep.
pub fn sweep(
    demod: &mut dyn Demodulator,
    profile: &ModemProfile,
    snr_points: &[f64],
    n_per_point: u64,
    seed: u64,
) -> Result<Vec<(f64, ConfusionMatrix)>, EvalError> {
    if n_per_point == 0 {
        return Err(EvalError::TooFewSymbols { min: 1, got: 0 });
    }
    snr_points
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let spec = sweep_point_spec(profile, snr, n_per_point, seed, i);
            Ok((snr, run_point(demod, &spec)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerRow {
    pub snr_db: f64,
    pub ser: f64,
    /// Monte-Carlo standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub ber_measured: f64,
    pub ber_from_ser: f64,
    pub ber_theory: f64,
    pub n: u64,
    /// Symbol error rate behind the row; not part of the CSV.
    pub ser: f64,
    pub bits_per_symbol: usize,
}

impl SerRow {
    pub fn from_confusion(snr_db: f64, cm: &ConfusionMatrix) -> Self {
        let n = cm.total();
        let ser = cm.symbol_errors() as f64 / n as f64;
        Self {
            snr_db,
            ser,
            stderr: (ser * (1.0 - ser) / n as f64).sqrt(),
            n,
        }
    }
}

impl BerRow {
    pub fn from_confusion(profile: &ModemProfile, snr_db: f64, cm: &ConfusionMatrix) -> Result<Self, EvalError> {
        let m = profile.tone_count;
        let k = profile.bits_per_symbol() as f64;
        let n = cm.total();
        let ser = cm.symbol_errors() as f64 / n as f64;
        let ebn0_db = theory::snr_to_ebn0(profile, snr_db);
        Ok(Self {
            snr_db,
            ebn0_db,
            ber_measured: cm.bit_errors() as f64 / (n as f64 * k),
            ber_from_ser: theory::ser_to_ber(m, ErrorProbability::new(ser)?)?.value(),
            ber_theory: theory::ber_noncoherent_mfsk(m, SymbolSnr::Db(ebn0_db))?.value(),
            n,
            ser,
            bits_per_symbol: profile.bits_per_symbol(),
        })
    }

    /// `BER <= SER <= k BER`: every symbol error costs between 1 and k bits.
    pub fn bounds_hold(&self) -> bool {
        let eps = 1e-12;
        self.ber_measured <= self.ser + eps && self.ser <= self.bits_per_symbol as f64 * self.ber_measured + eps
    }
}

pub fn sweep_ser(
    demod: &mut dyn Demodulator,
    profile: &ModemProfile,
    snr_points: &[f64],
    n_per_point: u64,
    seed: u64,
) -> Result<Vec<SerRow>, EvalError> {
    Ok(sweep(demod, profile, snr_points, n_per_point, seed)?
        .iter()
        .map(|(snr, cm)| SerRow::from_confusion(*snr, cm))
        .collect())
}

pub fn sweep_ber(
    demod: &mut dyn Demodulator,
    profile: &ModemProfile,
    snr_points: &[f64],
    n_per_point: u64,
    seed: u64,
) -> Result<Vec<BerRow>, EvalError> {
    sweep(demod, profile, snr_points, n_per_point, seed)?
        .iter()
        .map(|(snr, cm)| BerRow::from_confusion(profile, *snr, cm))
        .collect()
}

pub fn write_ser_csv<W: Write>(rows: &[SerRow], mut out: W) -> io::Result<()> {
    writeln!(out, "snr_db,ser,stderr,n")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.snr_db, r.ser, r.stderr, r.n)?;
    }
    Ok(())
}

pub fn write_ber_csv<W: Write>(rows: &[BerRow], mut out: W) -> io::Result<()> {
    writeln!(out, "snr_db,ebn0_db,ber_measured,ber_from_ser,ber_theory,n")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.snr_db, r.ebn0_db, r.ber_measured, r.ber_from_ser, r.ber_theory, r.n
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub mean_s: f64,
    pub p50_s: f64,
    pub p99_s: f64,
    pub n: usize,
    /// Symbol interval N/fs the mean is compared against.
    pub symbol_duration_s: f64,
    pub real_time: bool,
}

impl LatencyReport {
    pub fn to_text(&self) -> String {
        format!(
            "n={}\nmean_s={}\np50_s={}\np99_s={}\nsymbol_duration_s={}\nreal_time={}\n",
            self.n, self.mean_s, self.p50_s, self.p99_s, self.symbol_duration_s, self.real_time
        )
    }
}

/// Wall-clock time of single-symbol (batch size 1) demodulation at -20 dB,
/// after [`BENCH_WARMUP`] untimed calls.
pub fn bench_latency(
    demod: &mut dyn Demodulator,
    profile: &ModemProfile,
    n_symbols: usize,
    seed: u64,
) -> Result<LatencyReport, EvalError> {
    if n_symbols < BENCH_MIN_SYMBOLS {
        return Err(EvalError::TooFewSymbols {
            min: BENCH_MIN_SYMBOLS,
            got: n_symbols,
        });
    }
    let spec = sweep_point_spec(profile, -20.0, (n_symbols + BENCH_WARMUP) as u64, seed, 0);
    spec.validate()?;
    let records = (0..spec.count)
        .into_par_iter()
        .map(|i| generate_record(&spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut times = Vec::with_capacity(n_symbols);
    for (i, r) in records.iter().enumerate() {
        let start = Instant::now();
        let out = demod.demodulate_batch(&[&r.samples[..]])?;
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(out);
        if i >= BENCH_WARMUP {
            times.push(elapsed);
        }
    }
    let mean_s = times.iter().sum::<f64>() / times.len() as f64;
    times.sort_by(f64::total_cmp);
    let pct = |q: f64| times[((times.len() - 1) as f64 * q).round() as usize];
    let symbol_duration_s = profile.symbol_duration_s();
    Ok(LatencyReport {
        mean_s,
        p50_s: pct(0.5),
        p99_s: pct(0.99),
        n: n_symbols,
        symbol_duration_s,
        real_time: mean_s < symbol_duration_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn accumulate_single_cell() {
        let mut cm = ConfusionMatrix::new(4);
        cm.accumulate(0, 0).unwrap();
        assert_eq!(cm.trace(), 1);
        assert_eq!(cm.total(), 1);
        assert!(matches!(cm.accumulate(4, 0), Err(EvalError::ClassOutOfRange { index: 4, .. })));
        assert!(cm.accumulate(0, 9).is_err());
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn all_correct_is_diagonal() {
        let mut cm = ConfusionMatrix::new(8);
        for i in 0..80 {
            cm.accumulate(i % 8, i % 8).unwrap();
        }
        assert_eq!(cm.total(), 80);
        assert_eq!(cm.trace(), 80);
        let r = metrics(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.ser, 0.0);
        assert_eq!(r.ber_measured, 0.0);
        assert_eq!(r.ber_from_ser, 0.0);
        assert!(r.per_class.iter().all(|c| c.error_rate == 0.0 && c.recall == Some(1.0)));
        assert_eq!(r.macro_avg.recall, 1.0);
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(matches!(metrics(&ConfusionMatrix::new(4)), Err(EvalError::Empty)));
    }

    #[test]
    fn uniform_guessing_is_chance() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut cm = ConfusionMatrix::new(64);
        for _ in 0..64_000 {
            cm.accumulate(rng.random_range(0..64), rng.random_range(0..64)).unwrap();
        }
        let r = metrics(&cm).unwrap();
        // sd of the accuracy estimate is sqrt(p(1-p)/n) ~ 4.9e-4.
        assert!((r.accuracy - 1.0 / 64.0).abs() < 5.0 * 4.9e-4);
        assert_eq!(r.micro_avg.recall, r.accuracy);
        assert_eq!(r.micro_avg.precision, r.accuracy);
    }

    #[test]
    fn hand_computed_metrics() {
        // truth 0: 3 right, 1 as class 1; truth 1: 2 right; class 2 unseen,
        // predicted once from truth 1.
        let mut cm = ConfusionMatrix::new(4);
        for (t, p) in [(0, 0), (0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (1, 2)] {
            cm.accumulate(t, p).unwrap();
        }
        let r = metrics(&cm).unwrap();
        assert_eq!(r.total, 7);
        assert!((r.accuracy - 5.0 / 7.0).abs() < 1e-15);
        assert_eq!(r.per_class[0].recall, Some(0.75));
        assert_eq!(r.per_class[1].recall, Some(2.0 / 3.0));
        assert_eq!(r.per_class[2].recall, None);
        assert_eq!(r.per_class[1].precision, 2.0 / 3.0);
        assert_eq!(r.per_class[2].precision, 0.0);
        assert!((r.macro_avg.recall - (0.75 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        // class 0 one-vs-rest: TP 3, FN 1, FP 0, TN 3.
        assert!((r.per_class[0].accuracy - 6.0 / 7.0).abs() < 1e-15);
        // bits: 0 vs 1 -> 1 bit, 1 vs 2 -> 2 bits; k = 2.
        assert_eq!(cm.bit_errors(), 3);
        assert!((r.ber_measured - 3.0 / 14.0).abs() < 1e-15);
        let text = r.to_kv_text();
        for key in ["accuracy=", "macro_recall=", "micro_precision=", "class_0_recall=", "macro_precision="] {
            assert!(text.lines().any(|l| l.starts_with(key)), "{key}");
        }
        assert!(!text.contains("class_2_recall"));
    }

    #[test]
    fn single_symbol_point_is_zero_or_one() {
        let p = ModemProfile::reduced_m8();
        let mut demod = ClassicalDemodulator::new(&p);
        for seed in 0..5 {
            let rows = sweep_ser(&mut demod, &p, &[-15.0], 1, seed).unwrap();
            assert!(rows[0].ser == 0.0 || rows[0].ser == 1.0);
            assert_eq!(rows[0].n, 1);
        }
    }

    #[test]
    fn classical_is_error_free_at_high_snr() {
        let p = ModemProfile::jt65a_full();
        let mut demod = ClassicalDemodulator::new(&p);
        let rows = sweep_ber(&mut demod, &p, &[30.0], 1000, 2).unwrap();
        assert_eq!(rows[0].ber_measured, 0.0);
        assert_eq!(rows[0].ber_from_ser, 0.0);
        assert!(rows[0].bounds_hold());
    }

    #[test]
    fn ber_rows_respect_bounds_at_low_snr() {
        let p = ModemProfile::reduced_m8();
        let mut demod = ClassicalDemodulator::new(&p);
        for row in sweep_ber(&mut demod, &p, &[-20.0, -15.0, -10.0], 2000, 8).unwrap() {
            assert!(row.bounds_hold(), "{row:?}");
            assert!(row.ser > 0.0);
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let p = ModemProfile::reduced_m8();
        let mut demod = ClassicalDemodulator::new(&p);
        let a = sweep_ser(&mut demod, &p, &[-12.0, -10.0], 700, 5).unwrap();
        let b = sweep_ser(&mut demod, &p, &[-12.0, -10.0], 700, 5).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        write_ser_csv(&a, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("snr_db,ser,stderr,n\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn ber_csv_header() {
        let mut csv = Vec::new();
        write_ber_csv(&[], &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "snr_db,ebn0_db,ber_measured,ber_from_ser,ber_theory,n\n");
    }

    #[test]
    fn bench_requires_minimum() {
        let p = ModemProfile::reduced_m8();
        let mut demod = ClassicalDemodulator::new(&p);
        assert!(matches!(
            bench_latency(&mut demod, &p, 99, 0),
            Err(EvalError::TooFewSymbols { min: 100, got: 99 })
        ));
        let r = bench_latency(&mut demod, &p, 100, 0).unwrap();
        assert!(r.real_time);
        assert!(r.p50_s <= r.p99_s);
        assert!(r.to_text().contains("real_time=true"));
    }

    #[test]
    fn class_mismatch_detected() {
        let p8 = ModemProfile::reduced_m8();
        let mut demod = ClassicalDemodulator::new(&ModemProfile::jt65a_full());
        assert!(matches!(
            sweep_ser(&mut demod, &p8, &[0.0], 10, 0),
            Err(EvalError::ClassMismatch { .. })
        ));
    }
}
