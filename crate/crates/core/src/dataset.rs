//! Seeded generation and persistence of labeled symbol datasets.
//!
//! Record `i` of a spec is drawn from its own ChaCha20 stream (seed, stream
//! `i`), so any record can be regenerated alone and bulk generation may run
//! in parallel without changing content.
//!
//! File layout (little-endian):
//!
//! ```text
//! magic "MFSKDSET" | u32 version = 1 | u32 sample_rate | u32 symbol_len
//! u16 tone_count | u16 flags (bit 0: sync records present) | u64 count
//! record*: f32 snr_db | u16 label (0xFFFF = sync) | u16 reserved = 0
//!          | symbol_len x f32 samples
//! ```

use std::f64::consts::TAU;
use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::signal::{self, Interval, ModemProfile, SignalError, SnrDb, ToneSymbol, Waveform};

pub const DATASET_MAGIC: &[u8; 8] = b"MFSKDSET";
pub const DATASET_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;
const FLAG_SYNC: u16 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    UnsupportedVersion(u32),
    #[error("dataset truncated inside {0}")]
    Truncated(String),
    #[error("header declares {declared} records but the file holds {found}")]
    CountMismatch { declared: u64, found: u64 },
    #[error("record {index}: {reason}")]
    InvalidRecord { index: u64, reason: String },
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrMode {
    Fixed(f64),
    /// Uniform over `[lo, hi]` dB.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub profile: ModemProfile,
    pub count: u64,
    pub snr: SnrMode,
    pub seed: u64,
    pub include_sync: bool,
}

impl DatasetSpec {
    /// 100 000 data-tone records, SNR uniform over [-30, 0] dB.
    pub fn jt65a_training(seed: u64) -> Self {
        Self {
            profile: ModemProfile::jt65a_full(),
            count: 100_000,
            snr: SnrMode::Uniform { lo: -30.0, hi: 0.0 },
            seed,
            include_sync: false,
        }
    }

    /// 10 000 data-tone records at one SNR.
    pub fn jt65a_test(snr_db: f64, seed: u64) -> Self {
        Self {
            profile: ModemProfile::jt65a_full(),
            count: 10_000,
            snr: SnrMode::Fixed(snr_db),
            seed,
            include_sync: false,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.profile.validate()?;
        let bad = |m: String| Err(DatasetError::InvalidSpec(m));
        if self.count == 0 {
            return bad("count must be >= 1".into());
        }
        let fs = self.profile.sample_rate_hz;
        if fs.fract() != 0.0 || fs > u32::MAX as f64 {
            return bad(format!("sample rate {fs} Hz is not a whole number"));
        }
        if self.profile.symbol_len > u32::MAX as usize {
            return bad("symbol length too large".into());
        }
        match self.snr {
            SnrMode::Fixed(v) if !v.is_finite() => bad(format!("SNR {v}")),
            SnrMode::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                bad(format!("SNR range {lo}..{hi}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Data(u16),
    Sync,
}

impl Label {
    pub const SYNC_CODE: u16 = 0xFFFF;

    pub fn code(self) -> u16 {
        match self {
            Label::Data(v) => v,
            Label::Sync => Self::SYNC_CODE,
        }
    }

    pub fn from_code(code: u16) -> Self {
        if code == Self::SYNC_CODE {
            Label::Sync
        } else {
            Label::Data(code)
        }
    }

    fn interval(self) -> Interval {
        match self {
            Label::Data(v) => Interval::Data(ToneSymbol::from_raw(v)),
            Label::Sync => Interval::Sync,
        }
    }
}

/// One labeled symbol window.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub snr_db: f32,
    pub label: Label,
    pub samples: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample_rate_hz: u32,
    pub symbol_len: u32,
    pub tone_count: u16,
    pub includes_sync: bool,
    pub records: Vec<Record>,
}

struct Draw {
    label: Label,
    phase: f64,
    snr_db: f32,
    rng: ChaCha20Rng,
}

fn draw(spec: &DatasetSpec, index: u64) -> Draw {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let m = spec.profile.tone_count as u16;
    let classes = if spec.include_sync { m + 1 } else { m };
    let code = rng.random_range(0..classes);
    let label = if code == m { Label::Sync } else { Label::Data(code) };
    let phase = rng.random::<f64>() * TAU;
    let snr_db = match spec.snr {
        SnrMode::Fixed(v) => v,
        SnrMode::Uniform { lo, hi } if lo == hi => lo,
        SnrMode::Uniform { lo, hi } => rng.random_range(lo..=hi),
    } as f32;
    Draw {
        label,
        phase,
        snr_db,
        rng,
    }
}

/// Record `index` of `spec`, independent of every other record.
pub fn generate_record(spec: &DatasetSpec, index: u64) -> Result<Record, DatasetError> {
    let Draw {
        label,
        phase,
        snr_db,
        mut rng,
    } = draw(spec, index);
    let p = &spec.profile;
    let mut samples = vec![0.0; p.symbol_len];
    signal::write_symbol(p, label.interval(), phase, 1.0, &mut samples)?;
    signal::add_awgn_in_place(p, &mut samples, SnrDb::new(snr_db as f64)?, Some(0.5), &mut rng)?;
    Ok(Record {
        snr_db,
        label,
        samples: samples.into_iter().map(|v| v as f32).collect(),
    })
}

/// The noiseless unit-amplitude waveform underlying record `index`.
pub fn regenerate_clean(spec: &DatasetSpec, index: u64) -> Result<Waveform, DatasetError> {
    let d = draw(spec, index);
    Ok(signal::synthesize_symbol(&spec.profile, d.label.interval(), d.phase, 1.0)?)
}

/// Generates all `spec.count` records.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset, DatasetError> {
    spec.validate()?;
    let records = (0..spec.count)
        .into_par_iter()
        .map(|i| generate_record(spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        sample_rate_hz: spec.profile.sample_rate_hz as u32,
        symbol_len: spec.profile.symbol_len as u32,
        tone_count: spec.profile.tone_count as u16,
        includes_sync: spec.include_sync,
        records,
    })
}

impl Dataset {
    fn record_len(&self) -> usize {
        8 + 4 * self.symbol_len as usize
    }

    /// Whether the header matches a profile's sample rate, window and alphabet.
    pub fn matches_profile(&self, profile: &ModemProfile) -> bool {
        self.sample_rate_hz as f64 == profile.sample_rate_hz
            && self.symbol_len as usize == profile.symbol_len
            && self.tone_count as usize == profile.tone_count
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        let mut head = Vec::with_capacity(HEADER_LEN);
        head.extend_from_slice(DATASET_MAGIC);
        head.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        head.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
        head.extend_from_slice(&self.symbol_len.to_le_bytes());
        head.extend_from_slice(&self.tone_count.to_le_bytes());
        let flags = if self.includes_sync { FLAG_SYNC } else { 0 };
        head.extend_from_slice(&flags.to_le_bytes());
        head.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        out.write_all(&head)?;
        let mut buf = Vec::with_capacity(self.record_len());
        for (i, r) in self.records.iter().enumerate() {
            if r.samples.len() != self.symbol_len as usize {
                return Err(DatasetError::InvalidRecord {
                    index: i as u64,
                    reason: format!("{} samples, expected {}", r.samples.len(), self.symbol_len),
                });
            }
            buf.clear();
            buf.extend_from_slice(&r.snr_db.to_le_bytes());
            buf.extend_from_slice(&r.label.code().to_le_bytes());
            buf.extend_from_slice(&0u16.to_le_bytes());
            for s in &r.samples {
                buf.extend_from_slice(&s.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, DatasetError> {
        let mut v = Vec::with_capacity(HEADER_LEN + self.records.len() * self.record_len());
        self.write(&mut v)?;
        Ok(v)
    }

    pub fn read<R: Read>(mut source: R) -> Result<Self, DatasetError> {
        let mut head = [0u8; HEADER_LEN];
        let got = read_full(&mut source, &mut head)?;
        if got < 8 || &head[..8] != DATASET_MAGIC {
            return Err(DatasetError::BadMagic);
        }
        if got < 12 {
            return Err(DatasetError::Truncated("header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let u16_at = |o: usize| u16::from_le_bytes(head[o..o + 2].try_into().unwrap());
        let version = u32_at(8);
        if version != DATASET_VERSION {
            return Err(DatasetError::UnsupportedVersion(version));
        }
        if got < HEADER_LEN {
            return Err(DatasetError::Truncated("header".into()));
        }
        let sample_rate_hz = u32_at(12);
        let symbol_len = u32_at(16);
        let tone_count = u16_at(20);
        let flags = u16_at(22);
        let declared = u64::from_le_bytes(head[24..32].try_into().unwrap());
        let includes_sync = flags & FLAG_SYNC != 0;
        let rec_len = 8 + 4 * symbol_len as usize;

        let mut records = Vec::with_capacity(declared.min(1 << 20) as usize);
        let mut buf = vec![0u8; rec_len];
        for index in 0..declared {
            let got = read_full(&mut source, &mut buf)?;
            if got == 0 {
                return Err(DatasetError::CountMismatch { declared, found: index });
            }
            if got < rec_len {
                return Err(DatasetError::Truncated(format!("record {index}")));
            }
            let snr_db = f32::from_le_bytes(buf[0..4].try_into().unwrap());
            let code = u16::from_le_bytes(buf[4..6].try_into().unwrap());
            let reserved = u16::from_le_bytes(buf[6..8].try_into().unwrap());
            let invalid = |reason: String| DatasetError::InvalidRecord { index, reason };
            if reserved != 0 {
                return Err(invalid(format!("reserved field is {reserved:#06x}")));
            }
            let label = Label::from_code(code);
            match label {
                Label::Data(v) if v >= tone_count => {
                    return Err(invalid(format!("label {v} >= tone count {tone_count}")))
                }
                Label::Sync if !includes_sync => {
                    return Err(invalid("sync record but header has no sync flag".into()))
                }
                _ => {}
            }
            let samples = buf[8..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            records.push(Record {
                snr_db,
                label,
                samples,
            });
        }
        let mut rest = Vec::new();
        source.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(DatasetError::CountMismatch {
                declared,
                found: declared + (rest.len() / rec_len.max(1)) as u64,
            });
        }
        Ok(Self {
            sample_rate_hz,
            symbol_len,
            tone_count,
            includes_sync,
            records,
        })
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelHistogram {
    /// Count per data tone.
    pub data: Vec<u64>,
    pub sync: u64,
}

impl LabelHistogram {
    pub fn total(&self) -> u64 {
        self.data.iter().sum::<u64>() + self.sync
    }
}

pub fn label_histogram(dataset: &Dataset) -> Result<LabelHistogram, DatasetError> {
    if dataset.records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut h = LabelHistogram {
        data: vec![0; dataset.tone_count as usize],
        sync: 0,
    };
    for (i, r) in dataset.records.iter().enumerate() {
        match r.label {
            Label::Data(v) => match h.data.get_mut(v as usize) {
                Some(c) => *c += 1,
                None => {
                    return Err(DatasetError::InvalidRecord {
                        index: i as u64,
                        reason: format!("label {v} out of range"),
                    })
                }
            },
            Label::Sync => h.sync += 1,
        }
    }
    Ok(h)
}
