//! Weights file.
//!
//! Little-endian layout:
//!
//! ```text
//! magic  "MFSKNN01"
//! u32    version (1)
//! u32    record count
//! record*:
//!   u16  name length, name bytes (UTF-8)
//!   u8   dtype (0 = f32, 1 = f64)
//!   u8   rank
//!   u64  dims[rank]
//!   raw  values, row-major
//! ```
//!
//! Records, in order: for each normalization point `bn_input`, `bn_conv`,
//! `bn_hidden` the tensors `.gamma`, `.beta`, `.moving_mean`,
//! `.moving_variance`; `conv.kernel` `[K, 1, F]`, `conv.bias` `[F]`;
//! `dense_hidden.kernel` `[N*F, H]`, `dense_hidden.bias` `[H]`;
//! `dense_output.kernel` `[H, M]`, `dense_output.bias` `[M]`.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::layers::{BatchNorm, Conv1d, Dense};
use super::model::ModelState;
use super::{DType, ModelConfig, Scalar};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"MFSKNN01";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("not a weights file (bad magic)")]
    BadMagic,
    #[error("unsupported weights version {0}")]
    UnsupportedVersion(u32),
    #[error("weights file truncated while reading {0}")]
    Truncated(String),
    #[error("layer {layer}: expected shape {expected:?}, found {found:?}")]
    Shape {
        layer: String,
        expected: Vec<u64>,
        found: Vec<u64>,
    },
    #[error("layer {layer}: stored as {found:?}, expected {expected:?}")]
    DtypeMismatch {
        layer: String,
        expected: DType,
        found: u8,
    },
    #[error("missing record {0}")]
    MissingRecord(String),
    #[error("unexpected record {0}")]
    UnknownRecord(String),
    #[error("duplicate record {0}")]
    DuplicateRecord(String),
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(usize),
    #[error("record name is not UTF-8")]
    BadName,
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Record<'a> {
    name: String,
    dtype: u8,
    dims: Vec<u64>,
    data: &'a [u8],
}

type RecordRef<'a, T> = (String, Vec<u64>, &'a [T]);

fn push_bn<'a, T: Scalar>(out: &mut Vec<RecordRef<'a, T>>, prefix: &str, b: &'a BatchNorm<T>) {
    let dims = vec![b.channels() as u64];
    out.push((format!("{prefix}.gamma"), dims.clone(), &b.gamma[..]));
    out.push((format!("{prefix}.beta"), dims.clone(), &b.beta[..]));
    out.push((format!("{prefix}.moving_mean"), dims.clone(), &b.moving_mean[..]));
    out.push((format!("{prefix}.moving_variance"), dims, &b.moving_variance[..]));
}

fn records<T: Scalar>(state: &ModelState<T>) -> Vec<RecordRef<'_, T>> {
    let c = state.config();
    let (n, f, k, h, m) = (
        c.input_len as u64,
        c.conv_filters as u64,
        c.conv_kernel as u64,
        c.hidden_units as u64,
        c.classes as u64,
    );
    let mut out = Vec::with_capacity(18);
    push_bn(&mut out, "bn_input", &state.bn_input);
    out.push(("conv.kernel".into(), vec![k, 1, f], &state.conv.kernel[..]));
    out.push(("conv.bias".into(), vec![f], &state.conv.bias[..]));
    push_bn(&mut out, "bn_conv", &state.bn_conv);
    out.push(("dense_hidden.kernel".into(), vec![n * f, h], &state.hidden.weight[..]));
    out.push(("dense_hidden.bias".into(), vec![h], &state.hidden.bias[..]));
    push_bn(&mut out, "bn_hidden", &state.bn_hidden);
    out.push(("dense_output.kernel".into(), vec![h, m], &state.output.weight[..]));
    out.push(("dense_output.bias".into(), vec![m], &state.output.bias[..]));
    out
}

/// Serializes every parameter and running statistic.
pub fn save_weights<T: Scalar, W: Write>(state: &ModelState<T>, mut out: W) -> Result<(), WeightsError> {
    out.write_all(&encode(state))?;
    out.flush()?;
    Ok(())
}

fn encode<T: Scalar>(state: &ModelState<T>) -> Vec<u8> {
    let recs = records(state);
    let payload: usize = recs.iter().map(|(_, _, d)| d.len() * T::DTYPE.size() + 64).sum();
    let mut buf = Vec::with_capacity(16 + payload);
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(recs.len() as u32).to_le_bytes());
    for (name, dims, data) in recs {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(T::DTYPE as u8);
        buf.push(dims.len() as u8);
        for d in &dims {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for &v in data {
            v.write_le(&mut buf);
        }
    }
    buf
}

/// SHA-256 of the serialized state, lowercase hex.
pub fn state_digest<T: Scalar>(state: &ModelState<T>) -> String {
    Sha256::digest(encode(state)).iter().map(|b| format!("{b:02x}")).collect()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WeightsError> {
        if self.bytes.len() - self.pos < n {
            return Err(WeightsError::Truncated(what.to_string()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, WeightsError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, WeightsError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, WeightsError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn parse(bytes: &[u8]) -> Result<Vec<Record<'_>>, WeightsError> {
    if bytes.len() < WEIGHTS_MAGIC.len() || &bytes[..8] != WEIGHTS_MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let mut cur = Cursor { bytes, pos: 8 };
    let version = cur.u32("header")?;
    if version != WEIGHTS_VERSION {
        return Err(WeightsError::UnsupportedVersion(version));
    }
    let count = cur.u32("header")?;
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let ctx = format!("record {i}");
        let name_len = cur.u16(&ctx)? as usize;
        let name = std::str::from_utf8(cur.take(name_len, &ctx)?)
            .map_err(|_| WeightsError::BadName)?
            .to_string();
        let dtype = cur.u8(&name)?;
        let rank = cur.u8(&name)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(cur.u64(&name)?);
        }
        let elem = DType::from_tag(dtype).map(DType::size).ok_or_else(|| WeightsError::DtypeMismatch {
            layer: name.clone(),
            expected: DType::F32,
            found: dtype,
        })?;
        let count = dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .and_then(|c| usize::try_from(c).ok())
            .and_then(|c| c.checked_mul(elem))
            .ok_or_else(|| WeightsError::Truncated(name.clone()))?;
        let data = cur.take(count, &name)?;
        out.push(Record { name, dtype, dims, data });
    }
    if cur.pos != bytes.len() {
        return Err(WeightsError::TrailingBytes(bytes.len() - cur.pos));
    }
    Ok(out)
}

/// Reads a state written by [`save_weights`]. The stored dtype must match `T`.
pub fn load_weights<T: Scalar, R: Read>(mut source: R) -> Result<ModelState<T>, WeightsError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let parsed = parse(&bytes)?;
    let mut by_name: HashMap<&str, &Record<'_>> = HashMap::new();
    for r in &parsed {
        if by_name.insert(r.name.as_str(), r).is_some() {
            return Err(WeightsError::DuplicateRecord(r.name.clone()));
        }
    }
    let get = |name: &str| -> Result<&Record<'_>, WeightsError> {
        by_name.get(name).copied().ok_or_else(|| WeightsError::MissingRecord(name.to_string()))
    };
    let shape_err = |r: &Record<'_>, expected: Vec<u64>| WeightsError::Shape {
        layer: r.name.clone(),
        expected,
        found: r.dims.clone(),
    };

    // Architecture is read off the kernel shapes, then every record is
    // checked against it.
    let conv = get("conv.kernel")?;
    let [k, cin, f] = conv.dims[..] else {
        return Err(shape_err(conv, vec![0, 1, 0]));
    };
    if cin != 1 || k == 0 || f == 0 {
        return Err(shape_err(conv, vec![k, 1, f]));
    }
    let hidden = get("dense_hidden.kernel")?;
    let [flat, h] = hidden.dims[..] else {
        return Err(shape_err(hidden, vec![0, 0]));
    };
    if flat % f != 0 || flat == 0 || h == 0 {
        return Err(shape_err(hidden, vec![(flat / f).max(1) * f, h]));
    }
    let out = get("dense_output.kernel")?;
    let [h2, m] = out.dims[..] else {
        return Err(shape_err(out, vec![h, 0]));
    };
    if h2 != h {
        return Err(shape_err(out, vec![h, m]));
    }
    let config = ModelConfig {
        input_len: (flat / f) as usize,
        conv_filters: f as usize,
        conv_kernel: k as usize,
        hidden_units: h as usize,
        classes: m as usize,
    };
    config
        .validate()
        .map_err(|_| shape_err(conv, vec![k, 1, f]))?;

    let template = ModelStateShapes::of(config);
    for r in &parsed {
        let expected = template
            .dims(&r.name)
            .ok_or_else(|| WeightsError::UnknownRecord(r.name.clone()))?;
        if r.dims != expected {
            return Err(shape_err(r, expected));
        }
        if r.dtype != T::DTYPE as u8 {
            return Err(WeightsError::DtypeMismatch {
                layer: r.name.clone(),
                expected: T::DTYPE,
                found: r.dtype,
            });
        }
    }
    let values = |name: &str| -> Result<Vec<T>, WeightsError> {
        Ok(get(name)?.data.chunks_exact(T::DTYPE.size()).map(T::read_le).collect())
    };
    let bn = |prefix: &str| -> Result<BatchNorm<T>, WeightsError> {
        Ok(BatchNorm {
            gamma: values(&format!("{prefix}.gamma"))?,
            beta: values(&format!("{prefix}.beta"))?,
            moving_mean: values(&format!("{prefix}.moving_mean"))?,
            moving_variance: values(&format!("{prefix}.moving_variance"))?,
        })
    };
    Ok(ModelState {
        config,
        bn_input: bn("bn_input")?,
        conv: Conv1d {
            kernel: values("conv.kernel")?,
            bias: values("conv.bias")?,
            kernel_len: config.conv_kernel,
            filters: config.conv_filters,
        },
        bn_conv: bn("bn_conv")?,
        hidden: Dense {
            weight: values("dense_hidden.kernel")?,
            bias: values("dense_hidden.bias")?,
            inputs: config.flat_len(),
            outputs: config.hidden_units,
        },
        bn_hidden: bn("bn_hidden")?,
        output: Dense {
            weight: values("dense_output.kernel")?,
            bias: values("dense_output.bias")?,
            inputs: config.hidden_units,
            outputs: config.classes,
        },
    })
}

struct ModelStateShapes(Vec<(String, Vec<u64>)>);

impl ModelStateShapes {
    fn of(c: ModelConfig) -> Self {
        let (n, f, k, h, m) = (
            c.input_len as u64,
            c.conv_filters as u64,
            c.conv_kernel as u64,
            c.hidden_units as u64,
            c.classes as u64,
        );
        let mut v = Vec::new();
        for (prefix, ch) in [("bn_input", 1), ("bn_conv", f), ("bn_hidden", h)] {
            for t in ["gamma", "beta", "moving_mean", "moving_variance"] {
                v.push((format!("{prefix}.{t}"), vec![ch]));
            }
        }
        v.push(("conv.kernel".into(), vec![k, 1, f]));
        v.push(("conv.bias".into(), vec![f]));
        v.push(("dense_hidden.kernel".into(), vec![n * f, h]));
        v.push(("dense_hidden.bias".into(), vec![h]));
        v.push(("dense_output.kernel".into(), vec![h, m]));
        v.push(("dense_output.bias".into(), vec![m]));
        Self(v)
    }

    fn dims(&self, name: &str) -> Option<Vec<u64>> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, d)| d.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::build_model;

    fn small() -> ModelState<f32> {
        build_model(ModelConfig::grad_check_small(), 3).unwrap()
    }

    fn bytes_of(state: &ModelState<f32>) -> Vec<u8> {
        let mut buf = Vec::new();
        save_weights(state, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut state = small();
        state.bn_conv.moving_mean[1] = 0.123;
        let buf = bytes_of(&state);
        let back: ModelState<f32> = load_weights(&buf[..]).unwrap();
        assert_eq!(back, state);
        assert_eq!(bytes_of(&back), buf);
        assert_eq!(state_digest(&back), state_digest(&state));
    }

    #[test]
    fn f64_round_trip() {
        let state = build_model::<f64>(ModelConfig::grad_check_small(), 1).unwrap();
        let mut buf = Vec::new();
        save_weights(&state, &mut buf).unwrap();
        let back: ModelState<f64> = load_weights(&buf[..]).unwrap();
        assert_eq!(back, state);
        assert!(matches!(
            load_weights::<f32, _>(&buf[..]),
            Err(WeightsError::DtypeMismatch { .. })
        ));
    }

    #[test]
    fn header_layout() {
        let buf = bytes_of(&small());
        assert_eq!(&buf[..8], b"MFSKNN01");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 18);
        let name_len = u16::from_le_bytes(buf[16..18].try_into().unwrap()) as usize;
        assert_eq!(&buf[18..18 + name_len], b"bn_input.gamma");
    }

    #[test]
    fn truncation_is_detected() {
        let buf = bytes_of(&small());
        for cut in [12, 20, buf.len() / 2, buf.len() - 1] {
            assert!(
                matches!(load_weights::<f32, _>(&buf[..cut]), Err(WeightsError::Truncated(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn bad_magic_and_version() {
        assert!(matches!(load_weights::<f32, _>(&b""[..]), Err(WeightsError::BadMagic)));
        let mut buf = bytes_of(&small());
        buf[8] = 2;
        assert!(matches!(load_weights::<f32, _>(&buf[..]), Err(WeightsError::UnsupportedVersion(2))));
        buf[0] = b'X';
        assert!(matches!(load_weights::<f32, _>(&buf[..]), Err(WeightsError::BadMagic)));
    }

    #[test]
    fn shape_error_names_layer() {
        // Rewrite conv.bias as a 5-element vector: the stored data grows by
        // one value so only the declared shape is wrong.
        let state = small();
        let mut buf = Vec::new();
        buf.extend_from_slice(WEIGHTS_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        let recs = records(&state);
        buf.extend_from_slice(&(recs.len() as u32).to_le_bytes());
        for (name, mut dims, data) in recs {
            let mut data = data.to_vec();
            if name == "conv.bias" {
                dims = vec![5];
                data.push(0.0);
            }
            buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.push(0);
            buf.push(dims.len() as u8);
            dims.iter().for_each(|d| buf.extend_from_slice(&d.to_le_bytes()));
            data.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        }
        match load_weights::<f32, _>(&buf[..]) {
            Err(WeightsError::Shape { layer, expected, found }) => {
                assert_eq!(layer, "conv.bias");
                assert_eq!(expected, vec![4]);
                assert_eq!(found, vec![5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut buf = bytes_of(&small());
        buf.push(0);
        assert!(matches!(load_weights::<f32, _>(&buf[..]), Err(WeightsError::TrailingBytes(1))));
    }
}
