//! IDX tensor encoding (the MNIST container format).
//!
//! ```text
//! bytes 0-1  0x00 0x00
//! byte  2    dtype (0x08 u8, 0x0E f64 big-endian)
//! byte  3    number of axes
//! then       one big-endian u32 size per axis
//! then       payload, row-major
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Source};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAGIC_IMAGES: u32 = 0x0000_0803;
pub const MAGIC_LABELS: u32 = 0x0000_0801;

pub const DTYPE_U8: u8 = 0x08;
pub const DTYPE_F64: u8 = 0x0E;

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    U8(Vec<u8>),
    F64(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: IdxData,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated header: need bytes {at}..{}", at + 4)))
}

/// Decodes any supported IDX tensor.
pub fn parse(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(Error::Format(format!(
            "file too short for IDX magic: {} bytes",
            bytes.len()
        )));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Format(format!(
            "bad IDX magic: leading bytes {:#04x} {:#04x}",
            bytes[0], bytes[1]
        )));
    }
    let dtype = bytes[2];
    let naxes = bytes[3] as usize;
    let mut dims = Vec::with_capacity(naxes);
    for a in 0..naxes {
        dims.push(read_u32(bytes, 4 + 4 * a)? as usize);
    }
    let start = 4 + 4 * naxes;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let payload = &bytes[start..];
    let data = match dtype {
        DTYPE_U8 => {
            if payload.len() < count {
                return Err(Error::Format(format!(
                    "truncated payload: expected {count} bytes, found {}",
                    payload.len()
                )));
            }
            IdxData::U8(payload[..count].to_vec())
        }
        DTYPE_F64 => {
            let need = count
                .checked_mul(8)
                .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
            if payload.len() < need {
                return Err(Error::Format(format!(
                    "truncated payload: expected {need} bytes, found {}",
                    payload.len()
                )));
            }
            IdxData::F64(
                payload[..need]
                    .chunks_exact(8)
                    .map(|c| f64::from_be_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                    .collect(),
            )
        }
        other => {
            return Err(Error::Format(format!("unsupported IDX dtype {other:#04x}")));
        }
    };
    Ok(IdxTensor { dims, data })
}

fn magic_of(bytes: &[u8]) -> Option<u32> {
    read_u32(bytes, 0).ok()
}

/// Decodes an MNIST image file: each image flattened row-major, pixels / 255.
pub fn decode_images(bytes: &[u8]) -> Result<Dataset> {
    let magic = magic_of(bytes);
    if magic != Some(MAGIC_IMAGES) {
        return Err(Error::Format(format!(
            "expected image magic {MAGIC_IMAGES:#010x}, found {}",
            magic.map_or_else(|| "short file".into(), |m| format!("{m:#010x}"))
        )));
    }
    let t = parse(bytes)?;
    let (count, rows, cols) = (t.dims[0], t.dims[1], t.dims[2]);
    if count == 0 || rows * cols == 0 {
        return Err(Error::EmptyDataset);
    }
    let IdxData::U8(pixels) = t.data else {
        unreachable!("magic fixes the dtype to u8")
    };
    let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Dataset::new(Matrix::from_vec(count, rows * cols, data)?, Source::Mnist, None)
}

/// Decodes an MNIST label file.
pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = magic_of(bytes);
    if magic != Some(MAGIC_LABELS) {
        return Err(Error::Format(format!(
            "expected label magic {MAGIC_LABELS:#010x}, found {}",
            magic.map_or_else(|| "short file".into(), |m| format!("{m:#010x}"))
        )));
    }
    match parse(bytes)?.data {
        IdxData::U8(v) => Ok(v),
        IdxData::F64(_) => unreachable!("magic fixes the dtype to u8"),
    }
}

/// Images plus optional labels, count-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistData {
    pub images: Dataset,
    pub labels: Option<Vec<u8>>,
}

pub fn decode_mnist(images: &[u8], labels: Option<&[u8]>) -> Result<MnistData> {
    let images = decode_images(images)?;
    let labels = labels.map(decode_labels).transpose()?;
    if let Some(l) = &labels {
        if l.len() != images.num_samples() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                images.num_samples(),
                l.len()
            )));
        }
    }
    Ok(MnistData { images, labels })
}

fn header(dtype: u8, dims: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * dims.len());
    out.extend_from_slice(&[0, 0, dtype, dims.len() as u8]);
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out
}

/// Encodes `[0, 1]` data as an MNIST-style u8 image file with the given image
/// shape. Values are quantized with `round(255 v)`.
pub fn encode_images(data: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: rows * cols,
        });
    }
    let mut out = header(DTYPE_U8, &[data.num_samples(), rows, cols]);
    for &v in data.samples().as_slice() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "value {v} cannot be stored as a u8 pixel"
            )));
        }
        out.push(libm::round(v * 255.0) as u8);
    }
    Ok(out)
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = header(DTYPE_U8, &[labels.len()]);
    out.extend_from_slice(labels);
    out
}

/// Encodes arbitrary real data losslessly as a 2-axis f64 IDX tensor.
pub fn encode_f64(data: &Dataset) -> Vec<u8> {
    let mut out = header(DTYPE_F64, &[data.num_samples(), data.dim()]);
    for &v in data.samples().as_slice() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Decodes a 2-axis f64 IDX tensor written by [`encode_f64`].
pub fn decode_f64(bytes: &[u8]) -> Result<Dataset> {
    let t = parse(bytes)?;
    if t.dims.len() != 2 {
        return Err(Error::Format(format!(
            "expected a 2-axis tensor, found {} axes",
            t.dims.len()
        )));
    }
    match t.data {
        IdxData::F64(v) => Dataset::new(Matrix::from_vec(t.dims[0], t.dims[1], v)?, Source::File, None),
        IdxData::U8(_) => Err(Error::Format("expected f64 payload".into())),
    }
}
