//! Binary tensor and mask files, raw float import and band export.
//!
//! Both formats share a header: 4 magic bytes, one byte holding the order, then one
//! little-endian `u32` per dimension. Tensor payloads (`MGT1`) are little-endian `f64`,
//! mask payloads (`MGM1`) one byte per entry, 0 or 1. Mode 0 varies fastest in both.

use std::fs;
use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::tensor::DenseTensor;

pub const TENSOR_MAGIC: [u8; 4] = *b"MGT1";
pub const MASK_MAGIC: [u8; 4] = *b"MGM1";

fn encode_header(magic: [u8; 4], dims: &[usize]) -> Result<Vec<u8>> {
    let order = u8::try_from(dims.len())
        .map_err(|_| Error::Format(format!("order {} does not fit in a byte", dims.len())))?;
    let mut out = Vec::with_capacity(5 + 4 * dims.len());
    out.extend_from_slice(&magic);
    out.push(order);
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(out)
}

/// Parses the header and returns the dims plus the payload slice, whose length is checked
/// against `entry_size`.
fn decode_header(bytes: &[u8], magic: [u8; 4], entry_size: usize) -> Result<(Vec<usize>, &[u8])> {
    if bytes.len() < 5 {
        return Err(Error::Truncated {
            expected: 5,
            actual: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    let order = bytes[4] as usize;
    let header_len = 5 + 4 * order;
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            expected: header_len,
            actual: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[5..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")) as usize)
        .collect();
    let payload_len = dims
        .iter()
        .try_fold(entry_size, |acc, &d| acc.checked_mul(d))
        .and_then(|p| p.checked_add(header_len))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow the addressable size")))?;
    match bytes.len().cmp(&payload_len) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            expected: payload_len,
            actual: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - payload_len
        ))),
        std::cmp::Ordering::Equal => Ok((dims, &bytes[header_len..])),
    }
}

pub fn encode_tensor(t: &DenseTensor) -> Result<Vec<u8>> {
    let mut out = encode_header(TENSOR_MAGIC, t.dims())?;
    out.reserve(8 * t.len());
    for v in t.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    let (dims, payload) = decode_header(bytes, TENSOR_MAGIC, 8)?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseTensor::new(dims, data)
}

pub fn encode_mask(mask: &ObservationMask) -> Result<Vec<u8>> {
    let mut out = encode_header(MASK_MAGIC, mask.dims())?;
    out.extend(mask.as_slice().iter().map(|&b| b as u8));
    Ok(out)
}

pub fn decode_mask(bytes: &[u8]) -> Result<ObservationMask> {
    let (dims, payload) = decode_header(bytes, MASK_MAGIC, 1)?;
    let observed = payload
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format(format!("mask byte {other} at entry {i}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    ObservationMask::new(dims, observed)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    write(path.as_ref(), &encode_tensor(t)?)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode_tensor(&read(path.as_ref())?)
}

pub fn save_mask(path: impl AsRef<Path>, mask: &ObservationMask) -> Result<()> {
    write(path.as_ref(), &encode_mask(mask)?)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    decode_mask(&read(path.as_ref())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawFloat {
    F32,
    F64,
}

impl std::str::FromStr for RawFloat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(RawFloat::F32),
            "f64" => Ok(RawFloat::F64),
            other => Err(Error::InvalidArgument(format!(
                "unknown raw type `{other}` (f32|f64)"
            ))),
        }
    }
}

/// Headerless little-endian floats laid out with mode 0 fastest.
pub fn decode_raw(bytes: &[u8], dims: &[usize], kind: RawFloat) -> Result<DenseTensor> {
    let width = match kind {
        RawFloat::F32 => 4,
        RawFloat::F64 => 8,
    };
    let expected = dims
        .iter()
        .try_fold(width, |acc: usize, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow the addressable size")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} bytes left over for dims {dims:?}",
            bytes.len() - expected
        )));
    }
    let data = match kind {
        RawFloat::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect(),
        RawFloat::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    };
    DenseTensor::new(dims.to_vec(), data)
}

pub fn import_raw(path: impl AsRef<Path>, dims: &[usize], kind: RawFloat) -> Result<DenseTensor> {
    decode_raw(&read(path.as_ref())?, dims, kind)
}

/// One band as an 8-bit grayscale image, scaled by the min and max of the whole cube.
/// A constant cube maps to mid-gray.
pub fn band_image(t: &DenseTensor, band: usize) -> Result<GrayImage> {
    let (rows, cols, bands) = match *t.dims() {
        [r, c, b] => (r, c, b),
        _ => {
            return Err(Error::ShapeMismatch(format!(
                "band export needs an order-3 cube, got {:?}",
                t.dims()
            )))
        }
    };
    if band >= bands {
        return Err(Error::InvalidArgument(format!(
            "band {band} out of range for {bands} bands"
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let (lo, hi) = (t.min_value(), t.max_value());
    let scale = |v: f64| -> u8 {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        } else {
            128
        }
    };
    let w = u32::try_from(cols).map_err(|_| Error::Format("image too wide".into()))?;
    let h = u32::try_from(rows).map_err(|_| Error::Format("image too tall".into()))?;
    Ok(GrayImage::from_fn(w, h, |x, y| {
        Luma([scale(t.get(&[y as usize, x as usize, band]))])
    }))
}

/// Writes [`band_image`] as a binary portable graymap.
pub fn export_band(t: &DenseTensor, band: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = band_image(t, band)?;
    let mut bytes = Vec::new();
    let encoder = image::codecs::pnm::PnmEncoder::new(&mut bytes)
        .with_subtype(image::codecs::pnm::PnmSubtype::Graymap(image::codecs::pnm::SampleEncoding::Binary));
    img.write_with_encoder(encoder)
        .map_err(|e| Error::Format(format!("PGM encoding: {e}")))?;
    write(path, &bytes)
}
