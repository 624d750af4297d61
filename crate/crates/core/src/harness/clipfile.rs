//! `RPGC` clip files.
//!
//! ```text
//! offset size  field
//!      0    4  magic "RPGC"
//!      4    4  version (u32) = 1
//!      8   16  T, H, W, C (u32 each)
//!     24    4  dtype (u32): 0 = f32, 1 = u8
//!     28    4  fps (f32)
//!     32    .  payload, row-major [T][H][W][C]
//! ```
//!
//! All integers and floats are little-endian. `u8` payloads are mapped to
//! `[0, 1]` by dividing by 255 on read.

use std::fs;
use std::path::Path;

use ndarray::Array4;
use thiserror::Error;

use crate::model::FrameClip;

pub const MAGIC: [u8; 4] = *b"RPGC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    #[default]
    F32,
    U8,
}

impl Dtype {
    pub fn code(self) -> u32 {
        match self {
            Dtype::F32 => 0,
            Dtype::U8 => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::U8),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("file too short for header: {0} bytes")]
    TruncatedHeader(usize),
    #[error("bad magic {0:?}, expected \"RPGC\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u32),
    #[error("invalid dimensions T={t} H={h} W={w} C={c}")]
    InvalidDims { t: u32, h: u32, w: u32, c: u32 },
    #[error("payload size overflows for T={t} H={h} W={w} C={c}")]
    SizeOverflow { t: u32, h: u32, w: u32, c: u32 },
    #[error("payload is {actual} bytes, expected {expected}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("invalid fps {0}")]
    InvalidFps(f32),
    #[error("non-finite sample at element {0}")]
    NonFinite(usize),
    #[error("clip dimension {0} does not fit in u32")]
    DimTooLarge(usize),
}

fn u32_at(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4-byte slice"))
}

pub fn decode_clip(bytes: &[u8]) -> Result<FrameClip, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let (t, h, w, c) = (
        u32_at(bytes, 8),
        u32_at(bytes, 12),
        u32_at(bytes, 16),
        u32_at(bytes, 20),
    );
    let code = u32_at(bytes, 24);
    let dtype = Dtype::from_code(code).ok_or(FormatError::UnsupportedDtype(code))?;
    let fps = f32::from_le_bytes(bytes[28..32].try_into().expect("4-byte slice"));

    if t < 2 || h == 0 || w == 0 || !(c == 1 || c == 3) {
        return Err(FormatError::InvalidDims { t, h, w, c });
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(FormatError::InvalidFps(fps));
    }
    let count = [t, h, w]
        .iter()
        .try_fold(c as usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or(FormatError::SizeOverflow { t, h, w, c })?;
    let expected = count
        .checked_mul(dtype.size())
        .ok_or(FormatError::SizeOverflow { t, h, w, c })?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(FormatError::PayloadLength {
            expected,
            actual: payload.len(),
        });
    }

    let values: Vec<f64> = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")) as f64)
            .collect(),
        Dtype::U8 => payload.iter().map(|&b| b as f64 / 255.0).collect(),
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite(i));
    }
    let dims = (t as usize, h as usize, w as usize, c as usize);
    let data = Array4::from_shape_vec(dims, values).expect("length checked above");
    Ok(FrameClip::new(data, fps as f64).expect("header and payload validated"))
}

/// Serializes `clip`; `u8` output rounds `value * 255` clamped to `[0, 255]`.
pub fn encode_clip(clip: &FrameClip, dtype: Dtype) -> Result<Vec<u8>, FormatError> {
    let (t, h, w, c) = clip.dims();
    let dim = |d: usize| u32::try_from(d).map_err(|_| FormatError::DimTooLarge(d));
    let mut out = Vec::with_capacity(HEADER_LEN + clip.data().len() * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [t, h, w, c] {
        out.extend_from_slice(&dim(d)?.to_le_bytes());
    }
    out.extend_from_slice(&dtype.code().to_le_bytes());
    let fps = clip.fps() as f32;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(FormatError::InvalidFps(fps));
    }
    out.extend_from_slice(&fps.to_le_bytes());
    // Standard layout iteration is row-major [T][H][W][C].
    for (i, &v) in clip.data().iter().enumerate() {
        match dtype {
            Dtype::F32 => {
                let f = v as f32;
                if !f.is_finite() {
                    return Err(FormatError::NonFinite(i));
                }
                out.extend_from_slice(&f.to_le_bytes());
            }
            Dtype::U8 => out.push((v * 255.0).round().clamp(0.0, 255.0) as u8),
        }
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum ClipIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: String,
        #[source]
        source: FormatError,
    },
}

pub fn read_clip(path: &Path) -> Result<FrameClip, ClipIoError> {
    let bytes = fs::read(path).map_err(|source| ClipIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_clip(&bytes).map_err(|source| ClipIoError::Format {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_clip(clip: &FrameClip, path: &Path, dtype: Dtype) -> Result<(), ClipIoError> {
    let bytes = encode_clip(clip, dtype).map_err(|source| ClipIoError::Format {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, bytes).map_err(|source| ClipIoError::Io {
        path: path.display().to_string(),
        source,
    })
}
