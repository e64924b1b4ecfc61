//! Binary tamper masks: minimum bounding boxes, 32x32 mask strings and
//! PGM (plus optional PNG) decoding.

use std::fmt::Write as _;
use std::path::Path;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::model::BBox;

/// Side length of the resampled grid behind a mask string.
pub const MASK_SIDE: usize = 32;
/// Length of a mask string.
pub const MASK_STRING_LEN: usize = MASK_SIDE * MASK_SIDE;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("mask has no tampered cells")]
    EmptyMask,
    #[error("bad mask string: {0}")]
    BadMaskString(String),
    #[error("mask dimensions must be non-zero and match the cell count ({width}x{height} vs {cells} cells)")]
    BadDimensions {
        width: usize,
        height: usize,
        cells: usize,
    },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("unsupported mask file format: {0}")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[cfg(feature = "png")]
    #[error("PNG decode failed: {0}")]
    Png(#[from] image::ImageError),
}

/// Row-major binary grid; `true` marks a tampered pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl MaskGrid {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(MaskError::BadDimensions {
                width,
                height,
                cells: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, MaskError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.width + col] = value;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Number of tampered cells.
    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    fn bit_string(&self) -> String {
        self.cells.iter().map(|&c| if c { '1' } else { '0' }).collect()
    }

    /// Accepts either a bare 1024-char mask string (a 32x32 grid) or an
    /// object `{"width", "height", "cells"}` with `cells` a row-major 0/1 string.
    pub(crate) fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) => decode_mask_string(s).map_err(|e| e.to_string()),
            Value::Object(obj) => {
                let dim = |k: &str| {
                    obj.get(k)
                        .and_then(Value::as_u64)
                        .map(|d| d as usize)
                        .ok_or_else(|| format!("{k} must be a positive integer"))
                };
                let width = dim("width")?;
                let height = dim("height")?;
                let cells = obj
                    .get("cells")
                    .and_then(Value::as_str)
                    .ok_or_else(|| "cells must be a 0/1 string".to_string())?;
                let cells = parse_bits(cells).map_err(|e| e.to_string())?;
                Self::new(width, height, cells).map_err(|e| e.to_string())
            }
            _ => Err("expected a mask string or {width, height, cells}".into()),
        }
    }
}

impl Serialize for MaskGrid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MaskGrid", 3)?;
        st.serialize_field("width", &self.width)?;
        st.serialize_field("height", &self.height)?;
        st.serialize_field("cells", &self.bit_string())?;
        st.end()
    }
}

/// Tightest box covering every tampered cell.
///
/// `x` is the column index and `y` the row index; `x2`/`y2` are exclusive.
pub fn min_bbox(mask: &MaskGrid) -> Result<BBox, MaskError> {
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for (i, _) in mask.cells.iter().enumerate().filter(|(_, &c)| c) {
        let (r, c) = (i / mask.width, i % mask.width);
        (r0, r1) = (r0.min(r), r1.max(r + 1));
        (c0, c1) = (c0.min(c), c1.max(c + 1));
    }
    if r1 == 0 {
        return Err(MaskError::EmptyMask);
    }
    BBox::new(c0 as f64, r0 as f64, c1 as f64, r1 as f64)
    .map_err(|_| MaskError::EmptyMask)
}

/// Nearest-neighbour resample to 32x32, sampling source pixel
/// `(floor(r * h / 32), floor(c * w / 32))` for target cell `(r, c)`.
pub fn resample_32(mask: &MaskGrid) -> MaskGrid {
    let mut cells = Vec::with_capacity(MASK_STRING_LEN);
    for r in 0..MASK_SIDE {
        let sr = r * mask.height / MASK_SIDE;
        for c in 0..MASK_SIDE {
            let sc = c * mask.width / MASK_SIDE;
            cells.push(mask.get(sr, sc));
        }
    }
    MaskGrid {
        width: MASK_SIDE,
        height: MASK_SIDE,
        cells,
    }
}

/// Encodes a mask as a 1024-character row-major `0`/`1` string of its 32x32 resample.
pub fn encode_mask_string(mask: &MaskGrid) -> String {
    resample_32(mask).bit_string()
}

/// Inverse of [`encode_mask_string`] for 32x32 grids.
pub fn decode_mask_string(s: &str) -> Result<MaskGrid, MaskError> {
    let cells = parse_bits(s)?;
    if cells.len() != MASK_STRING_LEN {
        return Err(MaskError::BadMaskString(format!(
            "expected {MASK_STRING_LEN} characters, got {}",
            cells.len()
        )));
    }
    Ok(MaskGrid {
        width: MASK_SIDE,
        height: MASK_SIDE,
        cells,
    })
}

fn parse_bits(s: &str) -> Result<Vec<bool>, MaskError> {
    s.chars()
        .enumerate()
        .map(|(i, ch)| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(MaskError::BadMaskString(format!(
                "invalid character {other:?} at position {i}"
            ))),
        })
        .collect()
}

/// Parses a binary (`P5`) or ASCII (`P2`) portable graymap; nonzero pixels are tampered.
pub fn parse_pgm(bytes: &[u8]) -> Result<MaskGrid, MaskError> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(MaskError::Pgm(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(MaskError::Pgm("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(MaskError::Pgm(format!("maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| MaskError::Pgm("image too large".into()))?;
    let cells = if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let raster = bytes
            .get(pos..)
            .filter(|r| r.len() >= n * bpp)
            .ok_or_else(|| MaskError::Pgm("raster shorter than width*height".into()))?;
        raster[..n * bpp]
            .chunks_exact(bpp)
            .map(|px| px.iter().any(|&b| b != 0))
            .collect()
    } else {
        let mut cells = Vec::with_capacity(n);
        for _ in 0..n {
            cells.push(header_number(bytes, &mut pos, "pixel")? != 0);
        }
        cells
    };
    MaskGrid::new(width, height, cells)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], MaskError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(MaskError::Pgm("unexpected end of data".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, MaskError> {
    let tok = next_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MaskError::Pgm(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

/// Binary PGM with maxval 255 (tampered = 255).
pub fn write_pgm(mask: &MaskGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.cells.iter().map(|&c| if c { 255u8 } else { 0 }));
    out
}

/// ASCII PGM, handy for fixtures that must stay readable.
pub fn write_pgm_ascii(mask: &MaskGrid) -> String {
    let mut out = format!("P2\n{} {}\n1\n", mask.width, mask.height);
    for row in mask.cells.chunks(mask.width) {
        let line: Vec<&str> = row.iter().map(|&c| if c { "1" } else { "0" }).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Loads a mask file; PGM always, PNG when the `png` feature is enabled.
pub fn load_mask(path: &Path) -> Result<MaskGrid, MaskError> {
    let bytes = std::fs::read(path).map_err(|source| MaskError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return parse_pgm(&bytes);
    }
    if bytes.starts_with(b"\x89PNG") {
        return load_png(&bytes);
    }
    Err(MaskError::UnsupportedFormat(path.display().to_string()))
}

#[cfg(feature = "png")]
fn load_png(bytes: &[u8]) -> Result<MaskGrid, MaskError> {
    let img = image::load_from_memory(bytes)?.into_luma16();
    let (w, h) = img.dimensions();
    let cells = img.pixels().map(|p| p.0[0] != 0).collect();
    MaskGrid::new(w as usize, h as usize, cells)
}

#[cfg(not(feature = "png"))]
fn load_png(_bytes: &[u8]) -> Result<MaskGrid, MaskError> {
    Err(MaskError::UnsupportedFormat(
        "PNG masks need the `png` feature".into(),
    ))
}
