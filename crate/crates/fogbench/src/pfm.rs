//! Portable float maps.
//!
//! Files are written little-endian (negative scale) with rows stored
//! bottom to top, as the format prescribes. Either byte order is accepted
//! on read.

use std::fs;
use std::path::Path;

use fogbench_core::{RgbImage, ScalarField};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, top row first.
    pub data: Vec<f32>,
}

impl Pfm {
    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{magic}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        let row = self.width * self.channels;
        for r in (0..self.height).rev() {
            for v in &self.data[r * row..(r + 1) * row] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Pfm, String> {
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII header")?);
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let channels = match fields[0] {
            "PF" => 3,
            "Pf" => 1,
            m => return Err(format!("unknown magic {m:?}")),
        };
        let width: usize = fields[1].parse().map_err(|_| "bad width")?;
        let height: usize = fields[2].parse().map_err(|_| "bad height")?;
        let scale: f32 = fields[3].parse().map_err(|_| "bad scale")?;
        if scale == 0.0 || !scale.is_finite() {
            return Err("scale must be finite and nonzero".into());
        }
        let little = scale < 0.0;
        let row = width.checked_mul(channels).ok_or("dimensions overflow")?;
        let need = row.checked_mul(height).and_then(|n| n.checked_mul(4)).ok_or("dimensions overflow")?;
        let raster = bytes.get(pos..).ok_or("truncated raster")?;
        if raster.len() != need {
            return Err(format!("raster has {} bytes, expected {need}", raster.len()));
        }
        let mut data = vec![0f32; row * height];
        for (k, chunk) in raster.chunks_exact(4).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            let (file_row, col) = (k / row, k % row);
            data[(height - 1 - file_row) * row + col] = v;
        }
        Ok(Pfm { width, height, channels, data })
    }

    pub fn from_field(f: &ScalarField) -> Pfm {
        Pfm { width: f.width(), height: f.height(), channels: 1, data: f.values().iter().map(|&v| v as f32).collect() }
    }

    pub fn from_image(img: &RgbImage) -> Pfm {
        let (height, width) = img.dims();
        let data = img.pixels().iter().flat_map(|p| p.map(|c| c as f32)).collect();
        Pfm { width, height, channels: 3, data }
    }
}

pub fn write(path: &Path, pfm: &Pfm) -> Result<()> {
    fs::write(path, pfm.encode()).map_err(CliError::io(path))
}

pub fn read(path: &Path) -> Result<Pfm> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Pfm::decode(&bytes).map_err(|e| CliError::format(path, e))
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    write(path, &Pfm::from_field(field))
}

/// Reads a single-channel map. NaN entries are rejected.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let pfm = read(path)?;
    if pfm.channels != 1 {
        return Err(CliError::format(path, "expected a single-channel map"));
    }
    let values = pfm.data.iter().map(|&v| v as f64).collect();
    ScalarField::new(pfm.height, pfm.width, values).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_image(path: &Path, img: &RgbImage) -> Result<()> {
    write(path, &Pfm::from_image(img))
}

/// Reads a three-channel map; channels are clamped to `[0, 1]`.
pub fn read_image(path: &Path) -> Result<RgbImage> {
    let pfm = read(path)?;
    if pfm.channels != 3 {
        return Err(CliError::format(path, "expected a three-channel map"));
    }
    let px = pfm.data.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]).collect();
    RgbImage::new_clamped(pfm.height, pfm.width, px).map_err(|e| CliError::format(path, e.to_string()))
}
