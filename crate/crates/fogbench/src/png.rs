//! 8-bit PNG images. Channel values map to bytes by `round(255·x)`.

use std::path::Path;

use fogbench_core::{Mask, RgbImage};
use image::{ImageBuffer, Rgb, Rgba};

use crate::error::{CliError, Result};

pub fn to_byte(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| CliError::Image { path: path.into(), source })?.to_rgb8();
    let (w, h) = img.dimensions();
    let px = img.pixels().map(|p| p.0.map(|b| b as f64 / 255.0)).collect();
    RgbImage::new(h as usize, w as usize, px).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let (h, w) = img.dims();
    let buf: Vec<u8> = img.pixels().iter().flat_map(|p| p.map(to_byte)).collect();
    save(path, ImageBuffer::<Rgb<u8>, _>::from_raw(w as u32, h as u32, buf))
}

pub fn write_raw_rgb(path: &Path, height: usize, width: usize, bytes: Vec<u8>) -> Result<()> {
    save(path, ImageBuffer::<Rgb<u8>, _>::from_raw(width as u32, height as u32, bytes))
}

/// RGB with the mask in the alpha channel: 255 where set, 0 elsewhere.
pub fn write_rgba_masked(path: &Path, img: &RgbImage, mask: &Mask) -> Result<()> {
    let (h, w) = img.dims();
    let buf: Vec<u8> = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .flat_map(|(p, &m)| {
            let [r, g, b] = p.map(to_byte);
            [r, g, b, if m { 255 } else { 0 }]
        })
        .collect();
    save(path, ImageBuffer::<Rgba<u8>, _>::from_raw(w as u32, h as u32, buf))
}

fn save<P>(path: &Path, buf: Option<ImageBuffer<P, Vec<u8>>>) -> Result<()>
where
    P: image::Pixel<Subpixel = u8> + image::PixelWithColorType,
{
    let buf = buf.ok_or_else(|| CliError::format(path, "buffer size does not match dimensions"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| CliError::Image { path: path.into(), source })
}
