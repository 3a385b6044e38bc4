//! Procedural street-like scenes, so the generator runs without captured data.
//!
//! A scene is a pinhole view over a flat ground plane. Above the horizon
//! there is open sky, a skyline of buildings at constant depths, or a
//! single far wall. A few boxes stand on the ground. Colours are whole
//! multiples of 1/255 and depths are exactly representable as `f32`, so the
//! 8-bit PNG and 32-bit PFM files written for a scene are lossless.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{RgbImage, ScalarField};
use crate::synth::{scene_rng, Scene};

const MIN_DEPTH_M: f64 = 1.0;
const MAX_GROUND_DEPTH_M: f64 = 2000.0;

fn quantize(c: f64) -> f64 {
    libm::round(c.clamp(0.0, 1.0) * 255.0) / 255.0
}

fn color<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> [f64; 3] {
    [0; 3].map(|_| quantize(rng.random_range(lo..hi)))
}

fn f32_exact(d: f64) -> f64 {
    if d.is_finite() {
        f64::from(d as f32)
    } else {
        d
    }
}

#[derive(Clone, Copy)]
enum Backdrop {
    Sky,
    Skyline,
    Wall,
}

/// Builds procedural scene number `index` for the given seed and size.
pub fn procedural_scene(index: u32, height: usize, width: usize, seed: u64) -> Result<Scene> {
    if height < 2 || width < 2 {
        return Err(Error::Shape("procedural scenes need at least 2x2 pixels"));
    }
    let mut rng = scene_rng(seed, index);
    let h = height as f64;
    let w = width as f64;

    let horizon = h * rng.random_range(0.3..0.55);
    let cam_height = rng.random_range(1.2..2.0);
    let focal = w * rng.random_range(0.6..1.0);
    let backdrop = match rng.random_range(0..3u8) {
        0 => Backdrop::Sky,
        1 => Backdrop::Skyline,
        _ => Backdrop::Wall,
    };

    let mut depth = vec![f64::INFINITY; height * width];
    let mut rgb = vec![[0.0; 3]; height * width];

    // Ground: depth of the plane point seen through each row's centre.
    let ground_a = color(&mut rng, 0.15, 0.45);
    let ground_b = color(&mut rng, 0.15, 0.45);
    let tile = rng.random_range(2..6usize);
    let ground_depth = |r: usize| -> Option<f64> {
        let below = r as f64 + 0.5 - horizon;
        (below > 0.0).then(|| (cam_height * focal / below).clamp(MIN_DEPTH_M, MAX_GROUND_DEPTH_M))
    };
    for r in 0..height {
        if let Some(d) = ground_depth(r) {
            for c in 0..width {
                let i = r * width + c;
                depth[i] = d;
                rgb[i] = if (r / tile + c / tile) % 2 == 0 { ground_a } else { ground_b };
            }
        }
    }

    // Backdrop above the horizon.
    let sky_top = color(&mut rng, 0.55, 0.75);
    let sky_bottom = color(&mut rng, 0.75, 0.95);
    match backdrop {
        Backdrop::Sky => {}
        Backdrop::Skyline => {
            let mut c0 = 0usize;
            while c0 < width {
                let span = rng.random_range(1..=(width / 4).max(1));
                let d = rng.random_range(80.0..600.0);
                let top = rng.random_range(0.0..horizon.max(1.0));
                let facade = color(&mut rng, 0.2, 0.7);
                for c in c0..(c0 + span).min(width) {
                    for r in 0..height {
                        let i = r * width + c;
                        if (r as f64) >= top && depth[i] > d {
                            depth[i] = d;
                            rgb[i] = facade;
                        }
                    }
                }
                c0 += span;
            }
        }
        Backdrop::Wall => {
            let d = rng.random_range(40.0..300.0);
            let a = color(&mut rng, 0.3, 0.7);
            let b = color(&mut rng, 0.3, 0.7);
            for r in 0..height {
                for c in 0..width {
                    let i = r * width + c;
                    if depth[i] > d {
                        depth[i] = d;
                        rgb[i] = if (r / 3 + c / 2) % 2 == 0 { a } else { b };
                    }
                }
            }
        }
    }
    for r in 0..height {
        let s = r as f64 / (h - 1.0);
        for c in 0..width {
            let i = r * width + c;
            if depth[i].is_infinite() {
                rgb[i] = [0, 1, 2].map(|k| quantize(sky_top[k] + (sky_bottom[k] - sky_top[k]) * s));
            }
        }
    }

    // Boxes standing on the ground, at the depth of their footprint row.
    let boxes = rng.random_range(1..=3);
    for _ in 0..boxes {
        let foot = rng.random_range(0.0..1.0);
        let foot_row = (horizon + (h - horizon) * foot).min(h - 1.0) as usize;
        let Some(d) = ground_depth(foot_row) else { continue };
        let half_w = (rng.random_range(0.03..0.15) * w).max(1.0) as usize;
        let tall = (rng.random_range(0.05..0.3) * h).max(1.0) as usize;
        let center = rng.random_range(0..width);
        let fill = color(&mut rng, 0.05, 0.85);
        for r in foot_row.saturating_sub(tall)..=foot_row {
            for c in center.saturating_sub(half_w)..(center + half_w + 1).min(width) {
                let i = r * width + c;
                if depth[i] > d {
                    depth[i] = d;
                    rgb[i] = fill;
                }
            }
        }
    }

    let depth: Vec<f64> = depth.into_iter().map(f32_exact).collect();
    Ok(Scene {
        id: format!("scene_{index:04}"),
        fogless: RgbImage::new(height, width, rgb)?,
        depth: ScalarField::new(height, width, depth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic() {
        assert_eq!(procedural_scene(4, 20, 30, 9).unwrap(), procedural_scene(4, 20, 30, 9).unwrap());
        assert_ne!(procedural_scene(4, 20, 30, 9).unwrap(), procedural_scene(5, 20, 30, 9).unwrap());
    }

    #[test]
    fn colours_and_depths_are_storable() {
        for i in 0..20 {
            let s = procedural_scene(i, 24, 32, 3).unwrap();
            for p in s.fogless.pixels() {
                for &c in p {
                    assert_eq!(libm::round(c * 255.0) / 255.0, c);
                }
            }
            for &d in s.depth.values() {
                assert!(d.is_infinite() || (d >= MIN_DEPTH_M && f64::from(d as f32) == d));
            }
        }
    }

    #[test]
    fn bottom_row_is_near_ground() {
        for i in 0..50 {
            let s = procedural_scene(i, 64, 64, 0).unwrap();
            let near = (0..64).map(|c| s.depth.get(63, c)).fold(f64::INFINITY, f64::min);
            assert!(near < 10.0, "scene {i}: nearest bottom depth {near}");
        }
    }

    #[test]
    fn tiny_scenes_rejected() {
        assert!(procedural_scene(0, 1, 8, 0).is_err());
    }
}
