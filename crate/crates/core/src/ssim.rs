//! Structural similarity between two scalar fields.
//!
//! Local statistics use a normalised Gaussian window applied only where it
//! fits entirely inside the field (no padding); the score is the mean of
//! the local SSIM map.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ensure_same, ScalarField};
use crate::math::exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, dynamic_range: 1.0 }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        let v = self.k1 * self.dynamic_range;
        v * v
    }

    pub fn c2(&self) -> f64 {
        let v = self.k2 * self.dynamic_range;
        v * v
    }

    /// 1-D Gaussian taps summing to one; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let centre = (self.window / 2) as f64;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let x = i as f64 - centre;
                exp(-x * x / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

/// Separable "valid" correlation of a row-major grid.
fn filter_valid(src: &[f64], height: usize, width: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let ow = width - k + 1;
    let oh = height - k + 1;
    let mut rows = vec![0.0; height * ow];
    for r in 0..height {
        for c in 0..ow {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                acc += kv * src[r * width + c + i];
            }
            rows[r * ow + c] = acc;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                acc += kv * rows[(r + i) * ow + c];
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// Local SSIM map, `(h − k + 1) × (w − k + 1)` for window size `k`.
pub fn ssim_map(x: &ScalarField, y: &ScalarField, cfg: &SsimConfig) -> Result<ScalarField> {
    ensure_same(x.dims(), y.dims())?;
    let (h, w) = x.dims();
    if cfg.window == 0 || h < cfg.window || w < cfg.window {
        return Err(Error::WindowTooLarge { window: cfg.window, height: h, width: w });
    }
    let kernel = cfg.kernel();
    let xs = x.values();
    let ys = y.values();
    let sq = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..xs.len()).map(f).collect() };
    let mu_x = filter_valid(xs, h, w, &kernel);
    let mu_y = filter_valid(ys, h, w, &kernel);
    let e_xx = filter_valid(&sq(&|i| xs[i] * xs[i]), h, w, &kernel);
    let e_yy = filter_valid(&sq(&|i| ys[i] * ys[i]), h, w, &kernel);
    let e_xy = filter_valid(&sq(&|i| xs[i] * ys[i]), h, w, &kernel);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let map = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .collect();
    ScalarField::new(h - cfg.window + 1, w - cfg.window + 1, map)
}

pub fn ssim_with(x: &ScalarField, y: &ScalarField, cfg: &SsimConfig) -> Result<f64> {
    let map = ssim_map(x, y, cfg)?;
    Ok(map.values().iter().sum::<f64>() / map.len() as f64)
}

/// Mean SSIM with an 11×11 Gaussian window (σ = 1.5), `C1 = 0.01²`, `C2 = 0.03²`.
pub fn ssim(x: &ScalarField, y: &ScalarField) -> Result<f64> {
    ssim_with(x, y, &SsimConfig::default())
}
