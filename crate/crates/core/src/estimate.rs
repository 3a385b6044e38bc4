//! Pixel-wise visibility from estimated transmission and depth, the masked
//! image-wise aggregate, and the five visibility classes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ensure_same, Epsilon, Mask, MaskedField, ScalarField};
use crate::physics::visibility_map;

/// Thresholds for turning a visibility map into one number.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimationConfig {
    pub eps: Epsilon,
    /// Pixels need `T > t_min` to count (drops sky).
    pub t_min: f64,
    /// Pixels need `V < v_max` to count (drops outliers).
    pub v_max: f64,
    /// Returned when no pixel survives the mask.
    pub v_min: f64,
}

impl EstimationConfig {
    pub fn new(eps: Epsilon, t_min: f64, v_max: f64, v_min: f64) -> Result<Self> {
        let cfg = Self { eps, t_min, v_max, v_min };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < 1.0) {
            return Err(Error::Config("t_min must lie in (0, 1)"));
        }
        if !(self.v_min > 0.0) {
            return Err(Error::Config("v_min must be positive"));
        }
        if !(self.v_max > self.v_min) {
            return Err(Error::Config("v_max must exceed v_min"));
        }
        Ok(())
    }
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { eps: Epsilon::DEFAULT, t_min: 1e-2, v_max: 1e5, v_min: 10.0 }
    }
}

/// `V_est = ln(ε)·D_est / ln(T_est)`; same contract as [`visibility_map`].
pub fn pixel_visibility(t_est: &ScalarField, d_est: &ScalarField, eps: Epsilon) -> Result<MaskedField> {
    visibility_map(d_est, t_est, eps)
}

/// Pixels that take part in the image-wise mean: valid in `v_est`,
/// `t_est > t_min` and `v_est < v_max`, all strict.
pub fn estimation_mask(v_est: &MaskedField, t_est: &ScalarField, cfg: &EstimationConfig) -> Result<Mask> {
    ensure_same(v_est.dims(), t_est.dims())?;
    let bits: Vec<bool> = v_est
        .field
        .values()
        .iter()
        .zip(v_est.mask.bits())
        .zip(t_est.values())
        .map(|((&v, &ok), &t)| ok && t > cfg.t_min && v < cfg.v_max)
        .collect();
    let (h, w) = v_est.dims();
    Mask::new(h, w, bits)
}

/// Image-wise visibility together with the mask that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVisibility {
    pub visibility: f64,
    pub mask: Mask,
}

impl ImageVisibility {
    pub fn valid_fraction(&self) -> f64 {
        self.mask.count() as f64 / self.mask.len() as f64
    }
}

/// Masked mean of the visibility map, falling back to `v_min` when the
/// mask is empty. Summation runs in row-major order.
pub fn image_visibility_detailed(
    v_est: &MaskedField,
    t_est: &ScalarField,
    cfg: &EstimationConfig,
) -> Result<ImageVisibility> {
    let mask = estimation_mask(v_est, t_est, cfg)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (&v, &ok) in v_est.field.values().iter().zip(mask.bits()) {
        if ok {
            sum += v;
            n += 1;
        }
    }
    let visibility = if n > 0 { sum / n as f64 } else { cfg.v_min };
    Ok(ImageVisibility { visibility, mask })
}

pub fn image_visibility(v_est: &MaskedField, t_est: &ScalarField, cfg: &EstimationConfig) -> Result<f64> {
    image_visibility_detailed(v_est, t_est, cfg).map(|iv| iv.visibility)
}

/// Visibility class 0..=4, 200 m wide bins, the last one open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VisibilityClass(u8);

impl VisibilityClass {
    pub fn index(self) -> u8 {
        self.0
    }
}

/// Bins are left-closed: `[0,200) → 0`, `[200,400) → 1`, ..., `[800,∞) → 4`.
pub fn classify(visibility: f64) -> Result<VisibilityClass> {
    if !(visibility >= 0.0) {
        return Err(Error::Domain { what: "visibility", value: visibility });
    }
    let class = if visibility < 200.0 {
        0
    } else if visibility < 400.0 {
        1
    } else if visibility < 600.0 {
        2
    } else if visibility < 800.0 {
        3
    } else {
        4
    };
    Ok(VisibilityClass(class))
}
