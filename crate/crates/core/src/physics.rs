//! Koschmieder's law and its algebraic consequences.
//!
//! Logarithms here are natural logs.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ensure_same, Airlight, Epsilon, Mask, MaskedField, RgbImage, ScalarField};
use crate::math::{exp, ln};

/// `T = exp(−β·D)` per pixel.
///
/// Sky pixels (`D = +∞`) get `T = 0` when `β > 0`. With `β = 0` there is
/// no fog and every pixel, sky included, has `T = 1`.
pub fn transmission_from_depth(depth: &ScalarField, beta: f64) -> Result<ScalarField> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain { what: "extinction coefficient", value: beta });
    }
    if let Some(&d) = depth.values().iter().find(|&&d| d < 0.0) {
        return Err(Error::Domain { what: "depth", value: d });
    }
    depth.map(|d| if beta == 0.0 { 1.0 } else { exp(-beta * d) })
}

/// Composes a foggy image: `I = J·T + A·(1 − T)` per channel.
pub fn synthesize(fogless: &RgbImage, transmission: &ScalarField, airlight: Airlight) -> Result<RgbImage> {
    ensure_same(fogless.dims(), transmission.dims())?;
    let a = airlight.to_array();
    let mut out = Vec::with_capacity(fogless.len());
    for (j, &t) in fogless.pixels().iter().zip(transmission.values()) {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain { what: "transmission", value: t });
        }
        out.push([0, 1, 2].map(|c| j[c] * t + a[c] * (1.0 - t)));
    }
    RgbImage::new(fogless.height(), fogless.width(), out)
}

/// A reconstructed fog-free image and the pixels where it is trustworthy.
#[derive(Debug, Clone, PartialEq)]
pub struct Defogged {
    /// Reconstruction clamped to `[0, 1]`. Invalid pixels carry the foggy input.
    pub image: RgbImage,
    pub mask: Mask,
}

/// Inverts the scattering model: `J = (I − A)/T + A`, clamped to `[0, 1]`.
///
/// Pixels with `T < t_floor` are not reconstructed and are flagged invalid.
/// Pixels with `T = 1` pass through unchanged.
pub fn defog(foggy: &RgbImage, airlight: Airlight, transmission: &ScalarField, t_floor: f64) -> Result<Defogged> {
    if !(t_floor > 0.0) {
        return Err(Error::Config("t_floor must be positive"));
    }
    ensure_same(foggy.dims(), transmission.dims())?;
    let a = airlight.to_array();
    let mut pixels = Vec::with_capacity(foggy.len());
    let mut bits = Vec::with_capacity(foggy.len());
    for (i, &t) in foggy.pixels().iter().zip(transmission.values()) {
        if t == 1.0 {
            pixels.push(*i);
            bits.push(true);
        } else if t >= t_floor {
            pixels.push([0, 1, 2].map(|c| ((i[c] - a[c]) / t + a[c]).clamp(0.0, 1.0)));
            bits.push(true);
        } else {
            pixels.push(*i);
            bits.push(false);
        }
    }
    let (h, w) = foggy.dims();
    Ok(Defogged { image: RgbImage::new(h, w, pixels)?, mask: Mask::new(h, w, bits)? })
}

/// Relative luminance of an object against its background.
pub fn contrast(object_luminance: f64, background_luminance: f64) -> Result<f64> {
    if background_luminance == 0.0 {
        return Err(Error::Domain { what: "background luminance", value: background_luminance });
    }
    Ok((object_luminance - background_luminance) / background_luminance)
}

/// `V = ln(ε)·D / ln(T)` per pixel.
///
/// Valid only where `0 < T < 1` and `0 < D < ∞`; `T = 1` has no fog
/// signal and `T = 0` is sky. Subnormal `T` counts as sky, since its
/// logarithm has lost precision. Invalid pixels hold 0 and are cleared in the
/// mask.
pub fn visibility_map(depth: &ScalarField, transmission: &ScalarField, eps: Epsilon) -> Result<MaskedField> {
    ensure_same(depth.dims(), transmission.dims())?;
    let ln_eps = ln(eps.value());
    let mut values = Vec::with_capacity(depth.len());
    let mut bits = Vec::with_capacity(depth.len());
    for (&d, &t) in depth.values().iter().zip(transmission.values()) {
        let usable = (f64::MIN_POSITIVE..1.0).contains(&t) && d > 0.0 && d.is_finite();
        let v = if usable { ln_eps * d / ln(t) } else { 0.0 };
        if usable && v.is_finite() && v > 0.0 {
            values.push(v);
            bits.push(true);
        } else {
            values.push(0.0);
            bits.push(false);
        }
    }
    let (h, w) = depth.dims();
    MaskedField::new(ScalarField::new(h, w, values)?, Mask::new(h, w, bits)?)
}

/// `V = −ln(ε)/β`.
pub fn visibility_from_beta(beta: f64, eps: Epsilon) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain { what: "extinction coefficient", value: beta });
    }
    Ok(-ln(eps.value()) / beta)
}

/// `β = −ln(ε)/V`, the exact inverse of [`visibility_from_beta`].
pub fn beta_from_visibility(visibility: f64, eps: Epsilon) -> Result<f64> {
    if !(visibility > 0.0 && visibility.is_finite()) {
        return Err(Error::Domain { what: "visibility", value: visibility });
    }
    Ok(-ln(eps.value()) / visibility)
}
