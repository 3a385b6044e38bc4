//! Grids and small domain types shared by every module.
//!
//! All grids are row-major. A [`ScalarField`] carries depth, transmission,
//! disparity or visibility depending on where it came from; the type does
//! not distinguish them. Derived quantities that can be undefined at some
//! pixels travel as a [`MaskedField`] rather than with sentinel values.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::Shape("height and width must be at least 1"));
    }
    if height.checked_mul(width) != Some(len) {
        return Err(Error::Shape("buffer length does not equal height * width"));
    }
    Ok(())
}

pub(crate) fn ensure_same(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// H×W grid of reals. NaN is rejected; ±∞ is allowed (sky depth).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(height, width, values.len())?;
        if let Some(&v) = values.iter().find(|v| v.is_nan()) {
            return Err(Error::Domain { what: "field value", value: v });
        }
        Ok(Self { height, width, values })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Elementwise map; the result must again be NaN-free.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.values.iter().copied().map(f).collect())
    }

    /// Elementwise reciprocal, turning depth into disparity and back.
    /// `1/∞ = 0` and `1/0 = ∞`.
    pub fn reciprocal(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| 1.0 / v).collect(),
        }
    }
}

/// Per-pixel validity flags paired with a derived field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(height, width, bits.len())?;
        Ok(Self { height, width, bits })
    }

    pub fn all(height: usize, width: usize, value: bool) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        ensure_same(self.dims(), other.dims())?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect();
        Ok(Mask { height: self.height, width: self.width, bits })
    }
}

/// A field whose values are only meaningful where `mask` is set.
///
/// Invalid entries hold `0.0` and must not be read as data.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedField {
    pub field: ScalarField,
    pub mask: Mask,
}

impl MaskedField {
    pub fn new(field: ScalarField, mask: Mask) -> Result<Self> {
        ensure_same(field.dims(), mask.dims())?;
        Ok(Self { field, mask })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.field.dims()
    }

    /// Values at valid pixels, in row-major order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.field
            .values()
            .iter()
            .zip(self.mask.bits())
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
    }

    pub fn valid_count(&self) -> usize {
        self.mask.count()
    }
}

fn check_unit(what: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// H×W grid of RGB triples with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(height, width, pixels.len())?;
        for px in &pixels {
            for &c in px {
                check_unit("image channel", c)?;
            }
        }
        Ok(Self { height, width, pixels })
    }

    /// Builds an image, clamping each channel into `[0, 1]`. NaN is still an error.
    pub fn new_clamped(height: usize, width: usize, mut pixels: Vec<[f64; 3]>) -> Result<Self> {
        for px in &mut pixels {
            for c in px.iter_mut() {
                *c = c.clamp(0.0, 1.0);
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(height, width, vec![rgb; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// One channel as a scalar field.
    pub fn channel(&self, c: usize) -> ScalarField {
        ScalarField {
            height: self.height,
            width: self.width,
            values: self.pixels.iter().map(|p| p[c]).collect(),
        }
    }
}

/// Spatially constant airlight colour, channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Airlight {
    r: f64,
    g: f64,
    b: f64,
}

impl Airlight {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        Ok(Self {
            r: check_unit("airlight channel", r)?,
            g: check_unit("airlight channel", g)?,
            b: check_unit("airlight channel", b)?,
        })
    }

    pub fn from_array(rgb: [f64; 3]) -> Result<Self> {
        Self::new(rgb[0], rgb[1], rgb[2])
    }

    pub fn gray(v: f64) -> Result<Self> {
        Self::new(v, v, v)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

/// Contrast threshold below which a black object is no longer recognisable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Epsilon(f64);

impl Epsilon {
    pub const DEFAULT: Epsilon = Epsilon(0.05);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain { what: "epsilon", value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}
