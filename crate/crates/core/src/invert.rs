//! Recovers airlight and extinction coefficient from a foggy image, its
//! fog-free counterpart and depth.
//!
//! The forward model `I = J·t + A·(1 − t)` with `t = exp(−β·D)` is linear
//! in `A` once `β` is fixed, so the fit is a variable-projection problem:
//! for each trial `β` the optimal `A` has a closed form, and only the 1-D
//! profile `S(β) = min_A ‖r(A, β)‖²` is searched. The search is a log-spaced
//! scan over the admissible `β` range, golden-section refinement inside the
//! best scan cell, then a few Newton steps on finite-difference derivatives.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ensure_same, Airlight, Epsilon, Mask, MaskedField, RgbImage, ScalarField};
use crate::math::{exp, ln, sqrt};
use crate::physics::{beta_from_visibility, visibility_from_beta};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub eps: Epsilon,
    /// Visibility range the data was drawn from, in metres.
    pub visibility_range: (f64, f64),
    /// The implied `β` interval is widened by this factor on each side.
    pub bracket_widen: f64,
    pub scan_points: usize,
    /// Golden-section stops once the bracket is narrower than this (1/m).
    pub bracket_tol: f64,
    pub newton_steps: usize,
    /// Budget for golden-section plus Newton iterations.
    pub max_iter: usize,
    /// Pixels with `t` below this at the scan optimum are treated as sky.
    pub sky_t_cutoff: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            eps: Epsilon::DEFAULT,
            visibility_range: (10.0, 1000.0),
            bracket_widen: 2.0,
            scan_points: 64,
            bracket_tol: 1e-8,
            newton_steps: 5,
            max_iter: 200,
            sky_t_cutoff: 1e-3,
        }
    }
}

impl FitOptions {
    /// `[−ln ε / (w·V_hi), w·(−ln ε) / V_lo]`.
    pub fn beta_bracket(&self) -> Result<(f64, f64)> {
        let (v_lo, v_hi) = self.visibility_range;
        if !(v_lo > 0.0 && v_hi > v_lo) {
            return Err(Error::Config("visibility range must satisfy 0 < lo < hi"));
        }
        if !(self.bracket_widen >= 1.0) {
            return Err(Error::Config("bracket_widen must be at least 1"));
        }
        let lo = beta_from_visibility(v_hi, self.eps)? / self.bracket_widen;
        let hi = beta_from_visibility(v_lo, self.eps)? * self.bracket_widen;
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub airlight: Airlight,
    pub beta: f64,
    pub visibility: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective values seen during a fit, for inspection and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// `(β, S(β))` at each scan point.
    pub scan: Vec<(f64, f64)>,
    /// Best objective inside the golden-section bracket after each shrink.
    pub golden: Vec<f64>,
    /// Objective after each accepted Newton step.
    pub newton: Vec<f64>,
}

struct Pixel {
    fogless: [f64; 3],
    foggy: [f64; 3],
    depth: f64,
}

struct Profile {
    pixels: Vec<Pixel>,
}

impl Profile {
    /// Finite-depth pixels with `e^{−βD} ≥ sky_t_cutoff`, in raster order.
    fn active(foggy: &RgbImage, fogless: &RgbImage, depth: &ScalarField, beta: f64, sky_t_cutoff: f64) -> Self {
        Profile {
            pixels: foggy
                .pixels()
                .iter()
                .zip(fogless.pixels())
                .zip(depth.values())
                .filter(|(_, &d)| d.is_finite() && d >= 0.0 && exp(-beta * d) >= sky_t_cutoff)
                .map(|((&i, &j), &d)| Pixel { fogless: j, foggy: i, depth: d })
                .collect(),
        }
    }

    /// Closed-form least-squares airlight for fixed `β`, clamped to `[0, 1]`.
    fn airlight(&self, beta: f64) -> [f64; 3] {
        let mut num = [0.0; 3];
        let mut den = 0.0;
        for p in &self.pixels {
            let t = exp(-beta * p.depth);
            let s = 1.0 - t;
            for c in 0..3 {
                num[c] += (p.foggy[c] - p.fogless[c] * t) * s;
            }
            den += s * s;
        }
        if den > 0.0 {
            num.map(|n| (n / den).clamp(0.0, 1.0))
        } else {
            // No pixel sees any fog: A is unconstrained, use the mean observation.
            let n = self.pixels.len().max(1) as f64;
            let mut mean = [0.0; 3];
            for p in &self.pixels {
                for c in 0..3 {
                    mean[c] += p.foggy[c] / n;
                }
            }
            mean
        }
    }

    fn residual(&self, beta: f64, a: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for p in &self.pixels {
            let t = exp(-beta * p.depth);
            for c in 0..3 {
                let r = p.fogless[c] * t + a[c] * (1.0 - t) - p.foggy[c];
                s += r * r;
            }
        }
        s
    }

    fn objective(&self, beta: f64) -> f64 {
        self.residual(beta, self.airlight(beta))
    }
}

/// Least-squares fit of uniform fog. See [`fit_uniform_fog_traced`].
pub fn fit_uniform_fog(
    foggy: &RgbImage,
    fogless: &RgbImage,
    depth: &ScalarField,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_uniform_fog_traced(foggy, fogless, depth, opts).map(|(r, _)| r)
}

/// Minimises `Σ ‖J·e^{−βD} + A(1 − e^{−βD}) − I‖²` over `A ∈ [0,1]³`, `β > 0`.
///
/// Pixels with infinite or negative depth are ignored. Returns
/// [`Error::Identifiability`] when the profile is flat in `β` (for example
/// `J = A` everywhere). Running out of `max_iter` is not an error; the
/// result then has `converged = false`.
pub fn fit_uniform_fog_traced(
    foggy: &RgbImage,
    fogless: &RgbImage,
    depth: &ScalarField,
    opts: &FitOptions,
) -> Result<(FitResult, FitTrace)> {
    ensure_same(foggy.dims(), fogless.dims())?;
    ensure_same(foggy.dims(), depth.dims())?;
    if opts.scan_points < 3 {
        return Err(Error::Config("scan_points must be at least 3"));
    }
    if !(opts.bracket_tol > 0.0) {
        return Err(Error::Config("bracket_tol must be positive"));
    }
    let (beta_lo, beta_hi) = opts.beta_bracket()?;

    let mut profile = Profile {
        pixels: foggy
            .pixels()
            .iter()
            .zip(fogless.pixels())
            .zip(depth.values())
            .filter(|(_, &d)| d.is_finite() && d >= 0.0)
            .map(|((&i, &j), &d)| Pixel { fogless: j, foggy: i, depth: d })
            .collect(),
    };
    if profile.pixels.is_empty() {
        return Err(Error::EmptyMask);
    }

    let mut trace = FitTrace::default();

    // Coarse log-spaced scan.
    let n = opts.scan_points;
    let log_lo = ln(beta_lo);
    let step = (ln(beta_hi) - log_lo) / (n - 1) as f64;
    for k in 0..n {
        let b = exp(log_lo + step * k as f64);
        trace.scan.push((b, profile.objective(b)));
    }
    let (s_min, s_max) = trace
        .scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, s)| (lo.min(s), hi.max(s)));
    // Flat means the spread is what fogless-to-airlight contrasts of 1e-6
    // per channel could produce, about single-precision storage error.
    if s_max - s_min <= 1e-9 * s_max + 3e-12 * profile.pixels.len() as f64 {
        return Err(Error::Identifiability);
    }
    let best = trace
        .scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap_or(0);

    // Sky pixels carry no β information.
    let beta_scan = trace.scan[best].0;
    profile.pixels.retain(|p| exp(-beta_scan * p.depth) >= opts.sky_t_cutoff);
    if profile.pixels.is_empty() {
        return Err(Error::EmptyMask);
    }

    // Golden section inside the neighbouring scan cells.
    let mut a = trace.scan[best.saturating_sub(1)].0;
    let mut b = trace.scan[(best + 1).min(n - 1)].0;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = profile.objective(c);
    let mut fd = profile.objective(d);
    let mut iterations = 0;
    while b - a > opts.bracket_tol && iterations < opts.max_iter {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = profile.objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = profile.objective(d);
        }
        trace.golden.push(fc.min(fd));
        iterations += 1;
    }
    let mut converged = b - a <= opts.bracket_tol;
    let (mut beta, mut f_beta) = if fc < fd { (c, fc) } else { (d, fd) };

    // Newton polish with central differences.
    for _ in 0..opts.newton_steps {
        if iterations >= opts.max_iter {
            converged = false;
            break;
        }
        iterations += 1;
        let h = 1e-6 * beta;
        let f_plus = profile.objective(beta + h);
        let f_minus = profile.objective(beta - h);
        let grad = (f_plus - f_minus) / (2.0 * h);
        let curv = (f_plus - 2.0 * f_beta + f_minus) / (h * h);
        if !(curv > 0.0) {
            break;
        }
        let next = beta - grad / curv;
        if !(next > 0.0) {
            break;
        }
        let f_next = profile.objective(next);
        if f_next > f_beta {
            break;
        }
        let moved = (next - beta).abs();
        beta = next;
        f_beta = f_next;
        trace.newton.push(f_beta);
        if moved <= 1e-14 * beta {
            break;
        }
    }

    // Report A over the non-sky pixels at the final β.
    let profile = Profile::active(foggy, fogless, depth, beta, opts.sky_t_cutoff);
    if profile.pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    let airlight = Airlight::from_array(profile.airlight(beta))?;
    let residual_rms = sqrt(profile.residual(beta, airlight.to_array()) / (3 * profile.pixels.len()) as f64);
    let result = FitResult {
        airlight,
        beta,
        visibility: visibility_from_beta(beta, opts.eps)?,
        residual_rms,
        iterations,
        converged,
    };
    Ok((result, trace))
}

/// Re-solves the linear airlight sub-problem at a fixed `β`, over the same
/// pixels a fit would use (finite depth, `t ≥ sky_t_cutoff`).
pub fn airlight_at_beta(
    foggy: &RgbImage,
    fogless: &RgbImage,
    depth: &ScalarField,
    beta: f64,
    sky_t_cutoff: f64,
) -> Result<Airlight> {
    ensure_same(foggy.dims(), fogless.dims())?;
    ensure_same(foggy.dims(), depth.dims())?;
    let profile = Profile::active(foggy, fogless, depth, beta, sky_t_cutoff);
    if profile.pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    Airlight::from_array(profile.airlight(beta))
}

/// Per-pixel transmission from the scattering model, `T = (I − A)/(J − A)`.
///
/// Channels with `|J − A| ≤ contrast_floor` are skipped; the rest are
/// combined with weights `(J − A)²`, which reduces to
/// `Σ (I−A)(J−A) / Σ (J−A)²`. Pixels with no usable channel are invalid.
/// Valid values are clamped to `[0, 1]`.
pub fn transmission_from_images(
    foggy: &RgbImage,
    fogless: &RgbImage,
    airlight: Airlight,
    contrast_floor: f64,
) -> Result<MaskedField> {
    ensure_same(foggy.dims(), fogless.dims())?;
    let a = airlight.to_array();
    let mut values = Vec::with_capacity(foggy.len());
    let mut bits = Vec::with_capacity(foggy.len());
    for (i, j) in foggy.pixels().iter().zip(fogless.pixels()) {
        let mut num = 0.0;
        let mut den = 0.0;
        for c in 0..3 {
            let dj = j[c] - a[c];
            if dj.abs() > contrast_floor {
                num += (i[c] - a[c]) * dj;
                den += dj * dj;
            }
        }
        if den > 0.0 {
            values.push((num / den).clamp(0.0, 1.0));
            bits.push(true);
        } else {
            values.push(0.0);
            bits.push(false);
        }
    }
    let (h, w) = foggy.dims();
    MaskedField::new(ScalarField::new(h, w, values)?, Mask::new(h, w, bits)?)
}

/// Rec. 709 luma of a linear RGB triple.
pub fn luminance(p: [f64; 3]) -> f64 {
    0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]
}

/// Mean colour of the brightest `percentile` percent of pixels (by luma).
///
/// A coarse airlight guess. At least one pixel is always used, and ties
/// keep row-major order.
pub fn estimate_airlight_bright(foggy: &RgbImage, percentile: f64) -> Result<Airlight> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::Domain { what: "percentile", value: percentile });
    }
    let n = foggy.len();
    let k = (libm::ceil(n as f64 * percentile / 100.0) as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let px = foggy.pixels();
    order.sort_by(|&x, &y| luminance(px[y]).total_cmp(&luminance(px[x])));
    let mut sum = [0.0; 3];
    for &idx in &order[..k] {
        for c in 0..3 {
            sum[c] += px[idx][c];
        }
    }
    Airlight::from_array(sum.map(|s| (s / k as f64).clamp(0.0, 1.0)))
}
