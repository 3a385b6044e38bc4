//! Multi-task training losses and their weighted sum.
//!
//! The `‖·‖₂` losses are root-mean-square errors; `‖·‖₁` losses are mean
//! absolute errors. [`grad`] has closed-form gradients for the smooth
//! pieces together with a central finite-difference oracle.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ensure_same, Airlight, RgbImage, ScalarField};
use crate::math::{exp, ln, sqrt};
use crate::ssim::{ssim_with, SsimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub lambda_a: f64,
    pub lambda_t: f64,
    pub lambda_d: f64,
    pub lambda_defog: f64,
    pub lambda_vis: f64,
    pub lambda_l1: f64,
    pub lambda_ssim: f64,
    pub lambda_smooth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_a: 1.0,
            lambda_t: 1.0,
            lambda_d: 0.8,
            lambda_defog: 1e-6,
            lambda_vis: 1.0,
            lambda_l1: 0.15,
            lambda_ssim: 0.85,
            lambda_smooth: 1e-3,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_a,
            self.lambda_t,
            self.lambda_d,
            self.lambda_defog,
            self.lambda_vis,
            self.lambda_l1,
            self.lambda_ssim,
            self.lambda_smooth,
        ];
        if all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("loss weights must be finite and nonnegative"))
        }
    }
}

fn rmse(diffs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for d in diffs {
        sum += d * d;
        n += 1;
    }
    sqrt(sum / n as f64)
}

/// RMSE over the three airlight channels.
pub fn loss_airlight(a_est: Airlight, a_gt: Airlight) -> f64 {
    let (e, g) = (a_est.to_array(), a_gt.to_array());
    rmse((0..3).map(|c| e[c] - g[c]))
}

/// RMSE over pixels.
pub fn loss_transmission(t_est: &ScalarField, t_gt: &ScalarField) -> Result<f64> {
    ensure_same(t_est.dims(), t_gt.dims())?;
    Ok(rmse(t_est.values().iter().zip(t_gt.values()).map(|(a, b)| a - b)))
}

/// The three raw ingredients of the disparity loss, before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityTerms {
    /// Mean absolute difference.
    pub l1: f64,
    /// Mean SSIM between estimate and ground truth.
    pub ssim: f64,
    /// Edge-aware smoothness of the estimate, summed over both axes, per pixel.
    pub smoothness: f64,
}

impl DisparityTerms {
    pub fn weighted(&self, w: &LossWeights) -> f64 {
        w.lambda_l1 * self.l1 + w.lambda_ssim * (1.0 - self.ssim) / 2.0 + w.lambda_smooth * self.smoothness
    }
}

/// `Σ e^{−|∂J|}·|∂D̄|` over both axes divided by `h·w`.
///
/// `∂` is a forward difference, zero in the last column (x) or row (y);
/// `|∂J|` is the mean absolute difference over the three channels.
pub fn edge_aware_smoothness(dbar: &ScalarField, image: &RgbImage) -> Result<f64> {
    ensure_same(dbar.dims(), image.dims())?;
    let (h, w) = dbar.dims();
    let d = dbar.values();
    let px = image.pixels();
    let grad_j = |a: usize, b: usize| -> f64 { (0..3).map(|c| (px[b][c] - px[a][c]).abs()).sum::<f64>() / 3.0 };
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                sum_x += exp(-grad_j(i, i + 1)) * (d[i + 1] - d[i]).abs();
            }
            if r + 1 < h {
                sum_y += exp(-grad_j(i, i + w)) * (d[i + w] - d[i]).abs();
            }
        }
    }
    Ok((sum_x + sum_y) / (h * w) as f64)
}

pub fn disparity_terms(
    dbar_est: &ScalarField,
    dbar_gt: &ScalarField,
    fogless: &RgbImage,
    ssim_cfg: &SsimConfig,
) -> Result<DisparityTerms> {
    ensure_same(dbar_est.dims(), dbar_gt.dims())?;
    let n = dbar_est.len() as f64;
    let l1 = dbar_est.values().iter().zip(dbar_gt.values()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    Ok(DisparityTerms {
        l1,
        ssim: ssim_with(dbar_est, dbar_gt, ssim_cfg)?,
        smoothness: edge_aware_smoothness(dbar_est, fogless)?,
    })
}

/// `λ_L1·L1 + λ_SSIM·(1 − SSIM)/2 + λ_Smooth·smoothness` on raw disparity.
pub fn loss_disparity(
    dbar_est: &ScalarField,
    dbar_gt: &ScalarField,
    fogless: &RgbImage,
    w: &LossWeights,
) -> Result<f64> {
    loss_disparity_with(dbar_est, dbar_gt, fogless, w, &SsimConfig::default())
}

pub fn loss_disparity_with(
    dbar_est: &ScalarField,
    dbar_gt: &ScalarField,
    fogless: &RgbImage,
    w: &LossWeights,
    ssim_cfg: &SsimConfig,
) -> Result<f64> {
    Ok(disparity_terms(dbar_est, dbar_gt, fogless, ssim_cfg)?.weighted(w))
}

/// RMSE over pixels and channels.
pub fn loss_defog(j_est: &RgbImage, j_gt: &RgbImage) -> Result<f64> {
    ensure_same(j_est.dims(), j_gt.dims())?;
    Ok(rmse(j_est.pixels().iter().zip(j_gt.pixels()).flat_map(|(a, b)| (0..3).map(move |c| a[c] - b[c]))))
}

fn vis_usable(dbar: f64, t: f64) -> bool {
    t > 0.0 && t <= 1.0 && dbar.is_finite()
}

/// Mean of `|D̄_est·ln T_est − D̄_gt·ln T_gt|` over pixels where both
/// transmissions lie in `(0, 1]` and both disparities are finite.
pub fn loss_visibility(
    dbar_est: &ScalarField,
    t_est: &ScalarField,
    dbar_gt: &ScalarField,
    t_gt: &ScalarField,
) -> Result<f64> {
    ensure_same(dbar_est.dims(), t_est.dims())?;
    ensure_same(dbar_est.dims(), dbar_gt.dims())?;
    ensure_same(dbar_est.dims(), t_gt.dims())?;
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..dbar_est.len() {
        let (de, te, dg, tg) = (dbar_est.values()[i], t_est.values()[i], dbar_gt.values()[i], t_gt.values()[i]);
        if vis_usable(de, te) && vis_usable(dg, tg) {
            sum += (de * ln(te) - dg * ln(tg)).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// Values of the five loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub airlight: f64,
    pub transmission: f64,
    pub disparity: f64,
    pub defog: f64,
    pub visibility: f64,
}

/// `λ_A·L_A + λ_T·L_T + λ_D·L_D + λ_defog·L_defog + λ_vis·L_vis`.
pub fn total_loss(terms: &LossTerms, w: &LossWeights) -> f64 {
    w.lambda_a * terms.airlight
        + w.lambda_t * terms.transmission
        + w.lambda_d * terms.disparity
        + w.lambda_defog * terms.defog
        + w.lambda_vis * terms.visibility
}

/// Closed-form gradients and the finite-difference oracle.
///
/// Where an RMSE loss is exactly zero its gradient is reported as zero,
/// matching the symmetric central difference at that point.
pub mod grad {
    use super::*;

    /// Central differences `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every element.
    pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                let orig = probe[i];
                probe[i] = orig + h;
                let plus = f(&probe);
                probe[i] = orig - h;
                let minus = f(&probe);
                probe[i] = orig;
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    /// [`numeric_gradient`] over a field; the loss sees the perturbed field.
    pub fn numeric_gradient_field(
        x: &ScalarField,
        h: f64,
        mut f: impl FnMut(&ScalarField) -> f64,
    ) -> Result<ScalarField> {
        let (rows, cols) = x.dims();
        let g = numeric_gradient(x.values(), h, |v| match ScalarField::new(rows, cols, v.to_vec()) {
            Ok(field) => f(&field),
            Err(_) => f64::NAN,
        });
        ScalarField::new(rows, cols, g)
    }

    fn rmse_grad(diffs: &[f64]) -> Vec<f64> {
        let n = diffs.len() as f64;
        let l = sqrt(diffs.iter().map(|d| d * d).sum::<f64>() / n);
        if l == 0.0 {
            return alloc::vec![0.0; diffs.len()];
        }
        diffs.iter().map(|d| d / (n * l)).collect()
    }

    /// `∂L_A/∂A_est`, per channel.
    pub fn airlight(a_est: Airlight, a_gt: Airlight) -> [f64; 3] {
        let (e, g) = (a_est.to_array(), a_gt.to_array());
        let v = rmse_grad(&[e[0] - g[0], e[1] - g[1], e[2] - g[2]]);
        [v[0], v[1], v[2]]
    }

    /// `∂L_T/∂T_est`.
    pub fn transmission(t_est: &ScalarField, t_gt: &ScalarField) -> Result<ScalarField> {
        ensure_same(t_est.dims(), t_gt.dims())?;
        let diffs: Vec<f64> = t_est.values().iter().zip(t_gt.values()).map(|(a, b)| a - b).collect();
        ScalarField::new(t_est.height(), t_est.width(), rmse_grad(&diffs))
    }

    /// `∂L_defog/∂J_est`, pixel-major then channel.
    pub fn defog(j_est: &RgbImage, j_gt: &RgbImage) -> Result<Vec<[f64; 3]>> {
        ensure_same(j_est.dims(), j_gt.dims())?;
        let diffs: Vec<f64> =
            j_est.pixels().iter().zip(j_gt.pixels()).flat_map(|(a, b)| (0..3).map(move |c| a[c] - b[c])).collect();
        let g = rmse_grad(&diffs);
        Ok(g.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// Unclamped defogging from raw channel data, `J = (I − A)/T + A`.
    pub fn defog_unclamped(foggy: &[[f64; 3]], airlight: [f64; 3], t: &[f64]) -> Vec<[f64; 3]> {
        foggy.iter().zip(t).map(|(i, &t)| [0, 1, 2].map(|c| (i[c] - airlight[c]) / t + airlight[c])).collect()
    }

    /// `L_defog` of the unclamped reconstruction from estimated `A`, `T`.
    pub fn composed_defog_loss(foggy: &[[f64; 3]], airlight: [f64; 3], t: &[f64], j_gt: &[[f64; 3]]) -> f64 {
        let j = defog_unclamped(foggy, airlight, t);
        rmse(j.iter().zip(j_gt).flat_map(|(a, b)| (0..3).map(move |c| a[c] - b[c])))
    }

    /// Gradients of [`composed_defog_loss`] with respect to `T` and `A`.
    pub fn composed_defog(
        foggy: &[[f64; 3]],
        airlight: [f64; 3],
        t: &[f64],
        j_gt: &[[f64; 3]],
    ) -> (Vec<f64>, [f64; 3]) {
        let j = defog_unclamped(foggy, airlight, t);
        let diffs: Vec<f64> = j.iter().zip(j_gt).flat_map(|(a, b)| (0..3).map(move |c| a[c] - b[c])).collect();
        let g = rmse_grad(&diffs);
        let mut d_t = alloc::vec![0.0; t.len()];
        let mut d_a = [0.0; 3];
        for (p, (&tp, i)) in t.iter().zip(foggy).enumerate() {
            for c in 0..3 {
                let gj = g[3 * p + c];
                d_t[p] += gj * (-(i[c] - airlight[c]) / (tp * tp));
                d_a[c] += gj * (1.0 - 1.0 / tp);
            }
        }
        (d_t, d_a)
    }

    /// `∂L_vis/∂D̄_est` and `∂L_vis/∂T_est`, zero at masked pixels.
    pub fn visibility(
        dbar_est: &ScalarField,
        t_est: &ScalarField,
        dbar_gt: &ScalarField,
        t_gt: &ScalarField,
    ) -> Result<(ScalarField, ScalarField)> {
        ensure_same(dbar_est.dims(), t_est.dims())?;
        ensure_same(dbar_est.dims(), dbar_gt.dims())?;
        ensure_same(dbar_est.dims(), t_gt.dims())?;
        let len = dbar_est.len();
        let usable: Vec<bool> = (0..len)
            .map(|i| {
                vis_usable(dbar_est.values()[i], t_est.values()[i]) && vis_usable(dbar_gt.values()[i], t_gt.values()[i])
            })
            .collect();
        let n = usable.iter().filter(|&&u| u).count();
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        let mut g_d = alloc::vec![0.0; len];
        let mut g_t = alloc::vec![0.0; len];
        for i in 0..len {
            if !usable[i] {
                continue;
            }
            let (de, te) = (dbar_est.values()[i], t_est.values()[i]);
            let r = de * ln(te) - dbar_gt.values()[i] * ln(t_gt.values()[i]);
            let s = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            g_d[i] = s * ln(te) / n as f64;
            g_t[i] = s * de / (te * n as f64);
        }
        let (h, w) = dbar_est.dims();
        Ok((ScalarField::new(h, w, g_d)?, ScalarField::new(h, w, g_t)?))
    }

    /// Gradient of `λ_L1 · mean|D̄_est − D̄_gt|` with respect to `D̄_est`.
    pub fn disparity_l1(dbar_est: &ScalarField, dbar_gt: &ScalarField, lambda_l1: f64) -> Result<ScalarField> {
        ensure_same(dbar_est.dims(), dbar_gt.dims())?;
        let n = dbar_est.len() as f64;
        let g = dbar_est
            .values()
            .iter()
            .zip(dbar_gt.values())
            .map(|(a, b)| {
                let d = a - b;
                if d > 0.0 {
                    lambda_l1 / n
                } else if d < 0.0 {
                    -lambda_l1 / n
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField::new(dbar_est.height(), dbar_est.width(), g)
    }
}
