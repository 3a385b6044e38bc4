//! False-colour visibility maps and histograms.

use std::fmt::Write as _;

use fogbench_core::{Mask, MaskedField};
use serde::Serialize;

pub const HISTOGRAM_BINS: usize = 50;

/// Viridis sampled at nine evenly spaced stops.
const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

pub const INVALID_RGB: [u8; 3] = [0, 0, 0];

/// Scale used for a rendered map; written next to the PNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColorScale {
    pub colormap: &'static str,
    pub lo_m: f64,
    pub hi_m: f64,
    pub invalid_rgb: [u8; 3],
}

impl ColorScale {
    /// `[v_min, min(max(values), v_max)]`, widened to at least 1 m.
    pub fn for_values(values: impl Iterator<Item = f64>, v_min: f64, v_max: f64) -> Self {
        let top = values.fold(f64::NEG_INFINITY, f64::max).min(v_max);
        let hi = if top > v_min + 1.0 { top } else { v_min + 1.0 };
        ColorScale { colormap: "viridis", lo_m: v_min, hi_m: hi, invalid_rgb: INVALID_RGB }
    }

    pub fn color(&self, v: f64) -> [u8; 3] {
        let x = ((v - self.lo_m) / (self.hi_m - self.lo_m)).clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
        let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
        let f = x - k as f64;
        let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
        [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
    }
}

/// Interleaved RGB bytes; pixels outside `mask` get the invalid colour.
pub fn colorize(map: &MaskedField, mask: &Mask, scale: &ColorScale) -> Vec<u8> {
    map.field
        .values()
        .iter()
        .zip(mask.bits())
        .flat_map(|(&v, &m)| if m { scale.color(v) } else { scale.invalid_rgb })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Uniform bins over `[lo, hi]`; values outside land in the end bins.
    pub fn new(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let k = ((v - lo) / width).floor();
            counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo_m,bin_hi_m,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[k], self.edges[k + 1], c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        let s = ColorScale::for_values([100.0, 500.0].into_iter(), 10.0, 1e5);
        assert_eq!(s.hi_m, 500.0);
        assert_eq!(s.color(10.0), VIRIDIS[0]);
        assert_eq!(s.color(500.0), VIRIDIS[8]);
        assert_eq!(s.color(1e9), VIRIDIS[8]);
        let empty = ColorScale::for_values(std::iter::empty(), 10.0, 1e5);
        assert_eq!((empty.lo_m, empty.hi_m), (10.0, 11.0));
    }

    #[test]
    fn histogram_bins() {
        let h = Histogram::new([0.0, 10.0, 54.9, 55.0, 100.0, 200.0].into_iter(), 10.0, 100.0, 2);
        assert_eq!(h.edges, vec![10.0, 55.0, 100.0]);
        assert_eq!(h.counts, vec![3, 3]);
        assert!(h.to_csv().starts_with("bin_lo_m,bin_hi_m,count\n10,55,3\n"));
    }
}
