use std::fs;
use std::path::{Path, PathBuf};

use fogbench_core::estimate::{image_visibility_detailed, pixel_visibility};
use fogbench_core::invert::{fit_uniform_fog, FitOptions};
use fogbench_core::metrics::{classification_accuracy, regression_metrics};
use fogbench_core::physics::{beta_from_visibility, defog, transmission_from_depth};
use fogbench_core::scene::procedural_scene;
use fogbench_core::synth::{generate_sample, split_scenes, Scene};
use fogbench_core::{
    classify, Airlight, Epsilon, Error as CoreError, EstimationConfig, FitResult, MetricReport, RgbImage, ScalarField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::{Cli, Command, Common, Prediction, Source};
use crate::dataset::{self, list_samples, read_json, write_json, SampleRef, Split};
use crate::error::{CliError, Result};
use crate::render::{colorize, ColorScale, Histogram, HISTOGRAM_BINS};
use crate::{pfm, png};

pub const SEED_ENV: &str = "FOGBENCH_SEED";

/// Stream reserved for per-sample observation noise.
const NOISE_STREAM: u64 = 4 << 56;

/// Flags after validation and environment overrides.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub size: (usize, usize),
    pub estimation: EstimationConfig,
    pub workers: Option<usize>,
    pub noise: f64,
    pub split: Option<Split>,
}

impl RunConfig {
    pub fn resolve(common: &Common) -> Result<Self> {
        let seed = match std::env::var(SEED_ENV) {
            Ok(s) => s.trim().parse().map_err(|_| CliError::Validation(format!("{SEED_ENV}={s:?} is not a u64")))?,
            Err(_) => common.seed,
        };
        let eps = Epsilon::new(common.eps)?;
        let estimation = EstimationConfig::new(eps, common.t_min, common.v_max, common.v_min)?;
        if !(common.noise >= 0.0 && common.noise.is_finite()) {
            return Err(CliError::Validation(format!("--noise must be a finite non-negative number, got {}", common.noise)));
        }
        if common.workers == Some(0) {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        Ok(RunConfig {
            input: common.input.clone(),
            output: common.output.clone(),
            seed,
            size: common.size,
            estimation,
            workers: common.workers,
            noise: common.noise,
            split: common.split,
        })
    }

    fn eps(&self) -> Epsilon {
        self.estimation.eps
    }

    fn input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| CliError::Validation("--input is required".into()))
    }

    /// Output root, defaulting to the input dataset.
    fn output_root(&self) -> Result<PathBuf> {
        let root = match &self.output {
            Some(p) => p.clone(),
            None => self.input()?.to_path_buf(),
        };
        fs::create_dir_all(&root).map_err(CliError::io(&root))?;
        Ok(root)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start worker pool: {e}")))
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions { eps: self.eps(), ..FitOptions::default() }
    }

    /// The sample's foggy image with this run's observation noise applied.
    fn observed_foggy(&self, sample: &SampleRef) -> Result<RgbImage> {
        let foggy = sample.foggy()?;
        if self.noise == 0.0 {
            return Ok(foggy);
        }
        let normal = Normal::new(0.0, self.noise).map_err(|e| CliError::Validation(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(NOISE_STREAM | sample.index as u64);
        let (h, w) = foggy.dims();
        let px = foggy.pixels().iter().map(|p| p.map(|c| c + normal.sample(&mut rng))).collect();
        Ok(RgbImage::new_clamped(h, w, px)?)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Synthesize { scenes, variants } => synthesize(&cfg, scenes, variants),
        Command::Estimate { source } => estimate(&cfg, source),
        Command::Invert => invert(&cfg),
        Command::Evaluate { from, predictions } => evaluate(&cfg, from, predictions),
        Command::Defog { source, t_floor } => defog_cmd(&cfg, source, t_floor),
    }
}

/// Runs `f` on every sample in the pool, keeping input order.
fn per_sample<T: Send>(
    cfg: &RunConfig,
    samples: &[SampleRef],
    f: impl Fn(&SampleRef) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cfg.pool()?.install(|| samples.par_iter().map(&f).collect())
}

fn sample_output_dir(root: &Path, sample: &SampleRef) -> Result<PathBuf> {
    let dir = root.join(&sample.name);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    Ok(dir)
}

fn finish(failed: usize, total: usize) -> Result<()> {
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::SampleFailures { failed, total })
    }
}

fn is_numeric_failure(e: &CoreError) -> bool {
    matches!(e, CoreError::Identifiability | CoreError::EmptyMask)
}

fn synthesize(cfg: &RunConfig, scenes: u32, variants: u32) -> Result<()> {
    if cfg.noise != 0.0 {
        return Err(CliError::Validation("--noise applies to invert, estimate and defog, not synthesize".into()));
    }
    if variants == 0 {
        return Err(CliError::Validation("--variants must be at least 1".into()));
    }
    let root = cfg.output.clone().ok_or_else(|| CliError::Validation("--output is required".into()))?;
    fs::create_dir_all(&root).map_err(CliError::io(&root))?;

    let pool = cfg.pool()?;
    let scene_list: Vec<Scene> = match &cfg.input {
        Some(dir) => load_scenes(dir)?,
        None => {
            let (h, w) = cfg.size;
            pool.install(|| {
                (0..scenes).into_par_iter().map(|i| procedural_scene(i, h, w, cfg.seed)).collect::<fogbench_core::Result<_>>()
            })?
        }
    };
    let ids: Vec<String> = scene_list.iter().map(|s| s.id.clone()).collect();
    let manifest = split_scenes(&ids, variants, cfg.seed)?;

    pool.install(|| {
        scene_list.par_iter().enumerate().try_for_each(|(i, scene)| -> Result<()> {
            for v in 0..variants {
                let sample = generate_sample(i as u32, scene, v, cfg.seed, cfg.eps())?;
                dataset::write_sample(&root, &sample, cfg.seed)?;
            }
            Ok(())
        })
    })?;
    write_json(&root.join(dataset::SPLIT_FILE), &manifest)
}

/// Scene folders holding `fogless.png` and `depth.pfm`, sorted by name.
fn load_scenes(dir: &Path) -> Result<Vec<Scene>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(CliError::io(dir))? {
        let path = entry.map_err(CliError::io(dir))?.path();
        if path.join("fogless.png").is_file() && path.join("depth.pfm").is_file() {
            names.push(path);
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|path| {
            let fogless = png::read_rgb(&path.join("fogless.png"))?;
            let depth = pfm::read_field(&path.join("depth.pfm"))?;
            if fogless.dims() != depth.dims() {
                return Err(CliError::format(&path, "fogless.png and depth.pfm differ in size"));
            }
            let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Scene { id, fogless, depth })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub image_visibility_m: f64,
    pub valid_fraction: f64,
    pub class: u8,
}

/// Transmission and depth for a sample, either stored or from a fit.
fn transmission_and_depth(cfg: &RunConfig, sample: &SampleRef, source: Source) -> Result<(ScalarField, ScalarField)> {
    let depth = sample.depth()?;
    match source {
        Source::Oracle => Ok((sample.transmission()?, depth)),
        Source::Fit => {
            let fit = fit_uniform_fog(&cfg.observed_foggy(sample)?, &sample.fogless()?, &depth, &cfg.fit_options())?;
            Ok((transmission_from_depth(&depth, fit.beta)?, depth))
        }
    }
}

fn estimate(cfg: &RunConfig, source: Source) -> Result<()> {
    let samples = list_samples(cfg.input()?, cfg.split)?;
    let root = cfg.output_root()?;
    let outcomes = per_sample(cfg, &samples, |s| {
        let (t, d) = match transmission_and_depth(cfg, s, source) {
            Err(CliError::Core(e)) if is_numeric_failure(&e) => return Ok(false),
            other => other?,
        };
        let map = pixel_visibility(&t, &d, cfg.eps())?;
        let est = image_visibility_detailed(&map, &t, &cfg.estimation)?;
        let dir = sample_output_dir(&root, s)?;

        let raw = map.field.values().iter().zip(map.mask.bits()).map(|(&v, &m)| if m { v } else { f64::NAN });
        let (h, w) = map.dims();
        pfm::write(&dir.join("visibility_map.pfm"), &pfm::Pfm { width: w, height: h, channels: 1, data: raw.map(|v| v as f32).collect() })?;

        let kept = || map.field.values().iter().zip(est.mask.bits()).filter(|(_, &m)| m).map(|(&v, _)| v);
        let scale = ColorScale::for_values(kept(), cfg.estimation.v_min, cfg.estimation.v_max);
        png::write_raw_rgb(&dir.join("visibility_map.png"), h, w, colorize(&map, &est.mask, &scale))?;
        write_json(&dir.join("visibility_map.png.json"), &scale)?;
        let hist = Histogram::new(kept(), scale.lo_m, scale.hi_m, HISTOGRAM_BINS);
        let path = dir.join("histogram.csv");
        fs::write(&path, hist.to_csv()).map_err(CliError::io(&path))?;

        let record = EstimateRecord {
            image_visibility_m: est.visibility,
            valid_fraction: est.valid_fraction(),
            class: classify(est.visibility)?.index(),
        };
        write_json(&dir.join("estimate.json"), &record)?;
        Ok(true)
    })?;
    finish(outcomes.iter().filter(|ok| !**ok).count(), samples.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub visibility_m: f64,
    pub beta: f64,
    pub airlight_rgb: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// `ok`, `identifiability` or `no_usable_pixels`.
    pub status: String,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility_abs_rel: Option<f64>,
    pub noise_sigma: f64,
}

fn invert(cfg: &RunConfig) -> Result<()> {
    let samples = list_samples(cfg.input()?, cfg.split)?;
    let root = cfg.output_root()?;
    let opts = cfg.fit_options();
    let outcomes = per_sample(cfg, &samples, |s| {
        let meta = s.meta()?;
        let ground_truth = GroundTruth {
            visibility_m: meta.visibility_m,
            beta: beta_from_visibility(meta.visibility_m, meta.eps()?)?,
            airlight_rgb: meta.airlight_rgb,
        };
        let fitted = fit_uniform_fog(&cfg.observed_foggy(s)?, &s.fogless()?, &s.depth()?, &opts);
        let record = match fitted {
            Ok(fit) => FitRecord {
                status: "ok".into(),
                visibility_abs_rel: Some(((fit.visibility - meta.visibility_m) / meta.visibility_m).abs()),
                fit: Some(fit),
                error: None,
                ground_truth: Some(ground_truth),
                noise_sigma: cfg.noise,
            },
            Err(e) if is_numeric_failure(&e) => FitRecord {
                status: if matches!(e, CoreError::Identifiability) { "identifiability" } else { "no_usable_pixels" }.into(),
                fit: None,
                error: Some(e.to_string()),
                ground_truth: Some(ground_truth),
                visibility_abs_rel: None,
                noise_sigma: cfg.noise,
            },
            Err(e) => return Err(e.into()),
        };
        let ok = record.fit.is_some();
        write_json(&sample_output_dir(&root, s)?.join("fit.json"), &record)?;
        Ok(ok)
    })?;
    finish(outcomes.iter().filter(|ok| !**ok).count(), samples.len())
}

fn evaluate(cfg: &RunConfig, from: Prediction, predictions: Option<PathBuf>) -> Result<()> {
    let input = cfg.input()?;
    let samples = list_samples(input, cfg.split)?;
    let pred_root = predictions.unwrap_or_else(|| input.to_path_buf());
    let mut pred = Vec::with_capacity(samples.len());
    let mut gt = Vec::with_capacity(samples.len());
    let mut pixel_pred = Vec::new();
    let mut pixel_gt = Vec::new();
    let mut pixel_maps = true;
    for s in &samples {
        let truth = s.meta()?.visibility_m;
        let dir = pred_root.join(&s.name);
        let p = match from {
            Prediction::Estimate => read_json::<EstimateRecord>(&dir.join("estimate.json"))?.image_visibility_m,
            Prediction::Fit => {
                let rec: FitRecord = read_json(&dir.join("fit.json"))?;
                rec.fit
                    .ok_or_else(|| CliError::Validation(format!("{}: fit status is {}", s.name, rec.status)))?
                    .visibility
            }
        };
        pred.push(p);
        gt.push(truth);

        let map_path = dir.join("visibility_map.pfm");
        if pixel_maps && from == Prediction::Estimate && map_path.is_file() {
            for v in pfm::read(&map_path)?.data {
                if v.is_finite() {
                    pixel_pred.push(v as f64);
                    pixel_gt.push(truth);
                }
            }
        } else {
            pixel_maps = false;
        }
    }
    let report = MetricReport::new(regression_metrics(&pred, &gt, None)?, classification_accuracy(&pred, &gt)?);
    let root = cfg.output_root()?;
    write_json(&root.join("metrics.json"), &report)?;
    if pixel_maps && !pixel_pred.is_empty() {
        let pixel = MetricReport::new(
            regression_metrics(&pixel_pred, &pixel_gt, None)?,
            classification_accuracy(&pixel_pred, &pixel_gt)?,
        );
        write_json(&root.join("pixel_metrics.json"), &pixel)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefogRecord {
    /// Over reconstructed pixels; null when there are none.
    pub psnr_db: Option<f64>,
    pub valid_fraction: f64,
    pub t_floor: f64,
}

/// PSNR for unit-range images, with MSE floored at 1e-20 (200 dB).
pub fn psnr(a: &RgbImage, b: &RgbImage, valid: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((p, q), &m) in a.pixels().iter().zip(b.pixels()).zip(valid) {
        if m {
            sum += (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>();
            n += 3;
        }
    }
    (n > 0).then(|| -10.0 * (sum / n as f64).max(1e-20).log10())
}

fn defog_cmd(cfg: &RunConfig, source: Source, t_floor: f64) -> Result<()> {
    if !(t_floor > 0.0 && t_floor <= 1.0) {
        return Err(CliError::Validation(format!("--t-floor must lie in (0, 1], got {t_floor}")));
    }
    let samples = list_samples(cfg.input()?, cfg.split)?;
    let root = cfg.output_root()?;
    let outcomes = per_sample(cfg, &samples, |s| {
        let foggy = cfg.observed_foggy(s)?;
        let fogless = s.fogless()?;
        let (airlight, t): (Airlight, ScalarField) = match source {
            Source::Oracle => (s.meta()?.airlight()?, s.transmission()?),
            Source::Fit => {
                let depth = s.depth()?;
                match fit_uniform_fog(&foggy, &fogless, &depth, &cfg.fit_options()) {
                    Ok(fit) => (fit.airlight, transmission_from_depth(&depth, fit.beta)?),
                    Err(e) if is_numeric_failure(&e) => return Ok(false),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let out = defog(&foggy, airlight, &t, t_floor)?;
        let dir = sample_output_dir(&root, s)?;
        png::write_rgba_masked(&dir.join("defog.png"), &out.image, &out.mask)?;
        let record = DefogRecord {
            psnr_db: psnr(&out.image, &fogless, out.mask.bits()),
            valid_fraction: out.mask.count() as f64 / out.mask.len() as f64,
            t_floor,
        };
        write_json(&dir.join("defog.json"), &record)?;
        Ok(true)
    })?;
    finish(outcomes.iter().filter(|ok| !**ok).count(), samples.len())
}
