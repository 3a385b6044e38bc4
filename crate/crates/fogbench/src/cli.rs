use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::Split;

#[derive(Debug, Parser)]
#[command(name = "fogbench", version, about = "Synthetic fog datasets, visibility estimation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Dataset root (or, for synthesize, a directory of scene folders)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Where to write results; defaults to the input dataset
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Master seed. FOGBENCH_SEED overrides it when set
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Procedural scene size, HEIGHTxWIDTH
    #[arg(long, global = true, default_value = "288x512", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Contrast threshold ε
    #[arg(long, global = true, default_value_t = 0.05)]
    pub eps: f64,
    /// Transmission floor for image-wise visibility
    #[arg(long, global = true, default_value_t = 1e-2)]
    pub t_min: f64,
    /// Visibility ceiling for image-wise visibility (m)
    #[arg(long, global = true, default_value_t = 1e5)]
    pub v_max: f64,
    /// Fallback visibility when no pixel qualifies (m)
    #[arg(long, global = true, default_value_t = 10.0)]
    pub v_min: f64,
    /// Worker threads; defaults to one per core
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Std-dev of Gaussian noise added to foggy images before they are used
    #[arg(long, global = true, default_value_t = 0.0)]
    pub noise: f64,
    /// Restrict to one split of split.json
    #[arg(long, global = true, value_enum)]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Render fog variants of procedural or supplied scenes
    Synthesize {
        #[arg(long, default_value_t = 100)]
        scenes: u32,
        #[arg(long, default_value_t = 30)]
        variants: u32,
    },
    /// Pixel-wise and image-wise visibility per sample
    Estimate {
        #[arg(long, value_enum, default_value_t = Source::Oracle)]
        source: Source,
    },
    /// Fit airlight and extinction coefficient per sample
    Invert,
    /// Aggregate metrics of predicted against true visibility
    Evaluate {
        /// Which per-sample result holds the prediction
        #[arg(long = "from", value_enum, default_value_t = Prediction::Estimate)]
        from: Prediction,
        /// Directory holding the per-sample results; defaults to the input
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Invert the scattering model to recover fog-free images
    Defog {
        #[arg(long, value_enum, default_value_t = Source::Oracle)]
        source: Source,
        /// Pixels with lower transmission are left unreconstructed
        #[arg(long, default_value_t = 0.01)]
        t_floor: f64,
    },
}

/// Where transmission and airlight come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Ground truth stored with the sample
    Oracle,
    /// Uniform-fog fit of the foggy image
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Prediction {
    /// image_visibility_m of estimate.json
    Estimate,
    /// visibility of fit.json
    Fit,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HEIGHTxWIDTH")?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height {h:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width {w:?}"))?;
    if h == 0 || w == 0 {
        return Err("size must be positive".into());
    }
    Ok((h, w))
}
