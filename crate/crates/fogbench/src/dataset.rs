//! On-disk dataset layout.
//!
//! ```text
//! <root>/split.json
//! <root>/<scene_id>_v<variant>/fogless.png
//!                             /depth.pfm
//!                             /transmission.pfm
//!                             /foggy.png
//!                             /foggy.pfm
//!                             /meta.json
//! ```
//!
//! `foggy.pfm` carries the foggy image at float precision; readers prefer
//! it over the 8-bit `foggy.png`.

use std::fs;
use std::path::{Path, PathBuf};

use fogbench_core::synth::{FogSample, SampleKey, SplitManifest};
use fogbench_core::{Airlight, Epsilon, RgbImage, ScalarField};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::{pfm, png};

pub const SPLIT_FILE: &str = "split.json";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub scene_id: String,
    pub variant_id: u32,
    pub visibility_m: f64,
    pub airlight_rgb: [f64; 3],
    pub epsilon: f64,
    pub seed: u64,
}

impl Meta {
    pub fn airlight(&self) -> Result<Airlight> {
        Ok(Airlight::from_array(self.airlight_rgb)?)
    }

    pub fn eps(&self) -> Result<Epsilon> {
        Ok(Epsilon::new(self.epsilon)?)
    }
}

pub fn sample_dir_name(scene_id: &str, variant_id: u32) -> String {
    format!("{scene_id}_v{variant_id:03}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn keys(self, manifest: &SplitManifest) -> &[SampleKey] {
        match self {
            Split::Train => &manifest.train,
            Split::Val => &manifest.val,
            Split::Test => &manifest.test,
        }
    }
}

/// A sample directory and its position in the full, sorted dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRef {
    pub index: usize,
    pub name: String,
    pub dir: PathBuf,
}

impl SampleRef {
    pub fn meta(&self) -> Result<Meta> {
        read_json(&self.dir.join(META_FILE))
    }

    pub fn fogless(&self) -> Result<RgbImage> {
        png::read_rgb(&self.dir.join("fogless.png"))
    }

    pub fn depth(&self) -> Result<ScalarField> {
        pfm::read_field(&self.dir.join("depth.pfm"))
    }

    pub fn transmission(&self) -> Result<ScalarField> {
        pfm::read_field(&self.dir.join("transmission.pfm"))
    }

    pub fn foggy(&self) -> Result<RgbImage> {
        let float = self.dir.join("foggy.pfm");
        if float.exists() {
            pfm::read_image(&float)
        } else {
            png::read_rgb(&self.dir.join("foggy.png"))
        }
    }
}

/// Sample directories under `root` (those holding a `meta.json`), sorted
/// by name, optionally restricted to one split of `root/split.json`.
pub fn list_samples(root: &Path, split: Option<Split>) -> Result<Vec<SampleRef>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root).map_err(CliError::io(root))? {
        let entry = entry.map_err(CliError::io(root))?;
        if entry.path().join(META_FILE).is_file() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    let all: Vec<SampleRef> =
        names.into_iter().enumerate().map(|(index, name)| SampleRef { index, dir: root.join(&name), name }).collect();
    let Some(split) = split else {
        return Ok(all);
    };
    let manifest: SplitManifest = read_json(&root.join(SPLIT_FILE))?;
    split
        .keys(&manifest)
        .iter()
        .map(|k| {
            let name = sample_dir_name(&k.scene_id, k.variant_id);
            all.iter().find(|s| s.name == name).cloned().ok_or_else(|| {
                CliError::Validation(format!("split entry {name} has no sample directory under {}", root.display()))
            })
        })
        .collect()
}

pub fn write_sample(root: &Path, sample: &FogSample, seed: u64) -> Result<PathBuf> {
    let dir = root.join(sample_dir_name(&sample.scene_id, sample.variant_id));
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    png::write_rgb(&dir.join("fogless.png"), &sample.fogless)?;
    pfm::write_field(&dir.join("depth.pfm"), &sample.depth)?;
    pfm::write_field(&dir.join("transmission.pfm"), &sample.transmission)?;
    png::write_rgb(&dir.join("foggy.png"), &sample.foggy)?;
    pfm::write_image(&dir.join("foggy.pfm"), &sample.foggy)?;
    let meta = Meta {
        scene_id: sample.scene_id.clone(),
        variant_id: sample.variant_id,
        visibility_m: sample.visibility,
        airlight_rgb: sample.airlight.to_array(),
        epsilon: sample.eps.value(),
        seed,
    };
    write_json(&dir.join(META_FILE), &meta)?;
    Ok(dir)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|source| CliError::Json { path: path.into(), source })
}

/// Pretty-printed with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|source| CliError::Json { path: path.into(), source })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(CliError::io(path))
}
