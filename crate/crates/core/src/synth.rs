//! Seeded fog augmentation and the scene-disjoint dataset split.
//!
//! Every random draw comes from a ChaCha8 generator seeded with the run
//! seed and switched to a stream derived from what is being generated, so
//! samples can be produced in any order (or in parallel) and still match:
//!
//! | stream                               | consumer                     |
//! |--------------------------------------|------------------------------|
//! | `1 << 56 \| scene << 24 \| variant`  | one fog variant of one scene |
//! | `2 << 56 \| scene`                   | procedural scene layout      |
//! | `3 << 56`                            | scene shuffle for the split  |
//!
//! Within a variant stream the draw order is: visibility, then the blue,
//! green and red airlight channels.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Airlight, Epsilon, RgbImage, ScalarField};
use crate::physics::{beta_from_visibility, synthesize, transmission_from_depth};

pub const VISIBILITY_RANGE_M: (f64, f64) = (10.0, 1000.0);

const STREAM_SAMPLE: u64 = 1 << 56;
const STREAM_SCENE: u64 = 2 << 56;
const STREAM_SPLIT: u64 = 3 << 56;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for variant `variant` of scene number `scene_index`.
pub fn sample_rng(seed: u64, scene_index: u32, variant: u32) -> ChaCha8Rng {
    debug_assert!(variant < (1 << 24));
    stream_rng(seed, STREAM_SAMPLE | (u64::from(scene_index) << 24) | u64::from(variant))
}

/// Generator for the layout of procedural scene `scene_index`.
pub fn scene_rng(seed: u64, scene_index: u32) -> ChaCha8Rng {
    stream_rng(seed, STREAM_SCENE | u64::from(scene_index))
}

fn split_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_SPLIT)
}

/// Draws an airlight colour on the 0–255 scale and normalises it:
/// `B ~ U(180, 255)`, `G ~ min(U(B−5, B+2), 255)`,
/// `R ~ min(U((B+G)/2 − 5, (B+G)/2 + 2), 255)`.
pub fn sample_airlight<R: Rng + ?Sized>(rng: &mut R) -> Airlight {
    let b: f64 = rng.random_range(180.0..255.0);
    let g = rng.random_range((b - 5.0)..(b + 2.0)).min(255.0);
    let mid = 0.5 * (b + g);
    let r = rng.random_range((mid - 5.0)..(mid + 2.0)).min(255.0);
    Airlight::new(r / 255.0, g / 255.0, b / 255.0).expect("channels are within [0, 255]")
}

/// A fog-free scene: colour image plus metric depth (`+∞` for sky).
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub fogless: RgbImage,
    pub depth: ScalarField,
}

/// One augmented group: the scene, the drawn fog and the rendered result.
#[derive(Debug, Clone, PartialEq)]
pub struct FogSample {
    pub scene_id: String,
    pub variant_id: u32,
    pub fogless: RgbImage,
    pub depth: ScalarField,
    pub visibility: f64,
    pub airlight: Airlight,
    pub transmission: ScalarField,
    pub foggy: RgbImage,
    pub eps: Epsilon,
}

impl FogSample {
    /// Extinction coefficient implied by the stored visibility.
    pub fn beta(&self) -> f64 {
        beta_from_visibility(self.visibility, self.eps).expect("stored visibility is positive")
    }

    /// Recomputes `T` and `I` from `J`, `D`, `V`, `A` and compares bit for bit.
    pub fn check_invariants(&self) -> Result<bool> {
        let (lo, hi) = VISIBILITY_RANGE_M;
        if !(lo..=hi).contains(&self.visibility) {
            return Ok(false);
        }
        let t = transmission_from_depth(&self.depth, self.beta())?;
        if t != self.transmission {
            return Ok(false);
        }
        Ok(synthesize(&self.fogless, &t, self.airlight)? == self.foggy)
    }
}

/// Draws a visibility and airlight and renders uniform fog over the scene.
pub fn make_sample<R: Rng + ?Sized>(
    scene_id: &str,
    variant_id: u32,
    fogless: &RgbImage,
    depth: &ScalarField,
    eps: Epsilon,
    rng: &mut R,
) -> Result<FogSample> {
    let (lo, hi) = VISIBILITY_RANGE_M;
    let visibility = rng.random_range(lo..=hi);
    let airlight = sample_airlight(rng);
    let beta = beta_from_visibility(visibility, eps)?;
    let transmission = transmission_from_depth(depth, beta)?;
    let foggy = synthesize(fogless, &transmission, airlight)?;
    Ok(FogSample {
        scene_id: scene_id.into(),
        variant_id,
        fogless: fogless.clone(),
        depth: depth.clone(),
        visibility,
        airlight,
        transmission,
        foggy,
        eps,
    })
}

/// [`make_sample`] on the variant's own stream.
pub fn generate_sample(scene_index: u32, scene: &Scene, variant: u32, seed: u64, eps: Epsilon) -> Result<FogSample> {
    let mut rng = sample_rng(seed, scene_index, variant);
    make_sample(&scene.id, variant, &scene.fogless, &scene.depth, eps, &mut rng)
}

/// Identifies one sample in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleKey {
    pub scene_id: String,
    pub variant_id: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitManifest {
    pub train: Vec<SampleKey>,
    pub val: Vec<SampleKey>,
    pub test: Vec<SampleKey>,
}

impl SplitManifest {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }

    /// True when no scene appears in more than one split.
    pub fn is_scene_disjoint(&self) -> bool {
        let mut tagged: Vec<(&str, u8)> = Vec::new();
        for (tag, list) in [(0u8, &self.train), (1, &self.val), (2, &self.test)] {
            tagged.extend(list.iter().map(|k| (k.scene_id.as_str(), tag)));
        }
        tagged.sort_unstable();
        tagged.dedup();
        tagged.windows(2).all(|w| w[0].0 != w[1].0)
    }

    pub fn all(&self) -> impl Iterator<Item = &SampleKey> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

/// Scene counts for a 7:2:1 split: test and validation take `⌊n/10⌋` and
/// `⌊2n/10⌋` scenes, training gets the rest.
pub fn split_sizes(scenes: usize) -> Result<(usize, usize, usize)> {
    if scenes < 10 {
        return Err(Error::TooFewScenes { scenes });
    }
    let test = scenes / 10;
    let val = 2 * scenes / 10;
    Ok((scenes - val - test, val, test))
}

/// Shuffles scenes and assigns whole scenes (all variants) to train, val
/// and test.
pub fn split_scenes(scene_ids: &[String], variants_per_scene: u32, seed: u64) -> Result<SplitManifest> {
    if variants_per_scene == 0 {
        return Err(Error::Config("variants_per_scene must be at least 1"));
    }
    let (n_train, n_val, _) = split_sizes(scene_ids.len())?;
    let mut order: Vec<&String> = scene_ids.iter().collect();
    order.shuffle(&mut split_rng(seed));
    let keys = |ids: &[&String]| -> Vec<SampleKey> {
        ids.iter()
            .flat_map(|id| (0..variants_per_scene).map(move |v| SampleKey { scene_id: (*id).clone(), variant_id: v }))
            .collect()
    };
    Ok(SplitManifest {
        train: keys(&order[..n_train]),
        val: keys(&order[n_train..n_train + n_val]),
        test: keys(&order[n_train + n_val..]),
    })
}

/// Renders `variants_per_scene` fog variants of each scene and splits them.
/// Samples are returned scene-major, variant-minor.
pub fn build_dataset(
    scenes: &[Scene],
    variants_per_scene: u32,
    seed: u64,
    eps: Epsilon,
) -> Result<(Vec<FogSample>, SplitManifest)> {
    let ids: Vec<String> = scenes.iter().map(|s| s.id.clone()).collect();
    let manifest = split_scenes(&ids, variants_per_scene, seed)?;
    let mut samples = Vec::with_capacity(scenes.len() * variants_per_scene as usize);
    for (i, scene) in scenes.iter().enumerate() {
        let index = u32::try_from(i).map_err(|_| Error::Config("too many scenes"))?;
        for v in 0..variants_per_scene {
            samples.push(generate_sample(index, scene, v, seed, eps)?);
        }
    }
    Ok((samples, manifest))
}
