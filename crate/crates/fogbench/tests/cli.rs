mod common;

use std::fs;

use common::*;
use fogbench::commands::{DefogRecord, EstimateRecord, FitRecord};
use fogbench::dataset::{write_json, Meta};
use fogbench::pfm::{self, Pfm};
use fogbench_core::physics::{beta_from_visibility, synthesize, transmission_from_depth};
use fogbench_core::synth::SplitManifest;
use fogbench_core::{classify, Epsilon, MetricReport, RgbImage, ScalarField};

#[test]
fn full_size_dataset_has_table_split() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 100, 30, "4x4", 7);
    assert_eq!(samples(dir.path()).len(), 3000);
    let m: SplitManifest = json(&dir.path().join("split.json"));
    assert_eq!(m.counts(), (2100, 600, 300));
    assert!(m.is_scene_disjoint());
}

#[test]
fn minimal_dataset_splits_seven_two_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 1, "8x8", 1);
    let m: SplitManifest = json(&dir.path().join("split.json"));
    assert_eq!(m.counts(), (7, 2, 1));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    synth(a.path(), 10, 3, "16x20", 11);
    synth(b.path(), 10, 3, "16x20", 11);
    synth(c.path(), 10, 3, "16x20", 12);
    let ha = tree_hashes(a.path());
    assert_eq!(ha.len(), 30 * 6 + 1);
    assert_eq!(ha, tree_hashes(b.path()));
    assert_ne!(ha, tree_hashes(c.path()));

    for out in [a.path(), b.path()] {
        fogbench(&["estimate", "--input", path_str(out)]).unwrap();
        fogbench(&["invert", "--input", path_str(out), "--noise", "0.02", "--workers", "3"]).unwrap();
        fogbench(&["defog", "--input", path_str(out)]).unwrap();
        fogbench(&["evaluate", "--input", path_str(out)]).unwrap();
    }
    assert_eq!(tree_hashes(a.path()), tree_hashes(b.path()));
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |out| ["synthesize", "--scenes", "10", "--variants", "1", "--size", "8x8", "--output", out];
    assert_eq!(fogbench_bin(&[&args(path_str(a.path()))[..], &["--seed", "5"]].concat(), &[]), 0);
    assert_eq!(fogbench_bin(&[&args(path_str(b.path()))[..], &["--seed", "1"]].concat(), &[("FOGBENCH_SEED", "5")]), 0);
    assert_eq!(tree_hashes(a.path()), tree_hashes(b.path()));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    assert_eq!(fogbench_bin(&["synthesize", "--scenes", "10", "--variants", "1", "--size", "8x8", "--output", out], &[]), 0);
    assert_eq!(fogbench_bin(&["estimate", "--input", out, "--eps", "1.5"], &[]), 2);
    assert_eq!(fogbench_bin(&["estimate", "--input", out, "--t-min", "-1"], &[]), 2);
    assert_eq!(fogbench_bin(&["synthesize", "--scenes", "3", "--output", out], &[]), 2);
    assert_eq!(fogbench_bin(&["estimate", "--input", &format!("{out}/missing")], &[]), 1);
    assert_eq!(fogbench_bin(&["estimate"], &[("FOGBENCH_SEED", "x")]), 2);
}

#[test]
fn oracle_estimate_recovers_known_visibility() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 2, "32x32", 3);
    let s = &samples(dir.path())[0];
    let eps = Epsilon::DEFAULT;
    let t = transmission_from_depth(&s.depth().unwrap(), beta_from_visibility(500.0, eps).unwrap()).unwrap();
    pfm::write_field(&s.dir.join("transmission.pfm"), &t).unwrap();
    fogbench(&["estimate", "--input", path_str(dir.path())]).unwrap();
    let rec: EstimateRecord = json(&s.dir.join("estimate.json"));
    assert!((rec.image_visibility_m - 500.0).abs() < 0.5, "{}", rec.image_visibility_m);

    for s in samples(dir.path()) {
        let rec: EstimateRecord = json(&s.dir.join("estimate.json"));
        assert_eq!(rec.class, classify(rec.image_visibility_m).unwrap().index());
        let csv = fs::read_to_string(s.dir.join("histogram.csv")).unwrap();
        assert_eq!(csv.lines().count(), 51);
    }
}

#[test]
fn all_sky_sample_falls_back_to_minimum() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 1, "12x12", 4);
    let s = &samples(dir.path())[3];
    pfm::write_field(&s.dir.join("depth.pfm"), &ScalarField::filled(12, 12, f64::INFINITY).unwrap()).unwrap();
    pfm::write_field(&s.dir.join("transmission.pfm"), &ScalarField::filled(12, 12, 0.0).unwrap()).unwrap();
    fogbench(&["estimate", "--input", path_str(dir.path())]).unwrap();
    let rec: EstimateRecord = json(&s.dir.join("estimate.json"));
    assert_eq!(rec.image_visibility_m, 10.0);
    assert_eq!(rec.valid_fraction, 0.0);
    assert_eq!(rec.class, 0);
    let map = pfm::read(&s.dir.join("visibility_map.pfm")).unwrap();
    assert!(map.data.iter().all(|v| v.is_nan()));
}

#[test]
fn estimate_writes_to_separate_output() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    synth(data.path(), 10, 1, "8x8", 4);
    fogbench(&["estimate", "--input", path_str(data.path()), "--output", path_str(out.path()), "--split", "val"]).unwrap();
    let written: Vec<_> = fs::read_dir(out.path()).unwrap().collect();
    assert_eq!(written.len(), 2);
    assert!(!data.path().join("scene_0000_v000/estimate.json").exists());
}

#[test]
fn noise_free_inversion_is_accurate() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 3, "24x32", 5);
    fogbench(&["invert", "--input", path_str(dir.path())]).unwrap();
    for s in samples(dir.path()) {
        let rec: FitRecord = json(&s.dir.join("fit.json"));
        assert_eq!(rec.status, "ok");
        assert!(rec.visibility_abs_rel.unwrap() < 1e-4, "{}: {:?}", s.name, rec.visibility_abs_rel);
    }
}

#[test]
fn noisy_inversion_meets_accuracy_bar() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 10, "32x32", 6);
    fogbench(&["invert", "--input", path_str(dir.path()), "--noise", "0.01"]).unwrap();
    let all = samples(dir.path());
    assert!(all.len() >= 100);
    let mean = all.iter().map(|s| json::<FitRecord>(&s.dir.join("fit.json")).visibility_abs_rel.unwrap()).sum::<f64>()
        / all.len() as f64;
    assert!(mean < 0.05, "mean AbsRel {mean}");
}

#[test]
fn degenerate_sample_records_identifiability() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 1, "8x8", 8);
    let s = &samples(dir.path())[2];
    let meta: Meta = json(&s.dir.join("meta.json"));
    let flat = RgbImage::filled(8, 8, meta.airlight_rgb.map(|c| (c * 255.0).round() / 255.0)).unwrap();
    for name in ["fogless.png", "foggy.png"] {
        fogbench::png::write_rgb(&s.dir.join(name), &flat).unwrap();
    }
    pfm::write_image(&s.dir.join("foggy.pfm"), &flat).unwrap();
    let code = fogbench_bin(&["invert", "--input", path_str(dir.path())], &[]);
    assert_eq!(code, 3);
    let rec: FitRecord = json(&s.dir.join("fit.json"));
    assert_eq!(rec.status, "identifiability");
    assert!(rec.fit.is_none());
    let other: FitRecord = json(&samples(dir.path())[0].dir.join("fit.json"));
    assert_eq!(other.status, "ok");
}

#[test]
fn evaluate_oracle_scaled_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let root = path_str(dir.path());
    synth(dir.path(), 20, 3, "16x16", 9);
    fogbench(&["estimate", "--input", root]).unwrap();
    fogbench(&["evaluate", "--input", root]).unwrap();
    let m: MetricReport = json(&dir.path().join("metrics.json"));
    assert!(m.abs_rel < 1e-6 && m.sq_rel < 1e-6 && m.rmse_log < 1e-6);
    assert!(m.rmse < 1e-3);
    assert_eq!(m.accuracy, 1.0);
    assert_eq!(m.valid_count, 60);

    // Predictions at exactly 1.1 × ground truth.
    let preds = tempfile::tempdir().unwrap();
    for s in samples(dir.path()) {
        let meta: Meta = json(&s.dir.join("meta.json"));
        let v = meta.visibility_m * 1.1;
        let d = preds.path().join(&s.name);
        fs::create_dir_all(&d).unwrap();
        let rec = EstimateRecord { image_visibility_m: v, valid_fraction: 1.0, class: classify(v).unwrap().index() };
        write_json(&d.join("estimate.json"), &rec).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    fogbench(&["evaluate", "--input", root, "--predictions", path_str(preds.path()), "--output", path_str(out.path())])
        .unwrap();
    let m: MetricReport = json(&out.path().join("metrics.json"));
    assert!((m.abs_rel - 0.1).abs() < 1e-12, "{}", m.abs_rel);

    fogbench(&["evaluate", "--input", root, "--split", "test", "--output", path_str(out.path())]).unwrap();
    let m: MetricReport = json(&out.path().join("metrics.json"));
    let manifest: SplitManifest = json(&dir.path().join("split.json"));
    assert_eq!(m.valid_count, manifest.test.len());

    let raw: serde_json::Value = json(&out.path().join("metrics.json"));
    let keys: Vec<_> = raw.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys.len(), 6);
    for k in ["abs_rel", "sq_rel", "rmse", "rmse_log", "accuracy", "valid_count"] {
        assert!(raw[k].is_number(), "{k}");
    }
}

#[test]
fn evaluate_reads_fit_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let root = path_str(dir.path());
    synth(dir.path(), 10, 1, "16x16", 2);
    fogbench(&["invert", "--input", root]).unwrap();
    fogbench(&["evaluate", "--input", root, "--from", "fit"]).unwrap();
    let m: MetricReport = json(&dir.path().join("metrics.json"));
    assert!(m.abs_rel < 1e-4);
    assert!(!dir.path().join("pixel_metrics.json").exists());
}

#[test]
fn defog_round_trip_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let root = path_str(dir.path());
    synth(dir.path(), 10, 2, "24x24", 10);
    let all = samples(dir.path());

    // One sample without fog.
    let clear = &all[1];
    let fogless = clear.fogless().unwrap();
    pfm::write_field(&clear.dir.join("transmission.pfm"), &ScalarField::filled(24, 24, 1.0).unwrap()).unwrap();
    pfm::write_image(&clear.dir.join("foggy.pfm"), &fogless).unwrap();
    fogbench::png::write_rgb(&clear.dir.join("foggy.png"), &fogless).unwrap();

    // One sample with a band of very low transmission.
    let dim = &all[2];
    let meta: Meta = json(&dim.dir.join("meta.json"));
    let t = ScalarField::from_fn(24, 24, |r, _| if r < 4 { 0.005 } else { 0.5 }).unwrap();
    let foggy = synthesize(&dim.fogless().unwrap(), &t, meta.airlight().unwrap()).unwrap();
    pfm::write_field(&dim.dir.join("transmission.pfm"), &t).unwrap();
    pfm::write_image(&dim.dir.join("foggy.pfm"), &foggy).unwrap();

    fogbench(&["defog", "--input", root]).unwrap();
    for s in &all {
        let rec: DefogRecord = json(&s.dir.join("defog.json"));
        assert!(rec.psnr_db.unwrap() > 60.0, "{}: {:?}", s.name, rec.psnr_db);
    }

    let out = image::open(clear.dir.join("defog.png")).unwrap().to_rgba8();
    let input = image::open(clear.dir.join("foggy.png")).unwrap().to_rgb8();
    for (o, i) in out.pixels().zip(input.pixels()) {
        assert_eq!(&o.0[..3], &i.0[..]);
        assert_eq!(o.0[3], 255);
    }

    let out = image::open(dim.dir.join("defog.png")).unwrap().to_rgba8();
    for (_, y, p) in out.enumerate_pixels() {
        assert_eq!(p.0[3], if y < 4 { 0 } else { 255 });
    }
    let rec: DefogRecord = json(&dim.dir.join("defog.json"));
    assert!((rec.valid_fraction - 20.0 / 24.0).abs() < 1e-12);

    fogbench(&["defog", "--input", root, "--source", "fit", "--split", "train"]).unwrap();
    assert_eq!(fogbench_bin(&["defog", "--input", root, "--t-floor", "0"], &[]), 2);
}

#[test]
fn written_maps_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 1, "12x16", 12);
    fogbench(&["estimate", "--input", path_str(dir.path())]).unwrap();
    let mut checked = 0;
    for s in samples(dir.path()) {
        for name in ["depth.pfm", "transmission.pfm", "foggy.pfm", "visibility_map.pfm"] {
            let bytes = fs::read(s.dir.join(name)).unwrap();
            assert_eq!(Pfm::decode(&bytes).unwrap().encode(), bytes);
            checked += 1;
        }
        let meta: Meta = json(&s.dir.join("meta.json"));
        assert_eq!(meta.seed, 12);
        assert_eq!(meta.epsilon, 0.05);
    }
    assert_eq!(checked, 40);
}

#[test]
fn synthesizes_from_scene_folders() {
    let scenes = tempfile::tempdir().unwrap();
    for k in 0..10u32 {
        let d = scenes.path().join(format!("street_{k:02}"));
        fs::create_dir_all(&d).unwrap();
        let depth = ScalarField::from_fn(6, 8, |r, c| 5.0 + (r * 8 + c + k as usize) as f64).unwrap();
        let j = RgbImage::from_fn(6, 8, |r, c| [r as f64 / 5.0, c as f64 / 7.0, 0.5]).unwrap();
        pfm::write_field(&d.join("depth.pfm"), &depth).unwrap();
        fogbench::png::write_rgb(&d.join("fogless.png"), &j).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    fogbench(&["synthesize", "--input", path_str(scenes.path()), "--variants", "2", "--output", path_str(out.path())])
        .unwrap();
    let all = samples(out.path());
    assert_eq!(all.len(), 20);
    assert_eq!(all[0].name, "street_00_v000");
    assert_eq!(all[0].depth().unwrap().dims(), (6, 8));
}
