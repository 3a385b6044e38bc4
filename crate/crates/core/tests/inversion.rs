use fogbench_core::invert::{
    airlight_at_beta, estimate_airlight_bright, fit_uniform_fog, fit_uniform_fog_traced, transmission_from_images,
    FitOptions,
};
use fogbench_core::physics::{synthesize, transmission_from_depth, visibility_from_beta};
use fogbench_core::scene::procedural_scene;
use fogbench_core::synth::generate_sample;
use fogbench_core::{Airlight, Epsilon, Error, RgbImage, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn textured(h: usize, w: usize, seed: u64) -> (RgbImage, ScalarField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = RgbImage::from_fn(h, w, |_, _| [0; 3].map(|_| rng.random_range(0.0..0.8))).unwrap();
    let d = ScalarField::from_fn(h, w, |r, c| 5.0 + 4.0 * (r * w + c) as f64).unwrap();
    (j, d)
}

#[test]
fn noise_free_fit_recovers_parameters() {
    let (j, d) = textured(16, 16, 1);
    let a = Airlight::new(0.9, 0.88, 0.86).unwrap();
    let beta = 0.005;
    let t = transmission_from_depth(&d, beta).unwrap();
    let i = synthesize(&j, &t, a).unwrap();
    let fit = fit_uniform_fog(&i, &j, &d, &FitOptions::default()).unwrap();
    assert!(rel(fit.beta, beta) < 1e-6, "beta {}", fit.beta);
    for (x, y) in fit.airlight.to_array().iter().zip(a.to_array()) {
        assert!(rel(*x, y) < 1e-6);
    }
    assert!(fit.residual_rms < 1e-8);
    assert!(fit.converged);
    assert_eq!(fit.visibility, visibility_from_beta(fit.beta, Epsilon::DEFAULT).unwrap());
}

#[test]
fn fit_recovers_synthesized_dataset_samples() {
    for k in 0..10 {
        let scene = procedural_scene(k, 32, 40, 21).unwrap();
        let s = generate_sample(k, &scene, 0, 21, Epsilon::DEFAULT).unwrap();
        let fit = fit_uniform_fog(&s.foggy, &s.fogless, &s.depth, &FitOptions::default()).unwrap();
        assert!(rel(fit.visibility, s.visibility) < 1e-6, "scene {k}: {} vs {}", fit.visibility, s.visibility);
    }
}

#[test]
fn noisy_fit_meets_accuracy_bar() {
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut total = 0.0;
    for trial in 0..100u32 {
        let scene = procedural_scene(trial, 32, 32, 99).unwrap();
        let s = generate_sample(trial, &scene, 0, 99, Epsilon::DEFAULT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial as u64);
        let noisy = RgbImage::new_clamped(
            32,
            32,
            s.foggy.pixels().iter().map(|p| p.map(|c| c + noise.sample(&mut rng))).collect(),
        )
        .unwrap();
        let fit = fit_uniform_fog(&noisy, &s.fogless, &s.depth, &FitOptions::default()).unwrap();
        total += rel(fit.visibility, s.visibility);
    }
    let mean = total / 100.0;
    assert!(mean < 0.05, "mean AbsRel {mean}");
}

#[test]
fn airlight_is_consistent_with_returned_beta() {
    let (j, d) = textured(12, 12, 2);
    let a = Airlight::new(0.8, 0.75, 0.95).unwrap();
    let t = transmission_from_depth(&d, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let i = RgbImage::new_clamped(
        12,
        12,
        synthesize(&j, &t, a).unwrap().pixels().iter().map(|p| p.map(|c| c + rng.random_range(-0.01..0.01))).collect(),
    )
    .unwrap();
    let opts = FitOptions::default();
    let fit = fit_uniform_fog(&i, &j, &d, &opts).unwrap();
    let again = airlight_at_beta(&i, &j, &d, fit.beta, opts.sky_t_cutoff).unwrap();
    for (x, y) in fit.airlight.to_array().iter().zip(again.to_array()) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn golden_section_objective_never_increases() {
    let (j, d) = textured(10, 10, 3);
    let t = transmission_from_depth(&d, 0.03).unwrap();
    let i = synthesize(&j, &t, Airlight::gray(0.9).unwrap()).unwrap();
    let (_, trace) = fit_uniform_fog_traced(&i, &j, &d, &FitOptions::default()).unwrap();
    assert!(trace.golden.len() > 10);
    for w in trace.golden.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn flat_profile_is_not_identifiable() {
    let a = Airlight::new(0.9, 0.85, 0.8).unwrap();
    let j = RgbImage::filled(8, 8, a.to_array()).unwrap();
    let d = ScalarField::from_fn(8, 8, |r, c| 10.0 + (r * 8 + c) as f64).unwrap();
    let err = fit_uniform_fog(&j, &j, &d, &FitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Identifiability));

    // Storage-level disagreement between J and I is still no fog signal.
    let i = RgbImage::filled(8, 8, a.to_array().map(|c| (c as f32) as f64)).unwrap();
    assert!(matches!(fit_uniform_fog(&i, &j, &d, &FitOptions::default()), Err(Error::Identifiability)));
}

#[test]
fn all_sky_has_no_usable_pixels() {
    let j = RgbImage::filled(4, 4, [0.2; 3]).unwrap();
    let d = ScalarField::filled(4, 4, f64::INFINITY).unwrap();
    assert!(matches!(fit_uniform_fog(&j, &j, &d, &FitOptions::default()), Err(Error::EmptyMask)));
}

#[test]
fn transmission_recovered_from_exact_images() {
    let (j, d) = textured(9, 11, 4);
    let a = Airlight::new(0.95, 0.9, 0.92).unwrap();
    let t = transmission_from_depth(&d, 0.01).unwrap();
    let i = synthesize(&j, &t, a).unwrap();
    let est = transmission_from_images(&i, &j, a, 0.05).unwrap();
    assert!(est.valid_count() > 0);
    for ((&x, &y), &m) in est.field.values().iter().zip(t.values()).zip(est.mask.bits()) {
        if m {
            assert!((x - y).abs() < 1e-9);
        }
    }

    let black = RgbImage::filled(2, 2, [0.0; 3]).unwrap();
    let half = ScalarField::filled(2, 2, 0.5).unwrap();
    let gray = Airlight::gray(0.9).unwrap();
    let i = synthesize(&black, &half, gray).unwrap();
    let est = transmission_from_images(&i, &black, gray, 0.05).unwrap();
    assert!(est.field.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));

    let same = RgbImage::filled(2, 2, gray.to_array()).unwrap();
    assert_eq!(transmission_from_images(&same, &same, gray, 0.05).unwrap().valid_count(), 0);
}

#[test]
fn bright_pixels_estimate_airlight_with_sky() {
    let a = Airlight::new(0.93, 0.9, 0.87).unwrap();
    let scene = procedural_scene(0, 40, 40, 3).unwrap();
    let d = ScalarField::from_fn(40, 40, |r, c| if r < 15 { f64::INFINITY } else { scene.depth.get(r, c) }).unwrap();
    let t = transmission_from_depth(&d, 0.01).unwrap();
    let i = synthesize(&scene.fogless, &t, a).unwrap();
    let est = estimate_airlight_bright(&i, 10.0).unwrap();
    for (x, y) in est.to_array().iter().zip(a.to_array()) {
        assert!((x - y).abs() < 0.02);
    }

    let flat = RgbImage::filled(3, 3, a.to_array()).unwrap();
    assert_eq!(estimate_airlight_bright(&flat, 5.0).unwrap(), a);

    let mixed = RgbImage::new(1, 2, vec![[0.2, 0.4, 0.6], [0.4, 0.6, 0.8]]).unwrap();
    let mean = estimate_airlight_bright(&mixed, 100.0).unwrap().to_array();
    for (x, y) in mean.iter().zip([0.3, 0.5, 0.7]) {
        assert!((x - y).abs() < 1e-15);
    }
}
