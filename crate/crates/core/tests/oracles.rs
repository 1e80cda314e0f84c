use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use roughmap_core::pipeline::{Analyzer, PipelineConfig};
use roughmap_core::preprocess::{compensate_tilt, detrend, extract_patch, PatchSpec};
use roughmap_core::roughness::{delta_method, fit_power_law, Transform};
use roughmap_core::spectrum::{make_waveband, welch_psd, WelchConfig};
use roughmap_core::stats;
use roughmap_core::synth::{
    generate_patch, generate_patch_with, generate_profile, generate_traverse, AttitudeSchedule, DefectInjection,
    LateralModel, Segment, SurfaceModel, TraverseScript,
};

const B: f64 = 0.008;
const N: usize = 112;

#[test]
fn delta_sigma_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(-7.0f64, 0.05).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng).exp()).collect();
    let (mu, var) = delta_method(-7.0, 0.05 * 0.05, Transform::Exp).unwrap();
    assert_relative_eq!(mu, (-7.0f64).exp(), max_relative = 1e-15);
    assert_relative_eq!(var.sqrt(), stats::sample_std(&draws), max_relative = 0.01);
}

fn wide_spec(profiles: usize) -> PatchSpec {
    PatchSpec { width: (profiles as f64 + 0.5) * B, ..PatchSpec::default() }
}

#[test]
fn iso_c_recovered_from_200_profiles() {
    let spec = wide_spec(200);
    let analyzer = Analyzer::new(PipelineConfig { patch: spec, ..PipelineConfig::default() }).unwrap();
    let grid = generate_patch(&SurfaceModel::new(16e-6, -2.0).unwrap(), &spec, 4).unwrap();
    let a = analyzer.analyze_grid(&grid).unwrap();
    assert_eq!(a.roughness.profiles, 200);
    assert!((a.roughness.r_hat / 16e-6 - 1.0).abs() <= 0.30, "R {}", a.roughness.r_hat);
    assert!((a.roughness.w_hat + 2.0).abs() <= 0.15, "w {}", a.roughness.w_hat);
}

#[test]
fn ploughed_patch_within_ensemble_spread() {
    let model = SurfaceModel::new(1734e-6, -2.59).unwrap();
    let analyzer = Analyzer::new(PipelineConfig::default()).unwrap();
    let spec = PatchSpec::default();
    let runs: Vec<(f64, f64)> = (0..20)
        .map(|s| {
            let r = analyzer.analyze_grid(&generate_patch(&model, &spec, 500 + s).unwrap()).unwrap().roughness;
            assert_eq!(r.profiles, 112);
            (r.r_hat.ln(), r.w_hat)
        })
        .collect();
    let (ln_r, w): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    // Ensemble mean within three standard errors plus a 5% allowance for the
    // estimator's known small bias; each patch within the recovery band.
    let se = |v: &[f64]| stats::sample_std(v) / (v.len() as f64).sqrt();
    assert!((stats::mean(&ln_r) - model.phi0.ln()).abs() <= 3.0 * se(&ln_r) + 0.05);
    assert!((stats::mean(&w) - model.waviness).abs() <= 3.0 * se(&w) + 0.02);
    assert!(ln_r.iter().all(|b| (b.exp() / model.phi0 - 1.0).abs() <= 0.30));
}

#[test]
fn amplitude_scaling_shifts_b_only() {
    let z = detrend(&generate_profile(&SurfaceModel::new(393e-6, -2.4).unwrap(), N, B, 3).unwrap(), B).unwrap();
    let c: f64 = 3.7;
    let scaled: Vec<f64> = z.iter().map(|v| v * c).collect();
    let cfg = WelchConfig::default();
    let a = fit_power_law(&welch_psd(&z, B, &cfg).unwrap()).unwrap();
    let b = fit_power_law(&welch_psd(&scaled, B, &cfg).unwrap()).unwrap();
    assert_relative_eq!(b.b, a.b + 2.0 * c.ln(), epsilon = 1e-10);
    assert_relative_eq!(b.w, a.w, epsilon = 1e-10);
}

fn level_script(density: usize) -> TraverseScript {
    TraverseScript {
        seed: 2,
        noise: 0.0,
        patch: PatchSpec::default(),
        attitude: AttitudeSchedule::Level,
        lateral: LateralModel::Independent,
        density,
        segments: vec![Segment { name: "c".into(), model: SurfaceModel::new(16e-6, -2.0).unwrap(), patches: 1 }],
        defects: Vec::new(),
    }
}

#[test]
fn dense_patch_point_count() {
    let spec = PatchSpec::default();
    let nominal = (spec.length / spec.step) * (spec.width / spec.step);
    for density in [1, 2] {
        let p = generate_traverse(&level_script(density)).unwrap().remove(0);
        let world = compensate_tilt(&p.cloud, p.attitude).unwrap();
        let count = extract_patch(&world, &spec).unwrap().len() as f64;
        let expected = nominal * (density * density) as f64;
        assert!((count / expected - 1.0).abs() < 0.02, "{count} vs {expected}");
    }
}

#[test]
fn denser_sampling_keeps_cell_centers_on_the_surface() {
    // With an odd density the middle sub-point of each cell sits on the
    // cell center, so it must reproduce the gridded surface exactly.
    let p = generate_traverse(&level_script(3)).unwrap().remove(0);
    let pts = p.cloud.points();
    let (rows, cols) = (p.surface.rows(), p.surface.cols());
    assert_eq!(pts.len(), rows * cols * 9);
    for (r, c) in [(0, 0), (5, 17), (rows - 1, cols - 1)] {
        let center = pts[((r * 3 + 1) * cols + c) * 3 + 1];
        assert!((center[2] - p.surface.get(r, c)).abs() < 1e-12);
    }
}

#[test]
fn correlated_rows_keep_the_target_spectrum() {
    let model = SurfaceModel::new(64e-6, -2.0).unwrap();
    let spec = PatchSpec::default();
    let band = make_waveband(N, B).unwrap();
    let mut mean_phi = vec![0.0; N / 2];
    let seeds = 30;
    for s in 0..seeds {
        let grid = generate_patch_with(&model, &spec, s, LateralModel::Correlated).unwrap();
        for r in (0..grid.rows()).step_by(8) {
            let est = welch_psd(&detrend(grid.row(r), B).unwrap(), B, &WelchConfig::hann(3)).unwrap();
            for (acc, p) in mean_phi.iter_mut().zip(&est.phi) {
                *acc += p;
            }
        }
    }
    let count = (seeds * 14) as f64;
    let l = N / 2;
    let (mut got, mut want) = (0.0, 0.0);
    for k in l / 4..3 * l / 4 {
        got += mean_phi[k] / count;
        want += model.psd(band.omegas()[k]);
    }
    assert!((got / want - 1.0).abs() < 0.10, "{got} vs {want}");
}

#[test]
fn correlated_rows_decorrelate_with_distance() {
    let model = SurfaceModel::new(64e-6, -2.0).unwrap();
    let grid = generate_patch_with(&model, &PatchSpec::default(), 8, LateralModel::Correlated).unwrap();
    let corr = |a: &[f64], b: &[f64]| {
        let (a, b) = (detrend(a, B).unwrap(), detrend(b, B).unwrap());
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        dot(&a, &b) / (dot(&a, &a) * dot(&b, &b)).sqrt()
    };
    let near = corr(grid.row(50), grid.row(51));
    let far = corr(grid.row(0), grid.row(100));
    assert!(near > 0.8, "adjacent rows {near}");
    assert!(far.abs() < near, "far {far} vs near {near}");
}

#[test]
fn defect_profile_peaks_at_center() {
    let spec = PatchSpec::default();
    let d = DefectInjection { index: 0, height: -0.05, extent: 0.6 };
    let [cx, cy] = spec.center();
    assert_relative_eq!(d.height_at(cx, cy, &spec), -0.05);
    assert_eq!(d.height_at(cx + 0.31, cy, &spec), 0.0);
    assert_relative_eq!(d.height_at(cx + 0.15, cy, &spec), -0.025, epsilon = 1e-12);
}
