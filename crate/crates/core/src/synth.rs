//! Synthetic terrain with known roughness parameters.
//!
//! Profiles are sums of cosines on the exact waveband bins with amplitudes
//! `a_k = sqrt(2 phi(omega_k) d_omega)` and independent uniform phases, so
//! the periodogram of an undetrended profile reproduces `phi0 * omega^w`
//! bin for bin. Everything is driven by explicit seeds and is bit-for-bit
//! reproducible, including under the parallel build.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::preprocess::{rotate_to_vehicle, Attitude, ElevationPatch, Frame, PatchSpec, PointCloud3D, MIN_PROFILE_SAMPLES};
use crate::spectrum::make_waveband;

/// Target spectrum `phi(omega) = phi0 * omega^waviness` (omega in rad/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceModel {
    pub phi0: f64,
    pub waviness: f64,
}

impl SurfaceModel {
    pub fn new(phi0: f64, waviness: f64) -> Result<Self> {
        let m = Self { phi0, waviness };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi0 >= 0.0 && self.phi0.is_finite() && self.waviness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "surface model needs finite phi0 >= 0 and finite waviness, got ({}, {})",
                self.phi0, self.waviness
            )));
        }
        Ok(())
    }

    pub fn psd(&self, omega: f64) -> f64 {
        self.phi0 * omega.powf(self.waviness)
    }
}

fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Bin coefficients `(re, im)` of one row: `z(x) = sum re cos(omega x) - im sin(omega x)`.
type RowCoefficients = Vec<(f64, f64)>;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_PROFILE_SAMPLES {
        return Err(Error::InvalidArgument(format!("{samples} samples, need at least {MIN_PROFILE_SAMPLES}")));
    }
    Ok(())
}

fn random_phase_row(model: &SurfaceModel, omegas: &[f64], d_omega: f64, rng: &mut ChaCha8Rng) -> RowCoefficients {
    omegas
        .iter()
        .map(|&o| {
            let amp = (2.0 * model.psd(o) * d_omega).sqrt();
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            (amp * phase.cos(), amp * phase.sin())
        })
        .collect()
}

enum Lines {
    /// Each row is a strip `step` wide with its own coefficients.
    Strips(Vec<RowCoefficients>),
    /// Continuous in y: per bin, `(amplitude per wave, [(lateral wavenumber, phase)])`.
    Field(Vec<(f64, Vec<(f64, f64)>)>),
}

/// A synthesized surface that can be evaluated anywhere along each row,
/// not only at grid nodes.
pub struct SurfaceRealization {
    omegas: Vec<f64>,
    lines: Lines,
    rows: usize,
    samples: usize,
    step: f64,
}

impl SurfaceRealization {
    pub fn new(model: &SurfaceModel, rows: usize, samples: usize, step: f64, seed: u64, lateral: LateralModel) -> Result<Self> {
        model.validate()?;
        check_samples(samples)?;
        let band = make_waveband(samples, step)?;
        let (omegas, d_omega) = (band.omegas().to_vec(), band.delta());
        let lines = match lateral {
            LateralModel::Independent => Lines::Strips(par::map_range_auto(rows, |r| {
                random_phase_row(model, &omegas, d_omega, &mut row_rng(seed, r as u64))
            })),
            LateralModel::Identical => {
                Lines::Strips(vec![random_phase_row(model, &omegas, d_omega, &mut row_rng(seed, 0)); rows])
            }
            LateralModel::Correlated => Lines::Field(plane_waves(model, &omegas, d_omega, &mut row_rng(seed, 0))),
        };
        Ok(Self { omegas, lines, rows, samples, step })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Bin coefficients of the line `dy` meters off the center of `row`.
    fn line(&self, row: usize, dy: f64) -> RowCoefficients {
        match &self.lines {
            Lines::Strips(rows) => rows[row].clone(),
            Lines::Field(bins) => {
                let y = row as f64 * self.step + dy;
                bins.iter()
                    .map(|(amp, waves)| {
                        waves.iter().fold((0.0, 0.0), |(re, im), (nu, p)| {
                            let t: f64 = nu * y + p;
                            (re + amp * t.cos(), im + amp * t.sin())
                        })
                    })
                    .collect()
            }
        }
    }

    fn eval_line(&self, line: &RowCoefficients, x: f64) -> f64 {
        self.omegas
            .iter()
            .zip(line)
            .map(|(o, (re, im))| {
                let t = o * x;
                re * t.cos() - im * t.sin()
            })
            .sum()
    }

    /// Elevation at distance `x` along `row` from its first sample, `dy`
    /// meters across from the row center.
    pub fn eval(&self, row: usize, x: f64, dy: f64) -> f64 {
        self.eval_line(&self.line(row, dy), x)
    }

    pub fn profile(&self, row: usize) -> Vec<f64> {
        let line = self.line(row, 0.0);
        (0..self.samples).map(|i| self.eval_line(&line, i as f64 * self.step)).collect()
    }
}

/// One longitudinal profile of `samples` points every `step` meters.
pub fn generate_profile(model: &SurfaceModel, samples: usize, step: f64, seed: u64) -> Result<Vec<f64>> {
    Ok(SurfaceRealization::new(model, 1, samples, step, seed, LateralModel::Independent)?.profile(0))
}

/// How profiles across a synthetic patch relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LateralModel {
    /// Every row draws its own phases.
    #[default]
    Independent,
    /// Every row repeats row 0 (fully correlated, furrow-like).
    Identical,
    /// Each bin is a bundle of plane waves whose lateral wavenumber is
    /// uniform in `[-omega_k, omega_k]`, so rows decorrelate over roughly one
    /// wavelength. Expected row spectrum is still the target.
    Correlated,
}

/// Plane waves per bin for `LateralModel::Correlated`.
const WAVES_PER_BIN: usize = 8;

fn plane_waves(model: &SurfaceModel, omegas: &[f64], d_omega: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, Vec<(f64, f64)>)> {
    omegas
        .iter()
        .map(|&o| {
            let amp = (2.0 * model.psd(o) * d_omega / WAVES_PER_BIN as f64).sqrt();
            let waves = (0..WAVES_PER_BIN)
                .map(|_| (rng.random_range(-o..=o), rng.random_range(0.0..2.0 * PI)))
                .collect();
            (amp, waves)
        })
        .collect()
}

/// An `m x n` patch following `spec`. Row `r` uses RNG stream `r` of `seed`,
/// so row 0 equals `generate_profile(model, n, step, seed)`.
pub fn generate_patch(model: &SurfaceModel, spec: &PatchSpec, seed: u64) -> Result<ElevationPatch> {
    generate_patch_with(model, spec, seed, LateralModel::Independent)
}

pub fn generate_patch_with(
    model: &SurfaceModel,
    spec: &PatchSpec,
    seed: u64,
    lateral: LateralModel,
) -> Result<ElevationPatch> {
    spec.validate()?;
    let surface = SurfaceRealization::new(model, spec.profile_count(), spec.samples_per_profile(), spec.step, seed, lateral)?;
    sample_patch(&surface, spec)
}

fn sample_patch(surface: &SurfaceRealization, spec: &PatchSpec) -> Result<ElevationPatch> {
    let rows = par::map_range_auto(surface.rows(), |r| surface.profile(r));
    let grid: Vec<f64> = rows.into_iter().flatten().collect();
    let mut patch = ElevationPatch::from_grid(surface.rows(), surface.samples(), spec.step, grid)?;
    patch.origin = spec.origin;
    Ok(patch)
}

/// Raised-cosine bump of `height` meters and base diameter `extent`
/// centered on the patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectInjection {
    pub index: usize,
    pub height: f64,
    pub extent: f64,
}

impl DefectInjection {
    /// Bump height at world position `(x, y)`.
    pub fn height_at(&self, x: f64, y: f64, spec: &PatchSpec) -> f64 {
        let [cx, cy] = spec.center();
        let radius = 0.5 * self.extent;
        let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
        if d < radius {
            self.height * (0.5 * PI * d / radius).cos().powi(2)
        } else {
            0.0
        }
    }

    pub fn apply(&self, patch: &mut ElevationPatch, spec: &PatchSpec) {
        for r in 0..patch.rows() {
            for c in 0..patch.cols() {
                let [x, y] = spec.cell_center(r, c);
                *patch.get_mut(r, c) += self.height_at(x, y, spec);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum AttitudeSchedule {
    Level,
    /// Independent uniform roll and pitch per patch within the given bounds.
    Uniform { max_roll_deg: f64, max_pitch_deg: f64 },
    /// One entry per patch.
    Explicit { roll_deg: Vec<f64>, pitch_deg: Vec<f64> },
}

impl Default for AttitudeSchedule {
    fn default() -> Self {
        AttitudeSchedule::Level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub model: SurfaceModel,
    pub patches: usize,
}

/// Default stereo reconstruction noise, meters.
pub const DEFAULT_SENSOR_NOISE: f64 = 0.004;

fn default_noise() -> f64 {
    DEFAULT_SENSOR_NOISE
}

fn default_density() -> usize {
    1
}

/// A synthetic drive: surface segments, vehicle attitude, sensor noise and
/// injected defects. Parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraverseScript {
    #[serde(default)]
    pub seed: u64,
    /// Gaussian noise on vehicle-frame elevation, meters.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub patch: PatchSpec,
    #[serde(default)]
    pub attitude: AttitudeSchedule,
    #[serde(default)]
    pub lateral: LateralModel,
    /// Sensor points per cell side; `1` puts one point on each cell center.
    #[serde(default = "default_density")]
    pub density: usize,
    #[serde(rename = "segment")]
    pub segments: Vec<Segment>,
    #[serde(default, rename = "defect")]
    pub defects: Vec<DefectInjection>,
}

impl TraverseScript {
    pub fn from_toml(text: &str) -> Result<Self> {
        let script: TraverseScript = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn total_patches(&self) -> usize {
        self.segments.iter().map(|s| s.patches).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.patch.validate()?;
        if self.segments.is_empty() {
            return Err(Error::Config("traverse has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            s.model.validate()?;
            if s.patches == 0 {
                return Err(Error::Config(format!("segment {i} has no patches")));
            }
        }
        if self.density == 0 {
            return Err(Error::Config("density must be at least 1".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("noise {} must be >= 0", self.noise)));
        }
        let total = self.total_patches();
        match &self.attitude {
            AttitudeSchedule::Level => {}
            AttitudeSchedule::Uniform { max_roll_deg, max_pitch_deg } => {
                for v in [max_roll_deg, max_pitch_deg] {
                    if !(*v >= 0.0 && *v < 90.0) {
                        return Err(Error::Config(format!("attitude bound {v} deg outside [0, 90)")));
                    }
                }
            }
            AttitudeSchedule::Explicit { roll_deg, pitch_deg } => {
                if roll_deg.len() != total || pitch_deg.len() != total {
                    return Err(Error::Config(format!(
                        "explicit attitude needs {total} roll and pitch entries, got {} and {}",
                        roll_deg.len(),
                        pitch_deg.len()
                    )));
                }
                for (r, p) in roll_deg.iter().zip(pitch_deg) {
                    Attitude::from_degrees(*r, *p)?;
                }
            }
        }
        for d in &self.defects {
            if d.index >= total {
                return Err(Error::Config(format!("defect index {} beyond {total} patches", d.index)));
            }
            if !(d.extent > 0.0 && d.height.is_finite()) {
                return Err(Error::Config(format!("defect at {} needs extent > 0", d.index)));
            }
        }
        Ok(())
    }

    fn attitudes(&self) -> Result<Vec<Attitude>> {
        let total = self.total_patches();
        match &self.attitude {
            AttitudeSchedule::Level => Ok(vec![Attitude::level(); total]),
            AttitudeSchedule::Uniform { max_roll_deg, max_pitch_deg } => {
                let mut rng = row_rng(self.seed, u64::MAX);
                let draw = |rng: &mut ChaCha8Rng, max: f64| if max > 0.0 { rng.random_range(-max..=max) } else { 0.0 };
                (0..total)
                    .map(|_| {
                        let roll = draw(&mut rng, *max_roll_deg);
                        let pitch = draw(&mut rng, *max_pitch_deg);
                        Attitude::from_degrees(roll, pitch)
                    })
                    .collect()
            }
            AttitudeSchedule::Explicit { roll_deg, pitch_deg } => {
                roll_deg.iter().zip(pitch_deg).map(|(r, p)| Attitude::from_degrees(*r, *p)).collect()
            }
        }
    }
}

/// Ground truth for one generated patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchTruth {
    pub segment: usize,
    pub phi0: f64,
    pub waviness: f64,
    pub defect: bool,
}

#[derive(Debug, Clone)]
pub struct TraversePatch {
    pub index: usize,
    /// Vehicle-frame cloud including sensor noise.
    pub cloud: PointCloud3D,
    pub attitude: Attitude,
    /// World-frame surface before noise, on the patch grid.
    pub surface: ElevationPatch,
    pub truth: PatchTruth,
}

/// One world-frame point per grid cell, at the cell center.
pub fn patch_to_cloud(patch: &ElevationPatch, spec: &PatchSpec) -> Result<PointCloud3D> {
    let mut points = Vec::with_capacity(patch.rows() * patch.cols());
    for r in 0..patch.rows() {
        for c in 0..patch.cols() {
            let [x, y] = spec.cell_center(r, c);
            points.push([x, y, patch.get(r, c)]);
        }
    }
    PointCloud3D::new(points, Frame::World)
}

/// World-frame sensor points: `density^2` per cell on a regular sub-grid,
/// each evaluated on the continuous surface plus any defect bumps.
fn sample_cloud(
    surface: &SurfaceRealization,
    spec: &PatchSpec,
    defects: &[&DefectInjection],
    density: usize,
) -> Result<PointCloud3D> {
    let offsets: Vec<f64> = (0..density).map(|j| ((j as f64 + 0.5) / density as f64 - 0.5) * spec.step).collect();
    let mut points = Vec::with_capacity(surface.rows() * surface.samples() * density * density);
    for r in 0..surface.rows() {
        for oy in &offsets {
            let line = surface.line(r, *oy);
            for c in 0..surface.samples() {
                let [cx, cy] = spec.cell_center(r, c);
                for ox in &offsets {
                    let (x, y) = (cx + ox, cy + oy);
                    let z = surface.eval_line(&line, c as f64 * spec.step + ox)
                        + defects.iter().map(|d| d.height_at(x, y, spec)).sum::<f64>();
                    points.push([x, y, z]);
                }
            }
        }
    }
    PointCloud3D::new(points, Frame::World)
}

/// Per-patch seed derived from the script seed (SplitMix64 step).
fn patch_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates every patch of the script in order.
pub fn generate_traverse(script: &TraverseScript) -> Result<Vec<TraversePatch>> {
    script.validate()?;
    let attitudes = script.attitudes()?;
    let mut plan = Vec::with_capacity(script.total_patches());
    for (si, seg) in script.segments.iter().enumerate() {
        for _ in 0..seg.patches {
            plan.push((si, seg.model));
        }
    }
    let spec = script.patch;
    let results = par::map_range_auto(plan.len(), |i| -> Result<TraversePatch> {
        let (segment, model) = plan[i];
        let seed = patch_seed(script.seed, i);
        let realization = SurfaceRealization::new(
            &model,
            spec.profile_count(),
            spec.samples_per_profile(),
            spec.step,
            seed,
            script.lateral,
        )?;
        let mut surface = sample_patch(&realization, &spec)?;
        surface.index = i;
        let defects: Vec<&DefectInjection> = script.defects.iter().filter(|d| d.index == i).collect();
        for d in &defects {
            d.apply(&mut surface, &spec);
        }
        let defect = !defects.is_empty();
        let world = sample_cloud(&realization, &spec, &defects, script.density)?;
        let vehicle = rotate_to_vehicle(&world, attitudes[i])?;
        let cloud = if script.noise > 0.0 {
            let normal = Normal::new(0.0, script.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut rng = row_rng(seed, u64::MAX - 1);
            let pts = vehicle.into_points().into_iter().map(|[x, y, z]| [x, y, z + normal.sample(&mut rng)]).collect();
            PointCloud3D::new(pts, Frame::Vehicle)?
        } else {
            vehicle
        };
        Ok(TraversePatch {
            index: i,
            cloud,
            attitude: attitudes[i],
            surface,
            truth: PatchTruth { segment, phi0: model.phi0, waviness: model.waviness, defect },
        })
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{compensate_tilt, detrend, extract_patch, rasterize};
    use crate::spectrum::{welch_psd, WelchConfig};

    const B: f64 = 0.008;
    const N: usize = 112;

    fn iso_c() -> SurfaceModel {
        SurfaceModel::new(16e-6, -2.0).unwrap()
    }

    fn rms(z: &[f64]) -> f64 {
        (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt()
    }

    #[test]
    fn zero_energy_is_flat() {
        let z = generate_profile(&SurfaceModel::new(0.0, -2.0).unwrap(), N, B, 1).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn seeded_determinism() {
        let a = generate_profile(&iso_c(), N, B, 42).unwrap();
        let b = generate_profile(&iso_c(), N, B, 42).unwrap();
        let c = generate_profile(&iso_c(), N, B, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rms_matches_discrete_band_sum() {
        // Realized mean square is the sum of a_k^2 / 2 over bins (exact for
        // every bin but Nyquist, whose power depends on its phase).
        let band = make_waveband(N, B).unwrap();
        let m = iso_c();
        let riemann: f64 = band.omegas().iter().map(|o| m.psd(*o) * band.delta()).sum();
        let mean_sq: f64 = (0..500).map(|s| rms(&generate_profile(&m, N, B, s).unwrap()).powi(2)).sum::<f64>() / 500.0;
        assert!((mean_sq / riemann - 1.0).abs() < 1e-3, "{mean_sq} vs {riemann}");
    }

    #[test]
    fn periodogram_of_raw_profile_is_the_target() {
        // Without detrending the exact-bin synthesis is recovered bin for bin;
        // the estimator still refuses the undetrended profile, so compute the
        // one-sided periodogram directly here.
        let m = SurfaceModel::new(393e-6, -2.4).unwrap();
        let z = generate_profile(&m, N, B, 9).unwrap();
        let band = make_waveband(N, B).unwrap();
        for (k, o) in band.omegas().iter().enumerate().take(N / 2 - 1) {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in z.iter().enumerate() {
                let ang = 2.0 * PI * (k + 1) as f64 * i as f64 / N as f64;
                re += v * ang.cos();
                im -= v * ang.sin();
            }
            let phi = 2.0 * (re * re + im * im) / (N * N) as f64 / band.delta();
            assert!((phi / m.psd(*o) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_spectrum_central_half() {
        // Hann taper: the rectangular periodogram of a detrended profile
        // carries the removed ramp's 1/k^2 leakage into every bin.
        let m = iso_c();
        let band = make_waveband(N, B).unwrap();
        let mut mean_phi = vec![0.0; N / 2];
        for s in 0..500 {
            let z = detrend(&generate_profile(&m, N, B, s).unwrap(), B).unwrap();
            let est = welch_psd(&z, B, &WelchConfig::hann(3)).unwrap();
            for (acc, p) in mean_phi.iter_mut().zip(&est.phi) {
                *acc += p / 500.0;
            }
        }
        let l = N / 2;
        for k in l / 4..3 * l / 4 {
            let target = m.psd(band.omegas()[k]);
            assert!((mean_phi[k] / target - 1.0).abs() < 0.10, "bin {k}: {} vs {target}", mean_phi[k]);
        }
    }

    #[test]
    fn patch_shape_and_seed_contract() {
        let spec = PatchSpec::default();
        let p = generate_patch(&iso_c(), &spec, 5).unwrap();
        assert_eq!((p.rows(), p.cols()), (112, 112));
        assert_eq!(p.row(0), generate_profile(&iso_c(), N, B, 5).unwrap().as_slice());
        let q = generate_patch(&iso_c(), &spec, 6).unwrap();
        assert_ne!(p.grid(), q.grid());
        let (rp, rq) = (rms(p.grid()), rms(q.grid()));
        assert!((rp / rq - 1.0).abs() < 0.1);
        let same = generate_patch_with(&iso_c(), &spec, 5, LateralModel::Identical).unwrap();
        assert_eq!(same.row(0), same.row(111));
    }

    #[test]
    fn patch_rows_match_profile_rms_distribution() {
        let spec = PatchSpec::default();
        let p = generate_patch(&iso_c(), &spec, 11).unwrap();
        let rows: Vec<f64> = (0..p.rows()).map(|r| rms(p.row(r))).collect();
        let singles: Vec<f64> = (0..112).map(|s| rms(&generate_profile(&iso_c(), N, B, 10_000 + s).unwrap())).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&rows) / mean(&singles) - 1.0).abs() < 0.02);
    }

    fn script_text() -> &'static str {
        r#"
seed = 3
noise = 0.0

[attitude]
mode = "uniform"
max_roll_deg = 4.5
max_pitch_deg = 4.5

[[segment]]
name = "concrete"
phi0 = 16e-6
waviness = -2.0
patches = 2

[[segment]]
name = "dirt"
phi0 = 64e-6
waviness = -2.2
patches = 1

[[defect]]
index = 1
height = 0.05
extent = 0.3
"#
    }

    #[test]
    fn script_parses_and_validates() {
        let s = TraverseScript::from_toml(script_text()).unwrap();
        assert_eq!(s.total_patches(), 3);
        assert_eq!(s.segments[1].model.phi0, 64e-6);
        assert_eq!(TraverseScript::from_toml(&s.to_toml().unwrap()).unwrap(), s);
        let bad = script_text().replace("index = 1", "index = 3");
        assert!(matches!(TraverseScript::from_toml(&bad), Err(Error::Config(_))));
        assert!(TraverseScript::from_toml("seed = 1\nsegment = []").is_err());
    }

    #[test]
    fn traverse_round_trip_through_preprocess() {
        let mut s = TraverseScript::from_toml(script_text()).unwrap();
        let out = generate_traverse(&s).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out[1].truth.defect && !out[0].truth.defect);
        for p in &out {
            let world = compensate_tilt(&p.cloud, p.attitude).unwrap();
            let expected = patch_to_cloud(&p.surface, &s.patch).unwrap();
            for (a, b) in world.points().iter().zip(expected.points()) {
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() < 1e-10);
                }
            }
        }
        // Level attitude, no noise: grid comes back to 1e-10.
        s.attitude = AttitudeSchedule::Level;
        for p in generate_traverse(&s).unwrap() {
            let world = compensate_tilt(&p.cloud, p.attitude).unwrap();
            let pts = extract_patch(&world, &s.patch).unwrap();
            let grid = rasterize(&pts, &s.patch).unwrap();
            for (a, b) in grid.grid().iter().zip(p.surface.grid()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn traverse_is_deterministic() {
        let mut s = TraverseScript::from_toml(script_text()).unwrap();
        s.noise = 0.004;
        let a = generate_traverse(&s).unwrap();
        let b = generate_traverse(&s).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.cloud, y.cloud);
            assert_eq!(x.attitude, y.attitude);
        }
    }
}
