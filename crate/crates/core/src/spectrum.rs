//! Discrete waveband and one-sided Welch PSD of elevation profiles.
//!
//! Units: wavenumber in rad/m, PSD in m³/rad. The normalization is fixed so
//! that `sum(phi_k) * d_omega` equals the (population) variance of the
//! profile for a single rectangular segment; windowed configurations are
//! compensated by the window power so the same holds in expectation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::trend_coefficients;

/// Wavenumbers `omega_k = 2 pi k / (n B)` for `k = 1..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveband {
    samples: usize,
    step: f64,
    omegas: Vec<f64>,
}

/// Smallest sample count accepted by [`make_waveband`].
pub const MIN_WAVEBAND_SAMPLES: usize = 4;

pub fn make_waveband(samples: usize, step: f64) -> Result<Waveband> {
    if samples % 2 != 0 || samples < MIN_WAVEBAND_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "sample count {samples} must be even and at least {MIN_WAVEBAND_SAMPLES}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid step {step} must be positive")));
    }
    let length = samples as f64 * step;
    let omegas = (1..=samples / 2).map(|k| 2.0 * PI * k as f64 / length).collect();
    Ok(Waveband { samples, step, omegas })
}

impl Waveband {
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Number of bins, `l = n / 2`.
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Profile length `L = n B`, the longest resolved wavelength.
    pub fn length(&self) -> f64 {
        self.samples as f64 * self.step
    }

    /// Lower bound `2 pi / L`.
    pub fn omega_min(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Upper bound `pi / B` (Nyquist).
    pub fn omega_max(&self) -> f64 {
        PI / self.step
    }

    /// Bin width, equal to [`Self::omega_min`].
    pub fn delta(&self) -> f64 {
        self.omega_min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    /// Symmetric Hann window.
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann if len < 2 => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (len - 1) as f64).cos()))
                .collect(),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Rectangular => f.write_str("rectangular"),
            Window::Hann => f.write_str("hann"),
        }
    }
}

/// Segmentation and taper for the Welch estimator.
///
/// Segments are zero-padded to the full profile length so every
/// configuration reports on the same waveband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    pub segments: usize,
    pub overlap: f64,
    pub window: Window,
}

/// Three Hann segments with 50 % overlap. A single rectangular segment
/// leaks the ramp removed by detrending into every bin, which biases the
/// power-law fit; the taper suppresses that leakage.
impl Default for WelchConfig {
    fn default() -> Self {
        Self::hann(3)
    }
}

impl WelchConfig {
    /// One rectangular segment spanning the whole profile.
    pub fn periodogram() -> Self {
        Self { segments: 1, overlap: 0.0, window: Window::Rectangular }
    }

    /// `segments` Hann-tapered segments with 50 % overlap.
    pub fn hann(segments: usize) -> Self {
        Self { segments, overlap: 0.5, window: Window::Hann }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::InvalidArgument("Welch needs at least one segment".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidArgument(format!("overlap {} must lie in [0, 1)", self.overlap)));
        }
        Ok(())
    }

    /// Segment length and start offsets for a profile of `n` samples. Starts
    /// are spread evenly from 0 to `n - len`, so the layout is mirror-symmetric.
    pub fn layout(&self, n: usize) -> (usize, Vec<usize>) {
        if self.segments <= 1 {
            return (n, vec![0]);
        }
        let k = self.segments;
        let len = (n as f64 / (1.0 + (k - 1) as f64 * (1.0 - self.overlap))).round() as usize;
        let len = len.clamp(2, n);
        let span = (n - len) as f64;
        let starts = (0..k).map(|j| (span * j as f64 / (k - 1) as f64).round() as usize).collect();
        (len, starts)
    }
}

/// One-sided PSD over a [`Waveband`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub band: Waveband,
    pub phi: Vec<f64>,
    pub segments: usize,
    pub segment_len: usize,
    pub window: Window,
    pub overlap: f64,
}

impl SpectrumEstimate {
    /// `sum(phi_k) * d_omega`, the variance captured by the estimate.
    pub fn total_power(&self) -> f64 {
        self.phi.iter().sum::<f64>() * self.band.delta()
    }

    /// `(omega_k, phi_k)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.band.omegas().iter().copied().zip(self.phi.iter().copied())
    }
}

/// Relative tolerance for the "already detrended" input check.
const DETREND_TOLERANCE: f64 = 1e-9;

/// Reusable Welch estimator for one profile length and configuration.
///
/// Holds the FFT plan and window so repeated calls over the rows of a patch
/// do not re-plan.
pub struct WelchEstimator {
    band: Waveband,
    config: WelchConfig,
    segment_len: usize,
    starts: Vec<usize>,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WelchEstimator")
            .field("band", &self.band)
            .field("config", &self.config)
            .field("segment_len", &self.segment_len)
            .finish_non_exhaustive()
    }
}

impl WelchEstimator {
    pub fn new(samples: usize, step: f64, config: WelchConfig) -> Result<Self> {
        config.validate()?;
        let band = make_waveband(samples, step)?;
        let (segment_len, starts) = config.layout(samples);
        let window = config.window.coefficients(segment_len);
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(samples);
        Ok(Self { band, config, segment_len, starts, window, window_power, fft })
    }

    pub fn band(&self) -> &Waveband {
        &self.band
    }

    pub fn estimate(&self, profile: &[f64]) -> Result<SpectrumEstimate> {
        let n = self.band.samples();
        if profile.len() != n {
            return Err(Error::InvalidArgument(format!(
                "profile has {} samples, estimator built for {n}",
                profile.len()
            )));
        }
        check_detrended(profile)?;

        let l = self.band.len();
        let mut power = vec![0.0; l];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for &start in &self.starts {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, w) in self.window.iter().enumerate() {
                buf[i] = Complex::new(w * profile[start + i], 0.0);
            }
            self.fft.process(&mut buf);
            for (k, p) in power.iter_mut().enumerate() {
                *p += buf[k + 1].norm_sqr();
            }
        }
        // Two-sided |X_k|^2 / (n * sum w^2), folded onto k = 1..n/2; the
        // Nyquist bin has no mirror image and keeps weight 1.
        let scale = 1.0 / (self.starts.len() as f64 * n as f64 * self.window_power * self.band.delta());
        let phi = power
            .iter()
            .enumerate()
            .map(|(k, p)| if k + 1 == l { p * scale } else { 2.0 * p * scale })
            .collect();
        Ok(SpectrumEstimate {
            band: self.band.clone(),
            phi,
            segments: self.starts.len(),
            segment_len: self.segment_len,
            window: self.config.window,
            overlap: self.config.overlap,
        })
    }
}

fn check_detrended(profile: &[f64]) -> Result<()> {
    let n = profile.len() as f64;
    let rms = (profile.iter().map(|z| z * z).sum::<f64>() / n).sqrt();
    if !rms.is_finite() {
        return Err(Error::RejectedInput("profile contains non-finite samples".into()));
    }
    if rms == 0.0 {
        return Ok(());
    }
    let (mean, slope) = trend_coefficients(profile);
    let trend = slope.abs() * n;
    if mean.abs() > DETREND_TOLERANCE * rms || trend > DETREND_TOLERANCE * rms {
        return Err(Error::ContractViolation(format!(
            "profile is not detrended (mean {mean:.3e}, trend {trend:.3e}, rms {rms:.3e})"
        )));
    }
    Ok(())
}

/// One-sided Welch PSD of a detrended profile sampled every `step` meters.
pub fn welch_psd(profile: &[f64], step: f64, config: &WelchConfig) -> Result<SpectrumEstimate> {
    WelchEstimator::new(profile.len(), step, *config)?.estimate(profile)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::preprocess::detrend;

    const B: f64 = 0.008;
    const N: usize = 112;

    fn noise_profile(seed: u64, sigma: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        let z: Vec<f64> = (0..N).map(|_| d.sample(&mut rng)).collect();
        detrend(&z, B).unwrap()
    }

    fn variance(z: &[f64]) -> f64 {
        let m = z.iter().sum::<f64>() / z.len() as f64;
        z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / z.len() as f64
    }

    #[test]
    fn tiny_waveband() {
        let b = make_waveband(4, 0.5).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b.omegas()[0] - PI).abs() < 1e-15);
        assert!((b.omegas()[1] - 2.0 * PI).abs() < 1e-15);
        assert!((b.omega_min() - PI).abs() < 1e-15);
        assert!((b.omega_max() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn default_waveband() {
        let b = make_waveband(N, B).unwrap();
        assert_eq!(b.len(), 56);
        assert!((b.omega_min() - 7.0124).abs() < 1e-4);
        assert!((b.omega_max() - 392.699).abs() < 5e-4);
        assert!((b.omegas()[0] - b.omega_min()).abs() < 1e-12);
        assert!((b.omegas()[55] - b.omega_max()).abs() < 1e-9);
    }

    #[test]
    fn waveband_rejects_odd_or_tiny() {
        assert!(make_waveband(111, B).is_err());
        assert!(make_waveband(2, B).is_err());
        assert!(make_waveband(8, 0.0).is_err());
    }

    #[test]
    fn zero_profile_zero_spectrum() {
        let s = welch_psd(&[0.0; N], B, &WelchConfig::periodogram()).unwrap();
        assert!(s.phi.iter().all(|p| *p == 0.0));
        let s = welch_psd(&[0.0; N], B, &WelchConfig::hann(2)).unwrap();
        assert!(s.phi.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn pure_cosine_power() {
        // Measured from the profile midpoint, an exact-bin cosine is even and
        // therefore already orthogonal to [1, x].
        let a = 0.01;
        let band = make_waveband(N, B).unwrap();
        for j in [1usize, 5, 20, 55] {
            let omega = band.omegas()[j - 1];
            let mid = (N as f64 - 1.0) / 2.0;
            let z: Vec<f64> = (0..N).map(|i| a * (omega * (i as f64 - mid) * B).cos()).collect();
            let s = welch_psd(&z, B, &WelchConfig::periodogram()).unwrap();
            assert!((s.total_power() - a * a / 2.0).abs() < 1e-10);
            // All of it lands in bin j.
            assert!((s.phi[j - 1] * band.delta() - a * a / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trend_is_refused() {
        let z: Vec<f64> = (0..N).map(|i| i as f64 * 1e-3).collect();
        assert!(matches!(
            welch_psd(&z, B, &WelchConfig::periodogram()),
            Err(Error::ContractViolation(_))
        ));
        let z: Vec<f64> = (0..N).map(|i| 1.0 + (i as f64).sin() * 1e-3).collect();
        assert!(matches!(
            welch_psd(&z, B, &WelchConfig::periodogram()),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn periodogram_parseval_exact() {
        for seed in 0..20 {
            let z = noise_profile(seed, 0.003);
            let s = welch_psd(&z, B, &WelchConfig::periodogram()).unwrap();
            assert!((s.total_power() / variance(&z) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn white_noise_is_flat() {
        let sigma = 0.003;
        let mut mean_phi = vec![0.0; N / 2];
        let mut power = 0.0;
        let seeds = 100;
        for seed in 0..seeds {
            let s = welch_psd(&noise_profile(seed, sigma), B, &WelchConfig::periodogram()).unwrap();
            power += s.total_power() / seeds as f64;
            for (m, p) in mean_phi.iter_mut().zip(&s.phi) {
                *m += p / seeds as f64;
            }
        }
        // Total: sigma^2 less the two degrees of freedom taken by the detrend.
        assert!((power / (sigma * sigma) - 1.0).abs() < 0.05, "power {power}");
        // Flatness: lower and upper halves of the band carry the same mean level.
        let l = N / 2;
        let lo: f64 = mean_phi[..l / 2].iter().sum::<f64>() / (l / 2) as f64;
        let hi: f64 = mean_phi[l / 2..].iter().sum::<f64>() / (l - l / 2) as f64;
        assert!((lo / hi - 1.0).abs() < 0.10, "lo {lo} hi {hi}");
        let expected = sigma * sigma / make_waveband(N, B).unwrap().omega_max();
        assert!((hi / expected - 1.0).abs() < 0.10);
    }

    #[test]
    fn averaging_reduces_variance() {
        let runs: Vec<Vec<f64>> = (0..100).map(|s| noise_profile(1000 + s, 0.003)).collect();
        let bin_var = |cfg: WelchConfig| -> Vec<f64> {
            let spectra: Vec<Vec<f64>> = runs.iter().map(|z| welch_psd(z, B, &cfg).unwrap().phi).collect();
            (0..N / 2)
                .map(|k| {
                    let col: Vec<f64> = spectra.iter().map(|s| s[k]).collect();
                    let m = col.iter().sum::<f64>() / col.len() as f64;
                    col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64
                })
                .collect()
        };
        let one = bin_var(WelchConfig::periodogram());
        let two = bin_var(WelchConfig { segments: 2, overlap: 0.5, window: Window::Rectangular });
        let total = |v: &[f64]| v.iter().sum::<f64>();
        assert!(total(&two) < total(&one));
        let hann = bin_var(WelchConfig::hann(2));
        assert!(total(&hann) < total(&one));
    }

    #[test]
    fn two_segment_layout() {
        let (len, starts) = WelchConfig::hann(2).layout(N);
        assert_eq!(len, 75);
        assert_eq!(starts, vec![0, 37]);
        let (len, starts) = WelchConfig::hann(3).layout(N);
        assert_eq!(len, 56);
        assert_eq!(starts, vec![0, 28, 56]);
    }

    proptest! {
        #[test]
        fn scaling_and_reversal(seed in 0u64..10_000, c in -50.0f64..50.0, segs in 1usize..4) {
            let cfg = if segs == 1 { WelchConfig::periodogram() } else { WelchConfig::hann(segs) };
            let z = noise_profile(seed, 0.002);
            let base = welch_psd(&z, B, &cfg).unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
            let s = welch_psd(&scaled, B, &cfg).unwrap();
            for (a, b) in base.phi.iter().zip(&s.phi) {
                prop_assert!((c * c * a - b).abs() <= 1e-12 * (c * c * a).abs().max(1e-30) + 1e-300);
            }
            let rev: Vec<f64> = z.iter().rev().copied().collect();
            let r = welch_psd(&rev, B, &cfg).unwrap();
            let peak = base.phi.iter().cloned().fold(0.0, f64::max);
            for (a, b) in base.phi.iter().zip(&r.phi) {
                prop_assert!((a - b).abs() <= 1e-10 * peak);
            }
            prop_assert!(base.phi.iter().all(|p| *p >= 0.0));
        }
    }
}
