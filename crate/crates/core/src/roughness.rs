//! Power-law fit of profile spectra and patch-level aggregation.
//!
//! Each profile spectrum is fitted with `phi(omega) = R * omega^w` by ordinary
//! least squares in log-log space. With `b = ln R`, the patch parameters are
//! `R_hat = exp(mean b)` and `w_hat = mean w`; the spread of `R_hat` comes
//! from the spread of `b` through the delta method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SpectrumEstimate, Waveband};
use crate::stats;

/// Fewest positive bins a spectrum needs to be fitted.
pub const MIN_FIT_BINS: usize = 3;

/// Power-law parameters of a single profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRoughness {
    /// Overall energy: the fit evaluated at 1 rad/m, in m³/rad. Extrapolated
    /// when the band starts above 1 rad/m.
    pub r: f64,
    /// Waviness, the log-log slope.
    pub w: f64,
    /// `ln R`, the fit intercept.
    pub b: f64,
    /// RMS of the fit residuals in natural-log units.
    pub residual_rms: f64,
    pub bins_used: usize,
}

/// OLS fit of `ln phi` against `ln omega` over the bins with positive power.
pub fn fit_power_law(spectrum: &SpectrumEstimate) -> Result<ProfileRoughness> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = spectrum
        .pairs()
        .filter(|(_, p)| *p > 0.0 && p.is_finite())
        .map(|(o, p)| (o.ln(), p.ln()))
        .unzip();
    let m = xs.len();
    if m < MIN_FIT_BINS {
        return Err(Error::UnfittableSpectrum { positive: m, required: MIN_FIT_BINS });
    }
    let nf = m as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let w = sxy / sxx;
    let b = my - w * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - b - w * x).powi(2)).sum();
    Ok(ProfileRoughness { r: b.exp(), w, b, residual_rms: (ss / nf).sqrt(), bins_used: m })
}

/// Nonlinear map applied to a random variable in [`delta_method`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Exp,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Exp => x.exp(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Exp => x.exp(),
        }
    }
}

/// First-order propagation of `(mean, variance)` through `g`:
/// `mu_y = g(mu_x)`, `var_y = g'(mu_x)^2 var_x`.
pub fn delta_method(mean: f64, variance: f64, g: Transform) -> Result<(f64, f64)> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidArgument(format!("variance {variance} must be non-negative")));
    }
    let slope = g.derivative(mean);
    Ok((g.apply(mean), slope * slope * variance))
}

/// Roughness parameters representative of a whole patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRoughness {
    pub r_hat: f64,
    pub sigma_r: f64,
    pub w_hat: f64,
    pub sigma_w: f64,
    /// Mean and sample standard deviation of `b = ln R` across profiles.
    pub b_mean: f64,
    pub sigma_b: f64,
    pub profiles: usize,
    pub band: Waveband,
    /// Per-profile `(w, ln R)` pairs in input order.
    pub scatter: Vec<(f64, f64)>,
}

/// Averages per-profile parameters over a patch (`m >= 2`).
pub fn aggregate_patch(profiles: &[ProfileRoughness], band: &Waveband) -> Result<PatchRoughness> {
    if profiles.len() < 2 {
        return Err(Error::DegeneratePatch(format!(
            "{} usable profiles, need at least 2 for an uncertainty",
            profiles.len()
        )));
    }
    let bs: Vec<f64> = profiles.iter().map(|p| p.b).collect();
    let ws: Vec<f64> = profiles.iter().map(|p| p.w).collect();
    let b_mean = stats::mean(&bs);
    let sigma_b = stats::sample_std(&bs);
    let (r_hat, var_r) = delta_method(b_mean, sigma_b * sigma_b, Transform::Exp)?;
    Ok(PatchRoughness {
        r_hat,
        sigma_r: var_r.sqrt(),
        w_hat: stats::mean(&ws),
        sigma_w: stats::sample_std(&ws),
        b_mean,
        sigma_b,
        profiles: profiles.len(),
        band: band.clone(),
        scatter: profiles.iter().map(|p| (p.w, p.b)).collect(),
    })
}
