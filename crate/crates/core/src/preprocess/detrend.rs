use crate::error::{Error, Result};

/// Shortest profile the detrender and the spectral estimator accept.
pub const MIN_PROFILE_SAMPLES: usize = 8;

/// OLS line through `profile` against the sample index: returns
/// `(mean, slope per sample)` with the slope taken about the profile midpoint.
pub fn trend_coefficients(profile: &[f64]) -> (f64, f64) {
    let n = profile.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mid = (n as f64 - 1.0) / 2.0;
    let mean = profile.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, z) in profile.iter().enumerate() {
        let dx = i as f64 - mid;
        sxy += dx * (z - mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (mean, slope)
}

/// Removes the least-squares line from a uniformly sampled profile.
///
/// The residual has zero mean and zero linear trend, which suppresses
/// wavelengths longer than the profile. `step` only sets the abscissa scale
/// and does not change the residual.
pub fn detrend(profile: &[f64], step: f64) -> Result<Vec<f64>> {
    if profile.len() < MIN_PROFILE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples, detrending needs at least {MIN_PROFILE_SAMPLES}",
            profile.len()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step {step} must be positive")));
    }
    if profile.iter().any(|z| !z.is_finite()) {
        return Err(Error::RejectedInput("profile contains non-finite samples".into()));
    }
    // Two passes: the second removes the rounding left by the first.
    let mut out = remove_line(profile);
    out = remove_line(&out);
    Ok(out)
}

fn remove_line(profile: &[f64]) -> Vec<f64> {
    let (mean, slope) = trend_coefficients(profile);
    let mid = (profile.len() as f64 - 1.0) / 2.0;
    profile
        .iter()
        .enumerate()
        .map(|(i, z)| z - mean - slope * (i as f64 - mid))
        .collect()
}
