//! ISO 8608 classes, band-limited rms, semantic labels and defect flags.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roughness::PatchRoughness;
use crate::stats;

/// Reference wavenumber at which ISO 8608 quotes `phi(omega_0)`, rad/m.
pub const OMEGA_0: f64 = 1.0;

/// ISO 8608 road class, A (very good) to H (very poor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsoClass {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl IsoClass {
    pub const ALL: [IsoClass; 8] =
        [IsoClass::A, IsoClass::B, IsoClass::C, IsoClass::D, IsoClass::E, IsoClass::F, IsoClass::G, IsoClass::H];

    /// Class mean `phi(omega_0)` in m³/rad: 1e-6 for A, times 4 per class.
    pub fn phi0(self) -> f64 {
        1e-6 * 4f64.powi(self as i32)
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    fn from_index(i: usize) -> IsoClass {
        IsoClass::ALL[i.min(7)]
    }
}

impl fmt::Display for IsoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Where an `R` value sits relative to the ISO table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandPosition {
    /// Equal to a class value.
    OnRow,
    /// Strictly between two adjacent classes.
    Between(IsoClass, IsoClass),
    /// Below class A; clamped to A.
    BelowA,
    /// Above class H; clamped to H.
    AboveH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoBand {
    /// Nearest class in log space (boundaries at geometric midpoints).
    pub nearest: IsoClass,
    pub position: BandPosition,
}

impl fmt::Display for IsoBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            BandPosition::OnRow => write!(f, "{}", self.nearest),
            BandPosition::Between(lo, hi) => write!(f, "{} (between {lo} and {hi})", self.nearest),
            BandPosition::BelowA => write!(f, "A (below band)"),
            BandPosition::AboveH => write!(f, "H (above band)"),
        }
    }
}

const ON_ROW_TOLERANCE: f64 = 1e-9;

pub fn iso_classify(r: f64) -> Result<IsoBand> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("overall energy {r} must be positive")));
    }
    // Class index in units of log4 steps above A.
    let pos = (r / IsoClass::A.phi0()).ln() / 4f64.ln();
    let nearest = IsoClass::from_index(pos.round().clamp(0.0, 7.0) as usize);
    let on_row = (r / nearest.phi0()).ln().abs() < ON_ROW_TOLERANCE;
    let position = if on_row {
        BandPosition::OnRow
    } else if pos < 0.0 {
        BandPosition::BelowA
    } else if pos > 7.0 {
        BandPosition::AboveH
    } else {
        let lo = pos.floor() as usize;
        BandPosition::Between(IsoClass::from_index(lo), IsoClass::from_index(lo + 1))
    };
    Ok(IsoBand { nearest, position })
}

fn check_band(omega_1: f64, omega_l: f64) -> Result<f64> {
    if !(omega_1 > 0.0 && omega_1 < omega_l && omega_l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "waveband [{omega_1}, {omega_l}] must satisfy 0 < omega_1 < omega_l"
        )));
    }
    Ok(1.0 / omega_1 - 1.0 / omega_l)
}

/// RMS elevation of a `w = -2` spectrum `phi0 (omega / omega_0)^-2`
/// integrated over `[omega_1, omega_l]`, in meters.
pub fn band_rms(phi0: f64, omega_1: f64, omega_l: f64) -> Result<f64> {
    let span = check_band(omega_1, omega_l)?;
    if !(phi0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("phi0 {phi0} must be non-negative")));
    }
    Ok((phi0 * OMEGA_0 * OMEGA_0 * span).sqrt())
}

/// Inverse of [`band_rms`]: the `phi(omega_0)` of a `w = -2` surface whose
/// band-limited rms equals `rms`. Applied to the rms measured on a flat
/// reference it gives the smallest roughness the sensor can resolve.
pub fn sensitivity_floor(rms: f64, omega_1: f64, omega_l: f64) -> Result<f64> {
    let span = check_band(omega_1, omega_l)?;
    if !(rms >= 0.0) {
        return Err(Error::InvalidArgument(format!("rms {rms} must be non-negative")));
    }
    Ok(rms * rms / span / (OMEGA_0 * OMEGA_0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoTableRow {
    pub class: IsoClass,
    pub phi0: f64,
    pub rms: f64,
}

/// The eight ISO classes with their rms over the band `[2 pi / L, pi / B]`.
pub fn iso_rms_table(length: f64, step: f64) -> Result<Vec<IsoTableRow>> {
    if !(length > 0.0 && step > 0.0) {
        return Err(Error::InvalidArgument(format!("length {length} and step {step} must be positive")));
    }
    let (o1, ol) = (2.0 * std::f64::consts::PI / length, std::f64::consts::PI / step);
    IsoClass::ALL
        .iter()
        .map(|&class| Ok(IsoTableRow { class, phi0: class.phi0(), rms: band_rms(class.phi0(), o1, ol)? }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Low,
    Medium,
    High,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Low => "low",
            Label::Medium => "medium",
            Label::High => "high",
        })
    }
}

/// `R` cut points for the three roughness labels, m³/rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelThresholds {
    /// `R` below this is low.
    pub low_below: f64,
    /// `R` above this is high.
    pub high_above: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        Self { low_below: IsoClass::D.phi0(), high_above: IsoClass::F.phi0() }
    }
}

impl LabelThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.low_below > 0.0 && self.low_below <= self.high_above && self.high_above.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "label thresholds must satisfy 0 < low_below ({}) <= high_above ({})",
                self.low_below, self.high_above
            )));
        }
        Ok(())
    }
}

pub fn semantic_label(r: f64, thresholds: &LabelThresholds) -> Label {
    if r < thresholds.low_below {
        Label::Low
    } else if r > thresholds.high_above {
        Label::High
    } else {
        Label::Medium
    }
}

/// Rolling-median spike detector over a sequence of patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectDetector {
    /// Patches in the median window.
    pub window: usize,
    /// A patch is flagged when `R_hat > factor * median`.
    pub factor: f64,
}

impl Default for DefectDetector {
    fn default() -> Self {
        Self { window: 7, factor: 4.0 }
    }
}

impl DefectDetector {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("defect window must be at least 1".into()));
        }
        if !(self.factor > 0.0 && self.factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("defect factor {} must be positive", self.factor)));
        }
        Ok(())
    }
}

/// Flags entries exceeding `factor` times the median of the window around
/// them. The window is centered where possible and shifted inward at the ends
/// so it always holds `window` entries.
pub fn detect_defects(r_hats: &[f64], detector: &DefectDetector) -> Result<Vec<bool>> {
    detector.validate()?;
    let (n, w) = (r_hats.len(), detector.window);
    if n < w {
        return Err(Error::InsufficientData(format!("{n} patches, defect window needs {w}")));
    }
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(w / 2).min(n - w);
            let med = stats::median(&r_hats[start..start + w]);
            r_hats[i] > detector.factor * med
        })
        .collect())
}

/// One labeled patch of the roughness map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughnessMapCell {
    pub patch_index: usize,
    /// World position of the patch center, meters.
    pub x: f64,
    pub y: f64,
    pub roughness: PatchRoughness,
    pub iso: IsoBand,
    pub label: Label,
    pub defect: bool,
}

impl RoughnessMapCell {
    pub fn new(patch_index: usize, center: [f64; 2], roughness: PatchRoughness, thresholds: &LabelThresholds) -> Result<Self> {
        let iso = iso_classify(roughness.r_hat)?;
        let label = semantic_label(roughness.r_hat, thresholds);
        Ok(Self { patch_index, x: center[0], y: center[1], roughness, iso, label, defect: false })
    }
}
