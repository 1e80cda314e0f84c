//! End-to-end patch analysis: cloud to roughness map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::{detect_defects, DefectDetector, IsoClass, LabelThresholds, RoughnessMapCell};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::preprocess::{
    compensate_tilt, detrend, extract_patch, filter_outliers, rasterize, Attitude, ElevationPatch, OutlierFilter,
    PatchSpec, PointCloud3D,
};
use crate::roughness::{aggregate_patch, fit_power_law, PatchRoughness, ProfileRoughness};
use crate::spectrum::{WelchConfig, WelchEstimator};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Rows with a larger fraction of invalid cells are dropped.
    pub max_invalid_row_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_invalid_row_fraction: 0.2 }
    }
}

/// All tunables of a run. Loaded from TOML; missing keys take defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub patch: PatchSpec,
    pub welch: WelchConfig,
    pub fit: FitConfig,
    pub labels: LabelThresholds,
    pub defects: DefectDetector,
    pub filter: OutlierFilter,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.patch.validate().map_err(wrap)?;
        self.welch.validate().map_err(wrap)?;
        self.labels.validate().map_err(wrap)?;
        self.defects.validate().map_err(wrap)?;
        self.filter.validate().map_err(wrap)?;
        if !(0.0..=1.0).contains(&self.fit.max_invalid_row_fraction) {
            return Err(Error::Config(format!(
                "max_invalid_row_fraction {} outside [0, 1]",
                self.fit.max_invalid_row_fraction
            )));
        }
        let (seg, _) = self.welch.layout(self.patch.samples_per_profile());
        if seg < 8 {
            return Err(Error::Config(format!("Welch segments of {seg} samples are too short")));
        }
        Ok(())
    }
}

/// A dropped row or patch, or another notable event, with a reason code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub patch: usize,
    pub row: Option<usize>,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(r) => write!(f, "patch {} row {}: [{}] {}", self.patch, r, self.code, self.message),
            None => write!(f, "patch {}: [{}] {}", self.patch, self.code, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatchAnalysis {
    pub index: usize,
    pub center: [f64; 2],
    pub roughness: PatchRoughness,
    /// `(row, fit)` for every profile that entered the aggregate.
    pub profiles: Vec<(usize, ProfileRoughness)>,
    pub log: Vec<LogEntry>,
}

/// One patch to process: a vehicle-frame cloud and, when known, the vehicle
/// attitude at capture time.
#[derive(Debug, Clone)]
pub struct PatchInput {
    pub index: usize,
    pub cloud: PointCloud3D,
    pub attitude: Option<Attitude>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub cells: Vec<RoughnessMapCell>,
    pub analyses: Vec<PatchAnalysis>,
    pub log: Vec<LogEntry>,
}

/// Holds a validated config and the reusable Welch plan.
#[derive(Debug)]
pub struct Analyzer {
    config: PipelineConfig,
    estimator: WelchEstimator,
    exec: Execution,
}

impl Analyzer {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        Self::with_execution(config, Execution::default())
    }

    pub fn with_execution(config: PipelineConfig, exec: Execution) -> Result<Self> {
        config.validate()?;
        let estimator = WelchEstimator::new(config.patch.samples_per_profile(), config.patch.step, config.welch)?;
        Ok(Self { config, estimator, exec })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Detrend, estimate and fit one profile.
    pub fn analyze_profile(&self, profile: &[f64]) -> Result<ProfileRoughness> {
        let z = detrend(profile, self.config.patch.step)?;
        fit_power_law(&self.estimator.estimate(&z)?)
    }

    /// Roughness of a gridded patch.
    pub fn analyze_grid(&self, patch: &ElevationPatch) -> Result<PatchAnalysis> {
        let index = patch.index;
        if patch.cols() != self.estimator.band().samples() {
            return Err(Error::InvalidArgument(format!(
                "patch rows have {} samples, config expects {}",
                patch.cols(),
                self.estimator.band().samples()
            )));
        }
        let (rows, dropped) = patch.usable_profiles(self.config.fit.max_invalid_row_fraction);
        let mut log: Vec<LogEntry> = dropped
            .iter()
            .map(|&r| LogEntry {
                patch: index,
                row: Some(r),
                code: "row-invalid",
                message: format!("{:.0}% of cells invalid", 100.0 * patch.row_invalid_fraction(r)),
            })
            .collect();
        let fits = par::map(self.exec, &rows, |(r, z)| (*r, self.analyze_profile(z)));
        let mut profiles = Vec::with_capacity(fits.len());
        for (r, fit) in fits {
            match fit {
                Ok(p) => profiles.push((r, p)),
                Err(e) => log.push(LogEntry { patch: index, row: Some(r), code: e.code(), message: e.to_string() }),
            }
        }
        let only: Vec<ProfileRoughness> = profiles.iter().map(|(_, p)| *p).collect();
        let roughness = aggregate_patch(&only, self.estimator.band())?;
        let spec = PatchSpec { origin: patch.origin, ..self.config.patch };
        Ok(PatchAnalysis { index, center: spec.center(), roughness, profiles, log })
    }

    /// Roughness of a vehicle-frame cloud. Without an attitude the cloud is
    /// taken as level (uncompensated mode).
    pub fn analyze_cloud(&self, index: usize, cloud: &PointCloud3D, attitude: Option<Attitude>) -> Result<PatchAnalysis> {
        let world = compensate_tilt(cloud, attitude.unwrap_or_else(Attitude::level))?;
        let mut points = extract_patch(&world, &self.config.patch)?;
        let mut log = Vec::new();
        if self.config.filter.enabled {
            let before = points.len();
            points = filter_outliers(&points, &self.config.filter)?;
            if points.len() < before {
                log.push(LogEntry {
                    patch: index,
                    row: None,
                    code: "outliers-removed",
                    message: format!("{} of {before} points", before - points.len()),
                });
            }
        }
        let mut grid = rasterize(&points, &self.config.patch)?;
        grid.index = index;
        let mut analysis = self.analyze_grid(&grid)?;
        log.append(&mut analysis.log);
        analysis.log = log;
        Ok(analysis)
    }

    /// Processes patches independently and returns map rows in input order.
    /// Failed patches are logged and skipped; defect flags are computed over
    /// the surviving sequence.
    pub fn process(&self, inputs: &[PatchInput]) -> RunReport {
        let results = par::map(self.exec, inputs, |p| self.analyze_cloud(p.index, &p.cloud, p.attitude));
        let mut log = Vec::new();
        let mut analyses = Vec::new();
        let mut cells = Vec::new();
        for (input, result) in inputs.iter().zip(results) {
            if input.attitude.is_none() {
                log.push(LogEntry {
                    patch: input.index,
                    row: None,
                    code: "tilt-uncompensated",
                    message: "no attitude; cloud used as level".into(),
                });
            }
            let cell = result.and_then(|a| {
                let cell = RoughnessMapCell::new(a.index, a.center, a.roughness.clone(), &self.config.labels)?;
                Ok((a, cell))
            });
            match cell {
                Ok((mut a, cell)) => {
                    log.append(&mut a.log);
                    analyses.push(a);
                    cells.push(cell);
                }
                Err(e) => log.push(LogEntry { patch: input.index, row: None, code: e.code(), message: e.to_string() }),
            }
        }
        let r_hats: Vec<f64> = cells.iter().map(|c| c.roughness.r_hat).collect();
        match detect_defects(&r_hats, &self.config.defects) {
            Ok(flags) => cells.iter_mut().zip(flags).for_each(|(c, f)| c.defect = f),
            Err(e) if !cells.is_empty() => log.push(LogEntry {
                patch: cells[0].patch_index,
                row: None,
                code: "defects-skipped",
                message: e.to_string(),
            }),
            Err(_) => {}
        }
        RunReport { cells, analyses, log }
    }
}

/// Statistics of a run of consecutive patches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub first: usize,
    pub last: usize,
    pub patches: usize,
    pub iso: IsoClass,
    /// Across patches.
    pub r_mean: f64,
    pub r_std: f64,
    pub w_mean: f64,
    pub w_std: f64,
    /// Mean of the within-patch (across-profile) spreads.
    pub within_sigma_r: f64,
    pub within_sigma_w: f64,
    pub defects: usize,
}

impl GroupSummary {
    fn of(cells: &[RoughnessMapCell]) -> Self {
        let rs: Vec<f64> = cells.iter().map(|c| c.roughness.r_hat).collect();
        let ws: Vec<f64> = cells.iter().map(|c| c.roughness.w_hat).collect();
        let sr: Vec<f64> = cells.iter().map(|c| c.roughness.sigma_r).collect();
        let sw: Vec<f64> = cells.iter().map(|c| c.roughness.sigma_w).collect();
        let r_mean = stats::mean(&rs);
        let iso = crate::classify::iso_classify(r_mean).map(|b| b.nearest).unwrap_or(IsoClass::A);
        let or_zero = |v: f64| if v.is_nan() { 0.0 } else { v };
        Self {
            first: cells[0].patch_index,
            last: cells[cells.len() - 1].patch_index,
            patches: cells.len(),
            iso,
            r_mean,
            r_std: or_zero(stats::sample_std(&rs)),
            w_mean: stats::mean(&ws),
            w_std: or_zero(stats::sample_std(&ws)),
            within_sigma_r: stats::mean(&sr),
            within_sigma_w: stats::mean(&sw),
            defects: cells.iter().filter(|c| c.defect).count(),
        }
    }
}

impl fmt::Display for GroupSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "patches {}-{} ({}), ISO {}: average overall energy R = {:.0}e-6 m3/rad with a standard deviation of {:.0}e-6, \
             average waviness w = {:.2} with a standard deviation of {:.2} (within-patch sigma_R {:.0}e-6, sigma_w {:.2}); {} defect(s)",
            self.first,
            self.last,
            self.patches,
            self.iso,
            self.r_mean * 1e6,
            self.r_std * 1e6,
            self.w_mean,
            self.w_std,
            self.within_sigma_r * 1e6,
            self.within_sigma_w,
            self.defects
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub overall: Option<GroupSummary>,
    /// Consecutive patches sharing the nearest ISO class.
    pub segments: Vec<GroupSummary>,
}

pub fn summarize(cells: &[RoughnessMapCell]) -> RunSummary {
    if cells.is_empty() {
        return RunSummary { overall: None, segments: Vec::new() };
    }
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..=cells.len() {
        if i == cells.len() || cells[i].iso.nearest != cells[start].iso.nearest {
            segments.push(GroupSummary::of(&cells[start..i]));
            start = i;
        }
    }
    RunSummary { overall: Some(GroupSummary::of(cells)), segments }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(all) = &self.overall else { return writeln!(f, "no patches analyzed") };
        writeln!(f, "overall: {all}")?;
        for s in &self.segments {
            writeln!(f, "segment: {s}")?;
        }
        Ok(())
    }
}
