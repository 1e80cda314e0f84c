use serde::{Deserialize, Serialize};

use super::cloud::{Frame, Point3, PointCloud3D};
use super::detrend::MIN_PROFILE_SAMPLES;
use crate::error::{Error, Result};

/// Rectangular region of interest ahead of the vehicle.
///
/// `origin` is the near-right corner (minimum x and y). Profiles run along x,
/// the direction of travel. The grid has `n` samples per profile, forced even,
/// and `m` profiles across the width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchSpec {
    pub origin: [f64; 2],
    pub length: f64,
    pub width: f64,
    pub step: f64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self { origin: [1.0, -0.45], length: 0.9, width: 0.9, step: 0.008 }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = self.origin.iter().chain([&self.length, &self.width, &self.step]).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("patch spec has non-finite fields".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidArgument(format!("grid step {} must be positive", self.step)));
        }
        if self.length <= 2.0 * self.step {
            return Err(Error::InvalidArgument(format!(
                "patch length {} must exceed two grid steps",
                self.length
            )));
        }
        if self.width < self.step {
            return Err(Error::InvalidArgument(format!(
                "patch width {} smaller than grid step {}",
                self.width, self.step
            )));
        }
        if self.samples_per_profile() < MIN_PROFILE_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "{} samples per profile, need at least {MIN_PROFILE_SAMPLES}",
                self.samples_per_profile()
            )));
        }
        Ok(())
    }

    /// `n`: `round(L / B)` truncated down to an even count.
    pub fn samples_per_profile(&self) -> usize {
        let n = (self.length / self.step).round().max(0.0) as usize;
        n - n % 2
    }

    /// `m`: number of whole grid steps across the width.
    pub fn profile_count(&self) -> usize {
        ((self.width / self.step) + 1e-9).floor().max(0.0) as usize
    }

    /// Profile length actually analyzed, `n * B`.
    pub fn effective_length(&self) -> f64 {
        self.samples_per_profile() as f64 * self.step
    }

    pub fn effective_width(&self) -> f64 {
        self.profile_count() as f64 * self.step
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.effective_length(),
            self.origin[1] + 0.5 * self.effective_width(),
        ]
    }

    /// Grid cell of a planar position, if inside the patch.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = ((x - self.origin[0]) / self.step).floor();
        let r = ((y - self.origin[1]) / self.step).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < self.profile_count() && c < self.samples_per_profile()).then_some((r, c))
    }

    /// Planar center of grid cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.step,
            self.origin[1] + (row as f64 + 0.5) * self.step,
        ]
    }
}

/// Points of a world-frame cloud that fall inside the patch rectangle.
pub fn extract_patch(cloud: &PointCloud3D, spec: &PatchSpec) -> Result<Vec<Point3>> {
    if cloud.frame() != Frame::World {
        return Err(Error::FrameMismatch { expected: Frame::World, actual: cloud.frame() });
    }
    spec.validate()?;
    Ok(cloud
        .points()
        .iter()
        .filter(|p| spec.cell_of(p[0], p[1]).is_some())
        .copied()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PatchSpec {
        PatchSpec { origin: [0.0, 0.0], length: 1.0, width: 1.0, step: 0.1 }
    }

    #[test]
    fn default_grid_is_112_by_112() {
        let s = PatchSpec::default();
        s.validate().unwrap();
        assert_eq!(s.samples_per_profile(), 112);
        assert_eq!(s.profile_count(), 112);
        assert!((s.effective_length() - 0.896).abs() < 1e-12);
    }

    #[test]
    fn odd_sample_count_truncates() {
        let s = PatchSpec { length: 0.9, step: 0.1, ..spec() };
        assert_eq!(s.samples_per_profile(), 8);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(PatchSpec { step: 0.0, ..spec() }.validate().is_err());
        assert!(PatchSpec { length: 0.15, ..spec() }.validate().is_err());
        assert!(PatchSpec { width: 0.05, ..spec() }.validate().is_err());
        assert!(PatchSpec { length: 0.5, ..spec() }.validate().is_err());
    }

    #[test]
    fn keeps_points_inside() {
        let cloud = PointCloud3D::new(
            vec![[0.5, 0.5, 1.0], [1.5, 0.5, 2.0], [0.05, 0.95, 3.0], [-0.1, 0.2, 4.0]],
            Frame::World,
        )
        .unwrap();
        let kept = extract_patch(&cloud, &spec()).unwrap();
        assert_eq!(kept, vec![[0.5, 0.5, 1.0], [0.05, 0.95, 3.0]]);
    }

    #[test]
    fn all_outside_is_empty() {
        let cloud = PointCloud3D::new(vec![[5.0, 5.0, 0.0], [-1.0, 0.0, 0.0]], Frame::World).unwrap();
        assert!(extract_patch(&cloud, &spec()).unwrap().is_empty());
    }

    #[test]
    fn requires_world_frame() {
        let cloud = PointCloud3D::new(vec![[0.5, 0.5, 0.0]], Frame::Vehicle).unwrap();
        assert!(matches!(extract_patch(&cloud, &spec()), Err(Error::FrameMismatch { .. })));
    }
}
