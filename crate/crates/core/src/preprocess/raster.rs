use super::cloud::Point3;
use super::patch::PatchSpec;
use crate::error::{Error, Result};
use crate::stats::sorted_sum;

/// Longest run of empty cells along a profile filled by interpolation.
pub const MAX_INTERPOLATED_GAP: usize = 3;
/// A patch with more than this fraction of invalid cells is rejected.
const MAX_INVALID_FRACTION: f64 = 0.5;

/// Uniform elevation grid over a patch. Row `r` is the longitudinal profile at
/// lateral offset `r`, sampled every `step` meters along x.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationPatch {
    rows: usize,
    cols: usize,
    step: f64,
    grid: Vec<f64>,
    mask: Vec<bool>,
    pub index: usize,
    pub origin: [f64; 2],
}

impl ElevationPatch {
    /// Builds a fully valid patch from row-major elevations.
    pub fn from_grid(rows: usize, cols: usize, step: f64, grid: Vec<f64>) -> Result<Self> {
        if grid.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "grid has {} values, expected {rows}x{cols}",
                grid.len()
            )));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("grid step {step} must be positive")));
        }
        Ok(Self { rows, cols, step, mask: vec![true; grid.len()], grid, index: 0, origin: [0.0, 0.0] })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.grid[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mask(&self, r: usize) -> &[bool] {
        &self.mask[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.grid[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.grid[r * self.cols + c]
    }

    pub fn invalid_fraction(&self) -> f64 {
        self.mask.iter().filter(|v| !**v).count() as f64 / self.mask.len().max(1) as f64
    }

    pub fn row_invalid_fraction(&self, r: usize) -> f64 {
        self.row_mask(r).iter().filter(|v| !**v).count() as f64 / self.cols.max(1) as f64
    }

    /// Profiles fit for spectral analysis: rows with at most `max_invalid`
    /// invalid cells, remaining holes filled by linear interpolation (or by
    /// holding the nearest valid value at the row ends). Returns
    /// `(row index, profile)` pairs together with the indices of dropped rows.
    pub fn usable_profiles(&self, max_invalid: f64) -> (Vec<(usize, Vec<f64>)>, Vec<usize>) {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for r in 0..self.rows {
            if self.row_invalid_fraction(r) > max_invalid || !self.row_mask(r).iter().any(|v| *v) {
                dropped.push(r);
                continue;
            }
            let mut row = self.row(r).to_vec();
            let mut valid = self.row_mask(r).to_vec();
            fill_gaps(&mut row, &mut valid, usize::MAX);
            hold_ends(&mut row, &valid);
            kept.push((r, row));
        }
        (kept, dropped)
    }
}

/// Linearly interpolates interior runs of invalid samples no longer than
/// `max_gap`, marking them valid.
fn fill_gaps(row: &mut [f64], valid: &mut [bool], max_gap: usize) {
    let mut last: Option<usize> = None;
    for i in 0..row.len() {
        if !valid[i] {
            continue;
        }
        if let Some(a) = last {
            let gap = i - a - 1;
            if gap > 0 && gap <= max_gap {
                let (za, zb) = (row[a], row[i]);
                let span = (i - a) as f64;
                for j in a + 1..i {
                    let t = (j - a) as f64 / span;
                    row[j] = za + t * (zb - za);
                    valid[j] = true;
                }
            }
        }
        last = Some(i);
    }
}

fn hold_ends(row: &mut [f64], valid: &[bool]) {
    let Some(first) = valid.iter().position(|v| *v) else { return };
    let last = valid.iter().rposition(|v| *v).unwrap_or(first);
    let (zf, zl) = (row[first], row[last]);
    row[..first].iter_mut().for_each(|z| *z = zf);
    row[last + 1..].iter_mut().for_each(|z| *z = zl);
}

/// Bins points into the patch grid by cell mean; interior gaps of up to
/// [`MAX_INTERPOLATED_GAP`] cells are linearly interpolated along the profile,
/// anything else stays invalid in the mask.
pub fn rasterize(points: &[Point3], spec: &PatchSpec) -> Result<ElevationPatch> {
    spec.validate()?;
    if points.is_empty() {
        return Err(Error::InsufficientData("no points to rasterize".into()));
    }
    let rows = spec.profile_count();
    let cols = spec.samples_per_profile();
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); rows * cols];
    for p in points {
        if let Some((r, c)) = spec.cell_of(p[0], p[1]) {
            bins[r * cols + c].push(p[2]);
        }
    }
    let mut grid = vec![0.0; rows * cols];
    let mut mask = vec![false; rows * cols];
    for (i, zs) in bins.iter().enumerate() {
        if !zs.is_empty() {
            grid[i] = sorted_sum(zs) / zs.len() as f64;
            mask[i] = true;
        }
    }
    for r in 0..rows {
        let range = r * cols..(r + 1) * cols;
        fill_gaps(&mut grid[range.clone()], &mut mask[range], MAX_INTERPOLATED_GAP);
    }
    let patch = ElevationPatch { rows, cols, step: spec.step, grid, mask, index: 0, origin: spec.origin };
    let invalid = patch.invalid_fraction();
    if invalid > MAX_INVALID_FRACTION {
        return Err(Error::DegeneratePatch(format!(
            "{:.1}% of grid cells are empty",
            100.0 * invalid
        )));
    }
    Ok(patch)
}
