use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::cloud::Point3;
use crate::error::{Error, Result};
use crate::par;

/// Statistical moving-window outlier filter on elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierFilter {
    pub enabled: bool,
    /// Side of the square xy window centered on each point, meters.
    pub window: f64,
    /// Rejection threshold in local standard deviations.
    pub k_sigma: f64,
    /// Upper bound on the fraction of input points removed.
    pub max_removal: f64,
}

impl Default for OutlierFilter {
    fn default() -> Self {
        Self { enabled: true, window: 0.05, k_sigma: 3.0, max_removal: 0.10 }
    }
}

impl OutlierFilter {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::InvalidArgument(format!("filter window {} must be positive", self.window)));
        }
        if !(self.k_sigma > 0.0 && self.k_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("k_sigma {} must be positive", self.k_sigma)));
        }
        if !(0.0..=1.0).contains(&self.max_removal) {
            return Err(Error::InvalidArgument(format!(
                "max_removal {} must lie in [0, 1]",
                self.max_removal
            )));
        }
        Ok(())
    }
}

/// Minimum number of input points.
pub const MIN_FILTER_POINTS: usize = 10;
/// Neighbors needed before a point can be judged.
const MIN_NEIGHBORS: usize = 3;

/// Drops points whose z departs from the mean of their xy neighbors by more
/// than `k_sigma` neighbor standard deviations. The point itself is excluded
/// from its own neighborhood statistics. At most `max_removal` of the input is
/// removed, worst offenders first. Kept points are returned unchanged and in
/// input order.
pub fn filter_outliers(points: &[Point3], params: &OutlierFilter) -> Result<Vec<Point3>> {
    params.validate()?;
    if points.len() < MIN_FILTER_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points, outlier filter needs at least {MIN_FILTER_POINTS}",
            points.len()
        )));
    }
    let half = 0.5 * params.window;
    let key = |x: f64, y: f64| ((x / params.window).floor() as i64, (y / params.window).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        buckets.entry(key(p[0], p[1])).or_default().push(i);
    }

    // Score is the deviation in units of local sigma; None means "keep".
    let scores: Vec<Option<f64>> = par::map_range_auto(points.len(), |i| {
        let p = points[i];
        let (kx, ky) = key(p[0], p[1]);
        let mut zs = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &j in bucket {
                    let q = points[j];
                    if j != i && (q[0] - p[0]).abs() <= half && (q[1] - p[1]).abs() <= half {
                        zs.push(q[2]);
                    }
                }
            }
        }
        if zs.len() < MIN_NEIGHBORS {
            return None;
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sigma = var.sqrt();
        let dev = (p[2] - mean).abs();
        // Tolerance keeps exactly flat neighborhoods from flagging rounding noise.
        let tol = 1e-12 * mean.abs().max(1.0);
        if dev <= params.k_sigma * sigma + tol {
            None
        } else if sigma > 0.0 {
            Some(dev / sigma)
        } else {
            Some(f64::INFINITY)
        }
    });

    let mut flagged: Vec<(usize, f64)> =
        scores.iter().enumerate().filter_map(|(i, s)| s.map(|s| (i, s))).collect();
    let budget = (params.max_removal * points.len() as f64).floor() as usize;
    if flagged.len() > budget {
        flagged.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        flagged.truncate(budget);
    }
    let mut remove = vec![false; points.len()];
    for (i, _) in &flagged {
        remove[*i] = true;
    }
    Ok(points
        .iter()
        .zip(&remove)
        .filter(|(_, r)| !**r)
        .map(|(p, _)| *p)
        .collect())
}
