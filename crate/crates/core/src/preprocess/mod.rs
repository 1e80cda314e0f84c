//! Point cloud to detrended elevation profiles.
//!
//! The chain is: [`compensate_tilt`] (vehicle to world frame), [`extract_patch`],
//! [`filter_outliers`], [`rasterize`] onto a uniform grid, then [`detrend`]
//! each longitudinal row before spectral analysis.

mod cloud;
mod detrend;
mod filter;
mod patch;
mod raster;
mod tilt;

pub use cloud::{Frame, Point3, PointCloud3D};
pub use detrend::{detrend, trend_coefficients, MIN_PROFILE_SAMPLES};
pub use filter::{filter_outliers, OutlierFilter};
pub use patch::{extract_patch, PatchSpec};
pub use raster::{rasterize, ElevationPatch, MAX_INTERPOLATED_GAP};
pub use tilt::{compensate_tilt, rotate_to_vehicle, Attitude};
