use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Reference frame of a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Attached to the vehicle body, tilting with it.
    Vehicle,
    /// Gravity-aligned; roll and pitch removed.
    World,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Vehicle => f.write_str("vehicle"),
            Frame::World => f.write_str("world"),
        }
    }
}

/// Unordered 3D points in meters, tagged with their frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud3D {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
    frame: Frame,
}

impl PointCloud3D {
    pub fn new(points: Vec<Point3>, frame: Frame) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::RejectedInput(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, colors: None, frame })
    }

    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} colors for {} points",
                colors.len(),
                self.points.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub(crate) fn from_parts(points: Vec<Point3>, colors: Option<Vec<[u8; 3]>>, frame: Frame) -> Self {
        Self { points, colors, frame }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = PointCloud3D::new(vec![[0.0, 0.0, 0.0], [1.0, f64::NAN, 0.0]], Frame::World);
        assert!(matches!(err, Err(Error::RejectedInput(_))));
    }

    #[test]
    fn color_count_must_match() {
        let c = PointCloud3D::new(vec![[0.0; 3]; 2], Frame::Vehicle).unwrap();
        assert!(c.clone().with_colors(vec![[1, 2, 3]]).is_err());
        assert_eq!(c.with_colors(vec![[0; 3]; 2]).unwrap().colors().unwrap().len(), 2);
    }
}
