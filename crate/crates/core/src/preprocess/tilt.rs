use serde::{Deserialize, Serialize};

use super::cloud::{Frame, Point3, PointCloud3D};
use crate::error::{Error, Result};

/// Vehicle roll and pitch in radians, as reported by an IMU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    roll: f64,
    pitch: f64,
}

impl Attitude {
    pub fn new(roll: f64, pitch: f64) -> Result<Self> {
        if !roll.is_finite() || !pitch.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite attitude ({roll}, {pitch})")));
        }
        let limit = std::f64::consts::FRAC_PI_2;
        if roll.abs() >= limit || pitch.abs() >= limit {
            return Err(Error::RejectedInput(format!(
                "attitude ({roll}, {pitch}) rad outside (-pi/2, pi/2)"
            )));
        }
        Ok(Self { roll, pitch })
    }

    pub fn from_degrees(roll_deg: f64, pitch_deg: f64) -> Result<Self> {
        Self::new(roll_deg.to_radians(), pitch_deg.to_radians())
    }

    pub fn level() -> Self {
        Self { roll: 0.0, pitch: 0.0 }
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Vehicle-to-world rotation (roll and pitch only, yaw is left alone).
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let (st, ct) = self.roll.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        [
            [cp, sp * st, sp * ct],
            [0.0, ct, -st],
            [-sp, cp * st, cp * ct],
        ]
    }
}

fn apply(m: &[[f64; 3]; 3], p: &Point3) -> Point3 {
    [
        m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
        m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
        m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
    ]
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

/// Rotates a vehicle-frame cloud into the world frame.
///
/// Passing [`Attitude::level`] relabels the cloud unchanged, which is how the
/// uncompensated mode runs.
pub fn compensate_tilt(cloud: &PointCloud3D, attitude: Attitude) -> Result<PointCloud3D> {
    if cloud.frame() != Frame::Vehicle {
        return Err(Error::FrameMismatch { expected: Frame::Vehicle, actual: cloud.frame() });
    }
    // Re-validate: Attitude fields are private but deserialization bypasses `new`.
    let attitude = Attitude::new(attitude.roll, attitude.pitch)?;
    let m = attitude.rotation();
    let points = cloud.points().iter().map(|p| apply(&m, p)).collect();
    Ok(PointCloud3D::from_parts(points, cloud.colors().map(<[_]>::to_vec), Frame::World))
}

/// Inverse of [`compensate_tilt`]: world frame back into the tilted vehicle frame.
pub fn rotate_to_vehicle(cloud: &PointCloud3D, attitude: Attitude) -> Result<PointCloud3D> {
    if cloud.frame() != Frame::World {
        return Err(Error::FrameMismatch { expected: Frame::World, actual: cloud.frame() });
    }
    let attitude = Attitude::new(attitude.roll, attitude.pitch)?;
    let m = transpose(&attitude.rotation());
    let points = cloud.points().iter().map(|p| apply(&m, p)).collect();
    Ok(PointCloud3D::from_parts(points, cloud.colors().map(<[_]>::to_vec), Frame::Vehicle))
}
