//! Points, distances and the angles that feed the antenna pattern.
//!
//! Elevation is measured from zenith: 0° straight up, 90° on the horizon,
//! 180° straight down. Azimuth is counter-clockwise from the +x axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Boresight azimuth of one sector, degrees in `[0, 360)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorOrientation(f64);

impl SectorOrientation {
    pub fn new(azimuth_deg: f64) -> Self {
        Self(azimuth_deg.rem_euclid(360.0))
    }

    pub fn azimuth(self) -> f64 {
        self.0
    }

    /// Three sectors 120° apart, the first at `first_deg`.
    pub fn tri_sector(first_deg: f64) -> [SectorOrientation; 3] {
        [
            Self::new(first_deg),
            Self::new(first_deg + 120.0),
            Self::new(first_deg + 240.0),
        ]
    }
}

pub fn distance3d(a: &Point3, b: &Point3) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let dz = b.z - a.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Direction of `rx` as seen from a sector at `tx` with boresight `tx_azimuth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bearing {
    /// Receiver bearing minus boresight, wrapped to `[-180, 180]`.
    pub azimuth_offset: f64,
    /// Zenith angle in `[0, 180]`.
    pub elevation: f64,
}

pub fn bearing_angles(tx: &Point3, tx_azimuth: f64, rx: &Point3) -> Result<Bearing> {
    let dx = rx.x - tx.x;
    let dy = rx.y - tx.y;
    let dz = rx.z - tx.z;
    let horizontal = dx.hypot(dy);
    if horizontal == 0.0 && dz == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let elevation = horizontal.atan2(dz).to_degrees();
    // Pattern is azimuth-flat at zenith and nadir.
    let azimuth_offset = if horizontal == 0.0 {
        0.0
    } else {
        wrap_degrees(dy.atan2(dx).to_degrees() - tx_azimuth)
    };
    Ok(Bearing {
        azimuth_offset,
        elevation,
    })
}

/// Wraps an angle to `[-180, 180]`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let wrapped = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360 - ulp for tiny negative inputs
    wrapped.clamp(-180.0, 180.0)
}
