//! Sector antenna model: 3GPP element pattern times a vertical uniform
//! linear array whose mainlobe is electrically steered to `90° + beta`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{bearing_angles, Point3, SectorOrientation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// dBi
    pub max_element_gain: f64,
    /// Vertical half-power beamwidth, degrees.
    pub theta_3db: f64,
    /// Horizontal half-power beamwidth, degrees.
    pub phi_3db: f64,
    /// Vertical side-lobe level limit, dB.
    pub sla_v: f64,
    /// Front-to-back limit, dB. Also bounds the array-factor null depth.
    pub a_max: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_elements: 8,
            element_spacing: 0.5,
            max_element_gain: 8.0,
            theta_3db: 65.0,
            phi_3db: 65.0,
            sla_v: 30.0,
            a_max: 30.0,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(invalid("n_elements", "must be at least 1"));
        }
        if !(self.element_spacing > 0.0) {
            return Err(invalid("element_spacing", "must be positive"));
        }
        if !(self.theta_3db > 0.0 && self.phi_3db > 0.0) {
            return Err(invalid("theta_3db/phi_3db", "beamwidths must be positive"));
        }
        if self.max_element_gain < 0.0 || self.sla_v < 0.0 || self.a_max < 0.0 {
            return Err(invalid("array_config", "dB quantities must be non-negative"));
        }
        Ok(())
    }

    /// Array-factor gain toward the steered direction, `20·log10(n)`.
    pub fn coherent_gain_db(&self) -> f64 {
        20.0 * (self.n_elements as f64).log10()
    }
}

/// Network-wide electrical downtilt, one of the eight action values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Downtilt(u8);

impl Downtilt {
    pub const COUNT: usize = 8;
    pub const ALL: [Downtilt; 8] = [
        Downtilt(0),
        Downtilt(1),
        Downtilt(2),
        Downtilt(3),
        Downtilt(4),
        Downtilt(5),
        Downtilt(6),
        Downtilt(7),
    ];
    const MIN_DEG: f64 = -2.0;
    const STEP_DEG: f64 = 2.0;

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(Self(index as u8))
    }

    pub fn from_degrees(deg: f64) -> Option<Self> {
        let idx = (deg - Self::MIN_DEG) / Self::STEP_DEG;
        if idx.fract() != 0.0 || idx < 0.0 {
            return None;
        }
        Self::from_index(idx as usize)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn degrees(self) -> f64 {
        Self::MIN_DEG + Self::STEP_DEG * self.0 as f64
    }
}

impl TryFrom<f64> for Downtilt {
    type Error = String;

    fn try_from(deg: f64) -> std::result::Result<Self, Self::Error> {
        Downtilt::from_degrees(deg).ok_or_else(|| format!("downtilt {deg} is not one of -2, 0, 2, ..., 12 degrees"))
    }
}

impl From<Downtilt> for f64 {
    fn from(d: Downtilt) -> f64 {
        d.degrees()
    }
}

/// 3GPP single-element pattern in dBi.
pub fn element_gain(azimuth_offset: f64, elevation: f64, cfg: &ArrayConfig) -> f64 {
    let vertical = -(12.0 * ((elevation - 90.0) / cfg.theta_3db).powi(2)).min(cfg.sla_v);
    let horizontal = -(12.0 * (azimuth_offset / cfg.phi_3db).powi(2)).min(cfg.a_max);
    cfg.max_element_gain - (-(vertical + horizontal)).min(cfg.a_max)
}

/// `|AF|` in dB for a vertical array steered to zenith angle `90° + beta`.
///
/// Uses the closed form `|sin(nψ/2) / sin(ψ/2)|`, with
/// `ψ = 2π·spacing·(cos θ − cos(90° + β))`. The result is floored at
/// `a_max` below the coherent peak.
pub fn array_factor_db(elevation: f64, beta_deg: f64, cfg: &ArrayConfig) -> f64 {
    let n = cfg.n_elements as f64;
    let u = elevation.to_radians().cos() - (90.0 + beta_deg).to_radians().cos();
    let half_psi = std::f64::consts::PI * cfg.element_spacing * u;
    let denom = half_psi.sin();
    let magnitude = if denom.abs() < 1e-12 {
        // grating or main lobe: limit of the ratio is ±n
        n
    } else {
        ((n * half_psi).sin() / denom).abs()
    };
    let peak = cfg.coherent_gain_db();
    (20.0 * magnitude.log10()).max(peak - cfg.a_max)
}

pub fn array_gain(azimuth_offset: f64, elevation: f64, beta_deg: f64, cfg: &ArrayConfig) -> f64 {
    element_gain(azimuth_offset, elevation, cfg) + array_factor_db(elevation, beta_deg, cfg)
}

/// Gain toward `rx` from the best of a site's sectors.
pub fn best_sector_gain(
    tx: &Point3,
    sectors: &[SectorOrientation],
    rx: &Point3,
    beta_deg: f64,
    cfg: &ArrayConfig,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for sector in sectors {
        let b = bearing_angles(tx, sector.azimuth(), rx)?;
        best = best.max(array_gain(b.azimuth_offset, b.elevation, beta_deg, cfg));
    }
    Ok(best)
}
