//! Experiment configuration and the bundled presets.
//!
//! Config files are JSON. Missing fields take the full-scale defaults;
//! unknown keys are rejected. A preset can serve as the base that a config
//! file is merged over.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::antenna::{ArrayConfig, Downtilt};
use crate::channel::{GueChannelParams, ShadowingParams, UavChannelParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point3;
use crate::mobility::{build_linear_trajectory, waypoint_count, HandoverConfig, Trajectory};
use crate::rl::{QLearningConfig, RewardWeights};

pub const PAPER_PRESET: &str = include_str!("../presets/paper.json");
pub const DESK_PRESET: &str = include_str!("../presets/desk.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Paper => PAPER_PRESET,
            Preset::Desk => DESK_PRESET,
        }
    }

    pub fn load(self) -> ExperimentConfig {
        ExperimentConfig::from_json(self.source()).expect("bundled preset is valid")
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset `{other}` (expected paper or desk)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Width and height, meters.
    pub area_m: [f64; 2],
    pub n_gbs: usize,
    pub n_gue: usize,
    pub tx_power_dbm: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            area_m: [4000.0, 4000.0],
            n_gbs: 64,
            n_gue: 320,
            tx_power_dbm: 46.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub speed_kmh: f64,
    /// Measurement gap, seconds.
    pub gap_s: f64,
    pub duration_s: f64,
    /// Horizontal start point; `None` centers the line in the area.
    pub start: Option<[f64; 2]>,
    pub heading_deg: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            speed_kmh: 120.0,
            gap_s: 0.2,
            duration_s: 120.0,
            start: None,
            heading_deg: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowingConfig {
    pub enabled: bool,
    pub rho: f64,
    pub decorrelation_m: f64,
}

impl Default for ShadowingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rho: 0.82,
            decorrelation_m: 100.0,
        }
    }
}

pub fn default_weight_vectors() -> Vec<RewardWeights> {
    [(0.0, 1.0), (0.1, 0.9), (0.2, 0.8), (0.3, 0.7), (1.0, 0.0)]
        .into_iter()
        .map(|(w_rate, w_rsrp)| RewardWeights { w_rate, w_rsrp })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub n_realizations: usize,
    pub weight_vectors: Vec<RewardWeights>,
    /// Fixed downtilt of the comparison baseline, degrees.
    pub baseline_beta: Downtilt,
    /// Training episodes per Q-table.
    pub iterations: u32,
    pub network: NetworkConfig,
    pub trajectory: TrajectoryConfig,
    pub antenna: ArrayConfig,
    pub uav_channel: UavChannelParams,
    pub gue_channel: GueChannelParams,
    pub shadowing: ShadowingConfig,
    pub handover: HandoverConfig,
    pub q_learning: QLearningConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2021,
            n_realizations: 100,
            weight_vectors: default_weight_vectors(),
            baseline_beta: Downtilt::from_degrees(6.0).expect("on grid"),
            iterations: 1500,
            network: NetworkConfig::default(),
            trajectory: TrajectoryConfig::default(),
            antenna: ArrayConfig::default(),
            uav_channel: UavChannelParams::default(),
            gue_channel: GueChannelParams::default(),
            shadowing: ShadowingConfig::default(),
            handover: HandoverConfig::default(),
            q_learning: QLearningConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overlays `overrides` on `base` key by key, then parses the result.
    pub fn merged(base: &str, overrides: &str) -> Result<Self> {
        let parse = |t: &str| serde_json::from_str::<Value>(t).map_err(|e| Error::Config(e.to_string()));
        let mut value = parse(base)?;
        merge_json(&mut value, parse(overrides)?);
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(invalid("n_realizations", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        for w in &self.weight_vectors {
            w.validate()?;
        }
        let [w, h] = self.network.area_m;
        if !(w > 0.0 && h > 0.0) {
            return Err(invalid("network.area_m", "must be positive"));
        }
        if self.network.n_gbs == 0 {
            return Err(invalid("network.n_gbs", "must be at least 1"));
        }
        if self.network.n_gue > 0 && self.network.n_gbs < 2 {
            return Err(invalid("network.n_gbs", "ground users need M >= 2"));
        }
        self.antenna.validate()?;
        self.uav_channel.validate()?;
        self.gue_channel.validate()?;
        if self.shadowing.enabled {
            self.shadowing_params().validate()?;
        }
        waypoint_count(self.trajectory.duration_s, self.trajectory.gap_s)?;
        self.handover.validate(self.trajectory.gap_s)?;
        self.q_learning.validate()?;
        self.build_trajectory().map(|_| ())
    }

    pub fn shadowing_params(&self) -> ShadowingParams {
        ShadowingParams::for_altitude(
            self.uav_channel.h_uav,
            self.shadowing.rho,
            self.shadowing.decorrelation_m,
        )
    }

    /// The straight flight shared by every realization.
    pub fn build_trajectory(&self) -> Result<Trajectory> {
        let t = &self.trajectory;
        let n = waypoint_count(t.duration_s, t.gap_s)?;
        let [w, h] = self.network.area_m;
        let start = match t.start {
            Some([x, y]) => [x, y],
            None => {
                let half = (n - 1) as f64 * t.speed_kmh / 3.6 * t.gap_s / 2.0;
                let (sin, cos) = t.heading_deg.to_radians().sin_cos();
                [w / 2.0 - half * cos, h / 2.0 - half * sin]
            }
        };
        build_linear_trajectory(
            Point3::new(start[0], start[1], self.uav_channel.h_uav),
            t.heading_deg,
            t.speed_kmh,
            t.gap_s,
            t.duration_s,
            self.network.area_m,
        )
    }
}

fn merge_json(base: &mut Value, overrides: Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `w_rate:w_rsrp,w_rate:w_rsrp,...`.
pub fn parse_weight_list(list: &str) -> Result<Vec<RewardWeights>> {
    if list.trim().is_empty() {
        return Ok(Vec::new());
    }
    list.split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("weight pair `{pair}` is not w_rate:w_rsrp")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad weight `{s}` in `{pair}`")))
            };
            RewardWeights::new(num(a)?, num(b)?)
        })
        .collect()
}
