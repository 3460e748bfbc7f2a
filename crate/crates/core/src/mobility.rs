//! Straight-line UAV trajectory and the A3 / time-to-trigger handover
//! state machine used to count handovers along a flight.

use serde::{Deserialize, Serialize};

use crate::antenna::Downtilt;
use crate::channel::ShadowField;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point3;
use crate::radio::{argmax, rsrp_all, rsrp_uav, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point3>,
    /// Degrees counter-clockwise from +x.
    pub heading_deg: f64,
    pub speed_kmh: f64,
    /// Measurement gap, seconds.
    pub gap_s: f64,
    /// Flight duration, seconds.
    pub duration_s: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    /// Distance between consecutive waypoints, meters.
    pub fn spacing(&self) -> f64 {
        self.speed_mps() * self.gap_s
    }

    /// Position after flying `seconds` past waypoint `s` along the heading.
    pub fn advance_from(&self, s: usize, seconds: f64) -> Point3 {
        let w = &self.waypoints[s];
        let step = self.speed_mps() * seconds;
        let (sin, cos) = self.heading_deg.to_radians().sin_cos();
        Point3::new(w.x + step * cos, w.y + step * sin, w.z)
    }
}

/// Number of whole measurement gaps in a flight.
pub fn waypoint_count(duration_s: f64, gap_s: f64) -> Result<usize> {
    if !(duration_s > 0.0 && gap_s > 0.0) {
        return Err(invalid("duration/gap", "must be positive"));
    }
    let ratio = duration_s / gap_s;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-6 * ratio.max(1.0) || rounded < 1.0 {
        return Err(invalid(
            "duration_s",
            format!("{duration_s} s is not a whole number of {gap_s} s gaps"),
        ));
    }
    Ok(rounded as usize)
}

/// Waypoint `i` sits `i·v·n` meters from `start` along `heading_deg`.
pub fn build_linear_trajectory(
    start: Point3,
    heading_deg: f64,
    speed_kmh: f64,
    gap_s: f64,
    duration_s: f64,
    area: [f64; 2],
) -> Result<Trajectory> {
    if !(speed_kmh > 0.0) {
        return Err(invalid("speed_kmh", "must be positive"));
    }
    let count = waypoint_count(duration_s, gap_s)?;
    let spacing = speed_kmh / 3.6 * gap_s;
    let (sin, cos) = heading_deg.to_radians().sin_cos();
    let mut waypoints = Vec::with_capacity(count);
    for i in 0..count {
        let along = i as f64 * spacing;
        let p = Point3::new(start.x + along * cos, start.y + along * sin, start.z);
        // allow for rounding in the heading trigonometry
        let tol = 1e-6;
        if p.x < -tol || p.y < -tol || p.x > area[0] + tol || p.y > area[1] + tol {
            return Err(Error::TrajectoryOutOfArea {
                index: i,
                x: p.x,
                y: p.y,
            });
        }
        waypoints.push(p);
    }
    Ok(Trajectory {
        waypoints,
        heading_deg,
        speed_kmh,
        gap_s,
        duration_s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HandoverConfig {
    /// Hysteresis margin, dB.
    pub hom_db: f64,
    /// Time-to-trigger, seconds.
    pub ttt_s: f64,
    /// Keep the initial cell at waypoint 1 without evaluating A3.
    pub freeze_first_step: bool,
}

impl Default for HandoverConfig {
    fn default() -> Self {
        Self {
            hom_db: 3.0,
            ttt_s: 0.16,
            freeze_first_step: false,
        }
    }
}

impl HandoverConfig {
    pub fn validate(&self, gap_s: f64) -> Result<()> {
        if self.hom_db.is_nan() || self.hom_db < 0.0 {
            return Err(invalid("hom_db", "must be non-negative"));
        }
        if !(self.ttt_s >= 0.0 && self.ttt_s < gap_s) {
            return Err(invalid("ttt_s", format!("must lie in [0, measurement gap {gap_s} s)")));
        }
        Ok(())
    }
}

/// A3 entry condition: target stronger than serving by more than the margin.
pub fn a3_triggered(rsrp_target: f64, rsrp_serving: f64, hom_db: f64) -> bool {
    rsrp_target > rsrp_serving + hom_db
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HoEvent {
    pub waypoint: usize,
    pub from: usize,
    pub to: usize,
}

/// Outcome of evaluating the handover rule at one waypoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub serving: usize,
    /// Serving-cell RSRP measured at the waypoint, dBm.
    pub rsrp: f64,
    pub event: Option<HoEvent>,
}

/// Runs the two-stage A3 check at waypoint `s`.
///
/// The strongest non-serving GBS must beat the serving cell by the margin
/// at the waypoint, and again at the point reached `ttt_s` later. Both
/// checks use the waypoint's downtilt and shadowing.
pub fn step_handover(
    scenario: &Scenario,
    trajectory: &Trajectory,
    s: usize,
    current: usize,
    beta: Downtilt,
    shadow_row: &[f64],
    cfg: &HandoverConfig,
) -> Result<StepOutcome> {
    let beta_deg = beta.degrees();
    let rsrp = rsrp_all(scenario, &trajectory.waypoints[s], beta_deg, shadow_row)?;
    let stay = StepOutcome {
        serving: current,
        rsrp: rsrp[current],
        event: None,
    };

    let mut others = rsrp.clone();
    others[current] = f64::NEG_INFINITY;
    let candidate = match argmax(&others) {
        Some(c) if c != current && others[c].is_finite() => c,
        _ => return Ok(stay),
    };
    if !a3_triggered(rsrp[candidate], rsrp[current], cfg.hom_db) {
        return Ok(stay);
    }

    let later = trajectory.advance_from(s, cfg.ttt_s);
    let target = rsrp_uav(scenario, &later, candidate, beta_deg, shadow_row[candidate])?;
    let serving = rsrp_uav(scenario, &later, current, beta_deg, shadow_row[current])?;
    if !a3_triggered(target, serving, cfg.hom_db) {
        return Ok(stay);
    }
    Ok(StepOutcome {
        serving: candidate,
        rsrp: rsrp[candidate],
        event: Some(HoEvent {
            waypoint: s,
            from: current,
            to: candidate,
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlightResult {
    pub serving_sequence: Vec<usize>,
    pub ho_events: Vec<HoEvent>,
    /// Serving-cell RSRP per waypoint, dBm.
    pub rsrp_trace: Vec<f64>,
    pub beta_trace: Vec<Downtilt>,
}

impl FlightResult {
    pub fn ho_count(&self) -> usize {
        self.ho_events.len()
    }

    pub fn mean_beta(&self) -> f64 {
        let n = self.beta_trace.len().max(1) as f64;
        self.beta_trace.iter().map(|b| b.degrees()).sum::<f64>() / n
    }
}

pub fn simulate_flight(
    scenario: &Scenario,
    trajectory: &Trajectory,
    beta_sequence: &[Downtilt],
    shadow: &ShadowField,
    cfg: &HandoverConfig,
) -> Result<FlightResult> {
    let n = trajectory.len();
    if beta_sequence.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: beta_sequence.len(),
        });
    }
    if shadow.n_waypoints() != n || shadow.n_gbs() != scenario.n_gbs() {
        return Err(Error::LengthMismatch {
            expected: n * scenario.n_gbs(),
            actual: shadow.n_waypoints() * shadow.n_gbs(),
        });
    }
    if n == 0 {
        return Ok(FlightResult {
            serving_sequence: vec![],
            ho_events: vec![],
            rsrp_trace: vec![],
            beta_trace: vec![],
        });
    }

    let first = rsrp_all(
        scenario,
        &trajectory.waypoints[0],
        beta_sequence[0].degrees(),
        shadow.at_waypoint(0),
    )?;
    let mut current = argmax(&first).expect("non-empty network");
    let mut serving_sequence = vec![current];
    let mut rsrp_trace = vec![first[current]];
    let mut ho_events = Vec::new();

    for s in 1..n {
        let row = shadow.at_waypoint(s);
        if s == 1 && cfg.freeze_first_step {
            let r = rsrp_uav(
                scenario,
                &trajectory.waypoints[s],
                current,
                beta_sequence[s].degrees(),
                row[current],
            )?;
            serving_sequence.push(current);
            rsrp_trace.push(r);
            continue;
        }
        let step = step_handover(scenario, trajectory, s, current, beta_sequence[s], row, cfg)?;
        current = step.serving;
        ho_events.extend(step.event);
        serving_sequence.push(current);
        rsrp_trace.push(step.rsrp);
    }

    Ok(FlightResult {
        serving_sequence,
        ho_events,
        rsrp_trace,
        beta_trace: beta_sequence.to_vec(),
    })
}
