//! Waypoint-indexed MDP and tabular Q-learning over the downtilt grid.
//!
//! States are trajectory waypoints and the chain is deterministic: every
//! action at state `s` leads to `s + 1`. Rewards mix the normalized GUE
//! sum rate of the chosen tilt with the normalized serving RSRP that the
//! tilt produces at the next waypoint.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::Downtilt;
use crate::channel::ShadowField;
use crate::error::{invalid, Error, Result};
use crate::mobility::Trajectory;
use crate::radio::{argmax, gue_sum_rate, serving_cell, Scenario};

const ACTIONS: usize = Downtilt::COUNT;

/// Raw per-realization link quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkTables {
    /// Serving-cell RSRP (dBm) per waypoint and action.
    pub rsrp: Vec<[f64; ACTIONS]>,
    /// GUE sum rate (bps/Hz) per action.
    pub rate: [f64; ACTIONS],
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedTables {
    pub rsrp_norm: Vec<[f64; ACTIONS]>,
    pub rate_norm: [f64; ACTIONS],
}

impl NormalizedTables {
    pub fn n_states(&self) -> usize {
        self.rsrp_norm.len()
    }
}

/// Affine map onto `[0, 1]`; a constant input maps to 0.5 everywhere.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

impl LinkTables {
    /// RSRP is normalized jointly over all waypoint-action samples, rate
    /// over the eight actions.
    pub fn normalized(&self) -> NormalizedTables {
        let flat: Vec<f64> = self.rsrp.iter().flatten().copied().collect();
        let scaled = min_max_normalize(&flat);
        let rsrp_norm = scaled
            .chunks_exact(ACTIONS)
            .map(|c| c.try_into().expect("chunk of ACTIONS"))
            .collect();
        let rate_norm = min_max_normalize(&self.rate).try_into().expect("ACTIONS entries");
        NormalizedTables { rsrp_norm, rate_norm }
    }
}

pub fn precompute_link_tables(
    scenario: &Scenario,
    trajectory: &Trajectory,
    shadow: &ShadowField,
) -> Result<LinkTables> {
    if shadow.n_waypoints() != trajectory.len() {
        return Err(Error::LengthMismatch {
            expected: trajectory.len(),
            actual: shadow.n_waypoints(),
        });
    }
    let mut rsrp = Vec::with_capacity(trajectory.len());
    for (s, waypoint) in trajectory.waypoints.iter().enumerate() {
        let mut row = [0.0; ACTIONS];
        for beta in Downtilt::ALL {
            row[beta.index()] = serving_cell(scenario, waypoint, beta.degrees(), shadow.at_waypoint(s))?.1;
        }
        rsrp.push(row);
    }
    let mut rate = [0.0; ACTIONS];
    for beta in Downtilt::ALL {
        rate[beta.index()] = if scenario.n_gue() == 0 {
            0.0
        } else {
            gue_sum_rate(scenario, beta.degrees())?
        };
    }
    Ok(LinkTables { rsrp, rate })
}

pub fn precompute_tables(
    scenario: &Scenario,
    trajectory: &Trajectory,
    shadow: &ShadowField,
) -> Result<NormalizedTables> {
    Ok(precompute_link_tables(scenario, trajectory, shadow)?.normalized())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub w_rate: f64,
    pub w_rsrp: f64,
}

impl RewardWeights {
    pub fn new(w_rate: f64, w_rsrp: f64) -> Result<Self> {
        let w = Self { w_rate, w_rsrp };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_rate >= 0.0 && self.w_rsrp >= 0.0) {
            return Err(invalid("weights", "must be non-negative"));
        }
        if (self.w_rate + self.w_rsrp - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "weights",
                format!("[{}, {}] does not sum to 1", self.w_rate, self.w_rsrp),
            ));
        }
        Ok(())
    }
}

/// Reward for taking action `a` at state `s`, scored on the next state's
/// values. The last state scores its own values.
pub fn reward(tables: &NormalizedTables, weights: &RewardWeights, s: usize, a: usize) -> f64 {
    let next = (s + 1).min(tables.n_states() - 1);
    weights.w_rate * tables.rate_norm[a] + weights.w_rsrp * tables.rsrp_norm[next][a]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QLearningConfig {
    /// Learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub discount: f64,
    pub epsilon_initial: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            discount: 0.9,
            epsilon_initial: 1.0,
            epsilon_decay: 0.99,
            epsilon_min: 0.01,
        }
    }
}

impl QLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(invalid("discount", "must lie in [0, 1)"));
        }
        self.schedule().validate()
    }

    pub fn schedule(&self) -> ExplorationSchedule {
        ExplorationSchedule {
            initial: self.epsilon_initial,
            decay: self.epsilon_decay,
            min: self.epsilon_min,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplorationSchedule {
    pub initial: f64,
    pub decay: f64,
    pub min: f64,
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !(unit.contains(&self.initial) && unit.contains(&self.decay) && unit.contains(&self.min)) {
            return Err(invalid("epsilon", "initial, decay and min must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Exploration rate used during iteration `k` (1-based): the decay is
    /// applied once before each episode.
    pub fn epsilon_at(&self, k: u32) -> f64 {
        (self.initial * self.decay.powi(k as i32)).max(self.min)
    }
}

/// Action values, one row of eight per waypoint.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: Vec<[f64; ACTIONS]>,
    pub alpha: f64,
    pub discount: f64,
}

impl QTable {
    pub fn zeros(n_states: usize, alpha: f64, discount: f64) -> Self {
        Self {
            values: vec![[0.0; ACTIONS]; n_states],
            alpha,
            discount,
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s][a]
    }

    pub fn row(&self, s: usize) -> &[f64; ACTIONS] {
        &self.values[s]
    }

    pub fn rows(&self) -> &[[f64; ACTIONS]] {
        &self.values
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.values[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index argmax of row `s`.
    pub fn greedy_action(&self, s: usize) -> usize {
        argmax(&self.values[s]).expect("non-empty row")
    }

    /// One temporal-difference step on entry `(s, a)`. `None` marks the
    /// terminal transition, which bootstraps from zero.
    pub fn update(&mut self, s: usize, a: usize, r: f64, s_next: Option<usize>) {
        let bootstrap = s_next.map_or(0.0, |n| self.max_value(n));
        let q = &mut self.values[s][a];
        *q = (1.0 - self.alpha) * *q + self.alpha * (r + self.discount * bootstrap);
    }

    /// Row per state, column per action, with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = Downtilt::ALL.iter().map(|d| format!("beta_{}", d.degrees())).collect();
        writeln!(out, "state,{}", header.join(","))?;
        for (s, row) in self.values.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{s},{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn epsilon_greedy_action<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..ACTIONS)
    } else {
        q.greedy_action(s)
    }
}

/// ε-greedy Q-learning over `iterations` episodes, each sweeping every
/// waypoint in order from the first.
pub fn train<R: Rng + ?Sized>(
    tables: &NormalizedTables,
    weights: &RewardWeights,
    cfg: &QLearningConfig,
    iterations: u32,
    rng: &mut R,
) -> QTable {
    let n = tables.n_states();
    let mut q = QTable::zeros(n, cfg.alpha, cfg.discount);
    let schedule = cfg.schedule();
    for k in 1..=iterations {
        let epsilon = schedule.epsilon_at(k);
        for s in 0..n {
            let a = epsilon_greedy_action(&q, s, epsilon, rng);
            let r = reward(tables, weights, s, a);
            let next = (s + 1 < n).then_some(s + 1);
            q.update(s, a, r, next);
        }
    }
    q
}

pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.n_states()).map(|s| q.greedy_action(s)).collect()
}

/// Exact optimal action values by one backward pass over the chain.
pub fn optimal_q_oracle(tables: &NormalizedTables, weights: &RewardWeights, discount: f64) -> Vec<[f64; ACTIONS]> {
    let n = tables.n_states();
    let mut q = vec![[0.0; ACTIONS]; n];
    for s in (0..n).rev() {
        let future = if s + 1 < n {
            q[s + 1].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            0.0
        };
        for a in 0..ACTIONS {
            q[s][a] = reward(tables, weights, s, a) + discount * future;
        }
    }
    q
}
