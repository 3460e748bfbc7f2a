//! Monte-Carlo experiment loop: draw a network, sample shadowing along the
//! shared trajectory, train one Q-table per weight vector, fly the greedy
//! policies and the fixed-tilt baseline, and aggregate the metrics.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::antenna::Downtilt;
use crate::channel::{sample_with_factor, shadowing_factor, ShadowField};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geometry::{Point3, SectorOrientation};
use crate::mobility::{simulate_flight, FlightResult, Trajectory};
use crate::radio::Scenario;
use crate::rl::{greedy_policy, precompute_link_tables, train, LinkTables, QTable, RewardWeights};
use crate::rng::{self, Purpose};

/// GBS and GUE positions drawn uniformly over the area.
pub fn generate_scenario(config: &ExperimentConfig, realization: usize) -> Scenario {
    let net = &config.network;
    let [w, h] = net.area_m;
    let place = |purpose, count, z| {
        let mut stream = rng::stream(config.master_seed, purpose, realization as u64);
        (0..count)
            .map(|_| Point3::new(stream.random_range(0.0..=w), stream.random_range(0.0..=h), z))
            .collect::<Vec<_>>()
    };
    let gbs_positions = place(Purpose::GbsPlacement, net.n_gbs, config.gue_channel.h_gbs);
    let gue_positions = place(Purpose::GuePlacement, net.n_gue, config.gue_channel.h_gue);
    Scenario {
        sector_orientations: vec![SectorOrientation::tri_sector(0.0); gbs_positions.len()],
        gbs_positions,
        gue_positions,
        tx_power_dbm: net.tx_power_dbm,
        array_config: config.antenna.clone(),
        uav_channel: config.uav_channel.clone(),
        gue_channel: config.gue_channel.clone(),
        area: net.area_m,
    }
}

/// Metrics of one flight under one tilt policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyOutcome {
    pub ho_count: usize,
    pub mean_beta: f64,
    /// GUE sum rate averaged over the flight's waypoints, bps/Hz.
    pub mean_sum_rate: f64,
    pub flight: FlightResult,
}

impl PolicyOutcome {
    fn from_flight(flight: FlightResult, links: &LinkTables) -> Self {
        let n = flight.beta_trace.len().max(1) as f64;
        let mean_sum_rate = flight.beta_trace.iter().map(|b| links.rate[b.index()]).sum::<f64>() / n;
        Self {
            ho_count: flight.ho_count(),
            mean_beta: flight.mean_beta(),
            mean_sum_rate,
            flight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationOutcome {
    pub index: usize,
    /// One entry per configured weight vector, in config order.
    pub learned: Vec<PolicyOutcome>,
    pub baseline: PolicyOutcome,
}

/// Everything one realization produces before metrics are taken.
pub struct RealizationArtifacts {
    pub scenario: Scenario,
    pub shadow: ShadowField,
    pub links: LinkTables,
    pub q_tables: Vec<QTable>,
}

/// A configured experiment with the realization-independent pieces
/// (trajectory and shadowing factor) computed once.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub trajectory: Trajectory,
    shadow_factor: Option<DMatrix<f64>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let trajectory = config.build_trajectory()?;
        let shadow_factor = if config.shadowing.enabled {
            Some(shadowing_factor(&trajectory.waypoints, &config.shadowing_params())?)
        } else {
            None
        };
        Ok(Self {
            config,
            trajectory,
            shadow_factor,
        })
    }

    pub fn sample_shadowing(&self, realization: usize) -> ShadowField {
        let n_gbs = self.config.network.n_gbs;
        match &self.shadow_factor {
            Some(factor) => {
                let mut stream = rng::stream(self.config.master_seed, Purpose::Shadowing, realization as u64);
                sample_with_factor(factor, n_gbs, &mut stream)
            }
            None => ShadowField::zeros(n_gbs, self.trajectory.len()),
        }
    }

    pub fn artifacts(&self, realization: usize) -> Result<RealizationArtifacts> {
        let scenario = generate_scenario(&self.config, realization);
        scenario.validate()?;
        let shadow = self.sample_shadowing(realization);
        let links = precompute_link_tables(&scenario, &self.trajectory, &shadow)?;
        let tables = links.normalized();
        let q_tables = self
            .config
            .weight_vectors
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let mut stream = rng::stream(self.config.master_seed, Purpose::Training(k), realization as u64);
                train(&tables, w, &self.config.q_learning, self.config.iterations, &mut stream)
            })
            .collect();
        Ok(RealizationArtifacts {
            scenario,
            shadow,
            links,
            q_tables,
        })
    }

    pub fn run_realization(&self, realization: usize) -> Result<RealizationOutcome> {
        let art = self.artifacts(realization)?;
        let fly = |betas: &[Downtilt]| -> Result<PolicyOutcome> {
            let flight = simulate_flight(
                &art.scenario,
                &self.trajectory,
                betas,
                &art.shadow,
                &self.config.handover,
            )?;
            Ok(PolicyOutcome::from_flight(flight, &art.links))
        };
        let learned = art
            .q_tables
            .iter()
            .map(|q| {
                let betas: Vec<Downtilt> = greedy_policy(q)
                    .into_iter()
                    .map(|a| Downtilt::from_index(a).expect("action index on grid"))
                    .collect();
                fly(&betas)
            })
            .collect::<Result<Vec<_>>>()?;
        let baseline = fly(&vec![self.config.baseline_beta; self.trajectory.len()])?;
        Ok(RealizationOutcome {
            index: realization,
            learned,
            baseline,
        })
    }

    /// Runs every realization on `threads` workers; results come back in
    /// index order whatever the thread count.
    pub fn run(&self, threads: usize) -> Result<Vec<RealizationOutcome>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..self.config.n_realizations)
                .into_par_iter()
                .map(|i| self.run_realization(i))
                .collect()
        })
    }
}

/// Pooled statistics for one policy across realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicySummary {
    /// `None` for the fixed-tilt baseline.
    pub weights: Option<RewardWeights>,
    pub mean_ho_count: f64,
    pub mean_beta: f64,
    pub mean_sum_rate: f64,
    /// Every serving RSRP sample of every flight, ascending.
    pub rsrp_sorted: Vec<f64>,
}

impl PolicySummary {
    fn from_outcomes<'a>(weights: Option<RewardWeights>, outcomes: impl Iterator<Item = &'a PolicyOutcome>) -> Self {
        let (mut n, mut ho, mut beta, mut rate) = (0usize, 0.0, 0.0, 0.0);
        let mut rsrp = Vec::new();
        for o in outcomes {
            n += 1;
            ho += o.ho_count as f64;
            beta += o.mean_beta;
            rate += o.mean_sum_rate;
            rsrp.extend_from_slice(&o.flight.rsrp_trace);
        }
        rsrp.sort_by(f64::total_cmp);
        let n = n.max(1) as f64;
        Self {
            weights,
            mean_ho_count: ho / n,
            mean_beta: beta / n,
            mean_sum_rate: rate / n,
            rsrp_sorted: rsrp,
        }
    }

    pub fn rsrp_percentile(&self, p: f64) -> f64 {
        percentile(&self.rsrp_sorted, p)
    }
}

/// Nearest-rank percentile of ascending samples, `p` in `(0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateReport {
    pub n_realizations: usize,
    pub learned: Vec<PolicySummary>,
    pub baseline: PolicySummary,
}

impl AggregateReport {
    /// `(baseline − value) / baseline` in percent; positive means fewer
    /// handovers than the baseline. Zero when the baseline has none.
    pub fn ho_reduction_pct(&self, summary: &PolicySummary) -> f64 {
        let base = self.baseline.mean_ho_count;
        if base == 0.0 {
            0.0
        } else {
            100.0 * (base - summary.mean_ho_count) / base
        }
    }

    pub fn for_weights(&self, w_rate: f64, w_rsrp: f64) -> Option<&PolicySummary> {
        self.learned.iter().find(|s| {
            s.weights
                .is_some_and(|w| (w.w_rate - w_rate).abs() < 1e-12 && (w.w_rsrp - w_rsrp).abs() < 1e-12)
        })
    }
}

pub fn aggregate(weights: &[RewardWeights], results: &[RealizationOutcome]) -> Result<AggregateReport> {
    if results.is_empty() {
        return Err(Error::Config("aggregate needs at least one realization".into()));
    }
    for r in results {
        if r.learned.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                actual: r.learned.len(),
            });
        }
    }
    let learned = weights
        .iter()
        .enumerate()
        .map(|(k, w)| PolicySummary::from_outcomes(Some(*w), results.iter().map(|r| &r.learned[k])))
        .collect();
    let baseline = PolicySummary::from_outcomes(None, results.iter().map(|r| &r.baseline));
    Ok(AggregateReport {
        n_realizations: results.len(),
        learned,
        baseline,
    })
}

/// Runs the whole experiment and aggregates it.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<AggregateReport> {
    let experiment = Experiment::new(config.clone())?;
    let results = experiment.run(threads)?;
    aggregate(&config.weight_vectors, &results)
}
