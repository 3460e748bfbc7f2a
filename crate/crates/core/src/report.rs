//! CSV and JSON output files.
//!
//! Every CSV starts with `policy,w_rate,w_rsrp`; the learned policies come
//! first in config order, followed by the fixed-tilt baseline (`fixed`,
//! weights left empty). Numbers use six decimals and lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{AggregateReport, PolicySummary};

pub const HO_COUNTS: &str = "ho_counts.csv";
pub const MEAN_TILT: &str = "mean_tilt.csv";
pub const RSRP_CDF: &str = "rsrp_cdf.csv";
pub const GUE_RATE: &str = "gue_rate.csv";
pub const RUN_META: &str = "run_meta.json";

#[derive(Serialize)]
struct RunMeta<'a> {
    master_seed: u64,
    n_realizations: usize,
    config: &'a ExperimentConfig,
}

fn label(s: &PolicySummary) -> String {
    match s.weights {
        Some(w) => format!("rl,{:.6},{:.6}", w.w_rate, w.w_rsrp),
        None => "fixed,,".to_string(),
    }
}

/// Learned rows then the baseline; nothing at all without weight vectors.
fn rows(report: &AggregateReport) -> Vec<&PolicySummary> {
    if report.learned.is_empty() {
        return Vec::new();
    }
    report.learned.iter().chain(std::iter::once(&report.baseline)).collect()
}

pub fn ho_counts_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy,w_rate,w_rsrp,mean_ho_count,reduction_vs_baseline_pct\n");
    for s in rows(report) {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6}",
            label(s),
            s.mean_ho_count,
            report.ho_reduction_pct(s)
        );
    }
    out
}

pub fn mean_tilt_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy,w_rate,w_rsrp,mean_beta_deg\n");
    for s in rows(report) {
        let _ = writeln!(out, "{},{:.6}", label(s), s.mean_beta);
    }
    out
}

pub fn rsrp_cdf_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy,w_rate,w_rsrp,rsrp_dbm,cdf\n");
    for s in rows(report) {
        let prefix = label(s);
        let n = s.rsrp_sorted.len() as f64;
        for (i, v) in s.rsrp_sorted.iter().enumerate() {
            let _ = writeln!(out, "{prefix},{v:.6},{:.6}", (i + 1) as f64 / n);
        }
    }
    out
}

pub fn gue_rate_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy,w_rate,w_rsrp,mean_sum_rate_bps_hz\n");
    for s in rows(report) {
        let _ = writeln!(out, "{},{:.6}", label(s), s.mean_sum_rate);
    }
    out
}

pub fn run_meta_json(report: &AggregateReport, config: &ExperimentConfig) -> Result<String> {
    let meta = RunMeta {
        master_seed: config.master_seed,
        n_realizations: report.n_realizations,
        config,
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the four CSVs and `run_meta.json` into `dir`, creating it if
/// needed. Returns the written paths.
pub fn emit_reports(report: &AggregateReport, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(vec![
        write(dir, HO_COUNTS, &ho_counts_csv(report))?,
        write(dir, MEAN_TILT, &mean_tilt_csv(report))?,
        write(dir, RSRP_CDF, &rsrp_cdf_csv(report))?,
        write(dir, GUE_RATE, &gue_rate_csv(report))?,
        write(dir, RUN_META, &run_meta_json(report, config)?)?,
    ])
}
