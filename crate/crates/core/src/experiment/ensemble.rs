//! Per-iteration statistics across seed trajectories.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::TrainTrace;

pub const ENSEMBLE_CSV_HEADER: &str = "iter,mean_out_sample,std_out_sample,min_out_sample,\
mean_in_sample,std_in_sample,min_in_sample,mean_in_sample_fullmask";

/// Mean, population standard deviation and pointwise minimum of the error
/// curves of several seeds, aligned by record index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub iterations: Vec<usize>,
    pub mean_out_of_sample: Vec<f64>,
    pub std_out_of_sample: Vec<f64>,
    pub min_out_of_sample: Vec<f64>,
    pub mean_in_sample: Vec<f64>,
    pub std_in_sample: Vec<f64>,
    pub min_in_sample: Vec<f64>,
    pub mean_in_sample_full: Vec<f64>,
}

/// `(mean, population std, min)` of a non-empty slice.
pub fn mean_std_min(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, var.sqrt(), min)
}

impl EnsembleSummary {
    pub fn from_traces(traces: &[&TrainTrace]) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::Config("ensemble needs at least one trace".into()))?;
        let iterations: Vec<usize> = first.records.iter().map(|r| r.iteration).collect();
        for t in traces {
            if t.records.len() != iterations.len()
                || t.records.iter().zip(&iterations).any(|(r, i)| r.iteration != *i)
            {
                return Err(Error::Config("ensemble traces have different record iterations".into()));
            }
        }
        let mut s = EnsembleSummary {
            iterations,
            mean_out_of_sample: vec![],
            std_out_of_sample: vec![],
            min_out_of_sample: vec![],
            mean_in_sample: vec![],
            std_in_sample: vec![],
            min_in_sample: vec![],
            mean_in_sample_full: vec![],
        };
        for k in 0..s.iterations.len() {
            let col = |f: fn(&crate::training::TraceRecord) -> f64| -> Vec<f64> {
                traces.iter().map(|t| f(&t.records[k])).collect()
            };
            let (m, sd, mn) = mean_std_min(&col(|r| r.out_of_sample));
            s.mean_out_of_sample.push(m);
            s.std_out_of_sample.push(sd);
            s.min_out_of_sample.push(mn);
            let (m, sd, mn) = mean_std_min(&col(|r| r.in_sample));
            s.mean_in_sample.push(m);
            s.std_in_sample.push(sd);
            s.min_in_sample.push(mn);
            s.mean_in_sample_full.push(mean_std_min(&col(|r| r.in_sample_full)).0);
        }
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(ENSEMBLE_CSV_HEADER);
        out.push('\n');
        for k in 0..self.iterations.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.iterations[k],
                self.mean_out_of_sample[k],
                self.std_out_of_sample[k],
                self.min_out_of_sample[k],
                self.mean_in_sample[k],
                self.std_in_sample[k],
                self.min_in_sample[k],
                self.mean_in_sample_full[k],
            );
        }
        out
    }
}

/// Trailing moving average over the last `window` iterations: entry `k`
/// averages every record whose iteration lies in `(it[k] - window, it[k]]`.
pub fn smooth(iterations: &[usize], values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut start = 0;
    let mut sum = 0.0;
    for k in 0..values.len() {
        sum += values[k];
        while iterations[k] - iterations[start] >= window {
            sum -= values[start];
            start += 1;
        }
        out.push(sum / (k + 1 - start) as f64);
    }
    out
}

/// Relative rise of the final smoothed value above the smoothed minimum.
pub fn final_rise(smoothed: &[f64]) -> f64 {
    let min = smoothed.iter().copied().fold(f64::INFINITY, f64::min);
    match smoothed.last() {
        Some(last) if min > 0.0 => last / min - 1.0,
        _ => 0.0,
    }
}

/// Mean of the records inside the final `window` iterations.
pub fn final_mean(iterations: &[usize], values: &[f64], window: usize) -> f64 {
    smooth(iterations, values, window).last().copied().unwrap_or(f64::NAN)
}
