use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::generate::{generate_pair, trial_rng, PERMUTATION_STREAM};
use crate::baselines::{data_splitting_test, permutation_test, si_dtw_oc_p_value};
use crate::error::{Error, Result};
use crate::inference::{selective_p_value, InferenceResult};
use crate::series::TimeSeriesPair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Index into the generator streams; `repetition * trials + trial`.
    pub index: u64,
    pub repetition: usize,
    pub trial: usize,
    pub method: Method,
    pub p_value: f64,
    pub rejected: bool,
    pub z_obs: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub ci_length: Option<f64>,
    /// `eta' mu` for the observed direction, when a CI was computed.
    pub true_theta: Option<f64>,
    pub covered: Option<bool>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: Method,
    pub trials: usize,
    pub rejection_rate: f64,
    /// Rejection rate of each repetition.
    pub repetition_rates: Vec<f64>,
    pub mean_repetition_rate: f64,
    pub mean_ci_length: Option<f64>,
    pub median_ci_length: Option<f64>,
    pub coverage: Option<f64>,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 { values[k / 2] } else { 0.5 * (values[k / 2 - 1] + values[k / 2]) })
}

fn rate(records: &[TrialRecord]) -> f64 {
    records.iter().filter(|r| r.rejected).count() as f64 / records.len() as f64
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, records: Vec<TrialRecord>) -> Self {
        let total = records.len();
        let repetition_rates: Vec<f64> = records.chunks(config.trials).map(rate).collect();
        let mut lengths: Vec<f64> = records.iter().filter_map(|r| r.ci_length).collect();
        let covered: Vec<bool> = records.iter().filter_map(|r| r.covered).collect();
        let summary = Summary {
            method: config.method,
            trials: total,
            rejection_rate: rate(&records),
            mean_repetition_rate: repetition_rates.iter().sum::<f64>() / repetition_rates.len() as f64,
            repetition_rates,
            mean_ci_length: (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64),
            median_ci_length: median(&mut lengths),
            coverage: (!covered.is_empty())
                .then(|| covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64),
            mean_seconds: records.iter().map(|r| r.seconds).sum::<f64>() / total as f64,
        };
        Self { config, records, summary }
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_value).collect()
    }
}

/// `eta' mu` for `mu = (0_n; delta 1_m)`.
fn true_theta(pair: &TimeSeriesPair, delta: f64) -> f64 {
    let (_, dir) = crate::dtw::observed_direction(pair);
    dir.eta[pair.n()..].iter().sum::<f64>() * delta
}

/// Runs `config.method` on `pair` and records the outcome.
pub fn run_trial(config: &ExperimentConfig, pair: &TimeSeriesPair, index: u64, with_ci: bool) -> Result<TrialRecord> {
    let start = Instant::now();
    let mut record = TrialRecord {
        index,
        repetition: (index / config.trials as u64) as usize,
        trial: (index % config.trials as u64) as usize,
        method: config.method,
        p_value: f64::NAN,
        rejected: false,
        z_obs: None,
        ci: None,
        ci_length: None,
        true_theta: None,
        covered: None,
        seconds: 0.0,
    };
    let selective = |result: Result<InferenceResult>| -> Result<InferenceResult> {
        let result = result?;
        if with_ci {
            result.with_ci(config.alpha)
        } else {
            Ok(result)
        }
    };
    let result = match config.method {
        Method::SiDtw => Some(selective(selective_p_value(pair))?),
        Method::SiDtwOc => Some(selective(si_dtw_oc_p_value(pair))?),
        Method::Permutation => {
            let seed = trial_rng(config.seed, index, PERMUTATION_STREAM).gen::<u64>();
            record.p_value = permutation_test(pair, config.perm_b, seed)?;
            None
        }
        Method::DataSplit => {
            record.p_value = data_splitting_test(pair)?;
            None
        }
    };
    if let Some(result) = result {
        record.p_value = result.p_selective;
        record.z_obs = Some(result.z_obs);
        if let Some((lo, hi)) = result.ci {
            let theta = true_theta(pair, config.delta);
            record.ci = Some((lo, hi));
            record.ci_length = Some(hi - lo);
            record.true_theta = Some(theta);
            record.covered = Some(lo <= theta && theta <= hi);
        }
    }
    record.rejected = record.p_value <= config.alpha;
    record.seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

fn run_indices(config: &ExperimentConfig, with_ci: bool, parallel: bool) -> Result<ExperimentReport> {
    config.validate()?;
    if with_ci && !config.method.is_selective() {
        return Err(Error::Config(format!("{} does not produce confidence intervals", config.method)));
    }
    let total = (config.trials * config.repetitions) as u64;
    let one = |index: u64| generate_pair(config, index).and_then(|pair| run_trial(config, &pair, index, with_ci));
    let records = if parallel {
        (0..total).into_par_iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        (0..total).map(one).collect::<Result<Vec<_>>>()?
    };
    Ok(ExperimentReport::new(config.clone(), records))
}

/// Every trial of `config`, in parallel, ordered by trial index.
pub fn run_experiment(config: &ExperimentConfig, with_ci: bool) -> Result<ExperimentReport> {
    run_indices(config, with_ci, true)
}

/// Null experiment; `config.delta` must be zero.
pub fn run_fpr(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.delta != 0.0 {
        return Err(Error::Config(format!("false positive runs need delta = 0, got {}", config.delta)));
    }
    run_experiment(config, false)
}

pub fn run_tpr(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(config, false)
}

/// Confidence intervals, lengths and coverage of the true `eta' mu`.
pub fn run_ci(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(config, true)
}

/// The same generated pairs analysed by each of `methods`.
pub fn run_paired(config: &ExperimentConfig, methods: &[Method], with_ci: bool) -> Result<Vec<ExperimentReport>> {
    methods.iter().map(|&m| run_experiment(&config.with_method(m), with_ci)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub m: usize,
    pub method: Method,
    pub trials: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
}

/// Sequential wall-clock per call at each `n = m` in `sizes`.
pub fn run_timing(config: &ExperimentConfig, sizes: &[usize]) -> Result<Vec<TimingRow>> {
    sizes
        .iter()
        .map(|&n| {
            let cfg = ExperimentConfig { n, m: n, ..config.clone() };
            let report = run_indices(&cfg, false, false)?;
            let mut secs: Vec<f64> = report.records.iter().map(|r| r.seconds).collect();
            Ok(TimingRow {
                n,
                m: n,
                method: cfg.method,
                trials: secs.len(),
                mean_seconds: report.summary.mean_seconds,
                median_seconds: median(&mut secs).unwrap_or(0.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: Method) -> ExperimentConfig {
        ExperimentConfig { method, n: 5, m: 5, trials: 12, seed: 4, perm_b: 50, ..Default::default() }
    }

    #[test]
    fn rejection_rate_recomputes_from_p_values() {
        for method in Method::ALL {
            let report = run_fpr(&small(*method)).unwrap();
            let p = report.p_values();
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            let recount = p.iter().filter(|&&v| v <= report.config.alpha).count() as f64 / p.len() as f64;
            assert_eq!(recount, report.summary.rejection_rate);
            let idx: Vec<u64> = report.records.iter().map(|r| r.index).collect();
            assert_eq!(idx, (0..12).collect::<Vec<_>>());
        }
    }

    #[test]
    fn single_trial_rate_is_zero_or_one() {
        let report = run_fpr(&ExperimentConfig { trials: 1, ..small(Method::SiDtw) }).unwrap();
        assert!(report.summary.rejection_rate == 0.0 || report.summary.rejection_rate == 1.0);
    }

    #[test]
    fn null_tpr_equals_fpr_and_is_reproducible() {
        let cfg = small(Method::SiDtwOc);
        let a = run_fpr(&cfg).unwrap();
        let b = run_tpr(&cfg).unwrap();
        let strip = |r: &ExperimentReport| r.records.iter().map(|t| (t.p_value, t.z_obs)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(run_fpr(&cfg.with_delta(1.0)).is_err());
    }

    #[test]
    fn paired_runs_share_data() {
        let cfg = small(Method::SiDtw).with_delta(2.0);
        let reports = run_paired(&cfg, &[Method::SiDtw, Method::SiDtwOc], false).unwrap();
        for (a, b) in reports[0].records.iter().zip(&reports[1].records) {
            assert_eq!(a.z_obs, b.z_obs);
            assert!(a.p_value <= 1.0 && b.p_value <= 1.0);
        }
    }

    #[test]
    fn repetitions_are_summarized() {
        let cfg = ExperimentConfig { repetitions: 3, trials: 5, ..small(Method::DataSplit) }.with_delta(1.0);
        let report = run_tpr(&cfg).unwrap();
        assert_eq!(report.records.len(), 15);
        assert_eq!(report.summary.repetition_rates.len(), 3);
        let mean = report.summary.repetition_rates.iter().sum::<f64>() / 3.0;
        assert!((mean - report.summary.mean_repetition_rate).abs() < 1e-15);
        assert_eq!(report.records[14].repetition, 2);
        assert_eq!(report.records[14].trial, 4);
    }

    #[test]
    fn ci_runs_record_coverage() {
        let report = run_ci(&small(Method::SiDtw).with_delta(2.0)).unwrap();
        assert!(report.records.iter().all(|r| r.ci.is_some() && r.covered.is_some()));
        assert!(report.summary.median_ci_length.unwrap() > 0.0);
        assert!(run_ci(&small(Method::Permutation)).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
