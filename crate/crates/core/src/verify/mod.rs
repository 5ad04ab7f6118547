//! Statistical verification: Kolmogorov-Smirnov machinery, moment
//! accumulators and the experiment drivers that turn closed-form predictions
//! into pass/fail reports.
//!
//! Every driver is a deterministic function of `(parameters, seed)`: trials
//! draw from per-trial stream indices and results are reduced in a fixed
//! order, so reports do not depend on the thread count.

mod drivers;

pub use drivers::*;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic 99% quantile of the Kolmogorov distribution; one-sample
/// critical values are `KS_CRIT_99 / sqrt(n)`.
pub const KS_CRIT_99: f64 = 1.63;

/// Stream offset separating independent batches inside one driver.
pub(crate) const BATCH_OFFSET: u64 = 1 << 32;

/// How a report's statistic is compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// Passes iff `|statistic - predicted| <= threshold`.
    TwoSided,
    /// Passes iff `statistic <= threshold` (KS-type tests).
    UpperBound,
}

/// Outcome of one statistical check, with everything needed to recompute it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub predicted: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub trials: u64,
    pub passed: bool,
    pub seed: u64,
    pub comparison: Comparison,
}

impl TestReport {
    pub fn two_sided(
        name: impl Into<String>,
        statistic: f64,
        predicted: f64,
        stderr: f64,
        threshold: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            predicted,
            stderr,
            threshold,
            trials,
            passed: (statistic - predicted).abs() <= threshold,
            seed,
            comparison: Comparison::TwoSided,
        }
    }

    pub fn upper_bound(
        name: impl Into<String>,
        statistic: f64,
        stderr: f64,
        threshold: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            predicted: 0.0,
            stderr,
            threshold,
            trials,
            passed: statistic <= threshold,
            seed,
            comparison: Comparison::UpperBound,
        }
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.comparison {
            Comparison::TwoSided => format!(
                "{verdict} {} statistic={:.6e} predicted={:.6e} |diff|={:.3e} threshold={:.3e} stderr={:.3e} trials={} seed={}",
                self.name,
                self.statistic,
                self.predicted,
                (self.statistic - self.predicted).abs(),
                self.threshold,
                self.stderr,
                self.trials,
                self.seed
            ),
            Comparison::UpperBound => format!(
                "{verdict} {} statistic={:.6e} threshold={:.3e} trials={} seed={}",
                self.name, self.statistic, self.threshold, self.trials, self.seed
            ),
        }
    }
}

fn serialize_complex_vec<S: serde::Serializer>(
    values: &[Complex64],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&[v.re, v.im])?;
    }
    seq.end()
}

fn deserialize_complex_vec<'de, D: serde::Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Vec<Complex64>, D::Error> {
    let pairs: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
    Ok(pairs
        .into_iter()
        .map(|[re, im]| Complex64::new(re, im))
        .collect())
}

/// Labeled empirical moments next to their predicted values, with Monte
/// Carlo standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentTable {
    pub labels: Vec<String>,
    #[serde(
        serialize_with = "serialize_complex_vec",
        deserialize_with = "deserialize_complex_vec"
    )]
    pub empirical: Vec<Complex64>,
    #[serde(
        serialize_with = "serialize_complex_vec",
        deserialize_with = "deserialize_complex_vec"
    )]
    pub predicted: Vec<Complex64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl MomentTable {
    pub fn new(trials: u64, seed: u64) -> Self {
        MomentTable {
            labels: Vec::new(),
            empirical: Vec::new(),
            predicted: Vec::new(),
            stderr: Vec::new(),
            trials,
            seed,
        }
    }

    pub fn push(
        &mut self,
        label: impl Into<String>,
        empirical: Complex64,
        predicted: Complex64,
        stderr: f64,
    ) {
        self.labels.push(label.into());
        self.empirical.push(empirical);
        self.predicted.push(predicted);
        self.stderr.push(stderr);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `|empirical - predicted| / stderr` per row.
    pub fn z_scores(&self) -> Vec<f64> {
        self.empirical
            .iter()
            .zip(&self.predicted)
            .zip(&self.stderr)
            .map(|((e, p), s)| (e - p).norm() / s)
            .collect()
    }

    pub fn max_z(&self) -> f64 {
        self.z_scores().into_iter().fold(0.0, f64::max)
    }

    /// Worst row as a report with a z-score threshold.
    pub fn as_report(&self, name: impl Into<String>, z_threshold: f64) -> TestReport {
        TestReport::upper_bound(name, self.max_z(), 1.0, z_threshold, self.trials, self.seed)
    }
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("sample values must be comparable"));
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max(((i as f64 + 1.0) / n - f).abs());
    }
    Ok(sup)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("comparable"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("comparable"));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i];
        let y = ys[j];
        let v = x.min(y);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// 1% critical value for a one-sample KS test with `n` observations.
pub fn ks_critical(n: usize) -> f64 {
    KS_CRIT_99 / (n as f64).sqrt()
}

/// 1% critical value for a two-sample KS test.
pub fn two_sample_ks_critical(n: usize, m: usize) -> f64 {
    KS_CRIT_99 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Mean and standard error of a real sample.
pub fn real_mean_se(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Mean and standard error of a complex sample; the error is
/// `sqrt(E|v - mean|^2 / T)`.
pub fn complex_mean_se(values: &[Complex64]) -> (Complex64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<Complex64>() / t;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Runs `trials` independent closures over an optional thread pool, keeping
/// trial order in the output so reductions stay deterministic.
pub fn run_trials<T, F>(trials: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if threads <= 1 || trials < 2 {
        return (0..trials).map(f).collect();
    }
    let threads = threads.min(trials as usize);
    let chunk = trials.div_ceil(threads as u64);
    let mut chunks: Vec<Result<Vec<T>>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for w in 0..threads as u64 {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(trials);
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(f).collect::<Result<Vec<T>>>()));
        }
        for h in handles {
            chunks.push(h.join().expect("trial worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(trials as usize);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Plain-text `key = value` configuration for the verification drivers.
/// Lines starting with `#` and blank lines are ignored.
#[derive(Clone, Debug, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { map })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v} is not an integer"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_u64(key, default as u64)? as usize)
    }

    pub fn get_u32(&self, key: &str, default: u32) -> Result<u32> {
        let v = self.get_u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| Error::Config(format!("{key} = {v} does not fit in u32")))
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v} is not a number"))),
        }
    }
}
