//! Null thresholds, power estimates, power curves and subpopulation power.
//!
//! A test rejects H0 when the statistic is strictly greater than the
//! threshold `c`. The threshold is the smallest null sample value whose
//! exceedance fraction is at most α, i.e. the `⌈B(1-α)⌉`-th order statistic,
//! so ties at `c` count as non-rejections and the realized false positive
//! rate on the null sample never exceeds α.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ci::{clopper_pearson, wald_difference};
use crate::error::{DataError, PowerError};
use crate::lrstats::Statistic;
use crate::mcengine::SampleMatrix;
use crate::profile::malformed;

/// Confidence level of every reported power interval.
pub const POWER_CI_LEVEL: f64 = 0.95;
/// Below this many expected null exceedances the threshold is unstable.
pub const MIN_EXPECTED_EXCEEDANCES: f64 = 10.0;
/// Below this many pairs the Wald difference interval is unreliable.
pub const MIN_WALD_PAIRS: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerWarning {
    /// `alpha * B` is below [`MIN_EXPECTED_EXCEEDANCES`].
    AlphaTooSmallForB { alpha: f64, replicates: usize },
    /// A Wald interval was computed from fewer than [`MIN_WALD_PAIRS`] pairs.
    SmallSample { pairs: u64 },
}

impl std::fmt::Display for PowerWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PowerWarning::AlphaTooSmallForB { alpha, replicates } => write!(
                f,
                "AlphaTooSmallForB: alpha={alpha} with B={replicates} expects {:.2} null exceedances (< {MIN_EXPECTED_EXCEEDANCES})",
                alpha * *replicates as f64
            ),
            PowerWarning::SmallSample { pairs } => {
                write!(f, "SmallSampleWarning: Wald interval from {pairs} pairs (< {MIN_WALD_PAIRS})")
            }
        }
    }
}

/// Log-LR sample sorted ascending, for repeated threshold and count queries.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn new(values: &[f64]) -> Self {
        let mut values = values.to_vec();
        values.sort_by(f64::total_cmp);
        SortedSample { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Number of values strictly greater than `c`.
    pub fn count_above(&self, c: f64) -> usize {
        self.values.len() - self.values.partition_point(|&x| x <= c)
    }

    pub fn threshold(&self, alpha: f64) -> Result<Threshold, PowerError> {
        if self.values.is_empty() {
            return Err(PowerError::EmptySample);
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(PowerError::InvalidAlpha(alpha));
        }
        let n = self.values.len();
        // exceedances allowed: floor(alpha * B), guarded against 0.2*10 = 1.999...
        let allowed = ((alpha * n as f64) * (1.0 + 1e-12)).floor() as usize;
        let log_value = if allowed >= n {
            f64::NEG_INFINITY
        } else {
            self.values[n - allowed - 1]
        };
        let exceed = self.count_above(log_value);
        let warning = (alpha * (n as f64) < MIN_EXPECTED_EXCEEDANCES)
            .then_some(PowerWarning::AlphaTooSmallForB { alpha, replicates: n });
        Ok(Threshold {
            alpha,
            log_value,
            realized_fpr: exceed as f64 / n as f64,
            replicates: n,
            warning,
        })
    }

    pub fn power(&self, threshold_log: f64) -> Result<PowerEstimate, PowerError> {
        if self.values.is_empty() {
            return Err(PowerError::EmptySample);
        }
        PowerEstimate::from_counts(self.count_above(threshold_log) as u64, self.values.len() as u64)
    }
}

/// Null threshold for one false positive rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub alpha: f64,
    /// Threshold on the log-LR scale.
    pub log_value: f64,
    /// Fraction of the null sample strictly above the threshold.
    pub realized_fpr: f64,
    pub replicates: usize,
    pub warning: Option<PowerWarning>,
}

impl Threshold {
    /// Threshold on the likelihood-ratio scale.
    pub fn linear_value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Errors when the null sample cannot resolve `alpha` at all.
    pub fn require_resolution(&self) -> Result<(), PowerError> {
        let product = self.alpha * self.replicates as f64;
        if product < 1.0 {
            Err(PowerError::AlphaBelowResolution { product })
        } else {
            Ok(())
        }
    }
}

/// Smallest null value `c` with `#{x > c} / B <= alpha`.
pub fn null_threshold(null_samples: &[f64], alpha: f64) -> Result<Threshold, PowerError> {
    SortedSample::new(null_samples).threshold(alpha)
}

/// Proportion of a sample above a threshold, with its exact interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub successes: u64,
    pub trials: u64,
    pub power: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PowerEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self, PowerError> {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, POWER_CI_LEVEL)?;
        Ok(PowerEstimate {
            successes,
            trials,
            power: successes as f64 / trials as f64,
            ci_low,
            ci_high,
        })
    }
}

/// Fraction of `alt_samples` strictly above `threshold_log`.
pub fn power(alt_samples: &[f64], threshold_log: f64) -> Result<PowerEstimate, PowerError> {
    if alt_samples.is_empty() {
        return Err(PowerError::EmptySample);
    }
    let hits = alt_samples.iter().filter(|&&x| x > threshold_log).count();
    PowerEstimate::from_counts(hits as u64, alt_samples.len() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub threshold_log: f64,
    pub power: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub statistic: Statistic,
    pub points: Vec<CurvePoint>,
    pub warnings: Vec<PowerWarning>,
}

/// Power at each grid α, reusing one sorted null and alt sample.
pub fn power_curve(
    statistic: Statistic,
    null: &SortedSample,
    alt: &SortedSample,
    alpha_grid: &[f64],
) -> Result<PowerCurve, PowerError> {
    let mut points = Vec::with_capacity(alpha_grid.len());
    let mut warnings = Vec::new();
    for &alpha in alpha_grid {
        let t = null.threshold(alpha)?;
        let est = alt.power(t.log_value)?;
        warnings.extend(t.warning.clone());
        points.push(CurvePoint {
            alpha,
            threshold_log: t.log_value,
            power: est.power,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
        });
    }
    Ok(PowerCurve {
        statistic,
        points,
        warnings,
    })
}

/// Power restricted to alternative replicates of one subpopulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubpopPower {
    pub subpop: usize,
    pub name: String,
    pub power: f64,
    pub n_pairs: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn subpop_power(
    alt: &SampleMatrix,
    statistic: Statistic,
    threshold_log: f64,
    subpop: usize,
) -> Result<PowerEstimate, PowerError> {
    if subpop >= alt.num_subpops() {
        return Err(PowerError::SubpopOutOfRange {
            index: subpop,
            count: alt.num_subpops(),
        });
    }
    let values = alt
        .values(statistic)
        .ok_or_else(|| PowerError::MissingStatistic(statistic.to_string()))?;
    let (mut n, mut hits) = (0u64, 0u64);
    for (&v, &tag) in values.iter().zip(alt.tags()) {
        if tag as usize == subpop {
            n += 1;
            hits += u64::from(v > threshold_log);
        }
    }
    if n == 0 {
        return Err(PowerError::EmptySubpopSample(subpop));
    }
    PowerEstimate::from_counts(hits, n)
}

/// Per-subpopulation power for every subpopulation with at least one
/// replicate.
pub fn all_subpop_powers(
    alt: &SampleMatrix,
    statistic: Statistic,
    threshold_log: f64,
    names: &[String],
) -> Result<Vec<SubpopPower>, PowerError> {
    let mut out = Vec::new();
    for k in 0..alt.num_subpops() {
        match subpop_power(alt, statistic, threshold_log, k) {
            Ok(est) => out.push(SubpopPower {
                subpop: k,
                name: names.get(k).cloned().unwrap_or_else(|| k.to_string()),
                power: est.power,
                n_pairs: est.trials,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
            }),
            Err(PowerError::EmptySubpopSample(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Wald interval for the difference in power between two subpopulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffCi {
    pub subpop_i: String,
    pub subpop_j: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip)]
    pub warning: Option<PowerWarning>,
}

pub fn power_diff_ci(
    power_i: f64,
    n_i: u64,
    power_j: f64,
    n_j: u64,
    level: f64,
) -> Result<DiffCi, PowerError> {
    let (estimate, ci_low, ci_high) = wald_difference(power_i, n_i, power_j, n_j, level)?;
    let smallest = n_i.min(n_j);
    Ok(DiffCi {
        subpop_i: String::new(),
        subpop_j: String::new(),
        estimate,
        ci_low,
        ci_high,
        warning: (smallest < MIN_WALD_PAIRS).then_some(PowerWarning::SmallSample { pairs: smallest }),
    })
}

/// Difference intervals for every unordered pair of subpopulations.
pub fn pairwise_diff_cis(powers: &[SubpopPower], level: f64) -> Result<Vec<DiffCi>, PowerError> {
    let mut out = Vec::new();
    for (i, a) in powers.iter().enumerate() {
        for b in &powers[i + 1..] {
            let mut d = power_diff_ci(a.power, a.n_pairs, b.power, b.n_pairs, level)?;
            d.subpop_i = a.name.clone();
            d.subpop_j = b.name.clone();
            out.push(d);
        }
    }
    Ok(out)
}

/// One (statistic, α) cell of a power comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub statistic: Statistic,
    pub alpha: f64,
    pub threshold_log: f64,
    pub threshold: f64,
    pub realized_fpr: f64,
    pub power: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_subpop: Vec<SubpopPower>,
    pub warnings: Vec<PowerWarning>,
}

/// Builds the report for one statistic and α from paired null and
/// alternative samples.
pub fn power_report(
    statistic: Statistic,
    alpha: f64,
    null: &SortedSample,
    alt: &SampleMatrix,
    subpop_names: &[String],
) -> Result<PowerReport, PowerError> {
    let values = alt
        .values(statistic)
        .ok_or_else(|| PowerError::MissingStatistic(statistic.to_string()))?;
    let t = null.threshold(alpha)?;
    let est = power(values, t.log_value)?;
    let per_subpop = all_subpop_powers(alt, statistic, t.log_value, subpop_names)?;
    Ok(PowerReport {
        statistic,
        alpha,
        threshold_log: t.log_value,
        threshold: t.linear_value(),
        realized_fpr: t.realized_fpr,
        power: est.power,
        successes: est.successes,
        trials: est.trials,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        per_subpop,
        warnings: t.warning.into_iter().collect(),
    })
}

/// `Σ_k (n_k / B) · power_k`, which equals the overall power.
pub fn recombined_power(per_subpop: &[SubpopPower]) -> f64 {
    let total: u64 = per_subpop.iter().map(|s| s.n_pairs).sum();
    let hits: f64 = per_subpop.iter().map(|s| s.power * s.n_pairs as f64).sum();
    hits / total as f64
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Default power-curve grid: 30 log-spaced rates from 1e-6 to 4e-5.
pub fn default_curve_grid() -> Vec<f64> {
    log_grid(1e-6, 4e-5, 30)
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Row of the `statistic,alpha,threshold,power,ci_low,ci_high` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub statistic: Statistic,
    pub alpha: f64,
    /// Likelihood-ratio scale.
    pub threshold: f64,
    pub power: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold_log: f64,
    pub successes: u64,
    pub trials: u64,
}

impl From<&PowerReport> for ReportRow {
    fn from(r: &PowerReport) -> Self {
        ReportRow {
            statistic: r.statistic,
            alpha: r.alpha,
            threshold: r.threshold,
            power: r.power,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            threshold_log: r.threshold_log,
            successes: r.successes,
            trials: r.trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub statistic: Statistic,
    pub alpha: f64,
    pub power: f64,
}

pub fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(reader: R, source_name: &str) -> Result<Vec<T>, DataError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|r| r.map_err(|e| malformed(source_name, e)))
        .collect()
}

pub fn curve_rows(curves: &[PowerCurve]) -> Vec<CurveRow> {
    curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| CurveRow {
                statistic: c.statistic,
                alpha: p.alpha,
                power: p.power,
            })
        })
        .collect()
}
