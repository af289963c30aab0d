//! Likelihood-ratio statistics for a profile pair in a structured population.
//!
//! Every statistic is kept on the natural-log scale. Per-subpopulation
//! log-likelihoods are computed once and the seven combinations are derived
//! from them:
//!
//! | statistic | log value |
//! |-----------|-----------|
//! | LAF  | `l1(local) - l0(local)` |
//! | AVG  | `log Σ p_k exp(l1_k - l0_k)` |
//! | MAX  | `max_k (l1_k - l0_k)` |
//! | MIN  | `min_k (l1_k - l0_k)` |
//! | RMAX | `max_k l1_k - max_k l0_k` |
//! | RMIN | `min_k l1_k - min_k l0_k` |
//! | CB   | `l1(pooled) - l0(pooled)` |
//!
//! A pair that is impossible under θ1 has `l1 = -inf`, which propagates as a
//! log-LR of `-inf`; an impossible θ0 with possible θ1 gives `+inf`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::freqs::{FrequencyTable, PoolWeights};
use crate::pairprob::{PairComponents, ThetaIbd};
use crate::profile::{Genotype, Profile};

/// Loci multiplied in linear space before taking a log. Single-locus
/// probabilities are at least ~1e-20 with the default floor, so a block of
/// four cannot underflow.
const LOG_BLOCK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "LAF")]
    Laf,
    #[serde(rename = "AVG")]
    Avg,
    #[serde(rename = "MAX")]
    Max,
    #[serde(rename = "MIN")]
    Min,
    #[serde(rename = "RMAX")]
    Rmax,
    #[serde(rename = "RMIN")]
    Rmin,
    #[serde(rename = "CB")]
    Cb,
}

impl Statistic {
    pub const ALL: [Statistic; 7] = [
        Statistic::Laf,
        Statistic::Avg,
        Statistic::Max,
        Statistic::Min,
        Statistic::Rmax,
        Statistic::Rmin,
        Statistic::Cb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Laf => "LAF",
            Statistic::Avg => "AVG",
            Statistic::Max => "MAX",
            Statistic::Min => "MIN",
            Statistic::Rmax => "RMAX",
            Statistic::Rmin => "RMIN",
            Statistic::Cb => "CB",
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let upper = upper.strip_prefix("LR").unwrap_or(&upper);
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == upper)
            .ok_or_else(|| DataError::Metadata(format!("unknown statistic {s:?}")))
    }
}

/// `l1 - l0` with explicit handling of impossible events.
#[inline]
pub fn log_ratio(l1: f64, l0: f64) -> f64 {
    if l0 == f64::NEG_INFINITY {
        if l1 == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        l1 - l0
    }
}

/// `log Σ w_k exp(x_k)` for non-negative weights; zero-weight terms are
/// ignored.
pub fn weighted_log_sum_exp(log_values: &[f64], weights: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (&x, &w) in log_values.iter().zip(weights) {
        if w > 0.0 && x > max {
            max = x;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = log_values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| w * (x - max).exp())
        .sum();
    max + sum.ln()
}

/// Per-subpopulation log-likelihoods and all derived statistics for one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrBreakdown {
    pub subpop_h0: Vec<f64>,
    pub subpop_h1: Vec<f64>,
    pub local_h0: f64,
    pub local_h1: f64,
    pub pooled_h0: f64,
    pub pooled_h1: f64,
    values: [f64; 7],
}

impl LrBreakdown {
    /// Derives every statistic from stored log-likelihoods.
    pub fn from_logliks(
        subpop_h0: Vec<f64>,
        subpop_h1: Vec<f64>,
        local: (f64, f64),
        pooled: (f64, f64),
        proportions: &[f64],
    ) -> Self {
        let per_subpop: Vec<f64> = subpop_h1
            .iter()
            .zip(&subpop_h0)
            .map(|(&l1, &l0)| log_ratio(l1, l0))
            .collect();
        let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_of = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);

        let mut values = [0.0; 7];
        values[Statistic::Laf.index()] = log_ratio(local.1, local.0);
        values[Statistic::Avg.index()] = weighted_log_sum_exp(&per_subpop, proportions);
        values[Statistic::Max.index()] = max_of(&per_subpop);
        values[Statistic::Min.index()] = min_of(&per_subpop);
        values[Statistic::Rmax.index()] = log_ratio(max_of(&subpop_h1), max_of(&subpop_h0));
        values[Statistic::Rmin.index()] = log_ratio(min_of(&subpop_h1), min_of(&subpop_h0));
        values[Statistic::Cb.index()] = log_ratio(pooled.1, pooled.0);
        LrBreakdown {
            subpop_h0,
            subpop_h1,
            local_h0: local.0,
            local_h1: local.1,
            pooled_h0: pooled.0,
            pooled_h1: pooled.1,
            values,
        }
    }

    /// Log-scale value of a statistic.
    #[inline]
    pub fn log_value(&self, stat: Statistic) -> f64 {
        self.values[stat.index()]
    }

    pub fn log_values(&self) -> &[f64; 7] {
        &self.values
    }

    /// Log-LR computed with subpopulation `k`'s frequencies alone.
    pub fn subpop_log_lr(&self, k: usize) -> f64 {
        log_ratio(self.subpop_h1[k], self.subpop_h0[k])
    }
}

/// Frequency sets needed to evaluate every statistic: the K subpopulations,
/// the local average and the pooled set.
#[derive(Debug, Clone)]
pub struct LrModel {
    /// `sets[s][locus]`: subpops `0..K`, then local, then pooled.
    sets: Vec<Vec<Vec<f64>>>,
    proportions: Vec<f64>,
    panel: Vec<String>,
    pool_weights: PoolWeights,
}

impl LrModel {
    pub fn new(table: &FrequencyTable, pool_weights: PoolWeights) -> Result<Self, DataError> {
        let pooled = table.pooled_frequencies(pool_weights)?;
        let local = table.local_average();
        let k = table.num_subpops();
        let loci = table.num_loci();
        let collect = |t: &FrequencyTable, s: usize| -> Vec<Vec<f64>> {
            (0..loci).map(|l| t.distribution(s, l).to_vec()).collect()
        };
        let mut sets: Vec<Vec<Vec<f64>>> = (0..k).map(|s| collect(table, s)).collect();
        sets.push(collect(&local, 0));
        sets.push(collect(&pooled, 0));
        Ok(LrModel {
            sets,
            proportions: table.proportions(),
            panel: table.panel().to_vec(),
            pool_weights,
        })
    }

    pub fn num_subpops(&self) -> usize {
        self.proportions.len()
    }

    pub fn num_loci(&self) -> usize {
        self.panel.len()
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn pool_weights(&self) -> PoolWeights {
        self.pool_weights
    }

    fn check(&self, x1: &[Genotype], x2: &[Genotype]) -> Result<(), DataError> {
        if x1.len() != self.panel.len() || x2.len() != self.panel.len() {
            return Err(DataError::PanelMismatch(format!(
                "profiles cover {} and {} loci, panel has {}",
                x1.len(),
                x2.len(),
                self.panel.len()
            )));
        }
        Ok(())
    }

    /// Log-likelihoods under (θ0, θ1) for frequency set `set`.
    #[inline]
    fn set_logliks(&self, set: usize, x1: &[Genotype], x2: &[Genotype], t0: &ThetaIbd, t1: &ThetaIbd) -> (f64, f64) {
        let dists = &self.sets[set];
        let (mut l0, mut l1) = (0.0, 0.0);
        for ((d, a), b) in dists.chunks(LOG_BLOCK).zip(x1.chunks(LOG_BLOCK)).zip(x2.chunks(LOG_BLOCK)) {
            let (mut p0, mut p1) = (1.0, 1.0);
            for ((p, &g1), &g2) in d.iter().zip(a).zip(b) {
                let c = PairComponents::new(g1, g2, p);
                p0 *= c.probability(t0);
                p1 *= c.probability(t1);
            }
            l0 += p0.ln();
            l1 += p1.ln();
        }
        (l0, l1)
    }

    /// Log-likelihood of coded profiles under `theta` with subpopulation
    /// `k`'s frequencies.
    pub fn loglik_subpop(&self, x1: &[Genotype], x2: &[Genotype], theta: &ThetaIbd, k: usize) -> Result<f64, DataError> {
        self.check(x1, x2)?;
        Ok(self.set_logliks(k, x1, x2, theta, theta).0)
    }

    /// All statistics for coded profiles.
    pub fn lr_all_coded(
        &self,
        x1: &[Genotype],
        x2: &[Genotype],
        theta0: &ThetaIbd,
        theta1: &ThetaIbd,
    ) -> Result<LrBreakdown, DataError> {
        self.check(x1, x2)?;
        Ok(self.breakdown_unchecked(x1, x2, theta0, theta1))
    }

    #[inline]
    pub(crate) fn breakdown_unchecked(
        &self,
        x1: &[Genotype],
        x2: &[Genotype],
        theta0: &ThetaIbd,
        theta1: &ThetaIbd,
    ) -> LrBreakdown {
        let k = self.num_subpops();
        let mut h0 = Vec::with_capacity(k);
        let mut h1 = Vec::with_capacity(k);
        for s in 0..k {
            let (l0, l1) = self.set_logliks(s, x1, x2, theta0, theta1);
            h0.push(l0);
            h1.push(l1);
        }
        let local = self.set_logliks(k, x1, x2, theta0, theta1);
        let pooled = self.set_logliks(k + 1, x1, x2, theta0, theta1);
        LrBreakdown::from_logliks(h0, h1, local, pooled, &self.proportions)
    }
}

/// Log-likelihood Σ_loci log P(g1, g2 | θ, f) using subpopulation `subpop`
/// of `table`.
pub fn loglik(
    x1: &Profile,
    x2: &Profile,
    theta: &ThetaIbd,
    table: &FrequencyTable,
    subpop: usize,
) -> Result<f64, DataError> {
    let c1 = table.encode(x1)?;
    let c2 = table.encode(x2)?;
    Ok(c1
        .iter()
        .zip(&c2)
        .enumerate()
        .map(|(l, (&g1, &g2))| PairComponents::new(g1, g2, table.distribution(subpop, l)).probability(theta).ln())
        .sum())
}

/// Every statistic for a labelled profile pair.
pub fn lr_all(
    x1: &Profile,
    x2: &Profile,
    theta0: &ThetaIbd,
    theta1: &ThetaIbd,
    table: &FrequencyTable,
    pool_weights: PoolWeights,
) -> Result<LrBreakdown, DataError> {
    let model = LrModel::new(table, pool_weights)?;
    let c1 = table.encode(x1)?;
    let c2 = table.encode(x2)?;
    model.lr_all_coded(&c1, &c2, theta0, theta1)
}
