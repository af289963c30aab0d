//! Monte Carlo generation of null and alternative log-LR samples.
//!
//! Null replicates draw two unrelated individuals, each with a subpopulation
//! sampled from the census proportions. Alternative replicates draw one
//! subpopulation shared by both relatives, the first profile from it under
//! HWE, and the second by IBD transmission under θ1, locus by locus.
//!
//! Replicate `i` uses its own random stream keyed by `(seed, phase, i)`, so
//! a [`SampleMatrix`] is bit-identical for any worker count.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{DataError, SimError};
use crate::freqs::{FrequencyTable, PoolWeights};
use crate::lrstats::{LrModel, Statistic};
use crate::pairprob::{LocusSampler, ThetaIbd};
use crate::profile::{malformed, Genotype};
use crate::rng::{Phase, StreamFactory};

pub const PAPER_REPLICATES: usize = 1_000_000;
pub const DESK_REPLICATES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub theta0: ThetaIbd,
    pub theta1: ThetaIbd,
    pub replicates: usize,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Force both null individuals into the same subpopulation.
    pub null_same_subpop: bool,
}

impl SimConfig {
    pub fn new(theta0: ThetaIbd, theta1: ThetaIbd) -> Self {
        SimConfig {
            theta0,
            theta1,
            replicates: DESK_REPLICATES,
            seed: 0,
            statistics: Statistic::ALL.to_vec(),
            workers: None,
            null_same_subpop: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.replicates == 0 {
            return Err(SimError::NoReplicates);
        }
        if self.statistics.is_empty() {
            return Err(SimError::NoStatistics);
        }
        Ok(())
    }
}

/// One simulated profile pair in coded form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawnPair {
    /// Subpopulation of the first individual.
    pub tag: u32,
    /// Subpopulation of the second individual.
    pub second_tag: u32,
    pub first: Vec<Genotype>,
    pub second: Vec<Genotype>,
}

/// Per-statistic log-LR arrays plus subpopulation tags, one entry per
/// replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    statistics: Vec<Statistic>,
    values: Vec<Vec<f64>>,
    tags: Vec<u32>,
    num_subpops: usize,
}

impl SampleMatrix {
    pub fn new(
        statistics: Vec<Statistic>,
        values: Vec<Vec<f64>>,
        tags: Vec<u32>,
        num_subpops: usize,
    ) -> Result<Self, DataError> {
        if statistics.len() != values.len() || values.iter().any(|v| v.len() != tags.len()) {
            return Err(DataError::Metadata("sample columns have unequal lengths".into()));
        }
        if tags.iter().any(|&t| t as usize >= num_subpops) {
            return Err(DataError::Metadata("subpopulation tag out of range".into()));
        }
        Ok(SampleMatrix {
            statistics,
            values,
            tags,
            num_subpops,
        })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn statistics(&self) -> &[Statistic] {
        &self.statistics
    }

    pub fn values(&self, stat: Statistic) -> Option<&[f64]> {
        self.statistics
            .iter()
            .position(|&s| s == stat)
            .map(|i| self.values[i].as_slice())
    }

    pub fn tags(&self) -> &[u32] {
        &self.tags
    }

    pub fn num_subpops(&self) -> usize {
        self.num_subpops
    }

    /// Writes `replicate,subpop_tag,<stat>...` rows (log scale).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["replicate".to_string(), "subpop_tag".to_string()];
        header.extend(self.statistics.iter().map(|s| s.name().to_string()));
        wtr.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for (i, tag) in self.tags.iter().enumerate() {
            row.clear();
            row.push(i.to_string());
            row.push(tag.to_string());
            row.extend(self.values.iter().map(|col| col[i].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, num_subpops: usize) -> Result<Self, DataError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| malformed("<samples>", e))?.clone();
        if headers.len() < 3 || &headers[0] != "replicate" || &headers[1] != "subpop_tag" {
            return Err(DataError::MalformedRow {
                source_name: "<samples>".into(),
                line: 1,
                reason: "expected `replicate,subpop_tag,<statistics>`".into(),
            });
        }
        let statistics = headers
            .iter()
            .skip(2)
            .map(str::parse)
            .collect::<Result<Vec<Statistic>, _>>()?;
        let mut values = vec![Vec::new(); statistics.len()];
        let mut tags = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| malformed("<samples>", e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = || DataError::MalformedRow {
                source_name: "<samples>".into(),
                line,
                reason: "unparsable field".into(),
            };
            tags.push(rec[1].parse().map_err(|_| bad())?);
            for (col, field) in values.iter_mut().zip(rec.iter().skip(2)) {
                col.push(field.parse().map_err(|_| bad())?);
            }
        }
        SampleMatrix::new(statistics, values, tags, num_subpops)
    }
}

/// Samplers and likelihood model for one frequency table.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: LrModel,
    /// `samplers[subpop][locus]`
    samplers: Vec<Vec<LocusSampler>>,
    subpop_draw: WeightedIndex<f64>,
}

impl Simulator {
    pub fn new(table: &FrequencyTable, pool_weights: PoolWeights) -> Result<Self, DataError> {
        let model = LrModel::new(table, pool_weights)?;
        let samplers = (0..table.num_subpops())
            .map(|k| {
                (0..table.num_loci())
                    .map(|l| LocusSampler::new(table.distribution(k, l)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let subpop_draw = WeightedIndex::new(table.proportions())
            .map_err(|e| DataError::Metadata(format!("invalid subpopulation proportions: {e}")))?;
        Ok(Simulator {
            model,
            samplers,
            subpop_draw,
        })
    }

    pub fn model(&self) -> &LrModel {
        &self.model
    }

    fn draw_profile<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<Genotype> {
        self.samplers[k].iter().map(|s| s.genotype(rng)).collect()
    }

    /// Null replicate `index`: two unrelated individuals.
    pub fn null_pair(&self, cfg: &SimConfig, streams: &StreamFactory, index: u64) -> DrawnPair {
        let mut rng = streams.stream(index);
        let k1 = self.subpop_draw.sample(&mut rng);
        let k2 = if cfg.null_same_subpop {
            k1
        } else {
            self.subpop_draw.sample(&mut rng)
        };
        let first = self.draw_profile(k1, &mut rng);
        let second = self.draw_profile(k2, &mut rng);
        DrawnPair {
            tag: k1 as u32,
            second_tag: k2 as u32,
            first,
            second,
        }
    }

    /// Alternative replicate `index`: two relatives under θ1 from one
    /// subpopulation.
    pub fn alt_pair(&self, cfg: &SimConfig, streams: &StreamFactory, index: u64) -> DrawnPair {
        let mut rng = streams.stream(index);
        let k = self.subpop_draw.sample(&mut rng);
        let first = self.draw_profile(k, &mut rng);
        let second = self.samplers[k]
            .iter()
            .zip(&first)
            .map(|(s, &g1)| s.related(g1, &cfg.theta1, &mut rng))
            .collect();
        DrawnPair {
            tag: k as u32,
            second_tag: k as u32,
            first,
            second,
        }
    }

    pub fn simulate_null(&self, cfg: &SimConfig) -> Result<SampleMatrix, SimError> {
        self.run(cfg, Phase::Null)
    }

    pub fn simulate_alt(&self, cfg: &SimConfig) -> Result<SampleMatrix, SimError> {
        self.run(cfg, Phase::Alternative)
    }

    fn run(&self, cfg: &SimConfig, phase: Phase) -> Result<SampleMatrix, SimError> {
        cfg.validate()?;
        let streams = StreamFactory::new(cfg.seed, phase);
        let stats = &cfg.statistics;
        let replicate = |i: usize| -> (u32, Vec<f64>) {
            let pair = match phase {
                Phase::Null => self.null_pair(cfg, &streams, i as u64),
                Phase::Alternative => self.alt_pair(cfg, &streams, i as u64),
            };
            let lr = self
                .model
                .breakdown_unchecked(&pair.first, &pair.second, &cfg.theta0, &cfg.theta1);
            (pair.tag, stats.iter().map(|&s| lr.log_value(s)).collect())
        };
        let rows: Vec<(u32, Vec<f64>)> = match cfg.workers {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| SimError::Pool(e.to_string()))?;
                pool.install(|| (0..cfg.replicates).into_par_iter().map(replicate).collect())
            }
            None => (0..cfg.replicates).into_par_iter().map(replicate).collect(),
        };

        let mut values = vec![Vec::with_capacity(cfg.replicates); stats.len()];
        let mut tags = Vec::with_capacity(cfg.replicates);
        for (tag, row) in rows {
            tags.push(tag);
            for (col, v) in values.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Ok(SampleMatrix {
            statistics: stats.clone(),
            values,
            tags,
            num_subpops: self.model.num_subpops(),
        })
    }
}

/// Null samples for `table` under `cfg`.
pub fn simulate_null(table: &FrequencyTable, pool_weights: PoolWeights, cfg: &SimConfig) -> Result<SampleMatrix, crate::Error> {
    Ok(Simulator::new(table, pool_weights)?.simulate_null(cfg)?)
}

/// Alternative samples for `table` under `cfg`.
pub fn simulate_alt(table: &FrequencyTable, pool_weights: PoolWeights, cfg: &SimConfig) -> Result<SampleMatrix, crate::Error> {
    Ok(Simulator::new(table, pool_weights)?.simulate_alt(cfg)?)
}
