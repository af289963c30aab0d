//! Allele frequency tables for structured populations.
//!
//! A [`FrequencyTable`] holds one allele distribution per (subpopulation,
//! locus) together with the subpopulation mixing proportions. All
//! subpopulations share a per-locus allele list (the union of every allele
//! seen at that locus); an allele missing from one subpopulation gets
//! frequency zero, which the floor then lifts to a small positive value so
//! that every likelihood stays finite.
//!
//! On disk a table is two files: a CSV with header `subpop,locus,allele,freq`
//! and a TOML metadata file naming the panel, subpopulations, proportions,
//! optional sample sizes and the floor (see [`TableMeta`]).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::profile::{malformed, Allele, Genotype, LocusGenotype, Profile};

pub const DEFAULT_FLOOR: f64 = 1e-5;
pub const PROPORTION_TOLERANCE: f64 = 1e-4;

/// A subpopulation and its share of the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpopulation {
    pub name: String,
    pub proportion: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

/// Contents of the metadata file accompanying a frequency CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Frequency CSV path, relative to the metadata file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freqs: Option<PathBuf>,
    #[serde(default = "default_floor")]
    pub floor: f64,
    pub panel: Vec<String>,
    #[serde(rename = "subpop")]
    pub subpops: Vec<Subpopulation>,
}

impl TableMeta {
    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        toml::from_str(text).map_err(|e| DataError::Metadata(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            DataError::Metadata(msg) => DataError::Metadata(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("metadata is always representable as TOML")
    }
}

/// How the single frequency set behind the CB statistic is pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolWeights {
    /// Census proportions; identical to the local average.
    Census,
    /// Per-subpopulation sample sizes from the metadata.
    SampleSizes,
    Equal,
}

impl PoolWeights {
    /// Sample sizes when every subpopulation has one, otherwise equal weights.
    pub fn default_for(table: &FrequencyTable) -> Self {
        if table.subpops.iter().all(|s| s.sample_size.is_some()) {
            PoolWeights::SampleSizes
        } else {
            PoolWeights::Equal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PoolWeights::Census => "census",
            PoolWeights::SampleSizes => "samples",
            PoolWeights::Equal => "equal",
        }
    }
}

/// Allele distribution at a single locus.
#[derive(Debug, Clone, PartialEq)]
pub struct AlleleDist {
    alleles: Vec<Allele>,
    probs: Vec<f64>,
}

impl AlleleDist {
    /// Builds a distribution from (allele, frequency) pairs. Frequencies must
    /// be finite and non-negative; they are not renormalized.
    pub fn new(entries: Vec<(Allele, f64)>) -> Result<Self, DataError> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DataError::Metadata(format!("allele {} listed twice", w[0].0)));
            }
        }
        if let Some((a, p)) = entries.iter().find(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(DataError::Metadata(format!("allele {a} has invalid frequency {p}")));
        }
        let (alleles, probs) = entries.into_iter().unzip();
        Ok(AlleleDist { alleles, probs })
    }

    /// Shorthand for tests and examples: `[("13", 0.15), ...]`.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self, DataError> {
        let entries = pairs
            .iter()
            .map(|(a, p)| Ok((Allele::new(*a)?, *p)))
            .collect::<Result<Vec<_>, DataError>>()?;
        Self::new(entries)
    }

    pub fn alleles(&self) -> &[Allele] {
        &self.alleles
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, allele: &Allele) -> Option<u16> {
        self.alleles.binary_search(allele).ok().map(|i| i as u16)
    }

    pub fn encode(&self, g: &LocusGenotype) -> Result<Genotype, DataError> {
        let (a, b) = g.alleles();
        let idx = |x: &Allele| {
            self.index_of(x).ok_or_else(|| DataError::UnknownAllele {
                locus: g.locus().to_string(),
                allele: x.to_string(),
            })
        };
        Ok(Genotype::new(idx(a)?, idx(b)?))
    }

    pub fn decode(&self, locus: &str, g: Genotype) -> LocusGenotype {
        LocusGenotype::new(
            locus,
            self.alleles[g.a as usize].clone(),
            self.alleles[g.b as usize].clone(),
        )
    }
}

/// Validated per-subpopulation allele frequencies over a locus panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    panel: Vec<String>,
    subpops: Vec<Subpopulation>,
    /// Per locus, the sorted union of alleles over subpopulations.
    alleles: Vec<Vec<Allele>>,
    /// `freqs[subpop][locus][allele]`.
    freqs: Vec<Vec<Vec<f64>>>,
    floor: f64,
}

impl FrequencyTable {
    /// Builds a table from raw frequencies, applying the floor and
    /// renormalizing each distribution, and renormalizing proportions.
    ///
    /// `raw[k][l]` must have the same length as `alleles[l]`.
    pub fn from_parts(
        panel: Vec<String>,
        subpops: Vec<Subpopulation>,
        alleles: Vec<Vec<Allele>>,
        raw: Vec<Vec<Vec<f64>>>,
        floor: f64,
    ) -> Result<Self, DataError> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(DataError::Metadata(format!("floor {floor} must lie in (0, 1)")));
        }
        if panel.is_empty() {
            return Err(DataError::Metadata("panel is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = panel.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(DataError::Metadata(format!("locus {dup:?} repeated in panel")));
        }
        if subpops.is_empty() {
            return Err(DataError::Metadata("no subpopulations declared".into()));
        }
        let subpops = normalize_proportions(subpops)?;
        if alleles.len() != panel.len() || raw.len() != subpops.len() {
            return Err(DataError::Metadata("frequency array shape does not match panel".into()));
        }
        let mut freqs = Vec::with_capacity(raw.len());
        for (sp, per_locus) in subpops.iter().zip(raw) {
            if per_locus.len() != panel.len() {
                return Err(DataError::Metadata("frequency array shape does not match panel".into()));
            }
            let mut rows = Vec::with_capacity(panel.len());
            for ((locus, labels), dist) in panel.iter().zip(&alleles).zip(per_locus) {
                if dist.len() != labels.len() || labels.is_empty() {
                    return Err(DataError::Metadata(format!(
                        "locus {locus:?}: {} frequencies for {} alleles",
                        dist.len(),
                        labels.len()
                    )));
                }
                rows.push(apply_floor(dist, floor).ok_or_else(|| DataError::EmptyDistribution {
                    subpop: sp.name.clone(),
                    locus: locus.clone(),
                })?);
            }
            freqs.push(rows);
        }
        Ok(FrequencyTable {
            panel,
            subpops,
            alleles,
            freqs,
            floor,
        })
    }

    /// Reads the frequency CSV described by `meta`.
    pub fn load<R: Read>(reader: R, source_name: &str, meta: &TableMeta) -> Result<Self, DataError> {
        let subpop_index: HashMap<&str, usize> = meta
            .subpops
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        if subpop_index.len() != meta.subpops.len() {
            return Err(DataError::Metadata("subpopulation names must be distinct".into()));
        }
        let locus_index: HashMap<&str, usize> =
            meta.panel.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| malformed(source_name, e))?.clone();
        let expected = ["subpop", "locus", "allele", "freq"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(DataError::MalformedRow {
                source_name: source_name.into(),
                line: 1,
                reason: format!("expected header `subpop,locus,allele,freq`, found {headers:?}"),
            });
        }

        // entries[k][l]: allele -> freq
        let mut entries: Vec<Vec<BTreeMap<Allele, f64>>> =
            vec![vec![BTreeMap::new(); meta.panel.len()]; meta.subpops.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| malformed(source_name, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| DataError::MalformedRow {
                source_name: source_name.into(),
                line,
                reason,
            };
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", rec.len())));
            }
            let k = *subpop_index.get(&rec[0]).ok_or_else(|| DataError::UnknownSubpop {
                source_name: source_name.into(),
                line,
                subpop: rec[0].to_string(),
            })?;
            let l = *locus_index.get(&rec[1]).ok_or_else(|| DataError::UnknownLocus {
                source_name: source_name.into(),
                line,
                locus: rec[1].to_string(),
            })?;
            let allele = Allele::new(&rec[2]).map_err(|_| bad("empty allele label".into()))?;
            let value: f64 = rec[3]
                .parse()
                .map_err(|_| bad(format!("frequency {:?} is not a number", &rec[3])))?;
            if !value.is_finite() || value < 0.0 {
                return Err(DataError::NonPositiveFrequency {
                    source_name: source_name.into(),
                    line,
                    value,
                });
            }
            if entries[k][l].insert(allele.clone(), value).is_some() {
                return Err(DataError::DuplicateAllele {
                    source_name: source_name.into(),
                    line,
                    subpop: rec[0].to_string(),
                    locus: rec[1].to_string(),
                    allele: allele.to_string(),
                });
            }
        }

        for (k, sp) in meta.subpops.iter().enumerate() {
            for (l, locus) in meta.panel.iter().enumerate() {
                if entries[k][l].is_empty() {
                    return Err(DataError::MissingLocusForSubpop {
                        subpop: sp.name.clone(),
                        locus: locus.clone(),
                    });
                }
            }
        }

        let alleles: Vec<Vec<Allele>> = (0..meta.panel.len())
            .map(|l| {
                let mut union: Vec<Allele> = entries
                    .iter()
                    .flat_map(|per_locus| per_locus[l].keys().cloned())
                    .collect();
                union.sort();
                union.dedup();
                union
            })
            .collect();
        let raw = entries
            .iter()
            .map(|per_locus| {
                per_locus
                    .iter()
                    .zip(&alleles)
                    .map(|(m, labels)| labels.iter().map(|a| m.get(a).copied().unwrap_or(0.0)).collect())
                    .collect()
            })
            .collect();
        Self::from_parts(meta.panel.clone(), meta.subpops.clone(), alleles, raw, meta.floor)
    }

    /// Loads a table from a metadata file, taking the CSV path from the
    /// metadata unless `freqs` is given.
    pub fn load_files(meta_path: &Path, freqs: Option<&Path>) -> Result<Self, DataError> {
        let meta = TableMeta::from_path(meta_path)?;
        let csv_path = match (freqs, &meta.freqs) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(rel)) => meta_path.parent().unwrap_or(Path::new(".")).join(rel),
            (None, None) => {
                return Err(DataError::Metadata(format!(
                    "{}: no `freqs` path in metadata and none given",
                    meta_path.display()
                )))
            }
        };
        let file = fs::File::open(&csv_path).map_err(|e| {
            DataError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", csv_path.display())))
        })?;
        Self::load(file, &csv_path.display().to_string(), &meta)
    }

    pub fn panel(&self) -> &[String] {
        &self.panel
    }

    pub fn subpops(&self) -> &[Subpopulation] {
        &self.subpops
    }

    pub fn num_subpops(&self) -> usize {
        self.subpops.len()
    }

    pub fn num_loci(&self) -> usize {
        self.panel.len()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn proportions(&self) -> Vec<f64> {
        self.subpops.iter().map(|s| s.proportion).collect()
    }

    pub fn locus_alleles(&self, locus: usize) -> &[Allele] {
        &self.alleles[locus]
    }

    pub fn locus_index(&self, locus: &str) -> Option<usize> {
        self.panel.iter().position(|l| l == locus)
    }

    pub fn subpop_index(&self, name: &str) -> Option<usize> {
        self.subpops.iter().position(|s| s.name == name)
    }

    /// Frequencies of subpopulation `subpop` at `locus`, aligned with
    /// [`Self::locus_alleles`].
    pub fn distribution(&self, subpop: usize, locus: usize) -> &[f64] {
        &self.freqs[subpop][locus]
    }

    pub fn allele_dist(&self, subpop: usize, locus: usize) -> AlleleDist {
        AlleleDist {
            alleles: self.alleles[locus].clone(),
            probs: self.freqs[subpop][locus].clone(),
        }
    }

    /// Maps a profile onto coded genotypes in panel order.
    pub fn encode(&self, profile: &Profile) -> Result<Vec<Genotype>, DataError> {
        if profile.len() != self.panel.len() {
            return Err(DataError::PanelMismatch(format!(
                "profile has {} loci, panel has {}",
                profile.len(),
                self.panel.len()
            )));
        }
        self.panel
            .iter()
            .enumerate()
            .map(|(l, locus)| {
                let g = profile.get(locus).ok_or_else(|| {
                    DataError::PanelMismatch(format!("profile lacks panel locus {locus:?}"))
                })?;
                let idx = |x: &Allele| {
                    self.alleles[l]
                        .binary_search(x)
                        .map(|i| i as u16)
                        .map_err(|_| DataError::UnknownAllele {
                            locus: locus.clone(),
                            allele: x.to_string(),
                        })
                };
                let (a, b) = g.alleles();
                Ok(Genotype::new(idx(a)?, idx(b)?))
            })
            .collect()
    }

    pub fn decode(&self, coded: &[Genotype]) -> Profile {
        let genotypes = self
            .panel
            .iter()
            .zip(&self.alleles)
            .zip(coded)
            .map(|((locus, labels), g)| {
                LocusGenotype::new(locus.as_str(), labels[g.a as usize].clone(), labels[g.b as usize].clone())
            })
            .collect();
        Profile::new(genotypes).expect("panel loci are distinct")
    }

    /// Proportion-weighted mean of the subpopulation distributions.
    pub fn local_average(&self) -> FrequencyTable {
        let weights = self.proportions();
        self.mixture("local", &weights, None)
    }

    /// Single pooled frequency set used by the CB statistic.
    pub fn pooled_frequencies(&self, weights: PoolWeights) -> Result<FrequencyTable, DataError> {
        let w: Vec<f64> = match weights {
            PoolWeights::Census => self.proportions(),
            PoolWeights::Equal => vec![1.0 / self.subpops.len() as f64; self.subpops.len()],
            PoolWeights::SampleSizes => {
                let sizes: Option<Vec<u64>> = self.subpops.iter().map(|s| s.sample_size).collect();
                let sizes = sizes.ok_or(DataError::MissingSampleSizes)?;
                let total: u64 = sizes.iter().sum();
                if total == 0 {
                    return Err(DataError::MissingSampleSizes);
                }
                sizes.iter().map(|&n| n as f64 / total as f64).collect()
            }
        };
        let total = self.subpops.iter().filter_map(|s| s.sample_size).sum::<u64>();
        let size = (weights == PoolWeights::SampleSizes).then_some(total);
        Ok(self.mixture("pooled", &w, size))
    }

    fn mixture(&self, name: &str, weights: &[f64], sample_size: Option<u64>) -> FrequencyTable {
        let freqs = (0..self.panel.len())
            .map(|l| {
                let mut acc = vec![0.0; self.alleles[l].len()];
                for (k, &w) in weights.iter().enumerate() {
                    for (a, f) in acc.iter_mut().zip(&self.freqs[k][l]) {
                        *a += w * f;
                    }
                }
                acc
            })
            .collect();
        FrequencyTable {
            panel: self.panel.clone(),
            subpops: vec![Subpopulation {
                name: name.to_string(),
                proportion: 1.0,
                sample_size,
            }],
            alleles: self.alleles.clone(),
            freqs: vec![freqs],
            floor: self.floor,
        }
    }

    pub fn meta(&self) -> TableMeta {
        TableMeta {
            name: None,
            freqs: None,
            floor: self.floor,
            panel: self.panel.clone(),
            subpops: self.subpops.clone(),
        }
    }

    /// Writes the normalized frequencies as `subpop,locus,allele,freq` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["subpop", "locus", "allele", "freq"])?;
        for (sp, per_locus) in self.subpops.iter().zip(&self.freqs) {
            for ((locus, labels), dist) in self.panel.iter().zip(&self.alleles).zip(per_locus) {
                for (a, f) in labels.iter().zip(dist) {
                    wtr.write_record([sp.name.as_str(), locus, a.as_str(), &f.to_string()])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn normalize_proportions(mut subpops: Vec<Subpopulation>) -> Result<Vec<Subpopulation>, DataError> {
    if let Some(s) = subpops
        .iter()
        .find(|s| !s.proportion.is_finite() || s.proportion < 0.0 || s.proportion > 1.0)
    {
        return Err(DataError::Metadata(format!(
            "proportion {} for subpopulation {:?} outside [0, 1]",
            s.proportion, s.name
        )));
    }
    let sum: f64 = subpops.iter().map(|s| s.proportion).sum();
    if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
        return Err(DataError::ProportionSumOutOfTolerance { sum });
    }
    for s in &mut subpops {
        s.proportion /= sum;
    }
    Ok(subpops)
}

/// Raises entries below `floor` to `floor`, then divides by the total.
/// Returns `None` when the raw distribution has no mass.
fn apply_floor(mut dist: Vec<f64>, floor: f64) -> Option<Vec<f64>> {
    if dist.iter().sum::<f64>() <= 0.0 {
        return None;
    }
    for f in dist.iter_mut() {
        if *f < floor {
            *f = floor;
        }
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > f64::EPSILON {
        for f in dist.iter_mut() {
            *f /= total;
        }
    }
    Some(dist)
}
