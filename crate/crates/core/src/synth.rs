//! Synthetic structured-population frequency tables.
//!
//! Each locus has a base distribution drawn from a flat Dirichlet. Each
//! subpopulation's distribution at that locus is
//! `(1 - d) * base + d * g_k` where `g_k` is an independent flat Dirichlet
//! draw and `d` is the divergence in `[0, 1]`. At `d = 0` every subpopulation
//! equals the base; the expected total-variation distance between two
//! subpopulations grows linearly with `d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::DataError;
use crate::freqs::{FrequencyTable, Subpopulation, TableMeta, DEFAULT_FLOOR};
use crate::profile::Allele;

/// First repeat-count label used for synthetic alleles.
const FIRST_LABEL: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub panel: Vec<String>,
    pub subpops: Vec<Subpopulation>,
    /// Alleles per locus; one entry applies to every locus.
    pub allele_counts: Vec<usize>,
    pub divergence: f64,
    pub seed: u64,
    pub floor: f64,
}

impl SynthSpec {
    /// `num_loci` loci named `L1..Ln` with `alleles` alleles each and `k`
    /// equally weighted subpopulations.
    pub fn uniform(num_loci: usize, alleles: usize, k: usize, divergence: f64, seed: u64) -> Self {
        SynthSpec {
            panel: (1..=num_loci).map(|i| format!("L{i}")).collect(),
            subpops: (1..=k)
                .map(|i| Subpopulation {
                    name: format!("S{i}"),
                    proportion: 1.0 / k as f64,
                    sample_size: Some(200),
                })
                .collect(),
            allele_counts: vec![alleles],
            divergence,
            seed,
            floor: DEFAULT_FLOOR,
        }
    }

    /// Reuses the panel and subpopulations of an existing metadata file.
    pub fn from_meta(meta: &TableMeta, allele_counts: Vec<usize>, divergence: f64, seed: u64) -> Self {
        SynthSpec {
            panel: meta.panel.clone(),
            subpops: meta.subpops.clone(),
            allele_counts,
            divergence,
            seed,
            floor: meta.floor,
        }
    }

    fn alleles_at(&self, locus: usize) -> Result<usize, DataError> {
        let n = match self.allele_counts.as_slice() {
            [] => return Err(DataError::Metadata("no allele counts given".into())),
            [n] => *n,
            many if many.len() == self.panel.len() => many[locus],
            many => {
                return Err(DataError::Metadata(format!(
                    "{} allele counts for {} loci",
                    many.len(),
                    self.panel.len()
                )))
            }
        };
        if n < 2 {
            return Err(DataError::Metadata(format!(
                "locus {:?} needs at least 2 alleles, got {n}",
                self.panel[locus]
            )));
        }
        Ok(n)
    }
}

fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = g.iter().sum();
    for x in &mut g {
        *x /= total;
    }
    g
}

/// Generates a table according to `spec`.
pub fn synth_table(spec: &SynthSpec) -> Result<FrequencyTable, DataError> {
    if !(0.0..=1.0).contains(&spec.divergence) {
        return Err(DataError::Metadata(format!(
            "divergence {} must lie in [0, 1]",
            spec.divergence
        )));
    }
    let d = spec.divergence;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.subpops.len();
    let mut alleles = Vec::with_capacity(spec.panel.len());
    let mut raw = vec![Vec::with_capacity(spec.panel.len()); k];
    for l in 0..spec.panel.len() {
        let n = spec.alleles_at(l)?;
        alleles.push(
            (FIRST_LABEL..FIRST_LABEL + n)
                .map(|i| Allele::new(i.to_string()).expect("non-empty label"))
                .collect(),
        );
        let base = flat_dirichlet(n, &mut rng);
        for per_subpop in raw.iter_mut() {
            let g = flat_dirichlet(n, &mut rng);
            per_subpop.push(base.iter().zip(&g).map(|(b, g)| (1.0 - d) * b + d * g).collect());
        }
    }
    FrequencyTable::from_parts(spec.panel.clone(), spec.subpops.clone(), alleles, raw, spec.floor)
}

/// Mean pairwise total-variation distance between subpopulations, averaged
/// over loci.
pub fn mean_pairwise_tv(table: &FrequencyTable) -> f64 {
    let k = table.num_subpops();
    let mut total = 0.0;
    let mut count = 0usize;
    for l in 0..table.num_loci() {
        for i in 0..k {
            for j in i + 1..k {
                let (a, b) = (table.distribution(i, l), table.distribution(j, l));
                total += 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}
