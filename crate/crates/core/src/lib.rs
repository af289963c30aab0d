//! Kinship likelihood-ratio statistics for STR profiles drawn from a
//! population with substructure, and a Monte Carlo engine for estimating
//! the power of each statistic at a fixed false positive rate.
//!
//! The usual flow is:
//!
//! 1. load a [`FrequencyTable`] (per-subpopulation allele frequencies),
//! 2. simulate null and alternative [`SampleMatrix`] values with
//!    [`Simulator`],
//! 3. turn them into thresholds and power estimates with [`powerest`].

pub mod ci;
pub mod error;
pub mod freqs;
pub mod lrstats;
pub mod mcengine;
pub mod pairprob;
pub mod powerest;
pub mod profile;
pub mod rng;
pub mod synth;

pub use error::{DataError, Error, PowerError, SimError};
pub use freqs::{FrequencyTable, PoolWeights, Subpopulation, TableMeta};
pub use lrstats::{lr_all, loglik, LrBreakdown, LrModel, Statistic};
pub use mcengine::{simulate_alt, simulate_null, SampleMatrix, SimConfig, Simulator};
pub use pairprob::{pair_probability, GenotypeCombination, ThetaIbd};
pub use powerest::{null_threshold, power, PowerEstimate, PowerReport, SortedSample, Threshold};
pub use profile::{Allele, Genotype, LocusGenotype, Profile};
