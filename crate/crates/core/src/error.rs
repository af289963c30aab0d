use std::io;

/// Errors raised while ingesting or validating frequency tables and profiles.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("{source_name}: line {line}: malformed row: {reason}")]
    MalformedRow {
        source_name: String,
        line: u64,
        reason: String,
    },

    #[error("{source_name}: line {line}: duplicate allele {allele:?} for subpopulation {subpop:?} at locus {locus:?}")]
    DuplicateAllele {
        source_name: String,
        line: u64,
        subpop: String,
        locus: String,
        allele: String,
    },

    #[error("subpopulation {subpop:?} has no frequencies for locus {locus:?}")]
    MissingLocusForSubpop { subpop: String, locus: String },

    #[error("subpopulation proportions sum to {sum}, outside tolerance 1e-4 of 1")]
    ProportionSumOutOfTolerance { sum: f64 },

    #[error("{source_name}: line {line}: frequency {value} is negative or not finite")]
    NonPositiveFrequency {
        source_name: String,
        line: u64,
        value: f64,
    },

    #[error("frequencies for subpopulation {subpop:?} at locus {locus:?} have zero total mass")]
    EmptyDistribution { subpop: String, locus: String },

    #[error("{source_name}: line {line}: unknown subpopulation {subpop:?}")]
    UnknownSubpop {
        source_name: String,
        line: u64,
        subpop: String,
    },

    #[error("{source_name}: line {line}: locus {locus:?} is not in the panel")]
    UnknownLocus {
        source_name: String,
        line: u64,
        locus: String,
    },

    #[error("UnknownAllele: allele {allele:?} at locus {locus:?} is absent from the frequency table")]
    UnknownAllele { locus: String, allele: String },

    #[error("PanelMismatch: {0}")]
    PanelMismatch(String),

    #[error("MissingSampleSizes: pooling by sample size needs a sample size for every subpopulation")]
    MissingSampleSizes,

    #[error("invalid metadata: {0}")]
    Metadata(String),

    #[error("invalid IBD coefficients ({z0}, {z1}, {z2}): need non-negative values summing to 1")]
    InvalidTheta { z0: f64, z1: f64, z2: f64 },
}

impl From<csv::Error> for DataError {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(err) => DataError::Io(err),
            kind => DataError::MalformedRow {
                source_name: String::from("<csv>"),
                line,
                reason: format!("{kind:?}"),
            },
        }
    }
}

/// Errors raised by threshold and power estimation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerError {
    #[error("sample is empty")]
    EmptySample,

    #[error("false positive rate {0} must lie in (0, 1]")]
    InvalidAlpha(f64),

    #[error("confidence level {0} must lie in (0, 1]")]
    InvalidLevel(f64),

    #[error("alpha * B = {product} < 1: the null sample cannot resolve this false positive rate")]
    AlphaBelowResolution { product: f64 },

    #[error("EmptySubpopSample: no replicates tagged with subpopulation {0}")]
    EmptySubpopSample(usize),

    #[error("statistic {0} was not simulated")]
    MissingStatistic(String),

    #[error("subpopulation index {index} out of range for {count} subpopulations")]
    SubpopOutOfRange { index: usize, count: usize },
}

/// Errors raised when a simulation configuration is invalid.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("replicate count must be at least 1")]
    NoReplicates,

    #[error("at least one statistic must be requested")]
    NoStatistics,

    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Power(#[from] PowerError),
}
