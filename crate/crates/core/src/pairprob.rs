//! Single-locus genotype-pair probabilities under an IBD relationship.
//!
//! For two individuals related by IBD coefficients θ = (z0, z1, z2), the
//! probability of an unordered genotype pair {g1, g2} at one locus is
//!
//! ```text
//! P(g1, g2 | θ) = z0·P0 + z1·P1 + z2·P2
//! ```
//!
//! where P0 is the probability with no IBD sharing (product of HWE genotype
//! probabilities), P1 with exactly one allele IBD, and P2 with both alleles
//! IBD (`P(g1)` if the genotypes are equal, else 0). Each term counts both
//! orderings when `g1 != g2`, so summing over unordered pairs gives 1 and
//! the unrelated, parent-child and full-sibling presets reproduce the
//! classical seven-row kinship table cell by cell.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::freqs::AlleleDist;
use crate::profile::{Genotype, LocusGenotype};

const THETA_TOLERANCE: f64 = 1e-12;

/// IBD coefficients (z0, z1, z2) defining a relationship hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaIbd {
    z0: f64,
    z1: f64,
    z2: f64,
}

impl ThetaIbd {
    pub const UNRELATED: ThetaIbd = ThetaIbd { z0: 1.0, z1: 0.0, z2: 0.0 };
    pub const PARENT_CHILD: ThetaIbd = ThetaIbd { z0: 0.0, z1: 1.0, z2: 0.0 };
    pub const FULL_SIB: ThetaIbd = ThetaIbd { z0: 0.25, z1: 0.5, z2: 0.25 };
    /// Half-sibling vector as stated with the original three-test study,
    /// (0, 1/2, 1/2).
    pub const HALF_SIB_PAPER: ThetaIbd = ThetaIbd { z0: 0.0, z1: 0.5, z2: 0.5 };
    /// Textbook half-sibling coefficients (1/2, 1/2, 0).
    pub const HALF_SIB_STANDARD: ThetaIbd = ThetaIbd { z0: 0.5, z1: 0.5, z2: 0.0 };

    pub fn new(z0: f64, z1: f64, z2: f64) -> Result<Self, DataError> {
        let ok = [z0, z1, z2].iter().all(|z| z.is_finite() && *z >= 0.0)
            && (z0 + z1 + z2 - 1.0).abs() <= THETA_TOLERANCE;
        if ok {
            Ok(ThetaIbd { z0, z1, z2 })
        } else {
            Err(DataError::InvalidTheta { z0, z1, z2 })
        }
    }

    /// Parses `"z0,z1,z2"`; fractions like `1/4` are accepted.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(DataError::Metadata(format!("expected z0,z1,z2, got {text:?}")));
        }
        let mut z = [0.0; 3];
        for (slot, part) in z.iter_mut().zip(&parts) {
            *slot = parse_fraction(part)
                .ok_or_else(|| DataError::Metadata(format!("bad IBD coefficient {part:?}")))?;
        }
        Self::new(z[0], z[1], z[2])
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn z1(&self) -> f64 {
        self.z1
    }

    pub fn z2(&self) -> f64 {
        self.z2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.z0, self.z1, self.z2]
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
            (d != 0.0).then(|| n / d)
        }
        None => s.parse().ok(),
    }
}

impl fmt::Display for ThetaIbd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.z0, self.z1, self.z2)
    }
}

/// The seven allele-sharing patterns of an unordered genotype pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenotypeCombination {
    AaAa,
    AaAb,
    AaBb,
    AbAb,
    AaBc,
    AbAc,
    AbCd,
}

impl GenotypeCombination {
    pub const ALL: [GenotypeCombination; 7] = [
        GenotypeCombination::AaAa,
        GenotypeCombination::AaAb,
        GenotypeCombination::AaBb,
        GenotypeCombination::AbAb,
        GenotypeCombination::AaBc,
        GenotypeCombination::AbAc,
        GenotypeCombination::AbCd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GenotypeCombination::AaAa => "AA,AA",
            GenotypeCombination::AaAb => "AA,AB",
            GenotypeCombination::AaBb => "AA,BB",
            GenotypeCombination::AbAb => "AB,AB",
            GenotypeCombination::AaBc => "AA,BC",
            GenotypeCombination::AbAc => "AB,AC",
            GenotypeCombination::AbCd => "AB,CD",
        }
    }
}

impl fmt::Display for GenotypeCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classifies a coded genotype pair. Symmetric in its arguments.
pub fn classify_coded(g1: Genotype, g2: Genotype) -> GenotypeCombination {
    use GenotypeCombination::*;
    let shared = shared_count(g1, g2);
    match (g1.is_homozygous(), g2.is_homozygous()) {
        (true, true) => {
            if g1 == g2 {
                AaAa
            } else {
                AaBb
            }
        }
        (true, false) | (false, true) => {
            if shared > 0 {
                AaAb
            } else {
                AaBc
            }
        }
        (false, false) => match shared {
            2 => AbAb,
            1 => AbAc,
            _ => AbCd,
        },
    }
}

/// Classifies a labelled genotype pair.
pub fn classify(g1: &LocusGenotype, g2: &LocusGenotype) -> GenotypeCombination {
    let (a1, b1) = g1.alleles();
    let (a2, b2) = g2.alleles();
    let mut labels: Vec<_> = vec![a1, b1, a2, b2];
    labels.sort();
    labels.dedup();
    let code = |x| labels.iter().position(|l| *l == x).unwrap() as u16;
    classify_coded(Genotype::new(code(a1), code(b1)), Genotype::new(code(a2), code(b2)))
}

/// Number of distinct alleles the two genotypes have in common (IBS).
pub fn shared_count(g1: Genotype, g2: Genotype) -> usize {
    let in2 = |x: u16| x == g2.a || x == g2.b;
    if g1.is_homozygous() {
        usize::from(in2(g1.a))
    } else {
        usize::from(in2(g1.a)) + usize::from(in2(g1.b))
    }
}

#[inline]
fn hwe(g: Genotype, p: &[f64]) -> f64 {
    let pa = p[g.a as usize];
    if g.is_homozygous() {
        pa * pa
    } else {
        2.0 * pa * p[g.b as usize]
    }
}

/// Probability that a genotype built from allele `x` and one fresh draw is `g`.
#[inline]
fn transmit(x: u16, g: Genotype, p: &[f64]) -> f64 {
    if g.is_homozygous() {
        if x == g.a {
            p[g.a as usize]
        } else {
            0.0
        }
    } else {
        let mut t = 0.0;
        if x == g.a {
            t += p[g.b as usize];
        }
        if x == g.b {
            t += p[g.a as usize];
        }
        t
    }
}

/// The three IBD-conditional probabilities of an unordered genotype pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairComponents {
    /// No alleles IBD.
    pub zero_ibd: f64,
    /// Exactly one allele IBD.
    pub one_ibd: f64,
    /// Both alleles IBD.
    pub two_ibd: f64,
}

impl PairComponents {
    /// Components for coded genotypes over allele frequencies `p`.
    #[inline]
    pub fn new(g1: Genotype, g2: Genotype, p: &[f64]) -> Self {
        // fixed evaluation order keeps the result bitwise symmetric
        let (g1, g2) = if g2 < g1 { (g2, g1) } else { (g1, g2) };
        let h1 = hwe(g1, p);
        let h2 = hwe(g2, p);
        let conditional = 0.5 * (transmit(g1.a, g2, p) + transmit(g1.b, g2, p));
        let (mult, two) = if g1 == g2 { (1.0, h1) } else { (2.0, 0.0) };
        PairComponents {
            zero_ibd: mult * h1 * h2,
            one_ibd: mult * h1 * conditional,
            two_ibd: two,
        }
    }

    #[inline]
    pub fn probability(&self, theta: &ThetaIbd) -> f64 {
        theta.z0 * self.zero_ibd + theta.z1 * self.one_ibd + theta.z2 * self.two_ibd
    }
}

/// Unordered pair probability for coded genotypes.
#[inline]
pub fn pair_probability_coded(g1: Genotype, g2: Genotype, theta: &ThetaIbd, p: &[f64]) -> f64 {
    PairComponents::new(g1, g2, p).probability(theta)
}

/// Probability of the ordered pair (first individual has `g1`, second `g2`).
/// Summing over `g2` gives the HWE probability of `g1`.
pub fn ordered_pair_probability_coded(g1: Genotype, g2: Genotype, theta: &ThetaIbd, p: &[f64]) -> f64 {
    let mult = if g1 == g2 { 1.0 } else { 2.0 };
    pair_probability_coded(g1, g2, theta, p) / mult
}

/// HWE genotype probability.
pub fn genotype_probability_coded(g: Genotype, p: &[f64]) -> f64 {
    hwe(g, p)
}

/// Probability of the unordered genotype pair {g1, g2} under `theta`.
pub fn pair_probability(
    g1: &LocusGenotype,
    g2: &LocusGenotype,
    theta: &ThetaIbd,
    f: &AlleleDist,
) -> Result<f64, DataError> {
    Ok(pair_probability_coded(f.encode(g1)?, f.encode(g2)?, theta, f.probs()))
}

/// Natural log of [`pair_probability`]; `-inf` for impossible pairs.
pub fn log_pair_probability(
    g1: &LocusGenotype,
    g2: &LocusGenotype,
    theta: &ThetaIbd,
    f: &AlleleDist,
) -> Result<f64, DataError> {
    pair_probability(g1, g2, theta, f).map(f64::ln)
}

/// Precomputed sampler for one locus distribution.
#[derive(Debug, Clone)]
pub struct LocusSampler {
    index: WeightedIndex<f64>,
}

impl LocusSampler {
    pub fn new(probs: &[f64]) -> Result<Self, DataError> {
        WeightedIndex::new(probs)
            .map(|index| LocusSampler { index })
            .map_err(|e| DataError::Metadata(format!("cannot sample from distribution: {e}")))
    }

    #[inline]
    pub fn allele<R: Rng + ?Sized>(&self, rng: &mut R) -> u16 {
        self.index.sample(rng) as u16
    }

    /// Two independent draws (HWE genotype).
    #[inline]
    pub fn genotype<R: Rng + ?Sized>(&self, rng: &mut R) -> Genotype {
        let x = self.allele(rng);
        let y = self.allele(rng);
        Genotype::new(x, y)
    }

    /// Genotype of a relative of someone with genotype `g1`: draws the IBD
    /// count from `theta`, then copies 0, 1 (a uniformly chosen slot) or 2
    /// alleles from `g1` and draws the rest fresh.
    #[inline]
    pub fn related<R: Rng + ?Sized>(&self, g1: Genotype, theta: &ThetaIbd, rng: &mut R) -> Genotype {
        let u: f64 = rng.random();
        if u < theta.z0 {
            self.genotype(rng)
        } else if u < theta.z0 + theta.z1 {
            let copied = if rng.random_bool(0.5) { g1.a } else { g1.b };
            Genotype::new(copied, self.allele(rng))
        } else {
            g1
        }
    }
}

/// Draws an HWE genotype from `f`.
pub fn sample_genotype<R: Rng + ?Sized>(
    locus: &str,
    f: &AlleleDist,
    rng: &mut R,
) -> Result<LocusGenotype, DataError> {
    let sampler = LocusSampler::new(f.probs())?;
    Ok(f.decode(locus, sampler.genotype(rng)))
}

/// Draws the genotype of a relative of `g1` under `theta`.
pub fn sample_related<R: Rng + ?Sized>(
    g1: &LocusGenotype,
    theta: &ThetaIbd,
    f: &AlleleDist,
    rng: &mut R,
) -> Result<LocusGenotype, DataError> {
    let sampler = LocusSampler::new(f.probs())?;
    let coded = f.encode(g1)?;
    Ok(f.decode(g1.locus(), sampler.related(coded, theta, rng)))
}
