//! Alleles, genotypes and multi-locus STR profiles.
//!
//! Allele labels are opaque tokens ("13", "9.3", "X"). Two alleles are equal
//! only when their tokens are identical. For display and canonical ordering
//! we sort numerically when both labels parse as numbers, so that "9.3" sorts
//! before "10".

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// STR repeat designation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allele(String);

impl Allele {
    pub fn new(label: impl Into<String>) -> Result<Self, DataError> {
        let label = label.into();
        let label = label.trim();
        if label.is_empty() {
            return Err(DataError::Metadata("allele label must be non-empty".into()));
        }
        Ok(Allele(label.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<f64> {
        self.0.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

impl Ord for Allele {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.total_cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for Allele {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Allele {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Unordered pair of alleles at one locus, stored with `first <= second`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocusGenotype {
    locus: String,
    first: Allele,
    second: Allele,
}

impl LocusGenotype {
    pub fn new(locus: impl Into<String>, a: Allele, b: Allele) -> Self {
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        LocusGenotype {
            locus: locus.into(),
            first,
            second,
        }
    }

    /// Convenience constructor from two labels.
    pub fn from_labels(locus: &str, a: &str, b: &str) -> Result<Self, DataError> {
        Ok(Self::new(locus, Allele::new(a)?, Allele::new(b)?))
    }

    pub fn locus(&self) -> &str {
        &self.locus
    }

    pub fn alleles(&self) -> (&Allele, &Allele) {
        (&self.first, &self.second)
    }

    pub fn is_homozygous(&self) -> bool {
        self.first == self.second
    }
}

impl fmt::Display for LocusGenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:({},{})", self.locus, self.first, self.second)
    }
}

/// Genotype coded as indices into a locus allele list, `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype {
    pub a: u16,
    pub b: u16,
}

impl Genotype {
    #[inline]
    pub fn new(x: u16, y: u16) -> Self {
        if x <= y {
            Genotype { a: x, b: y }
        } else {
            Genotype { a: y, b: x }
        }
    }

    #[inline]
    pub fn is_homozygous(self) -> bool {
        self.a == self.b
    }
}

/// Every unordered genotype over `n` alleles, in lexicographic order.
pub fn all_genotypes(n: usize) -> Vec<Genotype> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n as u16 {
        for b in a..n as u16 {
            out.push(Genotype { a, b });
        }
    }
    out
}

/// A DNA profile: one genotype per locus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    genotypes: Vec<LocusGenotype>,
}

impl Profile {
    /// Builds a profile; loci must be distinct.
    pub fn new(genotypes: Vec<LocusGenotype>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for g in &genotypes {
            if !seen.insert(g.locus.as_str()) {
                return Err(DataError::PanelMismatch(format!(
                    "locus {:?} appears more than once in profile",
                    g.locus
                )));
            }
        }
        Ok(Profile { genotypes })
    }

    pub fn genotypes(&self) -> &[LocusGenotype] {
        &self.genotypes
    }

    pub fn get(&self, locus: &str) -> Option<&LocusGenotype> {
        self.genotypes.iter().find(|g| g.locus == locus)
    }

    pub fn len(&self) -> usize {
        self.genotypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genotypes.is_empty()
    }

    /// Reads a profile CSV with header `locus,allele1,allele2`.
    pub fn from_csv_reader<R: Read>(reader: R, source_name: &str) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["locus", "allele1", "allele2"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(DataError::MalformedRow {
                source_name: source_name.into(),
                line: 1,
                reason: format!("expected header `locus,allele1,allele2`, found {headers:?}"),
            });
        }
        let mut genotypes = Vec::new();
        let mut seen = HashSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| malformed(source_name, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: &str| DataError::MalformedRow {
                source_name: source_name.into(),
                line,
                reason: reason.into(),
            };
            if rec.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            let locus = rec[0].to_string();
            if locus.is_empty() {
                return Err(bad("empty locus"));
            }
            let a = Allele::new(&rec[1]).map_err(|_| bad("empty allele"))?;
            let b = Allele::new(&rec[2]).map_err(|_| bad("empty allele"))?;
            if !seen.insert(locus.clone()) {
                return Err(bad(&format!("locus {locus:?} repeated")));
            }
            genotypes.push(LocusGenotype::new(locus, a, b));
        }
        Profile::new(genotypes)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("locus,allele1,allele2\n");
        for g in &self.genotypes {
            out.push_str(&format!("{},{},{}\n", g.locus, g.first, g.second));
        }
        out
    }
}

pub(crate) fn malformed(source_name: &str, err: csv::Error) -> DataError {
    match DataError::from(err) {
        DataError::MalformedRow { line, reason, .. } => DataError::MalformedRow {
            source_name: source_name.into(),
            line,
            reason,
        },
        other => other,
    }
}
