//! Domain types: demographic labels, score records, and validated score tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The attribute along which fairness is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemographicAxis {
    Gender,
    Ethnicity,
}

impl fmt::Display for DemographicAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemographicAxis::Gender => write!(f, "gender"),
            DemographicAxis::Ethnicity => write!(f, "ethnicity"),
        }
    }
}

impl FromStr for DemographicAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gender" => Ok(DemographicAxis::Gender),
            "ethnicity" => Ok(DemographicAxis::Ethnicity),
            other => Err(Error::InvalidSpec(format!(
                "unknown demographic axis {other:?} (expected gender or ethnicity)"
            ))),
        }
    }
}

/// A demographic group label, e.g. ethnicity `"Asian"` or gender `"Female"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DemographicLabel {
    pub axis: DemographicAxis,
    pub value: String,
}

impl DemographicLabel {
    pub fn new(axis: DemographicAxis, value: impl Into<String>) -> Self {
        Self {
            axis,
            value: value.into(),
        }
    }
}

impl fmt::Display for DemographicLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.axis, self.value)
    }
}

/// Whether the two sides of a comparison share an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairType {
    Genuine,
    Impostor,
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairType::Genuine => write!(f, "genuine"),
            PairType::Impostor => write!(f, "impostor"),
        }
    }
}

impl FromStr for PairType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genuine" => Ok(PairType::Genuine),
            "impostor" => Ok(PairType::Impostor),
            other => Err(Error::InvalidSpec(format!(
                "unknown pair type {other:?} (expected genuine or impostor)"
            ))),
        }
    }
}

/// The role a score table plays in the pipeline.
///
/// Cohort tables supply normalization statistics; `Test` tables carry the
/// comparisons that are normalized and evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Test,
    GalleryCohort,
    ProbeCohort,
    CohortCohort,
}

impl TableKind {
    pub fn token(self) -> &'static str {
        match self {
            TableKind::Test => "test",
            TableKind::GalleryCohort => "gallery_cohort",
            TableKind::ProbeCohort => "probe_cohort",
            TableKind::CohortCohort => "cohort_cohort",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(TableKind::Test),
            "gallery_cohort" => Ok(TableKind::GalleryCohort),
            "probe_cohort" => Ok(TableKind::ProbeCohort),
            "cohort_cohort" => Ok(TableKind::CohortCohort),
            other => Err(Error::InvalidSpec(format!("unknown table kind {other:?}"))),
        }
    }
}

/// One gallery-probe comparison.
///
/// For cohort tables the anchor (test-set) sample sits on the gallery side of
/// `GalleryCohort` records and on the probe side of `ProbeCohort` records;
/// the opposite side holds the cohort sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub gallery_subject: String,
    pub probe_subject: String,
    pub gallery_demo: DemographicLabel,
    /// May be absent: demographic metadata is only guaranteed at enrollment.
    pub probe_demo: Option<DemographicLabel>,
    pub pair_type: PairType,
    pub score: f64,
}

impl ScoreRecord {
    /// Check the identity/pair-type consistency rules for a single record.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.pair_type {
            PairType::Genuine if self.gallery_subject != self.probe_subject => Err(format!(
                "genuine pair with distinct subjects {:?} and {:?}",
                self.gallery_subject, self.probe_subject
            )),
            PairType::Impostor if self.gallery_subject == self.probe_subject => Err(format!(
                "impostor pair with identical subject {:?}",
                self.gallery_subject
            )),
            _ if !self.score.is_finite() => Err(format!("non-finite score {}", self.score)),
            _ => Ok(()),
        }
    }
}

/// Declared demographic axis and label set for a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableManifest {
    pub axis: DemographicAxis,
    /// Sorted, deduplicated label values.
    pub labels: Vec<String>,
}

impl TableManifest {
    pub fn new(axis: DemographicAxis, labels: impl IntoIterator<Item = String>) -> Self {
        let mut labels: Vec<String> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        Self { axis, labels }
    }

    pub fn contains(&self, value: &str) -> bool {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(value))
            .is_ok()
    }
}

/// A validated, ordered collection of score records of one declared kind.
///
/// Invariants enforced at construction:
/// - every record passes [`ScoreRecord::validate`],
/// - all demographic labels share the manifest axis and belong to its label set,
/// - `GalleryCohort` and `ProbeCohort` tables contain impostor records only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    kind: TableKind,
    manifest: TableManifest,
    records: Vec<ScoreRecord>,
}

impl ScoreTable {
    pub fn new(
        kind: TableKind,
        manifest: TableManifest,
        records: Vec<ScoreRecord>,
    ) -> Result<Self> {
        for (index, record) in records.iter().enumerate() {
            record
                .validate()
                .map_err(|message| Error::InvalidRecord { index, message })?;
            Self::check_label(&manifest, &record.gallery_demo, index)?;
            if let Some(probe_demo) = &record.probe_demo {
                Self::check_label(&manifest, probe_demo, index)?;
            }
            if matches!(kind, TableKind::GalleryCohort | TableKind::ProbeCohort)
                && record.pair_type == PairType::Genuine
            {
                return Err(Error::InvalidRecord {
                    index,
                    message: format!("genuine record in a {kind} table"),
                });
            }
        }
        Ok(Self {
            kind,
            manifest,
            records,
        })
    }

    fn check_label(manifest: &TableManifest, label: &DemographicLabel, index: usize) -> Result<()> {
        if label.axis != manifest.axis {
            return Err(Error::InvalidRecord {
                index,
                message: format!(
                    "label axis {} does not match table axis {}",
                    label.axis, manifest.axis
                ),
            });
        }
        if !manifest.contains(&label.value) {
            return Err(Error::InvalidRecord {
                index,
                message: format!(
                    "demographic token {:?} not in the declared label set",
                    label.value
                ),
            });
        }
        Ok(())
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn manifest(&self) -> &TableManifest {
        &self.manifest
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Scores of all records with the given pair type, in table order.
    pub fn scores_of(&self, pair_type: PairType) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.pair_type == pair_type)
            .map(|r| r.score)
            .collect()
    }
}
