//! The nine cohort-based score normalization methods.
//!
//! | Method | Statistics source | Grouping |
//! |--------|-------------------|----------|
//! | M1     | gallery x cohort  | gallery subject |
//! | M1.1   | gallery x cohort  | gallery subject + demographic (same-demographic cohort scores) |
//! | M1.2   | gallery x cohort  | demographic (pooled over gallery subjects) |
//! | M2     | probe x cohort    | probe subject |
//! | M2.1   | probe x cohort    | probe subject + demographic |
//! | M2.2   | probe x cohort    | demographic (pooled over probe subjects) |
//! | M3     | cohort x cohort   | demographic, same-demographic impostor scores |
//! | M4     | cohort x cohort   | demographic, logistic map fitted on genuine vs impostor scores |
//! | M5     | cohort x cohort   | demographic, genuine-CDF minus impostor survival |
//!
//! Fitted models are immutable and shareable across threads; fitting and
//! application are deterministic (fixed iteration order, no randomized
//! initialization).

mod cohort;
mod platt;
mod serialize;
mod ztnorm;

pub use platt::{PlattFit, PlattParams};
pub use serialize::MODEL_SCHEMA_VERSION;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScoreRecord, ScoreTable, TableKind, TableManifest};
use crate::stats::{normal_cdf, standardize, NormalStats};

/// Identifier of one of the nine normalization methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "M1")]
    M1,
    #[serde(rename = "M1.1")]
    M1_1,
    #[serde(rename = "M1.2")]
    M1_2,
    #[serde(rename = "M2")]
    M2,
    #[serde(rename = "M2.1")]
    M2_1,
    #[serde(rename = "M2.2")]
    M2_2,
    #[serde(rename = "M3")]
    M3,
    #[serde(rename = "M4")]
    M4,
    #[serde(rename = "M5")]
    M5,
}

impl MethodId {
    pub const ALL: [MethodId; 9] = [
        MethodId::M1,
        MethodId::M1_1,
        MethodId::M1_2,
        MethodId::M2,
        MethodId::M2_1,
        MethodId::M2_2,
        MethodId::M3,
        MethodId::M4,
        MethodId::M5,
    ];

    pub fn token(self) -> &'static str {
        match self {
            MethodId::M1 => "M1",
            MethodId::M1_1 => "M1.1",
            MethodId::M1_2 => "M1.2",
            MethodId::M2 => "M2",
            MethodId::M2_1 => "M2.1",
            MethodId::M2_2 => "M2.2",
            MethodId::M3 => "M3",
            MethodId::M4 => "M4",
            MethodId::M5 => "M5",
        }
    }

    /// The table kind that supplies this method's statistics.
    pub fn required_table_kind(self) -> TableKind {
        match self {
            MethodId::M1 | MethodId::M1_1 | MethodId::M1_2 => TableKind::GalleryCohort,
            MethodId::M2 | MethodId::M2_1 | MethodId::M2_2 => TableKind::ProbeCohort,
            MethodId::M3 | MethodId::M4 | MethodId::M5 => TableKind::CohortCohort,
        }
    }

    fn anchor_side(self) -> Option<AnchorSide> {
        match self {
            MethodId::M1 | MethodId::M1_1 | MethodId::M1_2 => Some(AnchorSide::Gallery),
            MethodId::M2 | MethodId::M2_1 | MethodId::M2_2 => Some(AnchorSide::Probe),
            _ => None,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let canon = s.trim().to_ascii_uppercase().replace('_', ".");
        MethodId::ALL
            .iter()
            .copied()
            .find(|m| m.token() == canon)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method token {s:?}")))
    }
}

/// Which side of a comparison carries the test-set anchor sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorSide {
    Gallery,
    Probe,
}

/// The grouping key a fitted statistic is stored under.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum NormKey {
    BySubject { subject: String },
    BySubjectAndDemo { subject: String, demo: String },
    ByDemo { demo: String },
}

impl fmt::Display for NormKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKey::BySubject { subject } => write!(f, "subject={subject}"),
            NormKey::BySubjectAndDemo { subject, demo } => {
                write!(f, "subject={subject} demo={demo}")
            }
            NormKey::ByDemo { demo } => write!(f, "demo={demo}"),
        }
    }
}

/// Settings for the Platt-scaling fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattConfig {
    /// L2 penalty on (alpha, beta). Required for well-posedness: a perfectly
    /// separable cohort makes the unpenalized optimum unbounded.
    pub lambda: f64,
    pub max_iterations: usize,
    pub grad_tol: f64,
}

impl Default for PlattConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            max_iterations: 1000,
            grad_tol: 1e-9,
        }
    }
}

/// Settings shared by all fit operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Minimum number of scores a normalization group must contain.
    pub min_cohort_count: usize,
    pub platt: PlattConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            min_cohort_count: 10,
            platt: PlattConfig::default(),
        }
    }
}

/// Counters accumulated while fitting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Number of normalization groups in the model.
    pub groups: usize,
    /// Records whose scores entered some group.
    pub used_records: usize,
    /// Records skipped because the two sides carry different demographics.
    pub excluded_cross_demo: usize,
    /// Records skipped because a required demographic label was absent.
    pub excluded_unlabeled: usize,
    /// Records skipped because their pair type is not used by the method.
    pub excluded_pair_type: usize,
}

/// Per-key statistics for the Z-norm / T-norm families (M1x, M2x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZtNormModel {
    pub anchor_side: AnchorSide,
    pub stats_by_key: BTreeMap<NormKey, NormalStats>,
}

/// Per-demographic impostor statistics (M3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStatsModel {
    pub impostor_stats: BTreeMap<String, NormalStats>,
}

/// Per-demographic logistic parameters (M4).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattModel {
    pub params_by_demo: BTreeMap<String, PlattParams>,
    pub fit_by_demo: BTreeMap<String, PlattFit>,
}

/// Per-demographic genuine and impostor fits (M5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalModel {
    pub genuine_stats: BTreeMap<String, NormalStats>,
    pub impostor_stats: BTreeMap<String, NormalStats>,
}

/// Method-specific model payload.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelPayload {
    ZtNorm(ZtNormModel),
    ImpostorNorm(DemoStatsModel),
    Platt(PlattModel),
    Bimodal(BimodalModel),
}

/// A fitted normalization method, ready to map raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerModel {
    method: MethodId,
    manifest: TableManifest,
    payload: ModelPayload,
    diagnostics: FitDiagnostics,
}

impl NormalizerModel {
    /// Fit `method` on its required cohort table.
    pub fn fit(method: MethodId, table: &ScoreTable, config: &FitConfig) -> Result<Self> {
        let required = method.required_table_kind();
        if table.kind() != required {
            return Err(Error::TableKindMismatch {
                expected: required,
                found: table.kind(),
            });
        }
        let (payload, diagnostics) = match method {
            MethodId::M1
            | MethodId::M1_1
            | MethodId::M1_2
            | MethodId::M2
            | MethodId::M2_1
            | MethodId::M2_2 => ztnorm::fit_ztnorm(table, method, config)?,
            MethodId::M3 => cohort::fit_impostor_norm(table)?,
            MethodId::M4 => platt::fit_platt(table, config)?,
            MethodId::M5 => cohort::fit_bimodal_cdf(table)?,
        };
        Ok(Self {
            method,
            manifest: table.manifest().clone(),
            payload,
            diagnostics,
        })
    }

    /// Assemble a model from explicit parts, checking method/payload agreement.
    pub fn from_parts(
        method: MethodId,
        manifest: TableManifest,
        payload: ModelPayload,
        diagnostics: FitDiagnostics,
    ) -> Result<Self> {
        let consistent = match (&payload, method) {
            (ModelPayload::ZtNorm(m), _) => method.anchor_side() == Some(m.anchor_side),
            (ModelPayload::ImpostorNorm(_), MethodId::M3) => true,
            (ModelPayload::Platt(_), MethodId::M4) => true,
            (ModelPayload::Bimodal(_), MethodId::M5) => true,
            _ => false,
        };
        if !consistent {
            return Err(Error::InvalidSpec(format!(
                "model payload does not match method {method}"
            )));
        }
        Ok(Self {
            method,
            manifest,
            payload,
            diagnostics,
        })
    }

    pub fn method(&self) -> MethodId {
        self.method
    }

    pub fn manifest(&self) -> &TableManifest {
        &self.manifest
    }

    pub fn payload(&self) -> &ModelPayload {
        &self.payload
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// True when every per-demographic fit converged (always true for the
    /// closed-form methods).
    pub fn converged(&self) -> bool {
        match &self.payload {
            ModelPayload::Platt(m) => m.fit_by_demo.values().all(|f| f.converged),
            _ => true,
        }
    }

    /// The key this record's score is normalized under.
    ///
    /// M1x resolve on the gallery side and M2x on the probe side. M3/M4/M5
    /// use the gallery demographic: it is known at enrollment, so no
    /// demographic information is needed for the probe sample.
    pub fn resolve_key(&self, record: &ScoreRecord) -> Result<NormKey> {
        let key = match self.method {
            MethodId::M1 => NormKey::BySubject {
                subject: record.gallery_subject.clone(),
            },
            MethodId::M1_1 => NormKey::BySubjectAndDemo {
                subject: record.gallery_subject.clone(),
                demo: record.gallery_demo.value.clone(),
            },
            MethodId::M1_2 => NormKey::ByDemo {
                demo: record.gallery_demo.value.clone(),
            },
            MethodId::M2 => NormKey::BySubject {
                subject: record.probe_subject.clone(),
            },
            MethodId::M2_1 => NormKey::BySubjectAndDemo {
                subject: record.probe_subject.clone(),
                demo: Self::probe_demo_value(record)?,
            },
            MethodId::M2_2 => NormKey::ByDemo {
                demo: Self::probe_demo_value(record)?,
            },
            MethodId::M3 | MethodId::M4 | MethodId::M5 => NormKey::ByDemo {
                demo: record.gallery_demo.value.clone(),
            },
        };
        Ok(key)
    }

    fn probe_demo_value(record: &ScoreRecord) -> Result<String> {
        record
            .probe_demo
            .as_ref()
            .map(|d| d.value.clone())
            .ok_or_else(|| Error::UnknownKey {
                key: format!(
                    "probe demographic missing for subject {}",
                    record.probe_subject
                ),
            })
    }

    /// Normalize one record's score.
    pub fn apply(&self, record: &ScoreRecord) -> Result<f64> {
        let key = self.resolve_key(record)?;
        let s = record.score;
        match &self.payload {
            ModelPayload::ZtNorm(m) => {
                let stats = m.stats_by_key.get(&key).ok_or_else(|| Error::UnknownKey {
                    key: key.to_string(),
                })?;
                standardize(s, stats)
            }
            ModelPayload::ImpostorNorm(m) => {
                let stats = Self::demo_stats(&m.impostor_stats, &key)?;
                standardize(s, stats)
            }
            ModelPayload::Platt(m) => {
                let demo = Self::demo_of(&key);
                let params = m
                    .params_by_demo
                    .get(demo)
                    .ok_or_else(|| Error::UnknownKey {
                        key: key.to_string(),
                    })?;
                Ok(platt::sigmoid(params.alpha * s + params.beta))
            }
            ModelPayload::Bimodal(m) => {
                let genuine = Self::demo_stats(&m.genuine_stats, &key)?;
                let impostor = Self::demo_stats(&m.impostor_stats, &key)?;
                Ok(normal_cdf(s, genuine) - 1.0 + normal_cdf(s, impostor))
            }
        }
    }

    fn demo_of(key: &NormKey) -> &str {
        match key {
            NormKey::ByDemo { demo } => demo,
            NormKey::BySubjectAndDemo { demo, .. } => demo,
            NormKey::BySubject { subject } => subject,
        }
    }

    fn demo_stats<'a>(
        stats: &'a BTreeMap<String, NormalStats>,
        key: &NormKey,
    ) -> Result<&'a NormalStats> {
        stats
            .get(Self::demo_of(key))
            .ok_or_else(|| Error::UnknownKey {
                key: key.to_string(),
            })
    }

    /// Normalize a whole test table, preserving record order.
    ///
    /// Under [`ErrorMode::Strict`] the first failing record fails the batch;
    /// under [`ErrorMode::Lenient`] failing records are dropped and listed in
    /// the report.
    pub fn normalize_table(
        &self,
        table: &ScoreTable,
        mode: ErrorMode,
    ) -> Result<(ScoreTable, NormalizeReport)> {
        if table.kind() != TableKind::Test {
            return Err(Error::TableKindMismatch {
                expected: TableKind::Test,
                found: table.kind(),
            });
        }
        let mut records = Vec::with_capacity(table.len());
        let mut report = NormalizeReport {
            input_records: table.len(),
            output_records: 0,
            dropped: Vec::new(),
        };
        for (index, record) in table.records().iter().enumerate() {
            match self.apply(record) {
                Ok(score) => {
                    let mut out = record.clone();
                    out.score = score;
                    records.push(out);
                }
                Err(err) => match mode {
                    ErrorMode::Strict => {
                        return Err(Error::Record {
                            index,
                            source: Box::new(err),
                        })
                    }
                    ErrorMode::Lenient => report.dropped.push((index, err.to_string())),
                },
            }
        }
        report.output_records = records.len();
        let out = ScoreTable::new(table.kind(), table.manifest().clone(), records)?;
        Ok((out, report))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serialize::to_json_string(self)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        serialize::from_json_str(json)
    }
}

/// Batch error policy for [`NormalizerModel::normalize_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Strict,
    Lenient,
}

/// Outcome summary of a batch normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeReport {
    pub input_records: usize,
    pub output_records: usize,
    /// (record index, error description) for records dropped in lenient mode.
    pub dropped: Vec<(usize, String)>,
}
