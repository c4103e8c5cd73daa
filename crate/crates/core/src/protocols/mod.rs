//! Score-table ingestion and protocol constructions: CSV parsing and writing,
//! distribution-preserving subsampling, random pair generation, and
//! replicate splits.

mod pairs;
mod sampling;
mod table_io;

pub use pairs::{
    generate_random_pairs, read_pair_list, split_replicates, write_pair_list, GeneratedPair,
    PAIR_CSV_HEADER,
};
pub use sampling::{subsample_balanced, SamplingSpec, SubsampleReport};
pub use table_io::{
    parse_score_table, read_score_table, write_score_table, write_score_table_to_path,
    SCORE_CSV_HEADER,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DemographicAxis;

/// One subject of a dataset roster: demographic, optional secondary
/// attribute, and its sample identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub demo: String,
    /// A second attribute pairs must also match (e.g. gender when the axis
    /// is ethnicity). Absent means unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<String>,
    pub samples: Vec<String>,
}

/// Subject roster used to generate comparison protocols.
///
/// JSON form: `{"axis": ..., "labels": [...], "subjects": {id: {demo,
/// secondary?, samples: [...]}}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub axis: DemographicAxis,
    pub labels: Vec<String>,
    pub subjects: BTreeMap<String, SubjectEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        for (id, entry) in &self.subjects {
            if entry.samples.is_empty() {
                return Err(Error::InvalidSpec(format!("subject {id:?} has no samples")));
            }
            if !self.labels.contains(&entry.demo) {
                return Err(Error::InvalidSpec(format!(
                    "subject {id:?} has demographic {:?} outside the label set",
                    entry.demo
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(json)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
