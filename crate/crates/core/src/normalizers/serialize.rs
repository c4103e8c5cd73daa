//! Versioned JSON serialization for fitted models.
//!
//! Document layout:
//!
//! ```json
//! {
//!   "version": 1,
//!   "method": "M1.1",
//!   "manifest": {"axis": "ethnicity", "labels": ["Asian", "Black"]},
//!   "keys": [{"variant": "by_subject_and_demo", "subject": "g1",
//!             "demo": "Asian", "mu": 0.1, "sigma": 0.05, "count": 120}],
//!   "platt": [{"demo": "Asian", "alpha": 12.0, "beta": -4.1,
//!              "objective": -0.3, "iterations": 9, "converged": true}],
//!   "diagnostics": {...}
//! }
//! ```
//!
//! M5 key entries additionally carry `"side": "genuine" | "impostor"`.
//! Floats are written in shortest round-trip decimal form, so loading a
//! document restores bit-identical parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TableManifest;
use crate::stats::NormalStats;

use super::{
    BimodalModel, DemoStatsModel, FitDiagnostics, MethodId, ModelPayload, NormKey, NormalizerModel,
    PlattFit, PlattModel, PlattParams, ZtNormModel,
};

/// Schema version accepted by [`NormalizerModel::from_json_str`].
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document {
    version: u32,
    method: MethodId,
    manifest: TableManifest,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    keys: Vec<KeyEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    platt: Vec<PlattEntry>,
    diagnostics: FitDiagnostics,
}

#[derive(Serialize, Deserialize)]
struct KeyEntry {
    #[serde(flatten)]
    key: NormKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side: Option<Side>,
    mu: f64,
    sigma: f64,
    count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Side {
    Genuine,
    Impostor,
}

#[derive(Serialize, Deserialize)]
struct PlattEntry {
    demo: String,
    alpha: f64,
    beta: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn key_entry(key: NormKey, side: Option<Side>, stats: &NormalStats) -> KeyEntry {
    KeyEntry {
        key,
        side,
        mu: stats.mu,
        sigma: stats.sigma,
        count: stats.count as u64,
    }
}

pub(super) fn to_json_string(model: &NormalizerModel) -> Result<String> {
    let mut keys = Vec::new();
    let mut platt = Vec::new();
    match model.payload() {
        ModelPayload::ZtNorm(m) => {
            for (key, stats) in &m.stats_by_key {
                keys.push(key_entry(key.clone(), None, stats));
            }
        }
        ModelPayload::ImpostorNorm(m) => {
            for (demo, stats) in &m.impostor_stats {
                keys.push(key_entry(
                    NormKey::ByDemo { demo: demo.clone() },
                    None,
                    stats,
                ));
            }
        }
        ModelPayload::Platt(m) => {
            for (demo, params) in &m.params_by_demo {
                let fit = m.fit_by_demo.get(demo).copied().unwrap_or(PlattFit {
                    objective: f64::NAN,
                    iterations: 0,
                    converged: false,
                });
                platt.push(PlattEntry {
                    demo: demo.clone(),
                    alpha: params.alpha,
                    beta: params.beta,
                    objective: fit.objective,
                    iterations: fit.iterations,
                    converged: fit.converged,
                });
            }
        }
        ModelPayload::Bimodal(m) => {
            for (demo, stats) in &m.genuine_stats {
                keys.push(key_entry(
                    NormKey::ByDemo { demo: demo.clone() },
                    Some(Side::Genuine),
                    stats,
                ));
            }
            for (demo, stats) in &m.impostor_stats {
                keys.push(key_entry(
                    NormKey::ByDemo { demo: demo.clone() },
                    Some(Side::Impostor),
                    stats,
                ));
            }
        }
    }
    let document = Document {
        version: MODEL_SCHEMA_VERSION,
        method: model.method(),
        manifest: model.manifest().clone(),
        keys,
        platt,
        diagnostics: model.diagnostics().clone(),
    };
    Ok(serde_json::to_string_pretty(&document)?)
}

pub(super) fn from_json_str(json: &str) -> Result<NormalizerModel> {
    let document: Document = serde_json::from_str(json)?;
    if document.version != MODEL_SCHEMA_VERSION {
        return Err(Error::InvalidSpec(format!(
            "unsupported model schema version {} (expected {MODEL_SCHEMA_VERSION})",
            document.version
        )));
    }
    let stats_of = |entry: &KeyEntry| NormalStats {
        mu: entry.mu,
        sigma: entry.sigma,
        count: entry.count as usize,
    };
    let demo_of = |entry: &KeyEntry| -> Result<String> {
        match &entry.key {
            NormKey::ByDemo { demo } => Ok(demo.clone()),
            other => Err(Error::InvalidSpec(format!(
                "expected a by_demo key for method {}, got [{other}]",
                document.method
            ))),
        }
    };

    let payload = match document.method {
        MethodId::M1
        | MethodId::M1_1
        | MethodId::M1_2
        | MethodId::M2
        | MethodId::M2_1
        | MethodId::M2_2 => {
            let mut stats_by_key = std::collections::BTreeMap::new();
            for entry in &document.keys {
                stats_by_key.insert(entry.key.clone(), stats_of(entry));
            }
            ModelPayload::ZtNorm(ZtNormModel {
                anchor_side: document
                    .method
                    .anchor_side()
                    .expect("method family checked above"),
                stats_by_key,
            })
        }
        MethodId::M3 => {
            let mut impostor_stats = std::collections::BTreeMap::new();
            for entry in &document.keys {
                impostor_stats.insert(demo_of(entry)?, stats_of(entry));
            }
            ModelPayload::ImpostorNorm(DemoStatsModel { impostor_stats })
        }
        MethodId::M4 => {
            let mut params_by_demo = std::collections::BTreeMap::new();
            let mut fit_by_demo = std::collections::BTreeMap::new();
            for entry in &document.platt {
                params_by_demo.insert(
                    entry.demo.clone(),
                    PlattParams {
                        alpha: entry.alpha,
                        beta: entry.beta,
                    },
                );
                fit_by_demo.insert(
                    entry.demo.clone(),
                    PlattFit {
                        objective: entry.objective,
                        iterations: entry.iterations,
                        converged: entry.converged,
                    },
                );
            }
            ModelPayload::Platt(PlattModel {
                params_by_demo,
                fit_by_demo,
            })
        }
        MethodId::M5 => {
            let mut genuine_stats = std::collections::BTreeMap::new();
            let mut impostor_stats = std::collections::BTreeMap::new();
            for entry in &document.keys {
                let demo = demo_of(entry)?;
                match entry.side {
                    Some(Side::Genuine) => genuine_stats.insert(demo, stats_of(entry)),
                    Some(Side::Impostor) => impostor_stats.insert(demo, stats_of(entry)),
                    None => {
                        return Err(Error::InvalidSpec(format!(
                            "bimodal key for {demo:?} lacks a side tag"
                        )))
                    }
                };
            }
            ModelPayload::Bimodal(BimodalModel {
                genuine_stats,
                impostor_stats,
            })
        }
    };

    NormalizerModel::from_parts(
        document.method,
        document.manifest,
        payload,
        document.diagnostics,
    )
}
