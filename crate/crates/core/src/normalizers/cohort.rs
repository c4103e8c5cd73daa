//! Pure cohort-based fits: per-demographic impostor statistics (M3) and the
//! genuine/impostor bimodal fit (M5).
//!
//! Both use same-demographic cohort comparisons only. The statistics can be
//! precomputed once per cohort; no anchor-specific comparisons are needed at
//! enrollment or probe time.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{PairType, ScoreTable};
use crate::stats::fit_normal_stats;

use super::{BimodalModel, DemoStatsModel, FitDiagnostics, ModelPayload};

/// Scores grouped per demographic for one pair type, with exclusion counters.
fn same_demo_groups(
    table: &ScoreTable,
    keep: PairType,
    diagnostics: &mut FitDiagnostics,
) -> BTreeMap<String, Vec<f64>> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in table.records() {
        if record.pair_type != keep {
            diagnostics.excluded_pair_type += 1;
            continue;
        }
        let Some(probe_demo) = record.probe_demo.as_ref() else {
            diagnostics.excluded_unlabeled += 1;
            continue;
        };
        if probe_demo.value != record.gallery_demo.value {
            diagnostics.excluded_cross_demo += 1;
            continue;
        }
        groups
            .entry(record.gallery_demo.value.clone())
            .or_default()
            .push(record.score);
        diagnostics.used_records += 1;
    }
    groups
}

/// Fit one impostor normal per manifest demographic (M3).
///
/// Only same-demographic impostor records contribute; a manifest label with
/// no usable scores fails with [`Error::MissingDemographic`]. A constant
/// group is recorded with `sigma = 0` and fails at apply time instead.
pub(super) fn fit_impostor_norm(table: &ScoreTable) -> Result<(ModelPayload, FitDiagnostics)> {
    let mut diagnostics = FitDiagnostics::default();
    let groups = same_demo_groups(table, PairType::Impostor, &mut diagnostics);

    let mut impostor_stats = BTreeMap::new();
    for label in &table.manifest().labels {
        let scores = groups.get(label).filter(|s| !s.is_empty()).ok_or_else(|| {
            Error::MissingDemographic {
                label: label.clone(),
            }
        })?;
        impostor_stats.insert(label.clone(), fit_normal_stats(scores)?);
    }
    diagnostics.groups = impostor_stats.len();
    Ok((
        ModelPayload::ImpostorNorm(DemoStatsModel { impostor_stats }),
        diagnostics,
    ))
}

/// Fit genuine and impostor normals per manifest demographic (M5).
///
/// Each demographic needs both pair types among its same-demographic records.
pub(super) fn fit_bimodal_cdf(table: &ScoreTable) -> Result<(ModelPayload, FitDiagnostics)> {
    let mut diagnostics = FitDiagnostics::default();
    let genuine_groups = same_demo_groups(table, PairType::Genuine, &mut diagnostics);
    // the genuine pass counted impostor records as excluded_pair_type and
    // vice versa; run the impostor pass on fresh counters and merge
    let mut impostor_diag = FitDiagnostics::default();
    let impostor_groups = same_demo_groups(table, PairType::Impostor, &mut impostor_diag);
    diagnostics.used_records += impostor_diag.used_records;
    diagnostics.excluded_cross_demo += impostor_diag.excluded_cross_demo;
    diagnostics.excluded_unlabeled += impostor_diag.excluded_unlabeled;
    diagnostics.excluded_pair_type = table.len()
        - diagnostics.used_records
        - diagnostics.excluded_cross_demo
        - diagnostics.excluded_unlabeled;

    let mut genuine_stats = BTreeMap::new();
    let mut impostor_stats = BTreeMap::new();
    for label in &table.manifest().labels {
        let genuine = genuine_groups
            .get(label)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        let impostor = impostor_groups
            .get(label)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        genuine_stats.insert(label.clone(), fit_normal_stats(genuine)?);
        impostor_stats.insert(label.clone(), fit_normal_stats(impostor)?);
    }
    diagnostics.groups = genuine_stats.len() + impostor_stats.len();
    Ok((
        ModelPayload::Bimodal(BimodalModel {
            genuine_stats,
            impostor_stats,
        }),
        diagnostics,
    ))
}
