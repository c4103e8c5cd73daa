//! Fitting for the Z-norm (M1x) and T-norm (M2x) families.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{ScoreRecord, ScoreTable};
use crate::stats::fit_normal_stats;

use super::{AnchorSide, FitConfig, FitDiagnostics, MethodId, ModelPayload, NormKey, ZtNormModel};

/// Group the cohort scores of `table` by the method's key rule and fit one
/// normal per group.
///
/// M1/M2 use every cohort comparison of an anchor, including cross-demographic
/// ones. The demographic-aware variants keep only records whose cohort-side
/// demographic matches the anchor's; mismatches and records lacking the needed
/// labels are skipped and counted in the diagnostics.
pub(super) fn fit_ztnorm(
    table: &ScoreTable,
    method: MethodId,
    config: &FitConfig,
) -> Result<(ModelPayload, FitDiagnostics)> {
    let anchor_side = match method {
        MethodId::M1 | MethodId::M1_1 | MethodId::M1_2 => AnchorSide::Gallery,
        MethodId::M2 | MethodId::M2_1 | MethodId::M2_2 => AnchorSide::Probe,
        other => {
            return Err(Error::InvalidSpec(format!(
                "{other} is not a Z-norm or T-norm variant"
            )))
        }
    };

    let mut groups: BTreeMap<NormKey, Vec<f64>> = BTreeMap::new();
    let mut diagnostics = FitDiagnostics::default();

    for record in table.records() {
        let (anchor_subject, anchor_demo, cohort_demo) = sides(record, anchor_side);
        let key = match method {
            MethodId::M1 | MethodId::M2 => NormKey::BySubject {
                subject: anchor_subject.to_owned(),
            },
            MethodId::M1_1 | MethodId::M2_1 | MethodId::M1_2 | MethodId::M2_2 => {
                let Some(anchor_demo) = anchor_demo else {
                    diagnostics.excluded_unlabeled += 1;
                    continue;
                };
                let Some(cohort_demo) = cohort_demo else {
                    diagnostics.excluded_unlabeled += 1;
                    continue;
                };
                if anchor_demo != cohort_demo {
                    diagnostics.excluded_cross_demo += 1;
                    continue;
                }
                if matches!(method, MethodId::M1_1 | MethodId::M2_1) {
                    NormKey::BySubjectAndDemo {
                        subject: anchor_subject.to_owned(),
                        demo: anchor_demo.to_owned(),
                    }
                } else {
                    NormKey::ByDemo {
                        demo: anchor_demo.to_owned(),
                    }
                }
            }
            _ => unreachable!("method checked above"),
        };
        groups.entry(key).or_default().push(record.score);
        diagnostics.used_records += 1;
    }

    let mut stats_by_key = BTreeMap::new();
    for (key, scores) in groups {
        if scores.len() < config.min_cohort_count {
            return Err(Error::InsufficientCohort {
                key: key.to_string(),
                count: scores.len(),
                required: config.min_cohort_count,
            });
        }
        let stats = fit_normal_stats(&scores)?;
        stats_by_key.insert(key, stats);
    }
    diagnostics.groups = stats_by_key.len();

    Ok((
        ModelPayload::ZtNorm(ZtNormModel {
            anchor_side,
            stats_by_key,
        }),
        diagnostics,
    ))
}

/// (anchor subject, anchor demographic, cohort-side demographic) of a record.
fn sides(record: &ScoreRecord, anchor_side: AnchorSide) -> (&str, Option<&str>, Option<&str>) {
    match anchor_side {
        AnchorSide::Gallery => (
            record.gallery_subject.as_str(),
            Some(record.gallery_demo.value.as_str()),
            record.probe_demo.as_ref().map(|d| d.value.as_str()),
        ),
        AnchorSide::Probe => (
            record.probe_subject.as_str(),
            record.probe_demo.as_ref().map(|d| d.value.as_str()),
            Some(record.gallery_demo.value.as_str()),
        ),
    }
}
