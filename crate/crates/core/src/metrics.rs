//! Error rates, operating-point selection, and fairness summary metrics.
//!
//! Tie conventions: FMR counts scores strictly above the threshold, FNMR
//! counts scores at or below it. The two rates are exact set complements on
//! the pooled multiset, so every score is accounted for exactly once at any
//! threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairType, ScoreTable, TableKind};

/// Settings for the worst-case-to-geometric-mean fairness metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WermConfig {
    /// Weight of the FMR factor; the FNMR factor gets `1 - alpha_weight`.
    pub alpha_weight: f64,
    /// Added to the product of rates before the n-th root, keeping the
    /// geometric mean finite when a rate is zero.
    pub epsilon: f64,
    /// Combined-set FMR the operating threshold is chosen at.
    pub fmr_target: f64,
}

impl Default for WermConfig {
    fn default() -> Self {
        Self {
            alpha_weight: 0.5,
            epsilon: 1e-5,
            fmr_target: 1e-3,
        }
    }
}

impl WermConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_weight) {
            return Err(Error::InvalidSpec(format!(
                "alpha_weight {} outside [0, 1]",
                self.alpha_weight
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if !(self.fmr_target > 0.0 && self.fmr_target < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "fmr_target {} outside (0, 1)",
                self.fmr_target
            )));
        }
        Ok(())
    }
}

/// Fraction of impostor scores strictly above `tau`.
pub fn fmr(impostor_scores: &[f64], tau: f64) -> Result<f64> {
    if impostor_scores.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let above = impostor_scores.iter().filter(|&&s| s > tau).count();
    Ok(above as f64 / impostor_scores.len() as f64)
}

/// Fraction of genuine scores at or below `tau`.
pub fn fnmr(genuine_scores: &[f64], tau: f64) -> Result<f64> {
    if genuine_scores.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let at_or_below = genuine_scores.iter().filter(|&&s| s <= tau).count();
    Ok(at_or_below as f64 / genuine_scores.len() as f64)
}

/// An operating threshold selected from an impostor score set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub tau: f64,
    /// FMR actually reached at `tau`; at most the requested target, possibly
    /// far below it under heavy ties.
    pub achieved_fmr: f64,
    /// Set when the list is too short to resolve the target (`n * target < 1`).
    pub grid_coarse: bool,
}

/// The smallest score value in the set whose FMR is at or below `target`.
///
/// FMR is non-increasing in the threshold, so this is the maximal rejection
/// region consistent with the target: at the next-lower distinct score the
/// FMR exceeds `target`.
pub fn threshold_at_fmr(impostor_scores: &[f64], target: f64) -> Result<ThresholdChoice> {
    if impostor_scores.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "FMR target {target} outside (0, 1)"
        )));
    }
    let mut sorted = impostor_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let grid_coarse = (n as f64) * target < 1.0;

    let mut i = 0;
    while i < n {
        let value = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == value {
            j += 1;
        }
        let achieved = (n - j) as f64 / n as f64;
        if achieved <= target {
            return Ok(ThresholdChoice {
                tau: value,
                achieved_fmr: achieved,
                grid_coarse,
            });
        }
        i = j;
    }
    unreachable!("the maximum score always achieves FMR 0")
}

/// Per-demographic error rates at one shared threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoRates {
    pub fmr: f64,
    pub fnmr: f64,
    pub n_impostor: usize,
    pub n_genuine: usize,
}

/// Error rates of every manifest demographic at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub threshold: f64,
    pub per_demo: BTreeMap<String, DemoRates>,
}

/// Per-demographic FMR/FNMR at the shared threshold `tau`.
///
/// Records are attributed to the gallery-side demographic. Every manifest
/// label must contribute at least one record of each pair type.
pub fn compute_rates(table: &ScoreTable, tau: f64) -> Result<RateSet> {
    if table.kind() != TableKind::Test {
        return Err(Error::TableKindMismatch {
            expected: TableKind::Test,
            found: table.kind(),
        });
    }
    let mut impostor: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut genuine: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for record in table.records() {
        let side = match record.pair_type {
            PairType::Impostor => &mut impostor,
            PairType::Genuine => &mut genuine,
        };
        side.entry(record.gallery_demo.value.as_str())
            .or_default()
            .push(record.score);
    }
    let mut per_demo = BTreeMap::new();
    for label in &table.manifest().labels {
        let impostors = impostor
            .get(label.as_str())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        let genuines = genuine
            .get(label.as_str())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        per_demo.insert(
            label.clone(),
            DemoRates {
                fmr: fmr(impostors, tau)?,
                fnmr: fnmr(genuines, tau)?,
                n_impostor: impostors.len(),
                n_genuine: genuines.len(),
            },
        );
    }
    Ok(RateSet {
        threshold: tau,
        per_demo,
    })
}

/// The fairness metric with its factor decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WermBreakdown {
    pub werm: f64,
    /// Scaled worst-case FMR factor divided by the combined metric.
    pub r_fmr: f64,
    /// Scaled worst-case FNMR factor divided by the combined metric.
    pub r_fnmr: f64,
    /// `r_fmr - r_fnmr`: the imbalance between the two factors.
    pub delta: f64,
}

/// Worst-case error rate over demographics relative to the geometric mean,
/// combined across FMR and FNMR:
///
/// ```text
/// A = max_i FMR_i / (prod_i FMR_i + eps)^(1/n)
/// B = max_i FNMR_i / (prod_i FNMR_i + eps)^(1/n)
/// werm = A^alpha * B^(1-alpha)
/// ```
///
/// The decomposition satisfies `r_fmr * r_fnmr * werm = 1`, which doubles as
/// an internal self-check.
pub fn werm(rates: &RateSet, config: &WermConfig) -> Result<WermBreakdown> {
    config.validate()?;
    let n = rates.per_demo.len();
    if n < 2 {
        return Err(Error::NotEnoughDemographics { found: n });
    }
    let factor = |pick: fn(&DemoRates) -> f64| -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut product = 1.0;
        for rate in rates.per_demo.values() {
            let r = pick(rate);
            max = max.max(r);
            product *= r;
        }
        max / (product + config.epsilon).powf(1.0 / n as f64)
    };
    let a = factor(|r| r.fmr);
    let b = factor(|r| r.fnmr);
    let alpha = config.alpha_weight;
    let werm = a.powf(alpha) * b.powf(1.0 - alpha);
    let r_fmr = a.powf(alpha) / werm;
    let r_fnmr = b.powf(1.0 - alpha) / werm;
    Ok(WermBreakdown {
        werm,
        r_fmr,
        r_fnmr,
        delta: r_fmr - r_fnmr,
    })
}

/// Complete fairness evaluation of one score table at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Method tag, e.g. `"baseline"` or `"M3"`.
    pub method: String,
    pub threshold: f64,
    pub rates: RateSet,
    pub werm: f64,
    pub r_fmr: f64,
    pub r_fnmr: f64,
    pub delta: f64,
    /// `1 - FNMR` of all genuine scores pooled, at the same threshold.
    pub tmr_overall: f64,
}

impl FairnessReport {
    /// JSON form with the fixed field names
    /// `{method, threshold, per_demo:{label:{fmr,fnmr,tmr}}, werm, r_fmr,
    /// r_fnmr, delta, tmr_overall}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut per_demo = serde_json::Map::new();
        for (label, rates) in &self.rates.per_demo {
            per_demo.insert(
                label.clone(),
                serde_json::json!({
                    "fmr": rates.fmr,
                    "fnmr": rates.fnmr,
                    "tmr": 1.0 - rates.fnmr,
                }),
            );
        }
        serde_json::json!({
            "method": self.method,
            "threshold": self.threshold,
            "per_demo": per_demo,
            "werm": self.werm,
            "r_fmr": self.r_fmr,
            "r_fnmr": self.r_fnmr,
            "delta": self.delta,
            "tmr_overall": self.tmr_overall,
        })
    }
}

/// Full pipeline for one table: pick the threshold at the configured FMR on
/// the pooled impostor set, then compute per-demographic rates and the
/// fairness breakdown.
pub fn evaluate(table: &ScoreTable, method: &str, config: &WermConfig) -> Result<FairnessReport> {
    let impostors = table.scores_of(PairType::Impostor);
    let genuines = table.scores_of(PairType::Genuine);
    let choice = threshold_at_fmr(&impostors, config.fmr_target)?;
    let rates = compute_rates(table, choice.tau)?;
    let breakdown = werm(&rates, config)?;
    let tmr_overall = 1.0 - fnmr(&genuines, choice.tau)?;
    Ok(FairnessReport {
        method: method.to_string(),
        threshold: choice.tau,
        rates,
        werm: breakdown.werm,
        r_fmr: breakdown.r_fmr,
        r_fnmr: breakdown.r_fnmr,
        delta: breakdown.delta,
        tmr_overall,
    })
}

/// Mean and population standard deviation of one metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

/// Cross-replicate aggregation of reports sharing one method tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub method: String,
    pub n_reports: usize,
    /// Keyed by metric name; per-demographic rates appear as
    /// `fmr/<label>`, `fnmr/<label>`, `tmr/<label>`.
    pub metrics: BTreeMap<String, MetricSummary>,
}

/// Aggregate replicate reports into per-metric mean and population std.
pub fn aggregate_splits(reports: &[FairnessReport]) -> Result<SplitSummary> {
    if reports.len() < 2 {
        return Err(Error::NotEnoughReports {
            found: reports.len(),
            required: 2,
        });
    }
    let method = reports[0].method.clone();
    for report in reports {
        if report.method != method {
            return Err(Error::TagMismatch {
                expected: method,
                found: report.method.clone(),
            });
        }
    }
    let labels: Vec<String> = reports[0].rates.per_demo.keys().cloned().collect();
    for report in reports {
        let found: Vec<String> = report.rates.per_demo.keys().cloned().collect();
        if found != labels {
            return Err(Error::TagMismatch {
                expected: format!("labels {labels:?}"),
                found: format!("labels {found:?}"),
            });
        }
    }

    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for report in reports {
        let mut push = |key: String, value: f64| series.entry(key).or_default().push(value);
        push("threshold".into(), report.threshold);
        push("werm".into(), report.werm);
        push("r_fmr".into(), report.r_fmr);
        push("r_fnmr".into(), report.r_fnmr);
        push("delta".into(), report.delta);
        push("tmr_overall".into(), report.tmr_overall);
        for (label, rates) in &report.rates.per_demo {
            push(format!("fmr/{label}"), rates.fmr);
            push(format!("fnmr/{label}"), rates.fnmr);
            push(format!("tmr/{label}"), 1.0 - rates.fnmr);
        }
    }
    let metrics = series
        .into_iter()
        .map(|(key, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (
                key,
                MetricSummary {
                    mean,
                    std: var.sqrt(),
                },
            )
        })
        .collect();
    Ok(SplitSummary {
        method,
        n_reports: reports.len(),
        metrics,
    })
}
