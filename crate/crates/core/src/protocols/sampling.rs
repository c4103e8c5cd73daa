//! Distribution-preserving impostor subsampling.
//!
//! Balancing is realized as pooled-quantile stratification: the pooled
//! impostor score range is split into equal-mass bins, and each demographic
//! is sampled proportionally to the pooled bin masses, so the subsample
//! follows the original score distribution.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairType, ScoreTable, TableKind};
use crate::rng::stream_rng;

/// Settings for [`subsample_balanced`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Impostor records to keep per demographic.
    pub per_demo_impostor_count: usize,
    /// Number of equal-mass bins the pooled impostor distribution is split
    /// into.
    pub quantile_bins: usize,
    pub seed: u64,
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_demo_impostor_count == 0 {
            return Err(Error::InvalidSpec(
                "per_demo_impostor_count must be at least 1".into(),
            ));
        }
        if self.quantile_bins == 0 {
            return Err(Error::InvalidSpec(
                "quantile_bins must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics of one subsampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleReport {
    /// Upper cut values separating the bins (length `quantile_bins - 1`).
    pub bin_cuts: Vec<f64>,
    /// Pooled impostor count per bin.
    pub pooled_bin_counts: Vec<usize>,
    /// Records whose bin quota had to move to a neighboring bin because the
    /// demographic had too few records there.
    pub redistributed: usize,
}

/// Keep all genuine records and exactly `per_demo_impostor_count` impostor
/// records per demographic, sampled without replacement proportionally to the
/// pooled quantile-bin masses. Deterministic in the seed; output preserves
/// input record order.
pub fn subsample_balanced(
    table: &ScoreTable,
    spec: &SamplingSpec,
) -> Result<(ScoreTable, SubsampleReport)> {
    spec.validate()?;
    if table.kind() != TableKind::Test {
        return Err(Error::TableKindMismatch {
            expected: TableKind::Test,
            found: table.kind(),
        });
    }

    // pooled impostor scores define the bin cuts
    let mut pooled: Vec<f64> = Vec::new();
    let mut per_demo_indices: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (index, record) in table.records().iter().enumerate() {
        if record.pair_type == PairType::Impostor {
            pooled.push(record.score);
            per_demo_indices
                .entry(record.gallery_demo.value.as_str())
                .or_default()
                .push(index);
        }
    }
    if pooled.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    for (label, indices) in &per_demo_indices {
        if indices.len() < spec.per_demo_impostor_count {
            return Err(Error::InsufficientRecords {
                label: (*label).to_string(),
                available: indices.len(),
                requested: spec.per_demo_impostor_count,
            });
        }
    }

    let bins = spec.quantile_bins;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let bin_cuts: Vec<f64> = (1..bins).map(|k| sorted[k * sorted.len() / bins]).collect();
    let bin_of = |score: f64| bin_cuts.partition_point(|&c| c <= score);

    let mut pooled_bin_counts = vec![0usize; bins];
    for &score in &pooled {
        pooled_bin_counts[bin_of(score)] += 1;
    }
    let pooled_total = pooled.len() as f64;

    let mut rng = stream_rng(spec.seed, 0);
    let mut selected: Vec<usize> = Vec::new();
    let mut redistributed = 0usize;

    for indices in per_demo_indices.values() {
        // records of this demographic, split by bin
        let mut by_bin: Vec<Vec<usize>> = vec![Vec::new(); bins];
        for &index in indices {
            by_bin[bin_of(table.records()[index].score)].push(index);
        }

        // largest-remainder quotas proportional to the pooled masses
        let count = spec.per_demo_impostor_count;
        let targets: Vec<f64> = pooled_bin_counts
            .iter()
            .map(|&m| count as f64 * m as f64 / pooled_total)
            .collect();
        let mut quotas: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
        let assigned: usize = quotas.iter().sum();
        let mut order: Vec<usize> = (0..bins).collect();
        order.sort_by(|&a, &b| {
            let fa = targets[a] - targets[a].floor();
            let fb = targets[b] - targets[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &b in order.iter().take(count - assigned) {
            quotas[b] += 1;
        }

        // push quota a bin cannot fill to its nearest neighbors
        for b in 0..bins {
            if quotas[b] > by_bin[b].len() {
                let mut excess = quotas[b] - by_bin[b].len();
                redistributed += excess;
                quotas[b] = by_bin[b].len();
                for d in 1..bins {
                    for neighbor in [b.checked_sub(d), b.checked_add(d)] {
                        let Some(n) = neighbor.filter(|&n| n < bins) else {
                            continue;
                        };
                        // a not-yet-processed neighbor may itself be over
                        // quota; saturate and let its own pass push on
                        let capacity = by_bin[n].len().saturating_sub(quotas[n]);
                        let take = excess.min(capacity);
                        quotas[n] += take;
                        excess -= take;
                    }
                    if excess == 0 {
                        break;
                    }
                }
                debug_assert_eq!(excess, 0, "total availability was checked upfront");
            }
        }

        // partial Fisher-Yates per bin
        for (b, quota) in quotas.iter().enumerate() {
            let pool = &mut by_bin[b];
            for slot in 0..*quota {
                let pick = rng.gen_range(slot..pool.len());
                pool.swap(slot, pick);
            }
            selected.extend_from_slice(&pool[..*quota]);
        }
    }

    selected.sort_unstable();
    let mut keep = vec![false; table.len()];
    for index in selected {
        keep[index] = true;
    }
    let records: Vec<_> = table
        .records()
        .iter()
        .enumerate()
        .filter(|(index, record)| record.pair_type == PairType::Genuine || keep[*index])
        .map(|(_, record)| record.clone())
        .collect();
    let out = ScoreTable::new(table.kind(), table.manifest().clone(), records)?;
    Ok((
        out,
        SubsampleReport {
            bin_cuts,
            pooled_bin_counts,
            redistributed,
        },
    ))
}
