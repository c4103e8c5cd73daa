//! Random comparison-pair generation: uniform genuine and impostor pairs
//! within each demographic, plus replicate splits.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PairType;
use crate::rng::{stream_rng, sub_seed};

use super::DatasetManifest;

pub const PAIR_CSV_HEADER: [&str; 6] = [
    "pair_type",
    "subject_a",
    "sample_a",
    "subject_b",
    "sample_b",
    "demo",
];

/// One generated comparison pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedPair {
    pub pair_type: PairType,
    pub subject_a: String,
    pub sample_a: String,
    pub subject_b: String,
    pub sample_b: String,
    pub demo: String,
}

/// Uniform random genuine pairs (two distinct samples of one subject) and
/// impostor pairs (samples of two distinct subjects sharing the demographic,
/// and the secondary attribute when the manifest carries one), without
/// duplicate unordered pairs, deterministic in the seed.
pub fn generate_random_pairs(
    manifest: &DatasetManifest,
    genuine_per_demo: usize,
    impostor_per_demo: usize,
    seed: u64,
) -> Result<Vec<GeneratedPair>> {
    manifest.validate()?;
    let mut rng = stream_rng(seed, 0);
    let mut pairs = Vec::new();
    for label in &manifest.labels {
        let subjects: Vec<(&str, &super::SubjectEntry)> = manifest
            .subjects
            .iter()
            .filter(|(_, e)| &e.demo == label)
            .map(|(id, e)| (id.as_str(), e))
            .collect();
        genuine_pairs(label, &subjects, genuine_per_demo, &mut rng, &mut pairs)?;
        impostor_pairs(label, &subjects, impostor_per_demo, &mut rng, &mut pairs)?;
    }
    Ok(pairs)
}

fn choose2(n: u128) -> u128 {
    n * n.saturating_sub(1) / 2
}

fn genuine_pairs(
    label: &str,
    subjects: &[(&str, &super::SubjectEntry)],
    requested: usize,
    rng: &mut ChaCha12Rng,
    out: &mut Vec<GeneratedPair>,
) -> Result<()> {
    let weights: Vec<u128> = subjects
        .iter()
        .map(|(_, e)| choose2(e.samples.len() as u128))
        .collect();
    let universe: u128 = weights.iter().sum();
    if (requested as u128) > universe {
        return Err(Error::InsufficientPairs {
            label: label.to_string(),
            available: universe,
            requested,
        });
    }
    if requested == 0 {
        return Ok(());
    }

    let emit = |s: usize, i: usize, j: usize| -> GeneratedPair {
        let (id, entry) = subjects[s];
        GeneratedPair {
            pair_type: PairType::Genuine,
            subject_a: id.to_string(),
            sample_a: entry.samples[i].clone(),
            subject_b: id.to_string(),
            sample_b: entry.samples[j].clone(),
            demo: label.to_string(),
        }
    };

    if (requested as u128) * 2 >= universe {
        // dense request: enumerate the whole universe and shuffle
        let mut all: Vec<(usize, usize, usize)> = Vec::new();
        for (s, (_, entry)) in subjects.iter().enumerate() {
            for i in 0..entry.samples.len() {
                for j in (i + 1)..entry.samples.len() {
                    all.push((s, i, j));
                }
            }
        }
        partial_shuffle(&mut all, requested, rng);
        out.extend(
            all.into_iter()
                .take(requested)
                .map(|(s, i, j)| emit(s, i, j)),
        );
        return Ok(());
    }

    // sparse request: weighted subject pick, uniform pair within the subject
    let mut prefix = Vec::with_capacity(weights.len());
    let mut acc = 0u128;
    for &w in &weights {
        acc += w;
        prefix.push(acc);
    }
    let mut seen: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut attempts = 0usize;
    let max_attempts = 1000 + 50 * requested;
    while seen.len() < requested {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidSpec(format!(
                "genuine pair sampling for {label:?} stalled"
            )));
        }
        let u = rng.gen_range(0..universe);
        let s = prefix.partition_point(|&p| p <= u);
        let n = subjects[s].1.samples.len();
        let mut p = (u - if s == 0 { 0 } else { prefix[s - 1] }) as usize;
        // decode the p-th pair (i, j) with i < j over n samples
        let mut i = 0;
        while p >= n - 1 - i {
            p -= n - 1 - i;
            i += 1;
        }
        let j = i + 1 + p;
        if seen.insert((s, i, j)) {
            out.push(emit(s, i, j));
        }
    }
    Ok(())
}

fn impostor_pairs(
    label: &str,
    subjects: &[(&str, &super::SubjectEntry)],
    requested: usize,
    rng: &mut ChaCha12Rng,
    out: &mut Vec<GeneratedPair>,
) -> Result<()> {
    // subjects grouped by secondary attribute; pairs never cross strata
    let mut strata: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (index, (_, entry)) in subjects.iter().enumerate() {
        strata
            .entry(entry.secondary.as_deref())
            .or_default()
            .push(index);
    }
    let stratum_universe = |members: &[usize]| -> u128 {
        let total: u128 = members
            .iter()
            .map(|&s| subjects[s].1.samples.len() as u128)
            .sum();
        let same: u128 = members
            .iter()
            .map(|&s| {
                let n = subjects[s].1.samples.len() as u128;
                n * n
            })
            .sum();
        (total * total - same) / 2
    };
    let universes: Vec<(Vec<usize>, u128)> = strata
        .into_values()
        .map(|members| {
            let u = stratum_universe(&members);
            (members, u)
        })
        .collect();
    let universe: u128 = universes.iter().map(|(_, u)| u).sum();
    if (requested as u128) > universe {
        return Err(Error::InsufficientPairs {
            label: label.to_string(),
            available: universe,
            requested,
        });
    }
    if requested == 0 {
        return Ok(());
    }

    // key with the lower (subject index, sample index) first
    let normalize = |a: (usize, usize), b: (usize, usize)| if a <= b { (a, b) } else { (b, a) };
    let emit = |a: (usize, usize), b: (usize, usize)| -> GeneratedPair {
        GeneratedPair {
            pair_type: PairType::Impostor,
            subject_a: subjects[a.0].0.to_string(),
            sample_a: subjects[a.0].1.samples[a.1].clone(),
            subject_b: subjects[b.0].0.to_string(),
            sample_b: subjects[b.0].1.samples[b.1].clone(),
            demo: label.to_string(),
        }
    };

    if (requested as u128) * 2 >= universe {
        let mut all: Vec<((usize, usize), (usize, usize))> = Vec::new();
        for (members, _) in &universes {
            for (mi, &sa) in members.iter().enumerate() {
                for &sb in &members[mi + 1..] {
                    for i in 0..subjects[sa].1.samples.len() {
                        for j in 0..subjects[sb].1.samples.len() {
                            all.push(normalize((sa, i), (sb, j)));
                        }
                    }
                }
            }
        }
        partial_shuffle(&mut all, requested, rng);
        out.extend(all.into_iter().take(requested).map(|(a, b)| emit(a, b)));
        return Ok(());
    }

    // stratum pick weighted by its universe, then rejection sampling inside
    let mut prefix = Vec::with_capacity(universes.len());
    let mut acc = 0u128;
    for (_, u) in &universes {
        acc += u;
        prefix.push(acc);
    }
    // per-stratum flat sample index -> (subject, sample)
    let flat: Vec<Vec<(usize, usize)>> = universes
        .iter()
        .map(|(members, _)| {
            members
                .iter()
                .flat_map(|&s| (0..subjects[s].1.samples.len()).map(move |i| (s, i)))
                .collect()
        })
        .collect();

    let mut seen: HashSet<((usize, usize), (usize, usize))> = HashSet::new();
    let mut attempts = 0usize;
    let max_attempts = 1000 + 200 * requested;
    while seen.len() < requested {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidSpec(format!(
                "impostor pair sampling for {label:?} stalled"
            )));
        }
        let u = rng.gen_range(0..universe);
        let stratum = prefix.partition_point(|&p| p <= u);
        let samples = &flat[stratum];
        let a = samples[rng.gen_range(0..samples.len())];
        let b = samples[rng.gen_range(0..samples.len())];
        if a == b || a.0 == b.0 {
            continue;
        }
        let key = normalize(a, b);
        if seen.insert(key) {
            out.push(emit(key.0, key.1));
        }
    }
    Ok(())
}

fn partial_shuffle<T>(items: &mut [T], take: usize, rng: &mut ChaCha12Rng) {
    let take = take.min(items.len());
    for slot in 0..take {
        let pick = rng.gen_range(slot..items.len());
        items.swap(slot, pick);
    }
}

/// `k` independent pair lists from derived sub-seeds: split `i` uses
/// `sub_seed(seed, i)`. Splits may overlap in pairs.
pub fn split_replicates(
    manifest: &DatasetManifest,
    k: usize,
    genuine_per_demo: usize,
    impostor_per_demo: usize,
    seed: u64,
) -> Result<Vec<Vec<GeneratedPair>>> {
    if k == 0 {
        return Err(Error::InvalidSpec("split count must be at least 1".into()));
    }
    (0..k)
        .map(|i| {
            generate_random_pairs(
                manifest,
                genuine_per_demo,
                impostor_per_demo,
                sub_seed(seed, i as u64),
            )
        })
        .collect()
}

/// Write a pair list as CSV
/// (`pair_type,subject_a,sample_a,subject_b,sample_b,demo`).
pub fn write_pair_list<W: Write>(pairs: &[GeneratedPair], writer: W) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer
        .write_record(PAIR_CSV_HEADER)
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    for pair in pairs {
        csv_writer
            .write_record([
                &pair.pair_type.to_string(),
                &pair.subject_a,
                &pair.sample_a,
                &pair.subject_b,
                &pair.sample_b,
                &pair.demo,
            ])
            .map_err(|e| Error::Parse {
                line: 0,
                message: e.to_string(),
            })?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Parse and validate a pair-list CSV.
pub fn read_pair_list<R: Read>(reader: R) -> Result<Vec<GeneratedPair>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    if headers != PAIR_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("bad header {:?}", headers.join(",")),
        });
    }
    let mut pairs = Vec::new();
    for row in csv_reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let pair_type = PairType::from_str(&row[0]).map_err(|_| Error::Parse {
            line,
            message: format!("unknown pair type {:?}", &row[0]),
        })?;
        let pair = GeneratedPair {
            pair_type,
            subject_a: row[1].to_string(),
            sample_a: row[2].to_string(),
            subject_b: row[3].to_string(),
            sample_b: row[4].to_string(),
            demo: row[5].to_string(),
        };
        let consistent = match pair.pair_type {
            PairType::Genuine => pair.subject_a == pair.subject_b && pair.sample_a != pair.sample_b,
            PairType::Impostor => pair.subject_a != pair.subject_b,
        };
        if !consistent {
            return Err(Error::Consistency {
                line,
                message: format!(
                    "{} pair with subjects {:?}/{:?}",
                    pair.pair_type, pair.subject_a, pair.subject_b
                ),
            });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}
