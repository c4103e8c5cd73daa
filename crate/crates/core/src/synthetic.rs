//! Seedable generator of demographically biased score ecosystems.
//!
//! One spec produces a mutually consistent set of four tables: the test
//! table over gallery subjects, gallery-cohort and probe-cohort tables
//! anchored on those same subjects, and a cohort-cohort table over a
//! disjoint cohort population. Scores are Gaussian per demographic and pair
//! type, clipped to the cosine-similarity range [-1, 1] (the clip count is
//! reported because clipping slightly biases moments at extreme settings).
//!
//! Cross-demographic cohort comparisons are included so that subject-based
//! and demographic-aware methods see different data: their scores draw from
//! the two demographics' averaged impostor parameters. Reproducibility: one
//! ChaCha12 stream per table, records generated in a fixed order.

use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    DemographicAxis, DemographicLabel, PairType, ScoreRecord, ScoreTable, TableKind, TableManifest,
};
use crate::rng::{standard_normal, stream_rng};

/// Score-distribution and population sizes for one demographic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoSpec {
    pub genuine_mu: f64,
    pub genuine_sigma: f64,
    pub impostor_mu: f64,
    pub impostor_sigma: f64,
    /// Genuine records in the test table (and in the cohort-cohort table).
    pub n_genuine: usize,
    /// Impostor records in the test table (and in the cohort-cohort table).
    pub n_impostor: usize,
    pub n_cohort_subjects: usize,
    pub n_gallery_subjects: usize,
}

/// Full generator specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub axis: DemographicAxis,
    pub seed: u64,
    pub demographics: BTreeMap<String, DemoSpec>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.demographics.is_empty() {
            return Err(Error::InvalidSpec("no demographics in spec".into()));
        }
        for (label, demo) in &self.demographics {
            let sigma_ok = |s: f64| s.is_finite() && s > 0.0;
            if !sigma_ok(demo.genuine_sigma) || !sigma_ok(demo.impostor_sigma) {
                return Err(Error::InvalidSpec(format!(
                    "demographic {label:?}: sigmas must be positive"
                )));
            }
            if demo.genuine_mu <= demo.impostor_mu {
                return Err(Error::InvalidSpec(format!(
                    "demographic {label:?}: genuine_mu must exceed impostor_mu"
                )));
            }
            if demo.n_genuine == 0 || demo.n_impostor == 0 {
                return Err(Error::InvalidSpec(format!(
                    "demographic {label:?}: counts must be at least 1"
                )));
            }
            if demo.n_gallery_subjects < 2 || demo.n_cohort_subjects < 2 {
                return Err(Error::InvalidSpec(format!(
                    "demographic {label:?}: need at least 2 gallery and 2 cohort subjects"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The four generated tables plus the clip diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTables {
    pub test: ScoreTable,
    pub gallery_cohort: ScoreTable,
    pub probe_cohort: ScoreTable,
    pub cohort_cohort: ScoreTable,
    /// Scores that fell outside [-1, 1] and were clipped.
    pub clipped: usize,
}

struct Sampler {
    rng: ChaCha12Rng,
    clipped: usize,
}

impl Sampler {
    fn draw(&mut self, mu: f64, sigma: f64) -> f64 {
        let s = mu + sigma * standard_normal(&mut self.rng);
        if !(-1.0..=1.0).contains(&s) {
            self.clipped += 1;
            s.clamp(-1.0, 1.0)
        } else {
            s
        }
    }
}

fn gallery_id(label: &str, index: usize) -> String {
    format!("g-{label}-{index:05}")
}

fn cohort_id(label: &str, index: usize) -> String {
    format!("c-{label}-{index:05}")
}

/// Deterministic distinct pairing: the k-th impostor record of a population
/// of `n` subjects pairs subject `k % n` with an offset partner.
fn impostor_pair(k: usize, n: usize) -> (usize, usize) {
    let i = k % n;
    let offset = 1 + (k / n) % (n - 1);
    (i, (i + offset) % n)
}

/// Generate the four tables of `spec`. Bitwise reproducible: the same spec
/// yields identical tables.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticTables> {
    spec.validate()?;
    let manifest = TableManifest::new(spec.axis, spec.demographics.keys().cloned());
    let label_of = |value: &str| DemographicLabel::new(spec.axis, value);

    // stream 0: test, 1: gallery x cohort, 2: probe x cohort, 3: cohort x cohort
    let mut clipped = 0usize;

    // test table
    let mut test_records = Vec::new();
    {
        let mut sampler = Sampler {
            rng: stream_rng(spec.seed, 0),
            clipped: 0,
        };
        for (label, demo) in &spec.demographics {
            for k in 0..demo.n_genuine {
                let subject = gallery_id(label, k % demo.n_gallery_subjects);
                test_records.push(ScoreRecord {
                    gallery_subject: subject.clone(),
                    probe_subject: subject,
                    gallery_demo: label_of(label),
                    probe_demo: Some(label_of(label)),
                    pair_type: PairType::Genuine,
                    score: sampler.draw(demo.genuine_mu, demo.genuine_sigma),
                });
            }
            for k in 0..demo.n_impostor {
                let (i, j) = impostor_pair(k, demo.n_gallery_subjects);
                test_records.push(ScoreRecord {
                    gallery_subject: gallery_id(label, i),
                    probe_subject: gallery_id(label, j),
                    gallery_demo: label_of(label),
                    probe_demo: Some(label_of(label)),
                    pair_type: PairType::Impostor,
                    score: sampler.draw(demo.impostor_mu, demo.impostor_sigma),
                });
            }
        }
        clipped += sampler.clipped;
    }

    // anchored cohort tables: every anchor scores against every cohort
    // subject of every demographic
    let anchored =
        |stream: u64, anchor_on_gallery: bool, clipped: &mut usize| -> Vec<ScoreRecord> {
            let mut records = Vec::new();
            let mut sampler = Sampler {
                rng: stream_rng(spec.seed, stream),
                clipped: 0,
            };
            for (anchor_label, anchor_demo) in &spec.demographics {
                for a in 0..anchor_demo.n_gallery_subjects {
                    let anchor = gallery_id(anchor_label, a);
                    for (cohort_label, cohort_demo) in &spec.demographics {
                        let (mu, sigma) = if cohort_label == anchor_label {
                            (anchor_demo.impostor_mu, anchor_demo.impostor_sigma)
                        } else {
                            // cross-demographic comparisons: averaged parameters
                            (
                                0.5 * (anchor_demo.impostor_mu + cohort_demo.impostor_mu),
                                0.5 * (anchor_demo.impostor_sigma + cohort_demo.impostor_sigma),
                            )
                        };
                        for c in 0..cohort_demo.n_cohort_subjects {
                            let cohort = cohort_id(cohort_label, c);
                            let score = sampler.draw(mu, sigma);
                            let record = if anchor_on_gallery {
                                ScoreRecord {
                                    gallery_subject: anchor.clone(),
                                    probe_subject: cohort,
                                    gallery_demo: label_of(anchor_label),
                                    probe_demo: Some(label_of(cohort_label)),
                                    pair_type: PairType::Impostor,
                                    score,
                                }
                            } else {
                                ScoreRecord {
                                    gallery_subject: cohort,
                                    probe_subject: anchor.clone(),
                                    gallery_demo: label_of(cohort_label),
                                    probe_demo: Some(label_of(anchor_label)),
                                    pair_type: PairType::Impostor,
                                    score,
                                }
                            };
                            records.push(record);
                        }
                    }
                }
            }
            *clipped += sampler.clipped;
            records
        };
    let gallery_cohort_records = anchored(1, true, &mut clipped);
    let probe_cohort_records = anchored(2, false, &mut clipped);

    // cohort x cohort: per demographic the same genuine/impostor counts as
    // the test table, plus cross-demographic impostors (a quarter of the
    // averaged impostor count per demographic pair)
    let mut cohort_records = Vec::new();
    {
        let mut sampler = Sampler {
            rng: stream_rng(spec.seed, 3),
            clipped: 0,
        };
        for (label, demo) in &spec.demographics {
            for k in 0..demo.n_genuine {
                let subject = cohort_id(label, k % demo.n_cohort_subjects);
                cohort_records.push(ScoreRecord {
                    gallery_subject: subject.clone(),
                    probe_subject: subject,
                    gallery_demo: label_of(label),
                    probe_demo: Some(label_of(label)),
                    pair_type: PairType::Genuine,
                    score: sampler.draw(demo.genuine_mu, demo.genuine_sigma),
                });
            }
            for k in 0..demo.n_impostor {
                let (i, j) = impostor_pair(k, demo.n_cohort_subjects);
                cohort_records.push(ScoreRecord {
                    gallery_subject: cohort_id(label, i),
                    probe_subject: cohort_id(label, j),
                    gallery_demo: label_of(label),
                    probe_demo: Some(label_of(label)),
                    pair_type: PairType::Impostor,
                    score: sampler.draw(demo.impostor_mu, demo.impostor_sigma),
                });
            }
        }
        let labels: Vec<&String> = spec.demographics.keys().collect();
        for (ai, a_label) in labels.iter().enumerate() {
            for b_label in labels.iter().skip(ai + 1) {
                let a = &spec.demographics[*a_label];
                let b = &spec.demographics[*b_label];
                let n_cross = (a.n_impostor + b.n_impostor) / 8;
                let mu = 0.5 * (a.impostor_mu + b.impostor_mu);
                let sigma = 0.5 * (a.impostor_sigma + b.impostor_sigma);
                for k in 0..n_cross {
                    cohort_records.push(ScoreRecord {
                        gallery_subject: cohort_id(a_label, k % a.n_cohort_subjects),
                        probe_subject: cohort_id(
                            b_label,
                            (k / a.n_cohort_subjects) % b.n_cohort_subjects,
                        ),
                        gallery_demo: label_of(a_label),
                        probe_demo: Some(label_of(b_label)),
                        pair_type: PairType::Impostor,
                        score: sampler.draw(mu, sigma),
                    });
                }
            }
        }
        clipped += sampler.clipped;
    }

    Ok(SyntheticTables {
        test: ScoreTable::new(TableKind::Test, manifest.clone(), test_records)?,
        gallery_cohort: ScoreTable::new(
            TableKind::GalleryCohort,
            manifest.clone(),
            gallery_cohort_records,
        )?,
        probe_cohort: ScoreTable::new(
            TableKind::ProbeCohort,
            manifest.clone(),
            probe_cohort_records,
        )?,
        cohort_cohort: ScoreTable::new(TableKind::CohortCohort, manifest, cohort_records)?,
        clipped,
    })
}

/// Two-demographic spec with one group's scores shifted, the stock fixture
/// for bias-mitigation experiments.
pub fn biased_two_group_spec(seed: u64) -> SyntheticSpec {
    let base = DemoSpec {
        genuine_mu: 0.55,
        genuine_sigma: 0.12,
        impostor_mu: 0.0,
        impostor_sigma: 0.12,
        n_genuine: 2_000,
        n_impostor: 20_000,
        n_cohort_subjects: 100,
        n_gallery_subjects: 40,
    };
    let mut demographics = BTreeMap::new();
    demographics.insert("group_a".to_string(), base);
    demographics.insert(
        "group_b".to_string(),
        DemoSpec {
            genuine_mu: 0.70,
            impostor_mu: 0.15,
            ..base
        },
    );
    SyntheticSpec {
        axis: DemographicAxis::Ethnicity,
        seed,
        demographics,
    }
}
