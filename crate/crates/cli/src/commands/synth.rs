//! `fairscore synth`: generate a synthetic biased score ecosystem.

use serde_json::json;

use fairscore_core::protocols::write_score_table_to_path;
use fairscore_core::synthetic::{biased_two_group_spec, generate, SyntheticSpec};

use crate::provenance::Provenance;
use crate::{CliError, SynthArgs};

use super::{ensure_out_dir, read_to_string, to_pretty_json, write_file};

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "spec {} does not exist",
                    path.display()
                )));
            }
            SyntheticSpec::from_json_str(&read_to_string(path)?)?
        }
        None => biased_two_group_spec(7),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    ensure_out_dir(&args.out)?;
    let tables = generate(&spec)?;
    write_score_table_to_path(&tables.test, &args.out.join("test.csv"))?;
    write_score_table_to_path(&tables.gallery_cohort, &args.out.join("gallery_cohort.csv"))?;
    write_score_table_to_path(&tables.probe_cohort, &args.out.join("probe_cohort.csv"))?;
    write_score_table_to_path(&tables.cohort_cohort, &args.out.join("cohort_cohort.csv"))?;
    write_file(&args.out.join("spec_echo.json"), &spec.to_json_string()?)?;
    write_file(
        &args.out.join("synth_report.json"),
        &to_pretty_json(&json!({
            "clipped": tables.clipped,
            "records": {
                "test": tables.test.len(),
                "gallery_cohort": tables.gallery_cohort.len(),
                "probe_cohort": tables.probe_cohort.len(),
                "cohort_cohort": tables.cohort_cohort.len(),
            },
        }))?,
    )?;

    let inputs: Vec<&std::path::Path> = args.spec.iter().map(|p| p.as_path()).collect();
    let provenance = Provenance::new(
        &inputs,
        json!({
            "command": "synth",
            "seed": spec.seed,
            "spec_from_file": args.spec.is_some(),
        }),
    )?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}
