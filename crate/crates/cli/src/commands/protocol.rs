//! `fairscore protocol`: subsample, random-pairs, and splits.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::json;

use fairscore_core::protocols::{
    generate_random_pairs, split_replicates, subsample_balanced, write_pair_list,
    write_score_table_to_path, DatasetManifest, SamplingSpec,
};
use fairscore_core::TableKind;

use crate::provenance::Provenance;
use crate::{parse_axis, CliError, RandomPairsArgs, SplitsArgs, SubsampleArgs};

use super::{ensure_out_dir, read_table, read_to_string, to_pretty_json, write_file};

pub fn subsample(args: SubsampleArgs) -> Result<(), CliError> {
    let axis = parse_axis(&args.axis)?;
    ensure_out_dir(&args.out)?;
    let table = read_table(&args.test, TableKind::Test, axis)?;
    let spec = SamplingSpec {
        per_demo_impostor_count: args.count,
        quantile_bins: args.bins,
        seed: args.seed,
    };
    let (subsampled, report) = subsample_balanced(&table, &spec)?;
    write_score_table_to_path(&subsampled, &args.out.join("subsampled.csv"))?;
    write_file(
        &args.out.join("subsample_report.json"),
        &to_pretty_json(&report)?,
    )?;
    let provenance = Provenance::new(
        &[&args.test],
        json!({
            "command": "protocol subsample",
            "axis": args.axis,
            "count": args.count,
            "bins": args.bins,
            "seed": args.seed,
        }),
    )?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "manifest {} does not exist",
            path.display()
        )));
    }
    DatasetManifest::from_json_str(&read_to_string(path)?).map_err(CliError::from)
}

fn write_pairs_file(
    pairs: &[fairscore_core::protocols::GeneratedPair],
    path: &Path,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })?;
    write_pair_list(pairs, BufWriter::new(file)).map_err(CliError::from)
}

pub fn random_pairs(args: RandomPairsArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let manifest = load_manifest(&args.manifest)?;
    let pairs = generate_random_pairs(&manifest, args.genuine, args.impostor, args.seed)?;
    write_pairs_file(&pairs, &args.out.join("pairs.csv"))?;
    let provenance = Provenance::new(
        &[&args.manifest],
        json!({
            "command": "protocol random-pairs",
            "genuine": args.genuine,
            "impostor": args.impostor,
            "seed": args.seed,
        }),
    )?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}

pub fn splits(args: SplitsArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let manifest = load_manifest(&args.manifest)?;
    let lists = split_replicates(&manifest, args.k, args.genuine, args.impostor, args.seed)?;
    for (index, pairs) in lists.iter().enumerate() {
        write_pairs_file(pairs, &args.out.join(format!("pairs_split_{index}.csv")))?;
    }
    let provenance = Provenance::new(
        &[&args.manifest],
        json!({
            "command": "protocol splits",
            "k": args.k,
            "genuine": args.genuine,
            "impostor": args.impostor,
            "seed": args.seed,
        }),
    )?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}
