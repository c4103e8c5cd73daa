//! `fairscore evaluate`: fairness reports per input plus assembled
//! comparison tables.
//!
//! Outputs in the target directory:
//! - `report_<tag>.json` (or a single `reports.csv` with `--format csv`)
//! - `comparison.csv` with one row per method: tag, TMR (%, two decimals),
//!   and the fairness metric
//! - `breakdown.csv` with per-demographic FMR/FNMR/TMR per method
//! - `contributions.csv` with the FMR/FNMR factor shares and their
//!   difference per method
//! - `provenance.json`, and `failures.json` in lenient mode

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use fairscore_core::metrics::{evaluate, FairnessReport, WermConfig};
use fairscore_core::{MethodId, TableKind};

use crate::provenance::Provenance;
use crate::{parse_axis, CliError, EvaluateArgs};

use super::{ensure_out_dir, read_table, to_pretty_json, write_file};

/// Method tag of an input file: the stem, with a `normalized_` prefix
/// resolved to the canonical method token.
fn tag_of(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if let Some(token) = stem.strip_prefix("normalized_") {
        if let Ok(method) = MethodId::from_str(token) {
            return method.token().to_string();
        }
    }
    stem
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let axis = parse_axis(&args.axis)?;
    let config = WermConfig {
        alpha_weight: args.alpha,
        epsilon: args.epsilon,
        fmr_target: args.fmr_target,
    };
    config.validate()?;
    let lenient = args.lenient;

    let mut tags = Vec::new();
    for path in &args.inputs {
        let tag = tag_of(path);
        if tags.contains(&tag) {
            return Err(CliError::Config(format!(
                "duplicate input tag {tag:?}; rename the inputs"
            )));
        }
        tags.push(tag);
    }

    ensure_out_dir(&args.out)?;
    let mut reports: Vec<FairnessReport> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (path, tag) in args.inputs.iter().zip(&tags) {
        let outcome = read_table(path, TableKind::Test, axis).and_then(|table| {
            let impostors = table
                .records()
                .iter()
                .filter(|r| r.pair_type == fairscore_core::PairType::Impostor)
                .count();
            if (impostors as f64) * config.fmr_target < 1.0 {
                eprintln!(
                    "warning: {tag}: {impostors} impostor scores cannot resolve an FMR of {}; \
                     the achievable grid is coarse",
                    config.fmr_target
                );
            }
            evaluate(&table, tag, &config).map_err(CliError::from)
        });
        match outcome {
            Ok(report) => reports.push(report),
            Err(err) if lenient => failures.push((tag.clone(), err.to_string())),
            Err(err) => return Err(err),
        }
    }

    if args.format == "json" {
        for report in &reports {
            let mut document = report.to_json();
            let provenance = Provenance::new(
                &[input_of(&args, &report.method)],
                config_echo(&args, &config),
            )?;
            document.as_object_mut().unwrap().insert(
                "provenance".to_string(),
                serde_json::to_value(&provenance).map_err(fairscore_core::Error::from)?,
            );
            let mut text =
                serde_json::to_string_pretty(&document).map_err(fairscore_core::Error::from)?;
            text.push('\n');
            write_file(
                &args
                    .out
                    .join(format!("report_{}.json", file_tag(&report.method))),
                &text,
            )?;
        }
    } else {
        let mut rows = String::from("method,threshold,werm,r_fmr,r_fnmr,delta,tmr_overall\n");
        for report in &reports {
            rows.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.method,
                report.threshold,
                report.werm,
                report.r_fmr,
                report.r_fnmr,
                report.delta,
                report.tmr_overall
            ));
        }
        write_file(&args.out.join("reports.csv"), &rows)?;
    }

    // comparison table: one row per method, TMR in percent
    let mut comparison = String::from("method,tmr,werm\n");
    for report in &reports {
        comparison.push_str(&format!(
            "{},{:.2},{:.4}\n",
            report.method,
            report.tmr_overall * 100.0,
            report.werm
        ));
    }
    write_file(&args.out.join("comparison.csv"), &comparison)?;

    let mut breakdown = String::from("method,demo,fmr,fnmr,tmr\n");
    for report in &reports {
        for (label, rates) in &report.rates.per_demo {
            breakdown.push_str(&format!(
                "{},{},{},{},{}\n",
                report.method,
                label,
                rates.fmr,
                rates.fnmr,
                1.0 - rates.fnmr
            ));
        }
    }
    write_file(&args.out.join("breakdown.csv"), &breakdown)?;

    let mut contributions = String::from("method,r_fmr,r_fnmr,delta\n");
    for report in &reports {
        contributions.push_str(&format!(
            "{},{},{},{}\n",
            report.method, report.r_fmr, report.r_fnmr, report.delta
        ));
    }
    write_file(&args.out.join("contributions.csv"), &contributions)?;

    if lenient {
        let failed: Vec<_> = failures
            .iter()
            .map(|(tag, message)| json!({"tag": tag, "error": message}))
            .collect();
        write_file(&args.out.join("failures.json"), &to_pretty_json(&failed)?)?;
    }

    let input_refs: Vec<&Path> = args.inputs.iter().map(PathBuf::as_path).collect();
    let provenance = Provenance::new(&input_refs, config_echo(&args, &config))?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}

fn input_of<'a>(args: &'a EvaluateArgs, tag: &str) -> &'a Path {
    args.inputs
        .iter()
        .find(|p| tag_of(p) == tag)
        .map(PathBuf::as_path)
        .unwrap_or_else(|| args.inputs[0].as_path())
}

fn file_tag(tag: &str) -> String {
    tag.to_ascii_lowercase().replace(['/', '\\'], "_")
}

fn config_echo(args: &EvaluateArgs, config: &WermConfig) -> serde_json::Value {
    json!({
        "command": "evaluate",
        "axis": args.axis,
        "fmr_target": config.fmr_target,
        "alpha": config.alpha_weight,
        "epsilon": config.epsilon,
        "format": args.format,
        "mode": if args.lenient { "lenient" } else { "strict" },
    })
}
