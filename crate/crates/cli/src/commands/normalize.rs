//! `fairscore normalize`: fit methods on cohort tables, write normalized
//! score tables, serialized models, and fit diagnostics.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use fairscore_core::normalizers::{ErrorMode, FitConfig, NormalizeReport, PlattConfig};
use fairscore_core::protocols::write_score_table_to_path;
use fairscore_core::{Error, MethodId, NormalizerModel, ScoreTable, TableKind};

use crate::provenance::Provenance;
use crate::{parse_axis, CliError, NormalizeArgs};

use super::{ensure_out_dir, read_table, to_pretty_json, write_file};

#[derive(Serialize)]
struct MethodOutcome {
    normalized_csv: String,
    model_json: String,
    converged: bool,
    diagnostics: fairscore_core::normalizers::FitDiagnostics,
    normalize_report: NormalizeReport,
}

pub fn run(args: NormalizeArgs) -> Result<(), CliError> {
    let axis = parse_axis(&args.axis)?;
    let methods = parse_methods(&args.methods)?;
    if methods.is_empty() {
        eprintln!("warning: no methods requested; nothing to do");
        return Ok(());
    }
    let mode = if args.lenient {
        ErrorMode::Lenient
    } else {
        ErrorMode::Strict
    };
    let config = FitConfig {
        min_cohort_count: args.min_cohort_count,
        platt: PlattConfig {
            lambda: args.lambda,
            max_iterations: args.max_iterations,
            ..PlattConfig::default()
        },
    };

    // every requested method must have its statistics table on the command
    // line before any work starts
    let cohort_path_of = |kind: TableKind| -> (&Option<PathBuf>, &str) {
        match kind {
            TableKind::GalleryCohort => (&args.gallery_cohort, "--gallery-cohort"),
            TableKind::ProbeCohort => (&args.probe_cohort, "--probe-cohort"),
            TableKind::CohortCohort => (&args.cohort, "--cohort"),
            TableKind::Test => unreachable!("methods never require the test table"),
        }
    };
    for &method in &methods {
        let kind = method.required_table_kind();
        let (path, flag) = cohort_path_of(kind);
        if path.is_none() {
            return Err(CliError::Config(format!(
                "method {method} requires a {kind} table; pass it with {flag}"
            )));
        }
    }

    ensure_out_dir(&args.out)?;
    let test = read_table(&args.test, TableKind::Test, axis)?;

    let mut cohorts: BTreeMap<TableKind, ScoreTable> = BTreeMap::new();
    for &method in &methods {
        let kind = method.required_table_kind();
        if let std::collections::btree_map::Entry::Vacant(entry) = cohorts.entry(kind) {
            let (path, _) = cohort_path_of(kind);
            entry.insert(read_table(path.as_ref().unwrap(), kind, axis)?);
        }
    }

    let mut outcomes: BTreeMap<String, MethodOutcome> = BTreeMap::new();
    for &method in &methods {
        let cohort = &cohorts[&method.required_table_kind()];
        let model = NormalizerModel::fit(method, cohort, &config)?;
        if !model.converged() {
            if mode == ErrorMode::Strict {
                return Err(CliError::Core(Error::NonConvergence {
                    label: method.token().to_string(),
                    iterations: config.platt.max_iterations,
                }));
            }
            eprintln!("warning: {method} fit did not converge; continuing (lenient)");
        }
        let (normalized, report) = model.normalize_table(&test, mode)?;

        let token = method.token().to_ascii_lowercase();
        let csv_name = format!("normalized_{token}.csv");
        let model_name = format!("model_{token}.json");
        write_score_table_to_path(&normalized, &args.out.join(&csv_name))?;
        write_file(&args.out.join(&model_name), &model.to_json_string()?)?;
        outcomes.insert(
            method.token().to_string(),
            MethodOutcome {
                normalized_csv: csv_name,
                model_json: model_name,
                converged: model.converged(),
                diagnostics: model.diagnostics().clone(),
                normalize_report: report,
            },
        );
    }

    write_file(
        &args.out.join("fit_diagnostics.json"),
        &to_pretty_json(&outcomes)?,
    )?;

    let mut inputs: Vec<&std::path::Path> = vec![&args.test];
    for path in [&args.gallery_cohort, &args.probe_cohort, &args.cohort]
        .into_iter()
        .flatten()
    {
        if path.exists() {
            inputs.push(path);
        }
    }
    let provenance = Provenance::new(
        &inputs,
        json!({
            "command": "normalize",
            "methods": methods.iter().map(|m| m.token()).collect::<Vec<_>>(),
            "axis": args.axis,
            "min_cohort_count": args.min_cohort_count,
            "lambda": args.lambda,
            "max_iterations": args.max_iterations,
            "mode": if args.lenient { "lenient" } else { "strict" },
        }),
    )?;
    write_file(
        &args.out.join("provenance.json"),
        &to_pretty_json(&provenance)?,
    )?;
    Ok(())
}

pub(super) fn parse_methods(tokens: &[String]) -> Result<Vec<MethodId>, CliError> {
    let mut methods = Vec::new();
    for token in tokens {
        if token.trim().is_empty() {
            continue;
        }
        let method = MethodId::from_str(token).map_err(|err| CliError::Config(err.to_string()))?;
        if !methods.contains(&method) {
            methods.push(method);
        }
    }
    Ok(methods)
}
