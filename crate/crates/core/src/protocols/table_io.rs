//! Score-table CSV parsing and writing.
//!
//! Format: UTF-8, header
//! `kind,pair_type,gallery_subject,probe_subject,gallery_demo,probe_demo,score`,
//! one comparison per row, scores as decimal literals, `probe_demo` possibly
//! empty. LF and CRLF line endings parse identically. Scores are written in
//! shortest round-trip decimal form, so write/parse cycles are lossless.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    DemographicAxis, DemographicLabel, PairType, ScoreRecord, ScoreTable, TableKind, TableManifest,
};

pub const SCORE_CSV_HEADER: [&str; 7] = [
    "kind",
    "pair_type",
    "gallery_subject",
    "probe_subject",
    "gallery_demo",
    "probe_demo",
    "score",
];

/// Parse a score CSV into a validated table.
///
/// Every row's `kind` must equal `expected_kind`. When `declared_labels` is
/// given, demographic tokens outside it fail with
/// [`Error::ManifestViolation`]; otherwise the label set is inferred from the
/// data. Row order is preserved; duplicate comparisons are permitted
/// (subjects may contribute multiple samples).
pub fn parse_score_table<R: Read>(
    reader: R,
    expected_kind: TableKind,
    axis: DemographicAxis,
    declared_labels: Option<&[String]>,
) -> Result<ScoreTable> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);

    {
        let headers = csv_reader.headers().map_err(|e| csv_error_to_parse(e, 1))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != SCORE_CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "bad header {:?}, expected {:?}",
                    got.join(","),
                    SCORE_CSV_HEADER.join(",")
                ),
            });
        }
    }

    let mut records = Vec::new();
    for row in csv_reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_error_to_parse(e, line)
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != SCORE_CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} fields, got {}",
                    SCORE_CSV_HEADER.len(),
                    row.len()
                ),
            });
        }

        let kind = TableKind::from_str(&row[0]).map_err(|_| Error::Parse {
            line,
            message: format!("unknown table kind {:?}", &row[0]),
        })?;
        if kind != expected_kind {
            return Err(Error::Parse {
                line,
                message: format!("row kind {kind} does not match expected {expected_kind}"),
            });
        }
        let pair_type = PairType::from_str(&row[1]).map_err(|_| Error::Parse {
            line,
            message: format!("unknown pair type {:?}", &row[1]),
        })?;
        let gallery_subject = row[2].to_string();
        let probe_subject = row[3].to_string();
        if gallery_subject.is_empty() || probe_subject.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty subject id".into(),
            });
        }
        let gallery_demo =
            demo_token(&row[4], line, axis, declared_labels)?.ok_or_else(|| Error::Parse {
                line,
                message: "empty gallery_demo".into(),
            })?;
        let probe_demo = demo_token(&row[5], line, axis, declared_labels)?;
        let score: f64 = row[6].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad score literal {:?}", &row[6]),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite score {score}"),
            });
        }

        let record = ScoreRecord {
            gallery_subject,
            probe_subject,
            gallery_demo,
            probe_demo,
            pair_type,
            score,
        };
        record
            .validate()
            .map_err(|message| Error::Consistency { line, message })?;
        if matches!(
            expected_kind,
            TableKind::GalleryCohort | TableKind::ProbeCohort
        ) && record.pair_type == PairType::Genuine
        {
            return Err(Error::Consistency {
                line,
                message: format!("genuine record in a {expected_kind} table"),
            });
        }
        records.push(record);
    }

    let manifest = match declared_labels {
        Some(labels) => TableManifest::new(axis, labels.iter().cloned()),
        None => {
            let mut labels: Vec<String> = Vec::new();
            for record in &records {
                labels.push(record.gallery_demo.value.clone());
                if let Some(demo) = &record.probe_demo {
                    labels.push(demo.value.clone());
                }
            }
            TableManifest::new(axis, labels)
        }
    };
    ScoreTable::new(expected_kind, manifest, records)
}

fn demo_token(
    token: &str,
    line: u64,
    axis: DemographicAxis,
    declared_labels: Option<&[String]>,
) -> Result<Option<DemographicLabel>> {
    if token.is_empty() {
        return Ok(None);
    }
    if let Some(labels) = declared_labels {
        if !labels.iter().any(|l| l == token) {
            return Err(Error::ManifestViolation {
                line,
                token: token.to_string(),
            });
        }
    }
    Ok(Some(DemographicLabel::new(axis, token)))
}

fn csv_error_to_parse(error: csv::Error, line: u64) -> Error {
    Error::Parse {
        line,
        message: error.to_string(),
    }
}

/// Parse a score CSV from a file path.
pub fn read_score_table(
    path: &Path,
    expected_kind: TableKind,
    axis: DemographicAxis,
    declared_labels: Option<&[String]>,
) -> Result<ScoreTable> {
    let file = std::fs::File::open(path)?;
    parse_score_table(
        std::io::BufReader::new(file),
        expected_kind,
        axis,
        declared_labels,
    )
}

/// Write a table in the score CSV format (LF line endings, shortest
/// round-trip score literals).
pub fn write_score_table<W: Write>(table: &ScoreTable, writer: W) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(SCORE_CSV_HEADER).map_err(io_like)?;
    let kind = table.kind().token();
    for record in table.records() {
        csv_writer
            .write_record([
                kind,
                &record.pair_type.to_string(),
                &record.gallery_subject,
                &record.probe_subject,
                &record.gallery_demo.value,
                record
                    .probe_demo
                    .as_ref()
                    .map(|d| d.value.as_str())
                    .unwrap_or(""),
                &record.score.to_string(),
            ])
            .map_err(io_like)?;
    }
    csv_writer.flush()?;
    Ok(())
}

pub fn write_score_table_to_path(table: &ScoreTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_score_table(table, std::io::BufWriter::new(file))
}

fn io_like(error: csv::Error) -> Error {
    Error::Parse {
        line: 0,
        message: error.to_string(),
    }
}
