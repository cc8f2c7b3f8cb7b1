//! CSV output for trial histories and summaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! written file parses back to identical values.

use std::io::{BufRead, BufReader, Read, Write};

use crate::bench::runner::TrialResult;
use crate::bench::summary::{Quartiles, SummaryRow, TrialSummary};
use crate::error::{Error, Result};
use crate::faastars::PhaseReport;
use crate::history::HistoryRow;

pub const HISTORY_HEADER: [&str; 5] = ["trial", "iteration", "fevals", "fhat", "ftrue"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "evals",
    "q25_fhat",
    "median_fhat",
    "q75_fhat",
    "q25_f",
    "median_f",
    "q75_f",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One `key=value` comment line describing a subspace fit.
pub fn report_line(trial: usize, r: &PhaseReport) -> String {
    format!(
        "# trial={trial} stage={} iteration={} sigma2_hat={} noise={} l1_hat={} burn_in={} ledger={} j_tilde={} surrogate={} fallback={} refit_failed={} delta={} leading_cosine={}",
        r.stage,
        r.iteration,
        r.sigma2_hat,
        opt(r.noise_confidence),
        r.l1_hat,
        r.burn_in,
        r.ledger_size,
        r.j_tilde,
        r.surrogate,
        r.fallback,
        r.refit_failed,
        opt(r.delta),
        opt(r.leading_cosine),
    )
}

/// Writes the comment block of phase reports, then one row per iterate of
/// every trial in index order.
pub fn write_history_csv<W: Write>(results: &[TrialResult], mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Csv(e.to_string());
    for r in results {
        for rep in &r.reports {
            writeln!(out, "{}", report_line(r.index, rep)).map_err(io)?;
        }
        if r.diverged() {
            writeln!(out, "# trial={} diverged=true", r.index).map_err(io)?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER)?;
    for r in results {
        for row in r.history.rows() {
            w.write_record([
                r.index.to_string(),
                row.iteration.to_string(),
                row.fevals.to_string(),
                row.fhat.to_string(),
                opt(row.ftrue),
            ])?;
        }
    }
    w.flush().map_err(io)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRecord {
    pub trial: usize,
    pub row: HistoryRow,
}

/// Comment lines and data rows of a history file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryFile {
    pub comments: Vec<String>,
    pub records: Vec<HistoryRecord>,
}

fn split_comments<R: Read>(input: R) -> Result<(Vec<String>, String, usize)> {
    let mut comments = Vec::new();
    let mut body = String::new();
    let mut offset = 0;
    let mut in_header = true;
    for line in BufReader::new(input).lines() {
        let line = line.map_err(|e| Error::Csv(e.to_string()))?;
        if in_header && line.starts_with('#') {
            comments.push(line);
            offset += 1;
        } else {
            in_header = false;
            body.push_str(&line);
            body.push('\n');
        }
    }
    Ok((comments, body, offset))
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad {name} value `{field}`")))
}

fn parse_opt(field: &str, name: &str, line: u64) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(field, name, line).map(Some)
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str], line: u64) -> Result<()> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Csv(format!(
            "line {line}: expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn records(body: &str, offset: usize, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut out = Vec::new();
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0) + offset as u64;
            Error::Csv(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0) + offset as u64;
        if !saw_header {
            check_header(&rec, expected, line)?;
            saw_header = true;
            continue;
        }
        if rec.len() != expected.len() {
            return Err(Error::Csv(format!(
                "line {line}: expected {} fields, found {}",
                expected.len(),
                rec.len()
            )));
        }
        out.push((line, rec));
    }
    if !saw_header {
        return Err(Error::Csv("file has no header row".into()));
    }
    Ok(out)
}

pub fn read_history_csv<R: Read>(input: R) -> Result<HistoryFile> {
    let (comments, body, offset) = split_comments(input)?;
    let mut out = HistoryFile {
        comments,
        records: Vec::new(),
    };
    for (line, rec) in records(&body, offset, &HISTORY_HEADER)? {
        out.records.push(HistoryRecord {
            trial: parse_field(&rec[0], "trial", line)?,
            row: HistoryRow {
                iteration: parse_field(&rec[1], "iteration", line)?,
                fevals: parse_field(&rec[2], "fevals", line)?,
                fhat: parse_field(&rec[3], "fhat", line)?,
                ftrue: parse_opt(&rec[4], "ftrue", line)?,
            },
        });
    }
    Ok(out)
}

/// Writes a summary with its label and trial counts as comment lines.
pub fn write_summary_csv<W: Write>(summary: &TrialSummary, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Csv(e.to_string());
    writeln!(out, "# label={}", summary.label).map_err(io)?;
    writeln!(
        out,
        "# trials={} completed={} diverged={}",
        summary.trials, summary.completed, summary.diverged
    )
    .map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in &summary.rows {
        w.write_record([
            r.evals.to_string(),
            r.fhat.q25.to_string(),
            r.fhat.median.to_string(),
            r.fhat.q75.to_string(),
            opt(r.f.map(|q| q.q25)),
            opt(r.f.map(|q| q.median)),
            opt(r.f.map(|q| q.q75)),
        ])?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

fn comment_value<'a>(comments: &'a [String], key: &str) -> Option<&'a str> {
    comments.iter().find_map(|c| {
        c.trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    })
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<TrialSummary> {
    let (comments, body, offset) = split_comments(input)?;
    let label = comments
        .iter()
        .find_map(|c| c.strip_prefix("# label="))
        .unwrap_or("")
        .to_string();
    let count = |key: &str| -> usize {
        comment_value(&comments, key)
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    let mut rows = Vec::new();
    for (line, rec) in records(&body, offset, &SUMMARY_HEADER)? {
        let f = match (
            parse_opt(&rec[4], "q25_f", line)?,
            parse_opt(&rec[5], "median_f", line)?,
            parse_opt(&rec[6], "q75_f", line)?,
        ) {
            (Some(q25), Some(median), Some(q75)) => Some(Quartiles { q25, median, q75 }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Csv(format!(
                    "line {line}: noiseless quartiles must be all present or all blank"
                )))
            }
        };
        rows.push(SummaryRow {
            evals: parse_field(&rec[0], "evals", line)?,
            fhat: Quartiles {
                q25: parse_field(&rec[1], "q25_fhat", line)?,
                median: parse_field(&rec[2], "median_fhat", line)?,
                q75: parse_field(&rec[3], "q75_fhat", line)?,
            },
            f,
        });
    }
    Ok(TrialSummary {
        label,
        rows,
        trials: count("trials"),
        completed: count("completed"),
        diverged: count("diverged"),
    })
}
