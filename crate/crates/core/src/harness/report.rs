//! Report output: one JSON object per trial followed by a summary object,
//! or a flat CSV table for plotting.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::experiment::{ExperimentReport, TimingRow};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    JsonLines,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}` (expected json-lines or csv)"))),
        }
    }
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: &'a super::experiment::Summary,
    config: &'a super::config::ExperimentConfig,
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_json_lines(report: &ExperimentReport, out: &mut dyn Write) -> Result<()> {
    for record in &report.records {
        json_line(out, record)?;
    }
    json_line(out, &SummaryLine { summary: &report.summary, config: &report.config })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub const CSV_HEADER: &str =
    "method,n,m,delta,index,repetition,trial,p_value,rejected,z_obs,ci_lo,ci_hi,ci_length,true_theta,covered,seconds";

pub fn write_csv(report: &ExperimentReport, out: &mut dyn Write, header: bool) -> Result<()> {
    if header {
        writeln!(out, "{CSV_HEADER}")?;
    }
    let c = &report.config;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{:?},{},{},{},{:?},{},{},{},{},{},{},{},{:?}",
            r.method,
            c.n,
            c.m,
            c.delta,
            r.index,
            r.repetition,
            r.trial,
            r.p_value,
            r.rejected,
            opt(r.z_obs),
            opt(r.ci.map(|ci| ci.0)),
            opt(r.ci.map(|ci| ci.1)),
            opt(r.ci_length),
            opt(r.true_theta),
            r.covered.map(|b| b.to_string()).unwrap_or_default(),
            r.seconds,
        )?;
    }
    Ok(())
}

pub fn write_report(report: &ExperimentReport, format: Format, out: &mut dyn Write, header: bool) -> Result<()> {
    match format {
        Format::JsonLines => write_json_lines(report, out),
        Format::Csv => write_csv(report, out, header),
    }
}

pub fn write_timing(rows: &[TimingRow], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::JsonLines => rows.iter().try_for_each(|r| json_line(out, r)),
        Format::Csv => {
            writeln!(out, "method,n,m,trials,mean_seconds,median_seconds")?;
            for r in rows {
                writeln!(out, "{},{},{},{},{:?},{:?}", r.method, r.n, r.m, r.trials, r.mean_seconds, r.median_seconds)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_ci, ExperimentConfig};

    fn report() -> ExperimentReport {
        let cfg = ExperimentConfig { trials: 4, delta: 1.0, ..Default::default() };
        run_ci(&cfg).unwrap()
    }

    #[test]
    fn json_lines_has_records_then_summary() {
        let r = report();
        let mut buf = Vec::new();
        write_json_lines(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["method"], "si-dtw");
        assert_eq!(first["p_value"].as_f64().unwrap(), r.records[0].p_value);
        let last: serde_json::Value = serde_json::from_str(lines[4]).unwrap();
        assert_eq!(last["summary"]["trials"], 4);
        assert_eq!(last["config"]["method"], "si-dtw");
    }

    #[test]
    fn csv_rows_match_header() {
        let r = report();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let width = CSV_HEADER.split(',').count();
        assert_eq!(text.lines().count(), 5);
        for line in text.lines() {
            assert_eq!(line.split(',').count(), width);
        }
        assert!("tsv".parse::<Format>().is_err());
    }
}
