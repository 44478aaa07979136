//! UCR-style text files: one series per line, a class label followed by the
//! values, separated by commas, tabs or spaces.

use std::fmt::Write as _;
use std::path::Path;

use super::config::VarianceMode;
use crate::error::{Error, Result};
use crate::series::TimeSeriesPair;

#[derive(Clone, Debug, PartialEq)]
pub struct UcrRow {
    pub label: String,
    pub values: Vec<f64>,
}

fn fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses `text`; `source` names the input in error messages. Line and
/// column numbers are 1-based, columns counting fields.
pub fn parse_ucr(text: &str, source: &str) -> Result<Vec<UcrRow>> {
    let err = |line: usize, column: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        column,
        message,
    };
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parts = fields(raw);
        let label = parts[0].to_string();
        let mut values = Vec::with_capacity(parts.len() - 1);
        for (c, token) in parts.iter().enumerate().skip(1) {
            let v: f64 = token
                .parse()
                .map_err(|_| err(line_no, c + 1, format!("`{token}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(line_no, c + 1, format!("non-finite value `{token}`")));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(err(line_no, 2, "row has a label but no values".into()));
        }
        rows.push(UcrRow { label, values });
    }
    Ok(rows)
}

pub fn read_ucr(path: &Path) -> Result<Vec<UcrRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_ucr(&text, &path.display().to_string())
}

/// Comma-separated, with shortest round-trip formatting of every value.
pub fn format_ucr(rows: &[UcrRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.label);
        for v in &row.values {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_ucr(path: &Path, rows: &[UcrRow]) -> Result<()> {
    std::fs::write(path, format_ucr(rows))?;
    Ok(())
}

fn select_row(rows: Vec<UcrRow>, row: usize, path: &Path) -> Result<UcrRow> {
    let count = rows.len();
    rows.into_iter().nth(row).ok_or_else(|| {
        Error::InvalidInput(format!("{}: row {row} requested but the file has {count} rows", path.display()))
    })
}

fn sample_variance(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidInput("variance estimation needs at least 2 values".into()));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok(v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
}

/// Row `row_a` (0-based, blank lines skipped) of `path_a` against row
/// `row_b` of `path_b`. Known variance means identity covariances;
/// estimated variance uses each series' sample variance on the diagonal.
pub fn load_ucr_pair(
    path_a: &Path,
    row_a: usize,
    path_b: &Path,
    row_b: usize,
    variance: VarianceMode,
) -> Result<TimeSeriesPair> {
    let a = select_row(read_ucr(path_a)?, row_a, path_a)?;
    let b = select_row(read_ucr(path_b)?, row_b, path_b)?;
    match variance {
        VarianceMode::Known => TimeSeriesPair::with_identity(a.values, b.values),
        VarianceMode::Estimated => {
            let (va, vb) = (sample_variance(&a.values)?, sample_variance(&b.values)?);
            TimeSeriesPair::with_variances(a.values, b.values, va, vb)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commas_tabs_and_spaces() {
        let rows = parse_ucr("1,0.5,1.5,-2,3e-1,4\n\n2\t1\t2\t3\t4\t5\n3  7 8 9\n", "mem").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].label, "1");
        assert_eq!(rows[0].values, vec![0.5, 1.5, -2.0, 0.3, 4.0]);
        assert_eq!(rows[1].values, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(rows[2].values, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn reports_position_of_bad_token() {
        match parse_ucr("1,0.5,1.5\n2,1.0,abc,3.0\n", "f.csv") {
            Err(Error::Parse { path, line, column, .. }) => {
                assert_eq!((path.as_str(), line, column), ("f.csv", 2, 3));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_ucr("1,nan\n", "f"), Err(Error::Parse { line: 1, column: 2, .. })));
        assert!(matches!(parse_ucr("7\n", "f"), Err(Error::Parse { line: 1, column: 2, .. })));
    }

    #[test]
    fn format_round_trips_exactly() {
        let rows = vec![
            UcrRow { label: "a".into(), values: vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::f64::consts::PI] },
            UcrRow { label: "b".into(), values: vec![f64::MIN_POSITIVE, -0.0, 42.0] },
        ];
        let back = parse_ucr(&format_ucr(&rows), "mem").unwrap();
        assert_eq!(back, rows);
    }
}
