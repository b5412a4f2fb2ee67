//! The results CSV: one header row, comma-separated, `.` decimals, UTF-8, LF
//! line endings. Run rows come first, ordered by (value, series,
//! realization); summary rows follow, ordered by (series, value).
//!
//! | column             | run row                          | summary row                 |
//! |--------------------|----------------------------------|-----------------------------|
//! | `kind`             | `run`                            | `summary`                   |
//! | `variable`         | `p_max_dbm` or `num_users`       | same                        |
//! | `value`            | sweep value                      | same                        |
//! | `series`           | scheme, or `scheme/variant`      | same                        |
//! | `realization`      | 0-based index                    | empty                       |
//! | `seed`             | scenario seed                    | empty                       |
//! | `status`           | `ok` or `failed`                 | `ok`                        |
//! | `sum_secrecy`      | bits/s/Hz (empty when failed)    | mean over `ok` runs         |
//! | `std_sum_secrecy`  | empty                            | sample std over `ok` runs   |
//! | `count`            | empty                            | number of `ok` runs         |
//! | `outer_iterations` | outer iterations used            | empty                       |
//! | `per_user_secrecy` | `;`-separated per-user values    | empty                       |

use std::fmt::Display;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 12] = [
    "kind",
    "variable",
    "value",
    "series",
    "realization",
    "seed",
    "status",
    "sum_secrecy",
    "std_sum_secrecy",
    "count",
    "outer_iterations",
    "per_user_secrecy",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Run,
    Summary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One parsed or to-be-written CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub kind: RowKind,
    pub variable: String,
    pub value: f64,
    pub series: String,
    pub realization: Option<usize>,
    pub seed: Option<u64>,
    pub status: RunStatus,
    pub sum_secrecy: Option<f64>,
    pub std_sum_secrecy: Option<f64>,
    pub count: Option<usize>,
    pub outer_iterations: Option<usize>,
    pub per_user_secrecy: Vec<f64>,
}

fn opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl CsvRow {
    fn fields(&self) -> [String; 12] {
        [
            match self.kind {
                RowKind::Run => "run".into(),
                RowKind::Summary => "summary".into(),
            },
            self.variable.clone(),
            self.value.to_string(),
            self.series.clone(),
            opt(&self.realization),
            opt(&self.seed),
            match self.status {
                RunStatus::Ok => "ok".into(),
                RunStatus::Failed => "failed".into(),
            },
            opt(&self.sum_secrecy),
            opt(&self.std_sum_secrecy),
            opt(&self.count),
            opt(&self.outer_iterations),
            self.per_user_secrecy.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
        ]
    }
}

/// Serialize rows under the fixed header.
pub fn write_rows<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::invalid(format!("writing CSV: {e}"));
    writer.write_record(COLUMNS).map_err(io)?;
    for row in rows {
        writer.write_record(row.fields()).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
}

fn field_error(line: u64, column: &str, message: impl Display) -> Error {
    Error::Parse {
        line,
        message: format!("column {column}: {message}"),
    }
}

fn parse_opt<T: std::str::FromStr>(line: u64, column: &str, s: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|e| field_error(line, column, format!("{e} ({s:?})")))
}

fn parse_finite(line: u64, column: &str, s: &str) -> Result<Option<f64>> {
    match parse_opt::<f64>(line, column, s)? {
        Some(v) if !v.is_finite() => Err(field_error(line, column, "value is not finite")),
        other => Ok(other),
    }
}

/// Parse a results CSV. Errors carry the 1-based line number.
pub fn parse_rows(text: &str) -> Result<Vec<CsvRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
        Some(r) => r.map_err(|e| csv_error(&e))?,
    };
    if header.iter().ne(COLUMNS) {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be {}", COLUMNS.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != COLUMNS.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", COLUMNS.len(), record.len()),
            });
        }
        let f = |i: usize| &record[i];
        let kind = match f(0) {
            "run" => RowKind::Run,
            "summary" => RowKind::Summary,
            other => return Err(field_error(line, "kind", format!("unknown kind {other:?}"))),
        };
        let status = match f(6) {
            "ok" => RunStatus::Ok,
            "failed" => RunStatus::Failed,
            other => return Err(field_error(line, "status", format!("unknown status {other:?}"))),
        };
        let value = parse_finite(line, "value", f(2))?.ok_or_else(|| field_error(line, "value", "missing"))?;
        let per_user_secrecy = if f(11).is_empty() {
            Vec::new()
        } else {
            f(11)
                .split(';')
                .map(|s| parse_finite(line, "per_user_secrecy", s)?.ok_or_else(|| field_error(line, "per_user_secrecy", "empty entry")))
                .collect::<Result<_>>()?
        };
        rows.push(CsvRow {
            kind,
            variable: f(1).to_string(),
            value,
            series: f(3).to_string(),
            realization: parse_opt(line, "realization", f(4))?,
            seed: parse_opt(line, "seed", f(5))?,
            status,
            sum_secrecy: parse_finite(line, "sum_secrecy", f(7))?,
            std_sum_secrecy: parse_finite(line, "std_sum_secrecy", f(8))?,
            count: parse_opt(line, "count", f(9))?,
            outer_iterations: parse_opt(line, "outer_iterations", f(10))?,
            per_user_secrecy,
        });
    }
    Ok(rows)
}

fn csv_error(e: &csv::Error) -> Error {
    Error::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_row() -> CsvRow {
        CsvRow {
            kind: RowKind::Run,
            variable: "p_max_dbm".into(),
            value: 10.0,
            series: "proposed".into(),
            realization: Some(3),
            seed: Some(u64::MAX),
            status: RunStatus::Ok,
            sum_secrecy: Some(1.25),
            std_sum_secrecy: None,
            count: None,
            outer_iterations: Some(7),
            per_user_secrecy: vec![0.5, 0.75, 0.0],
        }
    }

    #[test]
    fn header_is_frozen() {
        let text = to_csv_string(&[]).unwrap();
        assert_eq!(
            text,
            "kind,variable,value,series,realization,seed,status,sum_secrecy,std_sum_secrecy,count,outer_iterations,per_user_secrecy\n"
        );
    }

    #[test]
    fn rows_round_trip() {
        let summary = CsvRow {
            kind: RowKind::Summary,
            realization: None,
            seed: None,
            std_sum_secrecy: Some(0.1),
            count: Some(50),
            outer_iterations: None,
            per_user_secrecy: vec![],
            ..run_row()
        };
        let failed = CsvRow { status: RunStatus::Failed, sum_secrecy: None, per_user_secrecy: vec![], ..run_row() };
        let rows = vec![run_row(), failed, summary];
        let text = to_csv_string(&rows).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(parse_rows(&text).unwrap(), rows);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let mut text = to_csv_string(&[run_row(), run_row()]).unwrap();
        text = text.replacen("proposed,3", "proposed,x", 1);
        match parse_rows(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("realization"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_rows(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_rows("a,b\n"), Err(Error::Parse { line: 1, .. })));
        let short = format!("{}run,p\n", to_csv_string(&[]).unwrap());
        assert!(matches!(parse_rows(&short), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let text = to_csv_string(&[run_row()]).unwrap().replace(",1.25,", ",NaN,");
        assert!(matches!(parse_rows(&text), Err(Error::Parse { line: 2, .. })));
    }
}
