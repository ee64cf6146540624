//! Registration and renewal ingestion from CSV or JSONL.
//!
//! Both formats are reduced to a map of column name to raw string so one
//! set of row rules covers them. Values are kept verbatim; only numeric
//! fields are trimmed before parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::{
    CopyrightRecord, NormalizedRegistration, NormalizedRenewal, PartialDate, RecordSource, RenewalRecord,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSchema {
    Registrations,
    Renewals,
}

impl RecordSchema {
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            RecordSchema::Registrations => &["reg_id", "title", "author", "pub_year"],
            RecordSchema::Renewals => &["renewal_id", "title", "author", "renewal_date"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl" | "ndjson") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row number; headers and blank lines are not counted.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub path: PathBuf,
    pub schema: RecordSchema,
    pub format: InputFormat,
    pub rows_read: usize,
    pub records: usize,
    pub rejected: Vec<RejectedRow>,
}

impl IngestReport {
    pub fn reconciles(&self) -> bool {
        self.rows_read == self.records + self.rejected.len()
    }

    /// Writes rejects as JSONL, one `{row, reason}` object per line.
    pub fn write_rejects(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for r in &self.rejected {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

type Row = BTreeMap<String, String>;
type Rows = (BTreeSet<String>, Vec<Result<Row, String>>);

fn read_rows(path: &Path, format: InputFormat) -> Result<Rows> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
            let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
            let columns = headers.iter().map(str::to_string).collect();
            let mut rows = Vec::new();
            for rec in reader.records() {
                rows.push(match rec {
                    Ok(rec) => Ok(headers
                        .iter()
                        .zip(rec.iter())
                        .map(|(h, v)| (h.to_string(), v.to_string()))
                        .collect()),
                    Err(e) if e.is_io_error() => return Err(csv_error(path, e)),
                    Err(e) => Err(format!("unparseable csv row: {e}")),
                });
            }
            Ok((columns, rows))
        }
        InputFormat::Jsonl => {
            let mut columns = BTreeSet::new();
            let mut rows = Vec::new();
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                rows.push(match serde_json::from_str::<BTreeMap<String, serde_json::Value>>(&line) {
                    Ok(obj) => {
                        let row: Row = obj
                            .into_iter()
                            .map(|(k, v)| {
                                let v = match v {
                                    serde_json::Value::String(s) => s,
                                    serde_json::Value::Null => String::new(),
                                    other => other.to_string(),
                                };
                                (k, v)
                            })
                            .collect();
                        columns.extend(row.keys().cloned());
                        Ok(row)
                    }
                    Err(e) => Err(format!("unparseable json line: {e}")),
                });
            }
            Ok((columns, rows))
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Decode(format!("{}: {kind:?}", path.display())),
    }
}

fn field<'a>(row: &'a Row, name: &str) -> &'a str {
    row.get(name).map(String::as_str).unwrap_or("")
}

fn number<T: std::str::FromStr>(row: &Row, name: &str) -> Result<Option<T>, String> {
    let raw = field(row, name).trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(|_| format!("{name} `{raw}` is not a number"))
}

fn pub_date(row: &Row) -> Result<Option<PartialDate>, String> {
    let year = number::<i32>(row, "pub_year")?;
    let month = number::<u8>(row, "pub_month")?;
    let day = number::<u8>(row, "pub_day")?;
    match year {
        None if month.is_some() || day.is_some() => Err("pub_month/pub_day given without pub_year".into()),
        None => Ok(None),
        Some(y) => PartialDate::new(y, month, day).map(Some).map_err(|e| e.to_string()),
    }
}

fn registration(row: &Row) -> Result<CopyrightRecord, String> {
    let source = match field(row, "source").trim() {
        "" | "structured" => RecordSource::Structured,
        "extracted" => RecordSource::Extracted,
        other => return Err(format!("unknown source `{other}`")),
    };
    let mut record = CopyrightRecord::new(
        field(row, "reg_id"),
        field(row, "title"),
        field(row, "author"),
        pub_date(row)?,
        source,
    )
    .map_err(|e| e.to_string())?;
    record.work_key = Some(field(row, "work_key").to_string()).filter(|k| !k.is_empty());
    Ok(record)
}

fn renewal(row: &Row) -> Result<RenewalRecord, String> {
    let renewal_id = field(row, "renewal_id");
    if renewal_id.trim().is_empty() {
        return Err("renewal_id is empty".into());
    }
    let raw_date = field(row, "renewal_date");
    if raw_date.trim().is_empty() {
        return Err("renewal_date is empty".into());
    }
    let renewal_date = PartialDate::parse(raw_date).map_err(|e| e.to_string())?;
    Ok(RenewalRecord {
        renewal_id: renewal_id.to_string(),
        original_reg_id: Some(field(row, "original_reg_id").to_string()).filter(|s| !s.trim().is_empty()),
        title: field(row, "title").to_string(),
        author: field(row, "author").to_string(),
        original_pub_date: pub_date(row)?,
        renewal_date,
    })
}

fn ingest<T>(
    path: &Path,
    schema: RecordSchema,
    parse: impl Fn(&Row) -> Result<T, String>,
) -> Result<(Vec<T>, IngestReport)> {
    let format = InputFormat::from_path(path);
    let (columns, rows) = read_rows(path, format)?;
    // An empty JSONL file has no columns to check.
    if !(format == InputFormat::Jsonl && rows.is_empty()) {
        for required in schema.required_columns() {
            if !columns.contains(*required) {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    column: required.to_string(),
                });
            }
        }
    }
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let rows_read = rows.len();
    for (i, row) in rows.into_iter().enumerate() {
        match row.and_then(|r| parse(&r)) {
            Ok(rec) => records.push(rec),
            Err(reason) => rejected.push(RejectedRow { row: i + 1, reason }),
        }
    }
    let report = IngestReport {
        path: path.to_path_buf(),
        schema,
        format,
        rows_read,
        records: records.len(),
        rejected,
    };
    Ok((records, report))
}

pub fn ingest_registrations(path: &Path) -> Result<(Vec<NormalizedRegistration>, IngestReport)> {
    let (records, report) = ingest(path, RecordSchema::Registrations, registration)?;
    Ok((records.into_iter().map(NormalizedRegistration::new).collect(), report))
}

pub fn ingest_renewals(path: &Path) -> Result<(Vec<NormalizedRenewal>, IngestReport)> {
    let (records, report) = ingest(path, RecordSchema::Renewals, renewal)?;
    Ok((records.into_iter().map(NormalizedRenewal::new).collect(), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_with_reject() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "regs.csv",
            "reg_id,title,author,pub_year\nA1,First Book,\"Doe, Jane\",1950\nA2,,Someone,1951\nA3,Third,X,\n",
        );
        let (records, report) = ingest_registrations(&p).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(report.rejected, vec![RejectedRow { row: 2, reason: "invalid argument: title is empty".into() }]);
        assert!(report.reconciles());
        assert_eq!(records[1].record.pub_date, None);

        let rejects = dir.path().join("rejects.jsonl");
        report.write_rejects(&rejects).unwrap();
        assert!(std::fs::read_to_string(rejects).unwrap().contains("\"row\":2"));
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(
            &dir,
            "r.csv",
            "renewal_id,original_reg_id,title,author,renewal_date,pub_year\nR1,A1,Book,\"Doe, J\",1977-03-02,1950\nR2,,Other,Y,1980,\n",
        );
        let jsonl = write(
            &dir,
            "r.jsonl",
            concat!(
                "{\"renewal_id\":\"R1\",\"original_reg_id\":\"A1\",\"title\":\"Book\",\"author\":\"Doe, J\",\"renewal_date\":\"1977-03-02\",\"pub_year\":1950}\n",
                "\n",
                "{\"renewal_id\":\"R2\",\"original_reg_id\":null,\"title\":\"Other\",\"author\":\"Y\",\"renewal_date\":\"1980\"}\n"
            ),
        );
        let (a, ra) = ingest_renewals(&csv).unwrap();
        let (b, rb) = ingest_renewals(&jsonl).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!((ra.rows_read, rb.rows_read), (2, 2));
    }

    #[test]
    fn empty_file_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "reg_id,title,author,pub_year\n");
        let (records, report) = ingest_registrations(&p).unwrap();
        assert!(records.is_empty());
        assert_eq!(report.rows_read, 0);
    }

    #[test]
    fn missing_column_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "reg_id,author,pub_year\nA1,X,1950\n");
        match ingest_registrations(&p) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "title"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreadable_file() {
        let err = ingest_registrations(Path::new("/nonexistent/regs.csv")).unwrap_err();
        assert!(err.is_io());
    }
}
