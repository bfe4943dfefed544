use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use super::dictionary::{ColumnKind, ColumnSpec, DataDictionary};
use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// A single cell. Factor cells index into their column's level list.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Missing,
    Number(f64),
    Level(usize),
    Date(NaiveDate),
    Text(String),
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Vec<String>,
    pub unit: Option<String>,
    pub label: String,
    pub values: Vec<Value>,
}

impl Column {
    pub fn new(spec: &ColumnSpec, values: Vec<Value>) -> Self {
        Self {
            name: spec.name.clone(),
            kind: spec.kind,
            levels: spec.levels.clone(),
            unit: spec.unit.clone(),
            label: spec.label.clone(),
            values,
        }
    }

    pub fn spec(&self) -> ColumnSpec {
        ColumnSpec {
            name: self.name.clone(),
            kind: self.kind,
            unit: self.unit.clone(),
            levels: self.levels.clone(),
            label: self.label.clone(),
        }
    }

    /// Canonical text of a cell; `None` for missing.
    pub fn text(&self, row: usize) -> Option<String> {
        match &self.values[row] {
            Value::Missing => None,
            Value::Number(v) => Some(format!("{v}")),
            Value::Level(i) => Some(self.levels[*i].clone()),
            Value::Date(d) => Some(d.format(DATE_FORMAT).to_string()),
            Value::Text(s) => Some(s.clone()),
        }
    }

    pub fn number(&self, row: usize) -> Option<f64> {
        match self.values[row] {
            Value::Number(v) => Some(v),
            _ => None,
        }
    }

    pub fn level_label(&self, row: usize) -> Option<&str> {
        match self.values[row] {
            Value::Level(i) => Some(self.levels[i].as_str()),
            _ => None,
        }
    }

    fn conforms(&self, v: &Value) -> bool {
        match (self.kind, v) {
            (_, Value::Missing) => true,
            (ColumnKind::Numeric, Value::Number(x)) => x.is_finite(),
            (ColumnKind::Factor, Value::Level(i)) => *i < self.levels.len(),
            (ColumnKind::Date, Value::Date(_)) => true,
            (ColumnKind::Identifier, Value::Text(_)) => true,
            _ => false,
        }
    }

    /// Parses a raw cell; `None` means unparseable.
    fn parse(&self, raw: &str) -> Option<Value> {
        let s = raw.trim();
        if s.is_empty() || s == "NA" {
            return Some(Value::Missing);
        }
        match self.kind {
            ColumnKind::Numeric => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::Number),
            ColumnKind::Factor => self.levels.iter().position(|l| l == s).map(Value::Level),
            ColumnKind::Date => NaiveDate::parse_from_str(s, DATE_FORMAT).ok().map(Value::Date),
            ColumnKind::Identifier => Some(Value::Text(s.to_string())),
        }
    }
}

/// Named, typed columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
    primary_key: Option<String>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>, primary_key: Option<&str>) -> Result<Self> {
        let row_count = columns.first().map_or(0, |c| c.values.len());
        let mut names = HashSet::new();
        for col in &columns {
            if !names.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}` in table `{name}`", col.name)));
            }
            if col.values.len() != row_count {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, expected {row_count}",
                    col.name,
                    col.values.len()
                )));
            }
            if let Some(bad) = col.values.iter().position(|v| !col.conforms(v)) {
                return Err(Error::Schema(format!(
                    "cell {bad} of column `{}` does not match kind {:?}",
                    col.name, col.kind
                )));
            }
        }
        let table = Self {
            name: name.to_string(),
            columns,
            row_count,
            primary_key: primary_key.map(str::to_string),
        };
        table.check_primary_key()?;
        Ok(table)
    }

    fn check_primary_key(&self) -> Result<()> {
        let Some(pk) = &self.primary_key else { return Ok(()) };
        let col = self
            .column(pk)
            .ok_or_else(|| Error::Schema(format!("primary key `{pk}` is not a column of `{}`", self.name)))?;
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for row in 0..self.row_count {
            match col.text(row) {
                None => {
                    return Err(Error::Integrity(format!(
                        "primary key `{pk}` of `{}` is missing on row {row}",
                        self.name
                    )))
                }
                Some(key) => {
                    if !seen.insert(key.clone()) && !dups.contains(&key) {
                        dups.push(key);
                    }
                }
            }
        }
        if dups.is_empty() {
            Ok(())
        } else {
            Err(Error::Integrity(format!(
                "duplicate primary key values in `{}`.{pk}: {}",
                self.name,
                dups.join(", ")
            )))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn primary_key(&self) -> Option<&str> {
        self.primary_key.as_deref()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in table `{}`", self.name)))
    }

    /// Record identifier: the primary key text, or the 1-based row number.
    pub fn record_id(&self, row: usize) -> String {
        self.primary_key
            .as_deref()
            .and_then(|pk| self.column(pk))
            .and_then(|c| c.text(row))
            .unwrap_or_else(|| format!("{}", row + 1))
    }

    pub fn dictionary(&self) -> DataDictionary {
        DataDictionary {
            primary_key: self.primary_key.clone(),
            columns: self.columns.iter().map(Column::spec).collect(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let columns = self
            .columns
            .iter()
            .map(|c| Column { values: rows.iter().map(|&r| c.values[r].clone()).collect(), ..c.clone() })
            .collect();
        Table {
            name: self.name.clone(),
            columns,
            row_count: rows.len(),
            primary_key: self.primary_key.clone(),
        }
    }

    /// Keeps rows with no missing cell among `names`; returns the number dropped.
    pub fn complete_cases(&self, names: &[&str]) -> Result<(Table, usize)> {
        let cols = names.iter().map(|n| self.require_column(n)).collect::<Result<Vec<_>>>()?;
        let keep: Vec<usize> = (0..self.row_count)
            .filter(|&r| cols.iter().all(|c| !c.values[r].is_missing()))
            .collect();
        let dropped = self.row_count - keep.len();
        Ok((self.select_rows(&keep), dropped))
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

/// An unparseable cell turned into the missing marker during ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestIssue {
    /// 0-based data row (header excluded).
    pub row: usize,
    pub column: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestLog {
    pub table: String,
    pub rows: usize,
    pub issues: Vec<IngestIssue>,
}

pub fn load_table(path: impl AsRef<Path>, dict: &DataDictionary) -> Result<(Table, IngestLog)> {
    let path = path.as_ref();
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_table(file, name, dict)
}

/// Reads comma-separated UTF-8 text with a mandatory header row.
pub fn read_table<R: Read>(reader: R, name: &str, dict: &DataDictionary) -> Result<(Table, IngestLog)> {
    dict.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let unknown: Vec<&str> = headers
        .iter()
        .filter(|h| dict.get(h).is_none())
        .map(String::as_str)
        .collect();
    let absent: Vec<&str> = dict
        .columns
        .iter()
        .filter(|c| !headers.contains(&c.name))
        .map(|c| c.name.as_str())
        .collect();
    if !unknown.is_empty() || !absent.is_empty() {
        return Err(Error::Schema(format!(
            "header/dictionary mismatch in `{name}`: not in dictionary [{}]; not in header [{}]",
            unknown.join(", "),
            absent.join(", ")
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Schema(format!("duplicate header `{dup}` in `{name}`")));
    }

    let mut columns: Vec<Column> = headers
        .iter()
        .map(|h| Column::new(dict.get(h).expect("checked above"), Vec::new()))
        .collect();
    let mut log = IngestLog { table: name.to_string(), rows: 0, issues: Vec::new() };
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (col, raw) in columns.iter_mut().zip(record.iter()) {
            let value = match col.parse(raw) {
                Some(v) => v,
                None => {
                    log.issues.push(IngestIssue { row, column: col.name.clone(), raw: raw.to_string() });
                    Value::Missing
                }
            };
            col.values.push(value);
        }
        log.rows += 1;
    }

    // Present columns in dictionary order.
    let order: HashMap<&str, usize> =
        dict.columns.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
    columns.sort_by_key(|c| order[c.name.as_str()]);
    let table = Table::new(name, columns, dict.primary_key.as_deref())?;
    Ok((table, log))
}

pub fn write_table<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
    for row in 0..table.row_count {
        w.write_record(table.columns.iter().map(|c| c.text(row).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> DataDictionary {
        DataDictionary::new(
            vec![
                ColumnSpec::identifier("id"),
                ColumnSpec::numeric("dose"),
                ColumnSpec::factor("bmt", &["No", "Yes"]),
                ColumnSpec::date("dx_date"),
            ],
            Some("id"),
        )
        .unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let csv = "id,dose,bmt,dx_date\nP01,1.5,No,1990-01-02\nP02,2,Yes,1991-03-04\nP03,,Yes,\n";
        let (t, log) = read_table(csv.as_bytes(), "t", &dict()).unwrap();
        assert_eq!(t.row_count(), 3);
        assert!(log.issues.is_empty());
        assert_eq!(t.column("bmt").unwrap().level_label(1), Some("Yes"));
        assert_eq!(t.column("dose").unwrap().values[2], Value::Missing);
        assert_eq!(
            t.column("dx_date").unwrap().values[0],
            Value::Date(NaiveDate::from_ymd_opt(1990, 1, 2).unwrap())
        );
    }

    #[test]
    fn unparseable_cell_is_logged() {
        let csv = "id,dose,bmt,dx_date\nP01,banana,No,1990-01-02\n";
        let (t, log) = read_table(csv.as_bytes(), "t", &dict()).unwrap();
        assert_eq!(t.column("dose").unwrap().values[0], Value::Missing);
        assert_eq!(log.issues.len(), 1);
        assert_eq!(log.issues[0].raw, "banana");
    }

    #[test]
    fn duplicate_primary_key_is_integrity_error() {
        let csv = "id,dose,bmt,dx_date\nP01,1,No,\nP01,2,Yes,\n";
        let err = read_table(csv.as_bytes(), "t", &dict()).unwrap_err();
        match err {
            Error::Integrity(msg) => assert!(msg.contains("P01")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_names_columns() {
        let csv = "id,dose,colour\nP01,1,red\n";
        let err = read_table(csv.as_bytes(), "t", &dict()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour") && msg.contains("bmt") && msg.contains("dx_date"), "{msg}");
    }

    #[test]
    fn unknown_factor_level_becomes_missing() {
        let csv = "id,dose,bmt,dx_date\nP01,1,Maybe,\n";
        let (t, log) = read_table(csv.as_bytes(), "t", &dict()).unwrap();
        assert!(t.column("bmt").unwrap().values[0].is_missing());
        assert_eq!(log.issues[0].column, "bmt");
    }
}
