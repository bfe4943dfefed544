use std::collections::HashMap;

use serde::Serialize;

use super::table::{Column, Table, Value};
use crate::error::{Error, Result};

/// A column present in both join inputs whose values disagree on matched rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnConflict {
    pub column: String,
    pub rows: usize,
    /// Up to five left-key values of disagreeing rows.
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub left: String,
    pub right: String,
    pub matched_rows: usize,
    pub unmatched_rows: usize,
    pub conflicts: Vec<ColumnConflict>,
}

/// Many-to-one left join of `right` onto `left`.
///
/// Left rows keep their order. Right columns are appended, except the right
/// key and any column name the left table already has; those shared columns
/// are compared on matched rows and reported instead of duplicated.
pub fn join(left: &Table, right: &Table, left_key: &str, right_key: &str) -> Result<(Table, ConsistencyReport)> {
    let lk = left.require_column(left_key)?;
    let rk = right.require_column(right_key)?;
    if lk.kind != rk.kind {
        return Err(Error::Schema(format!(
            "key kind mismatch: `{}`.{left_key} is {:?} but `{}`.{right_key} is {:?}",
            left.name(),
            lk.kind,
            right.name(),
            rk.kind
        )));
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dups: Vec<String> = Vec::new();
    for row in 0..right.row_count() {
        if let Some(key) = rk.text(row) {
            if index.insert(key.clone(), row).is_some() && !dups.contains(&key) {
                dups.push(key);
            }
        }
    }
    if !dups.is_empty() {
        return Err(Error::Integrity(format!(
            "right key `{}`.{right_key} is not unique: {}",
            right.name(),
            dups.join(", ")
        )));
    }

    let matches: Vec<Option<usize>> = (0..left.row_count())
        .map(|row| lk.text(row).and_then(|k| index.get(&k).copied()))
        .collect();
    let matched_rows = matches.iter().filter(|m| m.is_some()).count();

    let mut columns: Vec<Column> = left.columns().to_vec();
    let mut conflicts = Vec::new();
    for rc in right.columns() {
        if rc.name == right_key {
            continue;
        }
        if let Some(lc) = left.column(&rc.name) {
            let mut rows = 0;
            let mut examples = Vec::new();
            for (lrow, m) in matches.iter().enumerate() {
                let Some(rrow) = *m else { continue };
                if let (Some(a), Some(b)) = (lc.text(lrow), rc.text(rrow)) {
                    if a != b {
                        rows += 1;
                        if examples.len() < 5 {
                            examples.push(lk.text(lrow).unwrap_or_default());
                        }
                    }
                }
            }
            if rows > 0 {
                conflicts.push(ColumnConflict { column: rc.name.clone(), rows, examples });
            }
            continue;
        }
        let values = matches
            .iter()
            .map(|m| m.map_or(Value::Missing, |r| rc.values[r].clone()))
            .collect();
        columns.push(Column { values, ..rc.clone() });
    }

    let table = Table::new(left.name(), columns, left.primary_key())?;
    let report = ConsistencyReport {
        left: left.name().to_string(),
        right: right.name().to_string(),
        matched_rows,
        unmatched_rows: left.row_count() - matched_rows,
        conflicts,
    };
    Ok((table, report))
}
