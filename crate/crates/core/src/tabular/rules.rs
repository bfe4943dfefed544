use std::cmp::Ordering;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::dictionary::{ColumnKind, DataDictionary};
use super::table::{Column, Table, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warn,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
        }
    }
}

/// The condition a valid cell satisfies. A row *hits* a rule when its cell
/// violates the condition. Range, membership and comparison checks ignore
/// missing cells; use [`Predicate::NotMissing`] to flag those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// Closed numeric interval; either bound may be open-ended.
    Range {
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
    DateRange {
        #[serde(default)]
        min: Option<NaiveDate>,
        #[serde(default)]
        max: Option<NaiveDate>,
    },
    OneOf { levels: Vec<String> },
    NotMissing,
    /// `column <op> other` must hold.
    Compare { op: CompareOp, other: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(default)]
    pub name: Option<String>,
    pub column: String,
    pub severity: Severity,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleOutcome {
    pub name: String,
    pub column: String,
    pub severity: Severity,
    pub hits: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub rules: Vec<RuleOutcome>,
    pub excluded_ids: Vec<String>,
}

impl Rule {
    pub fn display_name(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("rule{}", index + 1))
    }

    fn check_kinds(&self, kind_of: impl Fn(&str) -> Option<(ColumnKind, Vec<String>)>) -> Result<()> {
        let (kind, levels) = kind_of(&self.column)
            .ok_or_else(|| Error::Schema(format!("rule references unknown column `{}`", self.column)))?;
        let mismatch = |want: &str| {
            Err(Error::Schema(format!(
                "rule on `{}` needs a {want} column, found {kind:?}",
                self.column
            )))
        };
        match &self.predicate {
            Predicate::Range { .. } if kind != ColumnKind::Numeric => mismatch("numeric"),
            Predicate::DateRange { .. } if kind != ColumnKind::Date => mismatch("date"),
            Predicate::OneOf { .. } if kind != ColumnKind::Factor => mismatch("factor"),
            Predicate::OneOf { levels: allowed } => match allowed.iter().find(|l| !levels.contains(l)) {
                Some(l) => Err(Error::Schema(format!("rule on `{}` names undeclared level `{l}`", self.column))),
                None => Ok(()),
            },
            Predicate::Compare { other, .. } => {
                let (other_kind, _) = kind_of(other)
                    .ok_or_else(|| Error::Schema(format!("rule references unknown column `{other}`")))?;
                if other_kind != kind || !matches!(kind, ColumnKind::Numeric | ColumnKind::Date) {
                    return Err(Error::Schema(format!(
                        "cannot compare `{}` ({kind:?}) with `{other}` ({other_kind:?})",
                        self.column
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn hits(&self, col: &Column, other: Option<&Column>, row: usize) -> bool {
        let v = &col.values[row];
        match &self.predicate {
            Predicate::NotMissing => v.is_missing(),
            Predicate::Range { min, max } => match v {
                Value::Number(x) => min.is_some_and(|lo| *x < lo) || max.is_some_and(|hi| *x > hi),
                _ => false,
            },
            Predicate::DateRange { min, max } => match v {
                Value::Date(d) => min.is_some_and(|lo| *d < lo) || max.is_some_and(|hi| *d > hi),
                _ => false,
            },
            Predicate::OneOf { levels } => match col.level_label(row) {
                Some(l) => !levels.iter().any(|x| x == l),
                None => false,
            },
            Predicate::Compare { op, .. } => {
                let other = other.expect("compare rule resolved its second column");
                let ord = match (v, &other.values[row]) {
                    (Value::Number(a), Value::Number(b)) => a.partial_cmp(b),
                    (Value::Date(a), Value::Date(b)) => Some(a.cmp(b)),
                    _ => None,
                };
                ord.is_some_and(|o| !op.holds(o))
            }
        }
    }
}

impl RuleSet {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Every rule must reference dictionary columns of a compatible kind.
    pub fn validate(&self, dict: &DataDictionary) -> Result<()> {
        for rule in &self.rules {
            rule.check_kinds(|name| dict.get(name).map(|c| (c.kind, c.levels.clone())))?;
        }
        Ok(())
    }

    fn validate_table(&self, t: &Table) -> Result<()> {
        for rule in &self.rules {
            rule.check_kinds(|name| t.column(name).map(|c| (c.kind, c.levels.clone())))?;
        }
        Ok(())
    }
}

/// Flags warn rules and removes every row that hits at least one exclude rule.
pub fn apply_rules(t: &Table, rules: &RuleSet) -> Result<(Table, RuleReport)> {
    rules.validate_table(t)?;
    let n = t.row_count();
    let mut excluded = vec![false; n];
    let mut outcomes = Vec::with_capacity(rules.rules.len());
    for (i, rule) in rules.rules.iter().enumerate() {
        let col = t.require_column(&rule.column)?;
        let other = match &rule.predicate {
            Predicate::Compare { other, .. } => Some(t.require_column(other)?),
            _ => None,
        };
        let mut hits = 0;
        for (row, flag) in excluded.iter_mut().enumerate() {
            if rule.hits(col, other, row) {
                hits += 1;
                if rule.severity == Severity::Exclude {
                    *flag = true;
                }
            }
        }
        outcomes.push(RuleOutcome {
            name: rule.display_name(i),
            column: rule.column.clone(),
            severity: rule.severity,
            hits,
            excluded: if rule.severity == Severity::Exclude { hits } else { 0 },
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&r| !excluded[r]).collect();
    let excluded_ids = (0..n).filter(|&r| excluded[r]).map(|r| t.record_id(r)).collect();
    let out = t.select_rows(&keep);
    let report = RuleReport { rows_in: n, rows_out: out.row_count(), rules: outcomes, excluded_ids };
    Ok((out, report))
}
