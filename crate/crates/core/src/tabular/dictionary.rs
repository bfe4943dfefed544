use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Factor,
    Date,
    Identifier,
}

/// One dictionary entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Ordered level labels; the first one is the reference level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    #[serde(default)]
    pub label: String,
}

impl ColumnSpec {
    pub fn numeric(name: &str) -> Self {
        Self { name: name.into(), kind: ColumnKind::Numeric, unit: None, levels: vec![], label: String::new() }
    }

    pub fn factor(name: &str, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Factor,
            unit: None,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            label: String::new(),
        }
    }

    pub fn date(name: &str) -> Self {
        Self { name: name.into(), kind: ColumnKind::Date, unit: None, levels: vec![], label: String::new() }
    }

    pub fn identifier(name: &str) -> Self {
        Self { name: name.into(), kind: ColumnKind::Identifier, unit: None, levels: vec![], label: String::new() }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }
}

/// Names, kinds and factor levels for the columns of one data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDictionary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_key: Option<String>,
    pub columns: Vec<ColumnSpec>,
}

impl DataDictionary {
    pub fn new(columns: Vec<ColumnSpec>, primary_key: Option<&str>) -> Result<Self> {
        let dict = Self { primary_key: primary_key.map(str::to_string), columns };
        dict.validate()?;
        Ok(dict)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let dict: Self = serde_json::from_str(&text)?;
        dict.validate()
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        Ok(dict)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}` in dictionary", col.name)));
            }
            match col.kind {
                ColumnKind::Factor => {
                    let distinct: HashSet<_> = col.levels.iter().collect();
                    if distinct.len() != col.levels.len() || distinct.len() < 2 {
                        return Err(Error::Schema(format!(
                            "factor `{}` must list at least two distinct levels",
                            col.name
                        )));
                    }
                }
                _ if !col.levels.is_empty() => {
                    return Err(Error::Schema(format!("non-factor column `{}` declares levels", col.name)));
                }
                _ => {}
            }
        }
        if let Some(pk) = &self.primary_key {
            if self.get(pk).is_none() {
                return Err(Error::Schema(format!("primary key `{pk}` is not a dictionary column")));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn write_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
