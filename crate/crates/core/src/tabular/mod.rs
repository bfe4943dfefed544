//! Data preparation: typed ingestion, key joins, logic checks and encoding.
//!
//! Tables hold one typed column per dictionary entry. Every cell is either
//! a value of the column's kind or [`Value::Missing`]; nothing is imputed.

pub mod dictionary;
pub mod encode;
pub mod join;
pub mod matrix;
pub mod rules;
pub mod table;

pub use dictionary::{ColumnKind, ColumnSpec, DataDictionary};
pub use encode::{encode, Encoded, EncodingRecipe, PredictorEncoding, UnlabeledRows};
pub use join::{join, ColumnConflict, ConsistencyReport};
pub use matrix::{FeatureMatrix, ProductColumn, Standardizer};
pub use rules::{apply_rules, CompareOp, Predicate, Rule, RuleOutcome, RuleReport, RuleSet, Severity};
pub use table::{load_table, read_table, write_table, Column, IngestIssue, IngestLog, Table, Value};
