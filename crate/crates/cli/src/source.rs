//! Loading, joining and filtering raw tables, and the prepared-data store.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use riskkit::tabular::{
    apply_rules, join, load_table, ConsistencyReport, DataDictionary, EncodingRecipe, IngestLog, RuleReport, RuleSet,
    Table,
};
use riskkit::FeatureMatrix;
use serde::Serialize;

use crate::config::{RunConfig, SourceConfig};
use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SourceReport {
    pub ingest: Vec<IngestLog>,
    pub joins: Vec<ConsistencyReport>,
    pub rules: RuleReport,
}

/// Loads every table, runs the join chain and applies the rules.
pub fn load_source(cfg: &RunConfig, source: &SourceConfig) -> Result<(Table, SourceReport)> {
    if source.tables.is_empty() {
        return Err(CliError::Config("no input tables listed".into()));
    }
    let mut tables = Vec::with_capacity(source.tables.len());
    let mut ingest = Vec::new();
    for tc in &source.tables {
        let dict_path = cfg.resolve(&tc.dictionary);
        let dict = DataDictionary::from_json_file(&dict_path).context(dict_path.display())?;
        let csv_path = cfg.resolve(&tc.csv);
        let (table, log) = load_table(&csv_path, &dict).context(csv_path.display())?;
        let name = tc.table_name();
        if tables.iter().any(|(n, _): &(String, Table)| *n == name) {
            return Err(CliError::Config(format!("table name `{name}` is used twice")));
        }
        ingest.push(log);
        tables.push((name.clone(), table.with_name(&name)));
    }

    let mut joined = tables[0].1.clone();
    let mut used = vec![false; tables.len()];
    used[0] = true;
    let mut joins = Vec::new();
    for jc in &source.joins {
        let idx = tables
            .iter()
            .position(|(n, _)| *n == jc.right)
            .ok_or_else(|| CliError::Config(format!("join names unknown table `{}`", jc.right)))?;
        if used[idx] {
            return Err(CliError::Config(format!("table `{}` is joined twice", jc.right)));
        }
        used[idx] = true;
        let right_key = jc.right_key.as_deref().unwrap_or(&jc.left_key);
        let (t, report) = join(&joined, &tables[idx].1, &jc.left_key, right_key)
            .context(format!("joining `{}` on {}", jc.right, jc.left_key))?;
        joined = t;
        joins.push(report);
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(CliError::Config(format!("table `{}` is listed but never joined", tables[i].0)));
    }

    let rules = RuleSet { rules: source.rules.clone() };
    let (filtered, rule_report) = apply_rules(&joined, &rules).context("applying rules")?;
    Ok((filtered, SourceReport { ingest, joins, rules: rule_report }))
}

/// File layout of a prepared data set inside the output directory.
pub struct PreparedPaths {
    pub dir: PathBuf,
}

impl PreparedPaths {
    pub fn new(out: &Path) -> Self {
        Self { dir: out.join("prepared") }
    }

    pub fn table(&self) -> PathBuf {
        self.dir.join("table.csv")
    }

    pub fn dictionary(&self) -> PathBuf {
        self.dir.join("dictionary.json")
    }

    pub fn recipe(&self) -> PathBuf {
        self.dir.join("recipe.json")
    }

    pub fn matrix(&self) -> PathBuf {
        self.dir.join("matrix.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.dir.join("report.json")
    }
}

/// The filtered table, its encoding recipe and the encoded matrix.
pub struct Prepared {
    pub table: Table,
    pub recipe: EncodingRecipe,
    pub matrix: FeatureMatrix<f64>,
}

pub fn load_prepared(out: &Path) -> Result<Prepared> {
    let paths = PreparedPaths::new(out);
    if !paths.recipe().exists() {
        return Err(CliError::Config(format!(
            "no prepared data under {}; run `riskkit prepare` first",
            paths.dir.display()
        )));
    }
    let dict = DataDictionary::from_json_file(paths.dictionary()).context(paths.dictionary().display())?;
    let (table, _) = load_table(paths.table(), &dict).context(paths.table().display())?;
    let recipe: EncodingRecipe = read_json(&paths.recipe())?;
    let (matrix, _) = recipe.encode(&table).context("encoding prepared table")?;
    Ok(Prepared { table, recipe, matrix })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(riskkit::Error::from)
        .context(path.display())?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(riskkit::Error::from).context(path.display())
}

/// Writes rows through a CSV writer created at `path`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    let fail = |e: csv::Error| CliError::Core { context: path.display().to_string(), source: e.into() };
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
