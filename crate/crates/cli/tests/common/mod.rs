#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riskkit::synth::{generate, FeatureDist, GeneratorSpec};
use riskkit::tabular::{write_table, Column, ColumnSpec, Table, Value};

pub const PREDICTORS: [&str; 4] = ["age", "transplant", "dose", "high_dose"];

/// The example cohort with a yes/no transplant factor and an `aof` outcome.
pub fn aof_spec(n: usize, seed: u64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::example_cohort(n, seed);
    spec.features[1].dist = FeatureDist::Binary { prevalence: 0.25, levels: Some(["no".into(), "yes".into()]) };
    spec.outcome = "aof".into();
    spec
}

/// Pituitary dose in [0, 33); about one row in eleven exceeds 30.
fn pituitary_dose(id: usize) -> f64 {
    ((id * 37) % 330) as f64 / 10.0
}

fn pick(t: &Table, names: &[&str]) -> Vec<Column> {
    names.iter().map(|n| t.column(n).unwrap().clone()).collect()
}

fn save(dir: &Path, table: &Table) {
    let csv = dir.join(format!("{}.csv", table.name()));
    write_table(table, std::fs::File::create(csv).unwrap()).unwrap();
    table
        .dictionary()
        .write_json_file(dir.join(format!("{}.dictionary.json", table.name())))
        .unwrap();
}

fn with_pituitary(t: &Table) -> Column {
    let values = (0..t.row_count())
        .map(|r| Value::Number(pituitary_dose(t.record_id(r).parse().unwrap())))
        .collect();
    Column::new(&ColumnSpec::numeric("pituitary_dose"), values)
}

/// Splits a cohort into demographics, treatment and radiation tables keyed
/// by `id`; the second and third are stored in reverse row order.
pub fn write_raw_tables(dir: &Path, spec: &GeneratorSpec) {
    let cohort = generate(spec).unwrap();
    let t = &cohort.table;
    let reversed: Vec<usize> = (0..t.row_count()).rev().collect();
    let demo = Table::new("demographics", pick(t, &["id", "age", "aof"]), Some("id")).unwrap();
    let treat = Table::new("treatment", pick(t, &["id", "transplant", "dose", "high_dose"]), Some("id"))
        .unwrap()
        .select_rows(&reversed);
    let mut rad_cols = pick(t, &["id"]);
    rad_cols.push(with_pituitary(t));
    let rad = Table::new("radiation", rad_cols, Some("id")).unwrap().select_rows(&reversed);
    for table in [&demo, &treat, &rad] {
        save(dir, table);
    }
}

/// One table holding every column, as an external site would send it.
pub fn write_external_table(dir: &Path, name: &str, spec: &GeneratorSpec) {
    let cohort = generate(spec).unwrap();
    let t = &cohort.table;
    let mut cols = pick(t, &["id", "age", "transplant", "dose", "high_dose", "aof"]);
    cols.push(with_pituitary(t));
    save(dir, &Table::new(name, cols, Some("id")).unwrap());
}

pub const DATA_SECTION: &str = r#"
[data]
outcome = "aof"
predictors = ["age", "transplant", "dose", "high_dose"]
interactions = [["age", "transplant"]]

[[data.tables]]
csv = "demographics.csv"
dictionary = "demographics.dictionary.json"

[[data.tables]]
csv = "treatment.csv"
dictionary = "treatment.dictionary.json"

[[data.tables]]
csv = "radiation.csv"
dictionary = "radiation.dictionary.json"

[[data.joins]]
right = "treatment"
left_key = "id"

[[data.joins]]
right = "radiation"
left_key = "id"

[[data.rules]]
name = "pituitary dose above 30 Gy"
column = "pituitary_dose"
severity = "exclude"
predicate = { kind = "range", max = 30.0 }
"#;

pub fn external_section(name: &str) -> String {
    format!(
        r#"
[external]
tables = [{{ csv = "{name}.csv", dictionary = "{name}.dictionary.json" }}]
rules = [{{ column = "pituitary_dose", severity = "exclude", predicate = {{ kind = "range", max = 30.0 }} }}]
"#
    )
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

pub fn riskkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskkit")).args(args).output().unwrap()
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn riskkit_ok(args: &[&str]) -> Output {
    let out = riskkit(args);
    assert!(
        out.status.success(),
        "riskkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
