//! The TOML run configuration.

use std::path::{Path, PathBuf};

use riskkit::crossval::{Family, Hyperparams};
use riskkit::maxmargin::KernelSpec;
use riskkit::metrics::{BootstrapSpec, Metric};
use riskkit::tabular::Rule;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_seed() -> u64 {
    2021
}

fn default_k() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_b() -> usize {
    1000
}

fn default_grid_points() -> usize {
    21
}

fn default_out() -> PathBuf {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub screen: ScreenConfig,
    #[serde(default)]
    pub tune: TuneConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub external: Option<SourceConfig>,
    #[serde(default)]
    pub pdp: Option<PdpConfig>,
    /// Directory holding the config file; paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// Defaults to the CSV file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub csv: PathBuf,
    pub dictionary: PathBuf,
}

impl TableConfig {
    pub fn table_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.csv.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string()
        })
    }
}

/// Left join of the table named `right` onto everything joined so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinConfig {
    pub right: String,
    pub left_key: String,
    /// Defaults to `left_key`.
    #[serde(default)]
    pub right_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub tables: Vec<TableConfig>,
    #[serde(default)]
    pub joins: Vec<JoinConfig>,
    #[serde(default)]
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub tables: Vec<TableConfig>,
    #[serde(default)]
    pub joins: Vec<JoinConfig>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    pub outcome: String,
    pub predictors: Vec<String>,
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
}

impl DataConfig {
    pub fn source(&self) -> SourceConfig {
        SourceConfig { tables: self.tables.clone(), joins: self.joins.clone(), rules: self.rules.clone() }
    }
}

/// A learner to cross-validate, with the directory name used for its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub params: Hyperparams,
}

impl NamedModel {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.params.family().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_true")]
    pub stratified: bool,
    /// Selection metric for tuning, screening and the final-model choice.
    #[serde(default = "CvConfig::default_metric")]
    pub metric: Metric,
    #[serde(default = "CvConfig::default_models")]
    pub models: Vec<NamedModel>,
}

impl CvConfig {
    fn default_metric() -> Metric {
        Metric::Auc
    }

    fn default_models() -> Vec<NamedModel> {
        vec![NamedModel { name: None, params: Hyperparams::Logit }]
    }
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: 10, stratified: true, metric: Metric::Auc, models: Self::default_models() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(rename = "B", default = "default_b")]
    pub b: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { enabled: true, b: 1000, seed: 2021 }
    }
}

impl BootstrapConfig {
    pub fn spec(&self) -> Option<BootstrapSpec> {
        self.enabled.then_some(BootstrapSpec { b: self.b, seed: self.seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenConfig {
    /// Learner used to score every candidate set.
    #[serde(default = "ScreenConfig::default_learner")]
    pub learner: Hyperparams,
    /// Defaults to the data predictors.
    #[serde(default)]
    pub predictors: Option<Vec<String>>,
    /// Defaults to the data interactions.
    #[serde(default)]
    pub interactions: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub allow_large: bool,
}

impl ScreenConfig {
    fn default_learner() -> Hyperparams {
        Hyperparams::Logit
    }
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self { learner: Hyperparams::Logit, predictors: None, interactions: None, allow_large: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmGrid {
    pub kernels: Vec<KernelSpec>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub mtry: Vec<usize>,
    pub node_size: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default = "TuneConfig::default_families")]
    pub families: Vec<Family>,
    /// Replaces the default SVM grid when given.
    #[serde(default)]
    pub svm: Option<SvmGrid>,
    /// Replaces the default forest grid when given.
    #[serde(default)]
    pub forest: Option<ForestGrid>,
}

impl TuneConfig {
    fn default_families() -> Vec<Family> {
        Family::ALL.to_vec()
    }

    /// Grid cells for `family` on a matrix with `n_features` columns.
    pub fn combos(&self, family: Family, n_features: usize, seed: u64) -> Vec<Hyperparams> {
        match family {
            Family::Logit => vec![Hyperparams::Logit],
            Family::Svm => match &self.svm {
                Some(g) => g
                    .c
                    .iter()
                    .flat_map(|&c| g.kernels.iter().map(move |&kernel| Hyperparams::Svm { kernel, c }))
                    .collect(),
                None => riskkit::maxmargin::default_grid(n_features)
                    .into_iter()
                    .map(|(kernel, c)| Hyperparams::Svm { kernel, c })
                    .collect(),
            },
            Family::Forest => match &self.forest {
                Some(g) => {
                    let mut cells = Vec::new();
                    for &n_trees in &g.n_trees {
                        for &mtry in &g.mtry {
                            for &node_size in &g.node_size {
                                cells.push(Hyperparams::Forest { n_trees, mtry, node_size });
                            }
                        }
                    }
                    cells
                }
                None => riskkit::forest::default_grid(n_features, seed)
                    .into_iter()
                    .map(|c| Hyperparams::Forest { n_trees: c.n_trees, mtry: c.mtry, node_size: c.node_size })
                    .collect(),
            },
        }
    }
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self { families: Self::default_families(), svm: None, forest: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Final hyperparameters; when absent the best tuned cell is used.
    #[serde(default)]
    pub params: Option<Hyperparams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdpConfig {
    /// Feature swept along the x axis.
    pub vary: String,
    /// 0/1 feature defining the two curves.
    pub strata: String,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    fn validate(&self) -> Result<()> {
        if self.data.predictors.is_empty() {
            return Err(CliError::Config("data.predictors is empty".into()));
        }
        let mut names: Vec<String> = self.cv.models.iter().map(NamedModel::label).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!("two cv models are named `{}`; set `name` to tell them apart", w[0])));
        }
        if let Some(p) = self
            .screen
            .predictors
            .iter()
            .flatten()
            .find(|p| !self.data.predictors.contains(p))
        {
            return Err(CliError::Config(format!("screen predictor `{p}` is not among data.predictors")));
        }
        Ok(())
    }
}
