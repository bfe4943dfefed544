//! The pipeline steps behind each subcommand.

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use riskkit::crossval::{
    cross_validate_with, enumerate_candidates, grid_search, make_folds, partial_dependence, screen_predictors, Family,
    FoldPlan, GridOutcome, Hyperparams, LeaderboardEntry, ModelSpec, PartialDependence, ScreenEntry, SearchGrid,
};
use riskkit::metrics::{Metric, ScoredSample};
use riskkit::synth::{generate, GeneratorSpec};
use riskkit::tabular::{encode, write_table, EncodingRecipe};
use riskkit::{FeatureMatrix, RiskModel};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Context, Result};
use crate::plot::{evaluation_chart, pdp_chart, PlotKind};
use crate::portable::PortableModel;
use crate::report::{EvaluationReport, ReportKind, RunEcho};
use crate::source::{create, load_prepared, load_source, read_json, write_csv, write_json, PreparedPaths, SourceReport};

#[derive(Debug, Clone, Serialize)]
pub struct PrepareReport {
    pub source: SourceReport,
    /// Rows dropped for a missing outcome or predictor.
    pub dropped_incomplete: usize,
    pub n: usize,
    pub cases: usize,
    pub outcome: String,
    pub features: Vec<String>,
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn pairs(v: &[(String, String)]) -> Vec<(&str, &str)> {
    v.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()
}

pub fn prepare(cfg: &RunConfig, out: &Path) -> Result<PrepareReport> {
    let data = &cfg.data;
    let (table, source) = load_source(cfg, &data.source())?;
    let recipe = EncodingRecipe::from_table(&table, &data.outcome, &as_strs(&data.predictors), &pairs(&data.interactions))
        .context("building the encoding")?;
    let (complete, dropped_incomplete) =
        table.complete_cases(&recipe.source_columns()).context("dropping incomplete rows")?;
    let (matrix, _) = recipe.encode(&complete).context("encoding")?;
    matrix.require_both_classes().context("prepared outcome")?;

    let paths = PreparedPaths::new(out);
    write_table(&complete, create(&paths.table())?).context(paths.table().display())?;
    complete.dictionary().write_json_file(paths.dictionary()).context(paths.dictionary().display())?;
    write_json(&paths.recipe(), &recipe)?;
    let mut header = vec!["record_id"];
    header.extend(matrix.feature_names().iter().map(String::as_str));
    header.push(&data.outcome);
    let rows = (0..matrix.n_rows()).map(|i| {
        let mut row = vec![matrix.record_ids()[i].clone()];
        row.extend(matrix.row(i).iter().map(f64::to_string));
        row.push(u8::from(matrix.labels()[i]).to_string());
        row
    });
    write_csv(&paths.matrix(), &header, rows)?;
    let report = PrepareReport {
        source,
        dropped_incomplete,
        n: matrix.n_rows(),
        cases: matrix.case_count(),
        outcome: data.outcome.clone(),
        features: matrix.feature_names().to_vec(),
    };
    write_json(&paths.report(), &report)?;
    println!(
        "prepared {} rows ({} cases, {} features); {} excluded by rules, {} incomplete",
        report.n,
        report.cases,
        report.features.len(),
        report.source.rules.excluded_ids.len(),
        dropped_incomplete
    );
    Ok(report)
}

fn plan_for(cfg: &RunConfig, m: &FeatureMatrix<f64>) -> Result<FoldPlan> {
    make_folds(m.n_rows(), cfg.cv.k, cfg.seed, cfg.cv.stratified.then_some(m.labels())).context("building folds")
}

fn echo(cfg: &RunConfig, recipe: &EncodingRecipe, cv: bool) -> RunEcho {
    RunEcho {
        seed: cfg.seed,
        k: cv.then_some(cfg.cv.k),
        stratified: cv.then_some(cfg.cv.stratified),
        bootstrap: cfg.bootstrap.spec(),
        predictors: recipe.predictors.iter().map(|p| p.name().to_string()).collect(),
        interactions: recipe.interactions.clone(),
    }
}

fn cv_report(
    cfg: &RunConfig,
    recipe: &EncodingRecipe,
    m: &FeatureMatrix<f64>,
    plan: &FoldPlan,
    label: String,
    params: Hyperparams,
) -> Result<EvaluationReport> {
    let spec = ModelSpec { params, seed: cfg.seed };
    let cv = cross_validate_with(&spec, m, plan, cfg.bootstrap.spec()).context(format!("cross-validating {label}"))?;
    let fold_of = plan.assignments.iter().map(|f| f + 1).collect();
    Ok(EvaluationReport::from_cv(label, params, cv, fold_of, echo(cfg, recipe, true)))
}

fn print_summary(r: &EvaluationReport) {
    let s = &r.summary;
    println!("{}: AUC {}, AP {}, Brier {}", r.legend(), s["AUC"], s["AP"], s["Brier"]);
}

pub fn cv(cfg: &RunConfig, out: &Path) -> Result<Vec<EvaluationReport>> {
    let p = load_prepared(out)?;
    let plan = plan_for(cfg, &p.matrix)?;
    let folds_path = out.join("cv").join("folds.csv");
    plan.write_csv(create(&folds_path)?, p.matrix.record_ids()).context(folds_path.display())?;
    let mut reports = Vec::new();
    for model in &cfg.cv.models {
        let report = cv_report(cfg, &p.recipe, &p.matrix, &plan, model.label(), model.params)?;
        report.write_dir(&out.join("cv").join(model.label()))?;
        print_summary(&report);
        reports.push(report);
    }
    Ok(reports)
}

/// A grid-search leaderboard with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub family: Family,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    #[serde(flatten)]
    pub outcome: GridOutcome,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn leaderboard_csv(path: &Path, entries: &[LeaderboardEntry]) -> Result<()> {
    let rows = entries.iter().map(|e| {
        vec![
            e.rank.to_string(),
            e.index.to_string(),
            e.params.describe(),
            fmt_opt(e.auc),
            fmt_opt(e.ap),
            fmt_opt(e.brier),
            e.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(path, &["rank", "index", "params", "auc", "ap", "brier", "error"], rows)
}

pub fn tune(cfg: &RunConfig, out: &Path) -> Result<Vec<TuneReport>> {
    let p = load_prepared(out)?;
    let plan = plan_for(cfg, &p.matrix)?;
    let mut reports = Vec::new();
    for &family in &cfg.tune.families {
        let grid = SearchGrid {
            family,
            combos: cfg.tune.combos(family, p.matrix.n_features(), cfg.seed),
            metric: cfg.cv.metric,
            seed: cfg.seed,
        };
        let outcome = grid_search(&grid, &p.matrix, &plan).context(format!("tuning {family}"))?;
        let dir = out.join("tune").join(family.as_str());
        let report = TuneReport { family, k: plan.k, seed: cfg.seed, stratified: plan.stratified, outcome };
        write_json(&dir.join("leaderboard.json"), &report)?;
        leaderboard_csv(&dir.join("leaderboard.csv"), &report.outcome.leaderboard)?;
        let best = &report.outcome.leaderboard[0];
        println!(
            "tune {family}: {} cells, best {} ({} {:.4})",
            report.outcome.leaderboard.len(),
            best.params.describe(),
            grid.metric.label(),
            best.score(grid.metric).unwrap_or(f64::NAN)
        );
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub learner: Hyperparams,
    pub metric: Metric,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub leaderboard: Vec<ScreenEntry>,
}

pub fn screen(cfg: &RunConfig, out: &Path) -> Result<ScreenReport> {
    let p = load_prepared(out)?;
    let plan = plan_for(cfg, &p.matrix)?;
    let base = cfg.screen.predictors.clone().unwrap_or_else(|| cfg.data.predictors.clone());
    let interactions = cfg.screen.interactions.clone().unwrap_or_else(|| cfg.data.interactions.clone());
    let candidates = enumerate_candidates(&base, &interactions, cfg.screen.allow_large).context("screening")?;
    let learner = ModelSpec { params: cfg.screen.learner, seed: cfg.seed };
    let outcome = &cfg.data.outcome;
    let build = |c: &riskkit::crossval::Candidate| {
        encode(&p.table, outcome, &as_strs(&c.predictors), &pairs(&c.interactions)).map(|e| e.matrix)
    };
    let leaderboard =
        screen_predictors(&candidates, &learner, build, &plan, cfg.cv.metric).context("screening predictors")?;
    let report = ScreenReport {
        learner: cfg.screen.learner,
        metric: cfg.cv.metric,
        k: plan.k,
        seed: cfg.seed,
        stratified: plan.stratified,
        leaderboard,
    };
    let dir = out.join("screen");
    write_json(&dir.join("leaderboard.json"), &report)?;
    let rows = report.leaderboard.iter().map(|e| {
        vec![
            e.rank.to_string(),
            e.index.to_string(),
            e.candidate.describe(),
            fmt_opt(e.auc),
            fmt_opt(e.ap),
            fmt_opt(e.brier),
            e.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(&dir.join("leaderboard.csv"), &["rank", "index", "terms", "auc", "ap", "brier", "error"], rows)?;
    let best = &report.leaderboard[0];
    println!(
        "screen: {} candidate sets, best {} ({} {:.4})",
        report.leaderboard.len(),
        best.candidate.describe(),
        report.metric.label(),
        best.score(report.metric).unwrap_or(f64::NAN)
    );
    Ok(report)
}

/// The configured final hyperparameters, or else the best cell across the
/// tuning leaderboards. Ties go to the family listed first in the tune
/// section.
pub fn select_params(cfg: &RunConfig, out: &Path) -> Result<Hyperparams> {
    if let Some(p) = cfg.fit.params {
        return Ok(p);
    }
    let metric = cfg.cv.metric;
    let mut best: Option<(f64, Hyperparams)> = None;
    for family in &cfg.tune.families {
        let path = out.join("tune").join(family.as_str()).join("leaderboard.json");
        if !path.exists() {
            continue;
        }
        let report: TuneReport = read_json(&path)?;
        let top = &report.outcome.leaderboard[0];
        let Some(score) = top.score(metric) else { continue };
        let better = match best {
            None => true,
            Some((s, _)) if metric.higher_is_better() => score > s,
            Some((s, _)) => score < s,
        };
        if better {
            best = Some((score, top.params));
        }
    }
    best.map(|b| b.1).ok_or_else(|| {
        CliError::Config("no fit.params given and no tuning leaderboards found; run `riskkit tune` first".into())
    })
}

pub struct FitSummary {
    pub model: PortableModel,
    pub apparent: EvaluationReport,
    pub cv: EvaluationReport,
    pub pdp: Option<PartialDependence<f64>>,
}

pub fn model_path(out: &Path) -> PathBuf {
    out.join("model.json")
}

pub fn fit(cfg: &RunConfig, out: &Path) -> Result<FitSummary> {
    let p = load_prepared(out)?;
    let params = select_params(cfg, out)?;
    let label = params.family().to_string();
    let fitted = ModelSpec { params, seed: cfg.seed }.fit_concrete(&p.matrix).context("fitting the final model")?;
    let fitted_at = Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true);
    let model = PortableModel::new(p.recipe.clone(), params, fitted, cfg.seed, &p.matrix, fitted_at);
    write_json(&model_path(out), &model)?;

    let scorer = PortableModel::load(&model_path(out))?.to_fitted();
    let risks = scorer.predict_matrix(&p.matrix).context("scoring training rows")?;
    let sample = ScoredSample::new(p.matrix.labels().to_vec(), risks)
        .and_then(|s| s.with_ids(p.matrix.record_ids().to_vec()))
        .context("scoring training rows")?;
    let apparent =
        EvaluationReport::from_sample(ReportKind::Apparent, label.clone(), Some(params), sample, echo(cfg, &p.recipe, false))
            .context("evaluating the final model")?;
    let dir = out.join("fit");
    apparent.write_dir(&dir.join("apparent"))?;

    let plan = plan_for(cfg, &p.matrix)?;
    let cv = cv_report(cfg, &p.recipe, &p.matrix, &plan, label, params)?;
    cv.write_dir(&dir.join("cv"))?;

    let pdp = match &cfg.pdp {
        Some(pc) => {
            let pd = partial_dependence(&scorer, &p.matrix, &pc.vary, &pc.strata, pc.grid_points)
                .context("partial dependence")?;
            write_json(&dir.join("pdp.json"), &pd)?;
            Some(pd)
        }
        None => None,
    };
    println!("fit {} on {} rows -> {}", params.describe(), p.matrix.n_rows(), model_path(out).display());
    print_summary(&cv);
    Ok(FitSummary { model, apparent, cv, pdp })
}

/// Scores an external cohort with an exported model. Predictions are
/// complete before the outcome column is read.
pub fn validate(cfg: &RunConfig, out: &Path, model_file: Option<&Path>) -> Result<EvaluationReport> {
    let path = model_file.map(Path::to_path_buf).unwrap_or_else(|| model_path(out));
    let model = PortableModel::load(&path)?;
    let ext = cfg.external.as_ref().ok_or_else(|| CliError::Config("no [external] section in the config".into()))?;
    let (table, source) = load_source(cfg, ext)?;
    table.require_column(&model.recipe.outcome).context("external data")?;

    let (rows, risks) = model.predict_table(&table)?;

    let outcomes = model.recipe.labels(&table, &rows.table_rows).context("reading the external outcome")?;
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut ids = Vec::new();
    for ((y, r), id) in outcomes.into_iter().zip(risks).zip(rows.record_ids) {
        if let Some(y) = y {
            labels.push(y);
            scores.push(r);
            ids.push(id);
        }
    }
    let sample = ScoredSample::new(labels, scores).and_then(|s| s.with_ids(ids)).context("external sample")?;
    let echo = echo(cfg, &model.recipe, false);
    let report = EvaluationReport::from_sample(
        ReportKind::External,
        model.family.to_string(),
        Some(model.params),
        sample,
        echo,
    )
    .context("evaluating the external cohort")?;
    let dir = out.join("external");
    report.write_dir(&dir)?;
    write_json(&dir.join("source.json"), &source)?;
    print_summary(&report);
    Ok(report)
}

pub fn plot(kind: PlotKind, inputs: &[PathBuf], out: &Path, swap_axes: bool) -> Result<()> {
    let chart = if kind == PlotKind::Pdp {
        let [input] = inputs else {
            return Err(CliError::Config("a partial dependence plot takes exactly one input".into()));
        };
        pdp_chart(&read_json::<PartialDependence<f64>>(input)?)
    } else {
        let reports = inputs.iter().map(|p| read_json::<EvaluationReport>(p)).collect::<Result<Vec<_>>>()?;
        evaluation_chart(&reports, kind, swap_axes)?
    };
    let mut w = create(out)?;
    std::io::Write::write_all(&mut w, chart.to_svg().as_bytes()).map_err(|e| CliError::io(out, e))?;
    std::io::Write::flush(&mut w).map_err(|e| CliError::io(out, e))
}

/// Every configured step in protocol order, with the standard plots.
pub fn run_all(cfg: &RunConfig, out: &Path) -> Result<()> {
    prepare(cfg, out)?;
    screen(cfg, out)?;
    let reports = cv(cfg, out)?;
    if !cfg.tune.families.is_empty() {
        tune(cfg, out)?;
    }
    fit(cfg, out)?;
    let plots = out.join("plots");
    let cv_inputs: Vec<PathBuf> =
        cfg.cv.models.iter().map(|m| out.join("cv").join(m.label()).join("report.json")).collect();
    debug_assert_eq!(cv_inputs.len(), reports.len());
    for (kind, name) in [(PlotKind::Roc, "roc"), (PlotKind::Pr, "pr"), (PlotKind::Calibration, "calibration")] {
        plot(kind, &cv_inputs, &plots.join(format!("{name}.svg")), false)?;
    }
    if cfg.external.is_some() {
        validate(cfg, out, None)?;
        let inputs = [out.join("fit").join("cv").join("report.json"), out.join("external").join("report.json")];
        for (kind, name) in [(PlotKind::Roc, "roc"), (PlotKind::Pr, "pr"), (PlotKind::Calibration, "calibration")] {
            plot(kind, &inputs, &plots.join(format!("{name}_external.svg")), false)?;
        }
    }
    if cfg.pdp.is_some() {
        plot(PlotKind::Pdp, &[out.join("fit").join("pdp.json")], &plots.join("pdp.svg"), false)?;
    }
    Ok(())
}

/// Writes `cohort.csv`, `cohort.dictionary.json` and `true_risk.csv`.
pub fn synth(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = GeneratorSpec::from_json_file(spec_path).context(spec_path.display())?;
    let cohort = generate(&spec).context("generating the cohort")?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    cohort
        .write(out.join("cohort.csv"), out.join("cohort.dictionary.json"))
        .context(out.display())?;
    let rows = (0..cohort.table.row_count()).map(|r| vec![cohort.table.record_id(r), cohort.true_risk[r].to_string()]);
    write_csv(&out.join("true_risk.csv"), &[spec.id_column.as_str(), "true_risk"], rows)?;
    let events = cohort.labels().iter().filter(|&&y| y).count();
    println!("generated {} rows with {events} events in {}", spec.n, out.display());
    Ok(())
}
