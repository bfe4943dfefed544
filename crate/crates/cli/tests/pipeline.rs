mod common;

use std::path::Path;

use common::*;
use riskkit::metrics::{evaluate, format_interval, ScoredSample};
use riskkit::RiskModel;
use riskkit_cli::commands::TuneReport;
use riskkit_cli::plot::{evaluation_chart, report_series, PlotKind};
use riskkit_cli::portable::PortableModel;
use riskkit_cli::report::{EvaluationReport, ReportKind, RunEcho};

fn read_report(path: &Path) -> EvaluationReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn setup(n: usize, extra: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_raw_tables(dir.path(), &aof_spec(n, 1));
    let cfg = write_config(dir.path(), &format!("seed = 7\n[bootstrap]\nB = 200\n{DATA_SECTION}\n{extra}"));
    (dir, cfg)
}

#[test]
fn prepare_joins_filters_and_is_deterministic() {
    let (dir, cfg) = setup(600, "");
    let out = riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("prepared"));
    let prepared = dir.path().join("out/prepared");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prepared.join("report.json")).unwrap()).unwrap();
    let excluded = (1..=600).filter(|&id| ((id * 37) % 330) as f64 / 10.0 > 30.0).count();
    assert_eq!(report["source"]["rules"]["excluded_ids"].as_array().unwrap().len(), excluded);
    assert_eq!(report["n"].as_u64().unwrap() as usize, 600 - excluded);
    assert_eq!(report["source"]["joins"][0]["matched_rows"], 600);
    let features: Vec<&str> = report["features"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(features, ["age", "transplant=yes", "dose", "high_dose", "age*transplant=yes"]);

    let first: Vec<Vec<u8>> = ["table.csv", "recipe.json", "matrix.csv", "report.json", "dictionary.json"]
        .iter()
        .map(|f| std::fs::read(prepared.join(f)).unwrap())
        .collect();
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    for (f, bytes) in ["table.csv", "recipe.json", "matrix.csv", "report.json", "dictionary.json"].iter().zip(first) {
        assert_eq!(std::fs::read(prepared.join(f)).unwrap(), bytes, "{f} changed between runs");
    }
}

#[test]
fn missing_outcome_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_raw_tables(dir.path(), &aof_spec(100, 1));
    let body = DATA_SECTION.replace("outcome = \"aof\"\n", "");
    let cfg = write_config(dir.path(), &body);
    let out = riskkit(&["prepare", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outcome"));

    let body = DATA_SECTION.replace("outcome = \"aof\"", "outcome = \"menopause\"");
    let cfg = write_config(dir.path(), &body);
    let out = riskkit(&["prepare", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("menopause"));
}

#[test]
fn duplicate_key_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    write_raw_tables(dir.path(), &aof_spec(100, 1));
    let csv = dir.path().join("treatment.csv");
    let mut text = std::fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap().to_string();
    text.push_str(&last);
    text.push('\n');
    std::fs::write(&csv, text).unwrap();
    let cfg = write_config(dir.path(), DATA_SECTION);
    let out = riskkit(&["prepare", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("treatment.csv"));
}

#[test]
fn separated_outcome_is_a_numeric_error() {
    let (dir, _) = setup(300, "");
    // Make the outcome a deterministic function of high_dose.
    let demo = dir.path().join("demographics.csv");
    let treat = std::fs::read_to_string(dir.path().join("treatment.csv")).unwrap();
    let high: std::collections::HashMap<String, String> = treat
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].to_string())
        })
        .collect();
    let text = std::fs::read_to_string(&demo).unwrap();
    let mut lines = text.lines();
    let mut rewritten = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        rewritten.push_str(&format!("{},{},{}\n", f[0], f[1], high[f[0]]));
    }
    std::fs::write(&demo, rewritten).unwrap();
    let cfg = write_config(dir.path(), &format!("{DATA_SECTION}\n[fit]\nparams = {{ family = \"logit\" }}\n"));
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    let out = riskkit(&["fit", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn logit_cv_report_is_reproducible_from_pooled_scores() {
    let (dir, cfg) = setup(1500, "");
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    let out = riskkit_ok(&["cv", "-c", path_str(&cfg)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("logit (cross-validation): AUC"));
    let cv_dir = dir.path().join("out/cv/logit");
    let report = read_report(&cv_dir.join("report.json"));
    assert_eq!(report.kind, ReportKind::CrossValidation);
    assert_eq!(report.echo.k, Some(10));
    assert_eq!(report.echo.stratified, Some(true));
    assert_eq!(report.evaluation.intervals.len(), 3);
    for key in ["AUC", "AP", "Brier"] {
        assert!(report.summary[key].contains('('), "{key}: {}", report.summary[key]);
    }
    let again = evaluate(&report.pooled, report.echo.bootstrap).unwrap();
    assert_eq!(again, report.evaluation);
    assert_eq!(report.folds.len(), 10);
    for f in ["roc.csv", "pr.csv", "calibration.csv", "predictions.csv"] {
        assert!(cv_dir.join(f).exists(), "{f}");
    }
    let folds = std::fs::read_to_string(dir.path().join("out/cv/folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), report.pooled.len() + 1);
}

#[test]
fn svm_tuning_has_one_row_per_cell() {
    let extra = r#"
[tune]
families = ["svm"]

[tune.svm]
c = [0.1, 1.0]
kernels = [
    { kind = "linear" },
    { kind = "polynomial", degree = 2, gamma = 0.2, coef0 = 1.0 },
    { kind = "gaussian", gamma = 0.2 },
]
"#;
    let (dir, cfg) = setup(300, extra);
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    riskkit_ok(&["tune", "-c", path_str(&cfg)]);
    let text = std::fs::read_to_string(dir.path().join("out/tune/svm/leaderboard.json")).unwrap();
    let report: TuneReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.outcome.leaderboard.len(), 6);
    let mut kinds: Vec<&str> = report
        .outcome
        .leaderboard
        .iter()
        .map(|e| match e.params {
            riskkit::crossval::Hyperparams::Svm { kernel, .. } => kernel.name(),
            _ => panic!("non-svm cell"),
        })
        .collect();
    kinds.sort_unstable();
    kinds.dedup();
    assert_eq!(kinds, ["gaussian", "linear", "polynomial"]);
    let csv = std::fs::read_to_string(dir.path().join("out/tune/svm/leaderboard.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn screen_covers_every_subset() {
    let extra = "[screen]\npredictors = [\"age\", \"transplant\", \"dose\"]\ninteractions = []\n";
    let (dir, cfg) = setup(400, extra);
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    riskkit_ok(&["screen", "-c", path_str(&cfg)]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/screen/leaderboard.json")).unwrap())
            .unwrap();
    let entries = v["leaderboard"].as_array().unwrap();
    assert_eq!(entries.len(), 7);
    assert!(entries.iter().all(|e| e["error"].is_null()));
}

fn fit_logit(n: usize, extra: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let (dir, cfg) = setup(n, &format!("[fit]\nparams = {{ family = \"logit\" }}\n{extra}"));
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    riskkit_ok(&["fit", "-c", path_str(&cfg)]);
    (dir, cfg)
}

#[test]
fn exported_logit_names_its_coefficients_and_round_trips() {
    let (dir, _) = fit_logit(800, "");
    let path = dir.path().join("out/model.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let model = PortableModel::from_json(&text).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let names: Vec<&str> =
        json["model"]["feature_names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(names, ["age", "transplant=yes", "dose", "high_dose", "age*transplant=yes"]);
    assert_eq!(json["model"]["coefficients"].as_array().unwrap().len(), 5);
    assert!(json["provenance"]["training_fingerprint"].as_str().unwrap().len() == 64);

    // Export, import, predict: bitwise identical on 100 rows.
    let prepared = riskkit_cli::source::load_prepared(&dir.path().join("out")).unwrap();
    let original = model.to_fitted();
    let reloaded = PortableModel::from_json(&serde_json::to_string(&model).unwrap()).unwrap().to_fitted();
    for row in prepared.matrix.rows().take(100) {
        let a = original.predict_risk(row).unwrap();
        let b = reloaded.predict_risk(row).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let tampered = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
    assert!(matches!(PortableModel::from_json(&tampered), Err(riskkit_cli::CliError::Config(_))));
    std::fs::write(dir.path().join("tampered.json"), tampered).unwrap();
    let cfg = write_config(dir.path(), &format!("{DATA_SECTION}\n{}", external_section("demographics")));
    let out = riskkit(&["validate", "-c", path_str(&cfg), "--model", path_str(&dir.path().join("tampered.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format_version"));
}

#[test]
fn svm_and_forest_models_round_trip_bitwise() {
    for params in [
        "{ family = \"svm\", c = 1.0, kernel = { kind = \"gaussian\", gamma = 0.2 } }",
        "{ family = \"forest\", n_trees = 50, mtry = 2, node_size = 5 }",
    ] {
        let (dir, cfg) = setup(300, &format!("[fit]\nparams = {params}\n"));
        riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
        riskkit_ok(&["fit", "-c", path_str(&cfg)]);
        let text = std::fs::read_to_string(dir.path().join("out/model.json")).unwrap();
        let model = PortableModel::from_json(&text).unwrap();
        let again = PortableModel::from_json(&serde_json::to_string_pretty(&model).unwrap()).unwrap();
        assert_eq!(model, again);
        let prepared = riskkit_cli::source::load_prepared(&dir.path().join("out")).unwrap();
        let (a, b) = (model.to_fitted(), again.to_fitted());
        for row in prepared.matrix.rows().take(100) {
            assert_eq!(a.predict_risk(row).unwrap().to_bits(), b.predict_risk(row).unwrap().to_bits());
        }
        let apparent = read_report(&dir.path().join("out/fit/apparent/report.json"));
        let direct: Vec<f64> = prepared.matrix.rows().map(|r| a.predict_risk(r).unwrap()).collect();
        assert_eq!(apparent.pooled.scores(), direct.as_slice());
    }
}

#[test]
fn external_copy_of_training_data_reproduces_apparent_metrics() {
    let dir = tempfile::tempdir().unwrap();
    write_raw_tables(dir.path(), &aof_spec(700, 1));
    write_external_table(dir.path(), "same", &aof_spec(700, 1));
    let body = format!(
        "seed = 7\n[bootstrap]\nB = 200\n{DATA_SECTION}\n[fit]\nparams = {{ family = \"logit\" }}\n{}",
        external_section("same")
    );
    let cfg = write_config(dir.path(), &body);
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    riskkit_ok(&["fit", "-c", path_str(&cfg)]);
    riskkit_ok(&["validate", "-c", path_str(&cfg)]);
    let apparent = read_report(&dir.path().join("out/fit/apparent/report.json"));
    let external = read_report(&dir.path().join("out/external/report.json"));
    assert_eq!(external.kind, ReportKind::External);
    assert_eq!(external.pooled.ids(), apparent.pooled.ids());
    assert_eq!(external.evaluation, apparent.evaluation);
}

#[test]
fn external_schema_problems_are_reported() {
    let (dir, _) = fit_logit(300, "");
    // Unseen factor level.
    let mut spec = aof_spec(200, 9);
    spec.features[1].dist =
        riskkit::synth::FeatureDist::Binary { prevalence: 0.5, levels: Some(["no".into(), "allogeneic".into()]) };
    write_external_table(dir.path(), "odd", &spec);
    let cfg = write_config(dir.path(), &format!("{DATA_SECTION}\n{}", external_section("odd")));
    let out = riskkit(&["validate", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("allogeneic"));

    // Missing predictor column.
    write_external_table(dir.path(), "thin", &aof_spec(200, 9));
    let csv = dir.path().join("thin.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let cut: String = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{},{},{},{},{}\n", f[0], f[1], f[2], f[4], f[5], f[6])
        })
        .collect();
    std::fs::write(&csv, cut).unwrap();
    let dict_path = dir.path().join("thin.dictionary.json");
    let mut dict: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dict_path).unwrap()).unwrap();
    dict["columns"].as_array_mut().unwrap().retain(|c| c["name"] != "dose");
    std::fs::write(&dict_path, dict.to_string()).unwrap();
    let cfg = write_config(dir.path(), &format!("{DATA_SECTION}\n{}", external_section("thin")));
    let out = riskkit(&["validate", "-c", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dose`"));
}

#[test]
fn external_cohort_matches_internal_discrimination() {
    let dir = tempfile::tempdir().unwrap();
    write_raw_tables(dir.path(), &aof_spec(10_000, 1));
    write_external_table(dir.path(), "external", &aof_spec(10_000, 2));
    let body = format!(
        "[bootstrap]\nenabled = false\n{DATA_SECTION}\n[fit]\nparams = {{ family = \"logit\" }}\n{}",
        external_section("external")
    );
    let cfg = write_config(dir.path(), &body);
    riskkit_ok(&["prepare", "-c", path_str(&cfg)]);
    riskkit_ok(&["fit", "-c", path_str(&cfg)]);
    riskkit_ok(&["validate", "-c", path_str(&cfg)]);
    let internal = read_report(&dir.path().join("out/fit/cv/report.json"));
    let external = read_report(&dir.path().join("out/external/report.json"));
    let gap = (internal.evaluation.auc - external.evaluation.auc).abs();
    assert!(gap < 0.03, "internal {} external {}", internal.evaluation.auc, external.evaluation.auc);
}

fn sample_report(label: &str, labels: Vec<bool>, scores: Vec<f64>) -> EvaluationReport {
    let echo = RunEcho { seed: 1, k: None, stratified: None, bootstrap: None, predictors: vec![], interactions: vec![] };
    let sample = ScoredSample::new(labels, scores).unwrap();
    EvaluationReport::from_sample(ReportKind::External, label.into(), None, sample, echo).unwrap()
}

#[test]
fn calibrated_sample_plots_on_the_diagonal() {
    // Risks i/n for i in 1..n, with exactly the expected number of cases in
    // each block of 50.
    let n = 5000;
    let risks: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut labels = vec![false; n];
    for block in risks.chunks(50).enumerate() {
        let expected: f64 = block.1.iter().sum();
        for j in 0..expected.round() as usize {
            labels[block.0 * 50 + 49 - j] = true;
        }
    }
    let report = sample_report("calibrated", labels, risks);
    let series = report_series(&report, PlotKind::Calibration, false).unwrap();
    let dev = series.points.iter().map(|(x, y)| (y - x).abs()).fold(0.0, f64::max);
    assert!(dev < 0.05, "max deviation {dev}");
    assert_eq!(series.points[0], (0.0, 0.0));
    let swapped = report_series(&report, PlotKind::Calibration, true).unwrap();
    assert!(series.points.iter().zip(&swapped.points).all(|(a, b)| a.0 == b.1 && a.1 == b.0));
}

#[test]
fn overlay_draws_each_model_and_the_diagonal() {
    let a = sample_report("logit", vec![true, false, true, false], vec![0.9, 0.8, 0.7, 0.1]);
    let b = sample_report("forest", vec![true, false, true, false], vec![0.6, 0.2, 0.7, 0.4]);
    let svg = evaluation_chart(&[a.clone(), b], PlotKind::Roc, false).unwrap().to_svg();
    assert_eq!(svg.matches("class=\"series\"").count(), 2);
    assert_eq!(svg.matches("class=\"diagonal\"").count(), 1);
    assert!(svg.contains("logit (external): AUC 0.75"));
    let pr = evaluation_chart(&[a], PlotKind::Pr, false).unwrap().to_svg();
    assert_eq!(pr.matches("class=\"diagonal\"").count(), 0);
    assert_eq!(format_interval(0.82, 0.78, 0.85), "0.82 (0.78, 0.85)");
}

#[test]
fn plot_command_writes_svg_and_rejects_missing_curves() {
    let (dir, _) = fit_logit(400, "[pdp]\nvary = \"age\"\nstrata = \"transplant=yes\"\n");
    let out = dir.path().join("out");
    let svg = dir.path().join("cal.svg");
    riskkit_ok(&[
        "plot",
        "--kind",
        "calibration",
        "--out",
        path_str(&svg),
        path_str(&out.join("fit/cv/report.json")),
        path_str(&out.join("fit/apparent/report.json")),
    ]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("class=\"series\"").count(), 2);
    assert!(text.contains("logit (apparent): Brier"));

    let pdp_svg = dir.path().join("pdp.svg");
    riskkit_ok(&["plot", "--kind", "pdp", "--out", path_str(&pdp_svg), path_str(&out.join("fit/pdp.json"))]);
    assert!(std::fs::read_to_string(&pdp_svg).unwrap().contains("transplant=yes = 1"));

    let bad = riskkit(&["plot", "--kind", "pdp", "--out", path_str(&pdp_svg), path_str(&out.join("fit/cv/report.json"))]);
    assert_eq!(bad.status.code(), Some(2));
}
