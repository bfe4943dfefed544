//! Static SVG charts for ROC, precision-recall, calibration and partial
//! dependence curves.

use std::fmt::Write;

use riskkit::crossval::PartialDependence;
use riskkit::metrics::Metric;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::report::EvaluationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Roc,
    Pr,
    Calibration,
    Pdp,
}

/// One polyline with its legend text.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub diagonal: bool,
    pub series: Vec<Series>,
}

fn metric_for(kind: PlotKind) -> Metric {
    match kind {
        PlotKind::Roc => Metric::Auc,
        PlotKind::Pr => Metric::Ap,
        _ => Metric::Brier,
    }
}

/// The plotted points of one report, with its annotated legend entry.
/// Calibration curves start at the origin; `swap_axes` exchanges x and y.
pub fn report_series(report: &EvaluationReport, kind: PlotKind, swap_axes: bool) -> Result<Series> {
    let e = &report.evaluation;
    let mut points = match kind {
        PlotKind::Roc => e.roc.points.clone(),
        PlotKind::Pr => e.pr.points.clone(),
        PlotKind::Calibration => {
            let mut p = vec![(0.0, 0.0)];
            p.extend(&e.calibration.points);
            p
        }
        PlotKind::Pdp => {
            return Err(CliError::Config(format!("report `{}` holds no partial dependence curves", report.label)))
        }
    };
    if kind == PlotKind::Calibration && swap_axes {
        points.iter_mut().for_each(|p| *p = (p.1, p.0));
    }
    let metric = metric_for(kind);
    let annotation = match e.interval(metric) {
        Some(i) => i.render(),
        None => format!("{:.2}", e.metric(metric)),
    };
    Ok(Series { label: format!("{}: {} {annotation}", report.legend(), metric.label()), points })
}

pub fn evaluation_chart(reports: &[EvaluationReport], kind: PlotKind, swap_axes: bool) -> Result<Chart> {
    if reports.is_empty() {
        return Err(CliError::Config("no reports to plot".into()));
    }
    let series = reports.iter().map(|r| report_series(r, kind, swap_axes)).collect::<Result<Vec<_>>>()?;
    let (title, x, y) = match kind {
        PlotKind::Roc => ("ROC curve", "False positive rate", "True positive rate"),
        PlotKind::Pr => ("Precision-recall curve", "Recall", "Precision"),
        _ if swap_axes => ("Calibration curve", "Cumulative predicted / cases", "Cumulative observed / cases"),
        _ => ("Calibration curve", "Cumulative observed / cases", "Cumulative predicted / cases"),
    };
    Ok(Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        diagonal: kind != PlotKind::Pr,
        series,
    })
}

/// Upper axis bound: the next multiple of 0.05 above the largest value.
fn nice_max(v: f64) -> f64 {
    // The small offset keeps exact multiples such as 0.15 from flooring low.
    ((v * 20.0 + 1e-9).floor() + 1.0) / 20.0
}

pub fn pdp_chart(pd: &PartialDependence<f64>) -> Chart {
    let all = pd.stratum0.points.iter().chain(&pd.stratum1.points);
    let x_lo = all.clone().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = all.clone().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_hi = nice_max(all.map(|p| p.1).fold(0.0, f64::max)).min(1.0);
    Chart {
        title: format!("Partial dependence on {} by {}", pd.vary, pd.strata),
        x_label: pd.vary.clone(),
        y_label: "Predicted risk".into(),
        x_range: (x_lo, if x_hi > x_lo { x_hi } else { x_lo + 1.0 }),
        y_range: (0.0, y_hi),
        diagonal: false,
        series: vec![
            Series { label: format!("{} = 0", pd.strata), points: pd.stratum0.points.clone() },
            Series { label: format!("{} = 1", pd.strata), points: pd.stratum1.points.clone() },
        ],
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Chart {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let (x0, x1, y0, y1) = (self.px(self.x_range.0), self.px(self.x_range.1), self.py(self.y_range.0), self.py(self.y_range.1));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect class="frame" x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for i in 0..=5 {
            let f = f64::from(i) / 5.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let (tx, ty) = (self.px(xv), self.py(yv));
            let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{y0:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick(xv));
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, ty + 4.0, tick(yv));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        if self.diagonal {
            let _ = writeln!(
                s,
                r##"<line class="diagonal" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#888888" stroke-dasharray="6 4"/>"##
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> =
                series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let legend_y = y1 + 12.0;
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let y = legend_y + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
                x0 + 10.0,
                x0 + 30.0
            );
            let _ = writeln!(
                s,
                r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
                x0 + 36.0,
                y + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let t = format!("{v:.2}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t.is_empty() || t == "-" {
        "0".into()
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_trimmed() {
        assert_eq!(tick(0.0), "0");
        assert_eq!(tick(0.2), "0.2");
        assert_eq!(tick(1.0), "1");
        assert_eq!(tick(12.5), "12.5");
    }

    #[test]
    fn nice_max_rounds_up() {
        assert!((nice_max(0.12) - 0.15).abs() < 1e-12);
        assert!((nice_max(0.15) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
