//! Discrimination, predictive ability and calibration of risk scores.
//!
//! Tie conventions: AUC gives half credit to tied case/non-case pairs.
//! Average precision, the PR curve and the calibration curve rank records by
//! descending score and break ties by ascending record position. Average
//! precision is the rank-sum form `(1/P) Σ precision@r` over ranks holding a
//! case, not a trapezoidal area, and the PR curve has step semantics.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observed 0/1 outcomes paired with finite risk scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample<T> {
    labels: Vec<bool>,
    scores: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ids: Option<Vec<String>>,
}

impl<T: Scalar> ScoredSample<T> {
    pub fn new(labels: Vec<bool>, scores: Vec<T>) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(Error::Shape { expected: labels.len(), found: scores.len() });
        }
        if labels.is_empty() {
            return Err(Error::DegenerateSample("empty sample".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("scores must be finite".into()));
        }
        Ok(Self { labels, scores, ids: None })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.labels.len() {
            return Err(Error::Shape { expected: self.labels.len(), found: ids.len() });
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn cases(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn prevalence(&self) -> f64 {
        self.cases() as f64 / self.len() as f64
    }

    /// Same labels, transformed scores.
    pub fn map_scores(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let mut s = Self::new(self.labels.clone(), self.scores.iter().map(|&v| f(v)).collect())?;
        s.ids = self.ids.clone();
        Ok(s)
    }

    fn resample(&self, idx: &[usize]) -> Self {
        Self {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            ids: None,
        }
    }

    fn require_both(&self) -> Result<(usize, usize)> {
        let p = self.cases();
        let n = self.len() - p;
        if p == 0 || n == 0 {
            return Err(Error::DegenerateSample(format!("need cases and non-cases; got {p} and {n}")));
        }
        Ok((p, n))
    }

    fn require_cases(&self) -> Result<usize> {
        match self.cases() {
            0 => Err(Error::DegenerateSample("sample has no cases".into())),
            p => Ok(p),
        }
    }

    /// Indices by descending score, ties by ascending index.
    fn descending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].partial_cmp(&self.scores[a]).expect("finite scores"));
        idx
    }

    /// Runs of equal score in descending order, each as (cases, non-cases).
    fn descending_groups(&self) -> Vec<(usize, usize)> {
        let order = self.descending();
        let mut groups = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let s = self.scores[order[i]];
            let (mut tp, mut fp) = (0, 0);
            while i < order.len() && self.scores[order[i]] == s {
                if self.labels[order[i]] {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            groups.push((tp, fp));
        }
        groups
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Roc,
    Pr,
    Calibration,
    PartialDependence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoints<T> {
    pub kind: CurveKind,
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> CurvePoints<T> {
    /// Trapezoidal area under the polyline.
    pub fn trapezoid_area(&self) -> T {
        let half = T::of(0.5);
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * half)
            .sum()
    }

    /// Largest vertical distance `|y − x|` from the identity line.
    pub fn max_diagonal_deviation(&self) -> T {
        self.points.iter().fold(T::zero(), |m, &(x, y)| m.max((y - x).abs()))
    }

    pub fn write_csv<W: Write>(&self, writer: W, x_name: &str, y_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([x_name, y_name])?;
        for (x, y) in &self.points {
            w.write_record([x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mann–Whitney AUC: share of case/non-case pairs where the case scores
/// higher, ties counted as one half.
pub fn auc<T: Scalar>(sample: &ScoredSample<T>) -> Result<T> {
    let (p, n) = sample.require_both()?;
    // Twice the Mann–Whitney U, kept integral so the result is exact.
    let mut twice_u: u128 = 0;
    let mut noncases_below: u128 = 0;
    for &(tp, fp) in sample.descending_groups().iter().rev() {
        twice_u += 2 * tp as u128 * noncases_below + tp as u128 * fp as u128;
        noncases_below += fp as u128;
    }
    Ok(T::of(twice_u as f64 / (2.0 * p as f64 * n as f64)))
}

/// ROC points from (0, 0) to (1, 1), one per distinct score threshold.
pub fn roc_curve<T: Scalar>(sample: &ScoredSample<T>) -> Result<CurvePoints<T>> {
    let (p, n) = sample.require_both()?;
    let (pf, nf) = (T::from_count(p), T::from_count(n));
    let mut points = vec![(T::zero(), T::zero())];
    let (mut tp, mut fp) = (0, 0);
    for (gt, gf) in sample.descending_groups() {
        tp += gt;
        fp += gf;
        points.push((T::from_count(fp) / nf, T::from_count(tp) / pf));
    }
    Ok(CurvePoints { kind: CurveKind::Roc, points })
}

pub fn average_precision<T: Scalar>(sample: &ScoredSample<T>) -> Result<T> {
    let p = sample.require_cases()?;
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (rank, &i) in sample.descending().iter().enumerate() {
        if sample.labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(T::of(sum / p as f64))
}

/// (recall, precision) at each distinct threshold, highest threshold first.
/// No interpolation between points.
pub fn pr_curve<T: Scalar>(sample: &ScoredSample<T>) -> Result<CurvePoints<T>> {
    let p = T::from_count(sample.require_cases()?);
    let (mut tp, mut fp) = (0, 0);
    let points = sample
        .descending_groups()
        .into_iter()
        .map(|(gt, gf)| {
            tp += gt;
            fp += gf;
            (T::from_count(tp) / p, T::from_count(tp) / T::from_count(tp + fp))
        })
        .collect();
    Ok(CurvePoints { kind: CurveKind::Pr, points })
}

pub fn brier_score<T: Scalar>(sample: &ScoredSample<T>) -> Result<T> {
    if let Some(s) = sample.scores.iter().find(|&&s| s < T::zero() || s > T::one()) {
        return Err(Error::Domain(format!("Brier score needs risks in [0, 1]; got {s}")));
    }
    let sum: T = sample
        .labels
        .iter()
        .zip(&sample.scores)
        .map(|(&y, &s)| {
            let d = s - if y { T::one() } else { T::zero() };
            d * d
        })
        .sum();
    Ok(sum / T::from_count(sample.len()))
}

/// Cumulative calibration curve. Records are ranked by predicted risk from
/// largest to smallest; after each prefix the point is
/// (observed cases so far, summed predicted risk so far), both divided by the
/// total case count. A calibrated model tracks the identity line and both
/// coordinates end at `(1, Σ risk / P)`.
pub fn calibration_curve<T: Scalar>(sample: &ScoredSample<T>) -> Result<CurvePoints<T>> {
    let p = sample.require_cases()?;
    if let Some(s) = sample.scores.iter().find(|&&s| s < T::zero() || s > T::one()) {
        return Err(Error::Domain(format!("calibration needs risks in [0, 1]; got {s}")));
    }
    let pf = T::from_count(p);
    let mut cases = 0usize;
    let mut risk = T::zero();
    let points = sample
        .descending()
        .into_iter()
        .map(|i| {
            cases += usize::from(sample.labels[i]);
            risk = risk + sample.scores[i];
            (T::from_count(cases) / pf, risk / pf)
        })
        .collect();
    Ok(CurvePoints { kind: CurveKind::Calibration, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Ap,
    Brier,
}

impl Metric {
    pub fn compute<T: Scalar>(self, sample: &ScoredSample<T>) -> Result<T> {
        match self {
            Metric::Auc => auc(sample),
            Metric::Ap => average_precision(sample),
            Metric::Brier => brier_score(sample),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Auc => "AUC",
            Metric::Ap => "AP",
            Metric::Brier => "Brier",
        }
    }

    fn degenerate<T: Scalar>(self, sample: &ScoredSample<T>) -> bool {
        let cases = sample.cases();
        match self {
            Metric::Auc => cases == 0 || cases == sample.len(),
            Metric::Ap => cases == 0,
            Metric::Brier => false,
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Brier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate<T> {
    pub metric: Metric,
    pub point: T,
    pub lower: T,
    pub upper: T,
    pub method: String,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    /// Resamples redrawn because the metric was undefined on them.
    pub redraws: usize,
}

impl<T: Scalar> IntervalEstimate<T> {
    /// Two-decimal rendering, e.g. `0.82 (0.78, 0.85)`.
    pub fn render(&self) -> String {
        format_interval(self.point.as_f64(), self.lower.as_f64(), self.upper.as_f64())
    }
}

pub fn format_interval(point: f64, lower: f64, upper: f64) -> String {
    format!("{point:.2} ({lower:.2}, {upper:.2})")
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap 95% interval from `b` resamples of the records.
///
/// Replicate `r` draws from its own stream of the seeded generator, so the
/// result does not depend on how replicates are scheduled.
pub fn bootstrap_ci<T: Scalar>(metric: Metric, sample: &ScoredSample<T>, b: usize, seed: u64) -> Result<IntervalEstimate<T>> {
    if b < 100 {
        return Err(Error::Config(format!("bootstrap needs at least 100 replicates, got {b}")));
    }
    let point = metric.compute(sample)?;
    let n = sample.len();
    const MAX_ATTEMPTS: usize = 1000;
    let reps: Vec<(f64, usize)> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut idx = vec![0usize; n];
            for attempt in 0..MAX_ATTEMPTS {
                idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
                let rs = sample.resample(&idx);
                if !metric.degenerate(&rs) {
                    let v = metric.compute(&rs)?;
                    return Ok((v.as_f64(), attempt));
                }
            }
            Err(Error::Instability(format!("{} undefined on {MAX_ATTEMPTS} consecutive resamples", metric.label())))
        })
        .collect::<Result<_>>()?;
    let redraws: usize = reps.iter().map(|r| r.1).sum();
    if redraws * 10 > b {
        return Err(Error::Instability(format!(
            "{} undefined on {redraws} of {} resamples",
            metric.label(),
            b + redraws
        )));
    }
    let mut values: Vec<f64> = reps.into_iter().map(|r| r.0).collect();
    values.sort_by(|a, c| a.partial_cmp(c).expect("finite metric"));
    let p = point.as_f64();
    Ok(IntervalEstimate {
        metric,
        point,
        lower: T::of(quantile(&values, 0.025).min(p)),
        upper: T::of(quantile(&values, 0.975).max(p)),
        method: "percentile bootstrap".into(),
        b,
        seed,
        redraws,
    })
}

/// Echo of the conventions behind an [`Evaluation`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub auc_ties: String,
    pub rank_ties: String,
    pub ap_form: String,
    pub pr_curve: String,
    pub calibration: String,
    pub interval: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            auc_ties: "tied case/non-case pairs count 1/2".into(),
            rank_ties: "descending score, ties by ascending record position".into(),
            ap_form: "rank sum (1/P) * sum of precision@r over case ranks".into(),
            pr_curve: "step, one point per distinct threshold, no interpolation".into(),
            calibration: "x = cumulative observed cases / P, y = cumulative predicted risk / P".into(),
            interval: "percentile bootstrap 2.5/97.5".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { b: 1000, seed: 2021 }
    }
}

/// Point estimates, optional intervals and the three curves for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub n: usize,
    pub cases: usize,
    pub auc: T,
    pub ap: T,
    pub brier: T,
    #[serde(default)]
    pub intervals: Vec<IntervalEstimate<T>>,
    pub roc: CurvePoints<T>,
    pub pr: CurvePoints<T>,
    pub calibration: CurvePoints<T>,
    pub conventions: Conventions,
}

impl<T: Scalar> Evaluation<T> {
    pub fn metric(&self, m: Metric) -> T {
        match m {
            Metric::Auc => self.auc,
            Metric::Ap => self.ap,
            Metric::Brier => self.brier,
        }
    }

    pub fn interval(&self, m: Metric) -> Option<&IntervalEstimate<T>> {
        self.intervals.iter().find(|i| i.metric == m)
    }
}

pub fn evaluate<T: Scalar>(sample: &ScoredSample<T>, bootstrap: Option<BootstrapSpec>) -> Result<Evaluation<T>> {
    let intervals = match bootstrap {
        Some(spec) => [Metric::Auc, Metric::Ap, Metric::Brier]
            .into_iter()
            .map(|m| bootstrap_ci(m, sample, spec.b, spec.seed))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(Evaluation {
        n: sample.len(),
        cases: sample.cases(),
        auc: auc(sample)?,
        ap: average_precision(sample)?,
        brier: brier_score(sample)?,
        intervals,
        roc: roc_curve(sample)?,
        pr: pr_curve(sample)?,
        calibration: calibration_curve(sample)?,
        conventions: Conventions::default(),
    })
}
