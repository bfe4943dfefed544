use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CurveKind, CurvePoints};
use crate::model::RiskModel;
use crate::scalar::Scalar;
use crate::tabular::matrix::FeatureMatrix;

/// Risk along one feature for each level of a 0/1 stratifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDependence<T> {
    pub vary: String,
    pub strata: String,
    /// Curve with the stratifier at 0.
    pub stratum0: CurvePoints<T>,
    /// Curve with the stratifier at 1.
    pub stratum1: CurvePoints<T>,
}

fn median<T: Scalar>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}

/// Predicts risk on the column-wise median row with `vary` swept over
/// `grid_points` evenly spaced values across its observed range and
/// `strata` set to 0 and then 1. Product columns are recomputed from their
/// parents at every point.
pub fn partial_dependence<T: Scalar, M: RiskModel<T> + ?Sized>(
    model: &M,
    m: &FeatureMatrix<T>,
    vary: &str,
    strata: &str,
    grid_points: usize,
) -> Result<PartialDependence<T>> {
    let find = |name: &str| m.feature_index(name).ok_or_else(|| Error::Config(format!("unknown feature `{name}`")));
    let (v, s) = (find(vary)?, find(strata)?);
    if v == s {
        return Err(Error::Config("vary and strata must be different features".into()));
    }
    if grid_points < 2 {
        return Err(Error::Config("partial dependence needs at least 2 grid points".into()));
    }
    if m.n_rows() == 0 {
        return Err(Error::DegenerateSample("empty matrix".into()));
    }
    let sv = m.column(s);
    if sv.iter().any(|&x| x != T::zero() && x != T::one()) {
        return Err(Error::Config(format!("stratifier `{strata}` is not coded 0/1")));
    }
    let reference: Vec<T> = (0..m.n_features()).map(|j| median(m.column(j))).collect();
    let col = m.column(v);
    let lo = col.iter().copied().fold(T::infinity(), T::min);
    let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
    let step = (hi - lo) / T::from_count(grid_points - 1);

    let curve = |level: T| -> Result<CurvePoints<T>> {
        let mut points = Vec::with_capacity(grid_points);
        for g in 0..grid_points {
            let x = if g + 1 == grid_points { hi } else { lo + step * T::from_count(g) };
            let mut row = reference.clone();
            row[v] = x;
            row[s] = level;
            m.refresh_products(&mut row);
            points.push((x, model.predict_risk(&row)?));
        }
        Ok(CurvePoints { kind: CurveKind::PartialDependence, points })
    };
    Ok(PartialDependence {
        vary: vary.to_string(),
        strata: strata.to_string(),
        stratum0: curve(T::zero())?,
        stratum1: curve(T::one())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logit::LogisticModel;

    fn matrix() -> FeatureMatrix<f64> {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i % 2) as f64, 3.0]).collect();
        FeatureMatrix::from_rows(vec!["age".into(), "bmt".into(), "dose".into()], &rows, vec![false; 10]).unwrap()
    }

    #[test]
    fn ignored_stratifier_gives_identical_curves() {
        let model = LogisticModel::from_parts(-1.0, vec![0.3, 0.0, 0.1], matrix().feature_names().to_vec()).unwrap();
        let pd = partial_dependence(&model, &matrix(), "age", "bmt", 7).unwrap();
        for (a, b) in pd.stratum0.points.iter().zip(&pd.stratum1.points) {
            assert!((a.1 - b.1).abs() < 1e-9);
        }
        assert!(pd.stratum0.points.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(pd.stratum0.points[0].0, 0.0);
        assert_eq!(pd.stratum0.points[6].0, 9.0);
    }

    #[test]
    fn stratifier_must_be_binary() {
        let model = LogisticModel::from_parts(0.0, vec![0.0; 3], matrix().feature_names().to_vec()).unwrap();
        assert!(matches!(partial_dependence(&model, &matrix(), "bmt", "age", 5), Err(Error::Config(_))));
    }
}
