//! Baseline difficulty model: episode aggregation, least-squares regression and
//! difficulty normalization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One AI gameplay episode on a level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub level_id: u32,
    pub episode_id: u32,
    /// Fraction of level goals cleared within the human move budget.
    pub cleared_goals_frac: f64,
    pub moves_used: u32,
    pub moves_budget_human: u32,
    pub passed_with_human_budget: bool,
    /// Present exactly when the episode passed within the human budget.
    pub moves_left_on_pass: Option<u32>,
}

impl EpisodeLog {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cleared_goals_frac) {
            return Err(Error::invalid(format!(
                "cleared_goals_frac {} outside [0, 1]",
                self.cleared_goals_frac
            )));
        }
        if self.passed_with_human_budget != self.moves_left_on_pass.is_some() {
            return Err(Error::invalid(
                "moves_left_on_pass must be present exactly when the episode passed",
            ));
        }
        Ok(())
    }
}

pub const N_FEATURES: usize = 16;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "cleared_mean",
    "cleared_std",
    "cleared_min",
    "cleared_max",
    "cleared_p5",
    "cleared_p10",
    "cleared_p25",
    "cleared_p50",
    "cleared_p75",
    "moves_left_mean",
    "moves_left_std",
    "moves_left_p5",
    "moves_left_p10",
    "moves_left_p20",
    "ai_pass_mean",
    "ai_pass_std",
];

/// Per-level aggregate of AI gameplay, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelFeatures(pub [f64; N_FEATURES]);

impl AsRef<[f64]> for LevelFeatures {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Linear-interpolation percentile of sorted data at index `p/100 * (n-1)`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

pub fn aggregate_features(episodes: &[EpisodeLog]) -> Result<LevelFeatures> {
    let first = episodes
        .first()
        .ok_or_else(|| Error::invalid("no episodes to aggregate"))?;
    if let Some(e) = episodes.iter().find(|e| e.level_id != first.level_id) {
        return Err(Error::invalid(format!(
            "episodes mix levels {} and {}",
            first.level_id, e.level_id
        )));
    }
    for e in episodes {
        e.validate()?;
    }

    let cleared = sorted(episodes.iter().map(|e| e.cleared_goals_frac).collect());
    let (c_mean, c_std) = mean_std(&cleared);

    let moves_left = sorted(
        episodes
            .iter()
            .filter_map(|e| e.moves_left_on_pass.map(f64::from))
            .collect(),
    );
    // No passing episode: all moves-left statistics are 0.
    let (m_mean, m_std, m_p5, m_p10, m_p20) = if moves_left.is_empty() {
        (0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        let (m, s) = mean_std(&moves_left);
        (
            m,
            s,
            percentile(&moves_left, 5.0),
            percentile(&moves_left, 10.0),
            percentile(&moves_left, 20.0),
        )
    };

    let passed: Vec<f64> = episodes
        .iter()
        .map(|e| if e.passed_with_human_budget { 1.0 } else { 0.0 })
        .collect();
    let (p_mean, p_std) = mean_std(&passed);

    Ok(LevelFeatures([
        c_mean,
        c_std,
        cleared[0],
        cleared[cleared.len() - 1],
        percentile(&cleared, 5.0),
        percentile(&cleared, 10.0),
        percentile(&cleared, 25.0),
        percentile(&cleared, 50.0),
        percentile(&cleared, 75.0),
        m_mean,
        m_std,
        m_p5,
        m_p10,
        m_p20,
        p_mean,
        p_std,
    ]))
}

/// Groups episodes by level id (ascending) and aggregates each group.
pub fn aggregate_by_level(episodes: &[EpisodeLog]) -> Result<Vec<(u32, LevelFeatures)>> {
    let mut groups: std::collections::BTreeMap<u32, Vec<EpisodeLog>> = Default::default();
    for e in episodes {
        groups.entry(e.level_id).or_default().push(e.clone());
    }
    groups
        .into_iter()
        .map(|(id, eps)| Ok((id, aggregate_features(&eps)?)))
        .collect()
}

/// Affine predictor `x . weights + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Least-squares fit with an unpenalized intercept.
///
/// The problem is centered so the intercept drops out, then solved through the
/// SVD of `[Xc; sqrt(ridge) I]`. Singular values below a relative cutoff are
/// discarded, which yields the minimum-norm solution for rank-deficient designs
/// even when `ridge` is zero.
pub fn fit_regression<R: AsRef<[f64]>>(
    features: &[R],
    targets: &[f64],
    ridge: f64,
) -> Result<RegressionModel> {
    if features.is_empty() {
        return Err(Error::invalid("regression needs at least one row"));
    }
    if features.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} targets",
            features.len(),
            targets.len()
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("ridge must be finite and non-negative"));
    }
    let dim = features[0].as_ref().len();
    if dim == 0 {
        return Err(Error::invalid("regression needs at least one feature"));
    }
    for (i, row) in features.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(Error::invalid(format!(
                "row {i} has {} features, expected {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) || !targets[i].is_finite() {
            return Err(Error::invalid(format!(
                "row {i} contains non-finite values"
            )));
        }
    }

    let n = features.len();
    let nf = n as f64;
    let mut x_mean = vec![0.0; dim];
    for row in features {
        for (m, v) in x_mean.iter_mut().zip(row.as_ref()) {
            *m += v / nf;
        }
    }
    let y_mean = targets.iter().sum::<f64>() / nf;

    let mut a = DMatrix::<f64>::zeros(n + dim, dim);
    let mut b = DVector::<f64>::zeros(n + dim);
    for (i, row) in features.iter().enumerate() {
        for (j, v) in row.as_ref().iter().enumerate() {
            a[(i, j)] = v - x_mean[j];
        }
        b[i] = targets[i] - y_mean;
    }
    let sr = ridge.sqrt();
    for j in 0..dim {
        a[(n + j, j)] = sr;
    }

    let svd = a.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13 * (n + dim) as f64;
    let w = svd
        .solve(&b, cutoff)
        .map_err(|e| Error::DegenerateData(format!("least squares failed: {e}")))?;

    let weights: Vec<f64> = w.iter().copied().collect();
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(RegressionModel { weights, bias })
}

impl RegressionModel {
    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "feature vector has {} entries, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }
}

/// Raw (unclamped) affine predictions, one per level.
pub fn predict_level_pass_rates<R: AsRef<[f64]>>(
    model: &RegressionModel,
    features: &[R],
) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|f| model.predict_one(f.as_ref()))
        .collect()
}

/// Clamps a raw prediction into a usable rate.
pub fn clamp_rate(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Min-max normalization of negated predictions over all levels.
///
/// Higher predicted pass rate maps to lower difficulty. When all predictions
/// are equal every level gets difficulty 0.5.
pub fn normalize_difficulty(predictions: &[f64]) -> Result<Vec<f64>> {
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions to normalize"));
    }
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("non-finite baseline prediction"));
    }
    let neg: Vec<f64> = predictions.iter().map(|p| -p).collect();
    let lo = neg.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![0.5; neg.len()]);
    }
    Ok(neg
        .iter()
        .map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn episode(level: u32, cleared: f64, moves_left: Option<u32>) -> EpisodeLog {
        EpisodeLog {
            level_id: level,
            episode_id: 0,
            cleared_goals_frac: cleared,
            moves_used: 20 - moves_left.unwrap_or(0),
            moves_budget_human: 20,
            passed_with_human_budget: moves_left.is_some(),
            moves_left_on_pass: moves_left,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn cleared_statistics() {
        let eps: Vec<_> = [0.2, 0.4, 0.6, 0.8, 1.0]
            .iter()
            .map(|&c| episode(1, c, None))
            .collect();
        let f = aggregate_features(&eps).unwrap().0;
        let expected = [0.6, 0.282842712474619, 0.2, 1.0, 0.24, 0.28, 0.4, 0.6, 0.8];
        for (i, e) in expected.iter().enumerate() {
            assert!(close(f[i], *e), "{}: {} vs {}", FEATURE_NAMES[i], f[i], e);
        }
    }

    #[test]
    fn constant_episodes() {
        let eps = vec![episode(4, 0.5, None); 5];
        let f = aggregate_features(&eps).unwrap().0;
        for (i, v) in f.iter().enumerate() {
            let want = if i < 9 && i != 1 { 0.5 } else { 0.0 };
            assert_eq!(*v, want, "{}", FEATURE_NAMES[i]);
        }
    }

    #[test]
    fn moves_left_and_pass_features() {
        let eps = vec![
            episode(2, 1.0, Some(4)),
            episode(2, 1.0, Some(8)),
            episode(2, 0.5, None),
            episode(2, 0.7, None),
        ];
        let f = aggregate_features(&eps).unwrap().0;
        assert_eq!(f[9], 6.0);
        assert_eq!(f[10], 2.0);
        assert!(close(f[11], 4.2));
        assert!(close(f[12], 4.4));
        assert!(close(f[13], 4.8));
        assert_eq!(f[14], 0.5);
        assert_eq!(f[15], 0.5);
    }

    #[test]
    fn aggregation_errors() {
        assert!(aggregate_features(&[]).is_err());
        let eps = vec![episode(1, 0.5, None), episode(2, 0.5, None)];
        assert!(aggregate_features(&eps).is_err());
        let mut bad = episode(1, 0.5, None);
        bad.moves_left_on_pass = Some(3);
        assert!(aggregate_features(&[bad]).is_err());
    }

    #[test]
    fn exact_line() {
        let xs: Vec<Vec<f64>> = (1..=3)
            .map(|v| {
                let mut row = vec![0.0; N_FEATURES];
                row[0] = v as f64;
                row
            })
            .collect();
        let m = fit_regression(&xs, &[2.0, 4.0, 6.0], DEFAULT_RIDGE).unwrap();
        // the ridge shrinks w by 2 * 1e-8 / (2 + 1e-8) on this design
        assert!((m.weights[0] - 2.0).abs() < 1e-7);
        assert!(m.bias.abs() < 1e-7);
        assert!(m.weights[1..].iter().all(|w| w.abs() < 1e-8));
    }

    #[test]
    fn exact_line_without_ridge() {
        let xs: Vec<Vec<f64>> = (1..=3).map(|v| vec![v as f64, 0.0]).collect();
        let m = fit_regression(&xs, &[2.0, 4.0, 6.0], 0.0).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-12);
        assert!(m.weights[1].abs() < 1e-12);
        assert!(m.bias.abs() < 1e-12);
    }

    #[test]
    fn constant_targets() {
        let xs: Vec<Vec<f64>> = (0..7)
            .map(|i| (0..4).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.3).collect())
            .collect();
        let m = fit_regression(&xs, &[1.25; 7], DEFAULT_RIDGE).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-8));
        assert!((m.bias - 1.25).abs() < 1e-8);
    }

    #[test]
    fn single_row() {
        let m = fit_regression(&[vec![3.0, 1.0]], &[0.7], DEFAULT_RIDGE).unwrap();
        assert!((m.predict_one(&[3.0, 1.0]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn regression_rejects_bad_input() {
        assert!(fit_regression::<Vec<f64>>(&[], &[], DEFAULT_RIDGE).is_err());
        assert!(fit_regression(&[vec![f64::NAN]], &[1.0], DEFAULT_RIDGE).is_err());
        assert!(fit_regression(&[vec![1.0]], &[f64::INFINITY], DEFAULT_RIDGE).is_err());
        assert!(fit_regression(&[vec![1.0], vec![1.0, 2.0]], &[1.0, 2.0], DEFAULT_RIDGE).is_err());
    }

    #[test]
    fn prediction_examples() {
        let m = RegressionModel {
            weights: vec![0.0; N_FEATURES],
            bias: 0.5,
        };
        let feats = vec![LevelFeatures([0.3; N_FEATURES]); 3];
        assert_eq!(predict_level_pass_rates(&m, &feats).unwrap(), vec![0.5; 3]);

        let mut w = vec![0.0; N_FEATURES];
        w[0] = 1.0;
        let m = RegressionModel {
            weights: w,
            bias: 0.0,
        };
        assert_eq!(predict_level_pass_rates(&m, &feats).unwrap(), vec![0.3; 3]);

        let short = vec![vec![1.0; 3]];
        assert!(predict_level_pass_rates(&m, &short).is_err());
    }

    #[test]
    fn normalization_examples() {
        let d = normalize_difficulty(&[0.2, 0.5, 0.8]).unwrap();
        assert!(close(d[0], 1.0) && close(d[1], 0.5) && close(d[2], 0.0));
        assert_eq!(normalize_difficulty(&[0.4; 4]).unwrap(), vec![0.5; 4]);
        assert_eq!(normalize_difficulty(&[0.9]).unwrap(), vec![0.5]);
        assert!(normalize_difficulty(&[]).is_err());
        assert!(normalize_difficulty(&[f64::NAN, 0.1]).is_err());
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_rate(-0.2), 0.0);
        assert_eq!(clamp_rate(1.3), 1.0);
        assert_eq!(clamp_rate(0.4), 0.4);
    }
}
