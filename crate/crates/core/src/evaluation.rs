//! Metrics, k-fold cross-validation, ablations and the oracle-difficulty
//! experiment.
//!
//! Cross-validation always simulates the whole progression and only restricts
//! which levels enter the objective. Per fold the baseline regression and the
//! churn weight see training levels only; difficulty normalization runs over the
//! predictions for all levels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmaes::{OptimizerConfig, Termination};
use crate::difficulty::{
    clamp_rate, fit_regression, normalize_difficulty, predict_level_pass_rates, LevelFeatures,
    RegressionModel, DEFAULT_RIDGE,
};
use crate::error::{Error, Result};
use crate::fitting::{
    build_objective, compute_w_churn, default_x0, fit_params, PopulationSimulator, SeedPolicy,
    SimConfig, Simulator,
};
use crate::population::{AblationFlags, SimParams};
use crate::rng::{self, derive_seed};
use crate::series::{LevelRecord, LevelSeries, SeriesRole};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("metrics of an empty sequence"));
    }
    let n = pred.len() as f64;
    let (se, ae) = pred.iter().zip(truth).fold((0.0, 0.0), |(se, ae), (p, t)| {
        (se + (p - t).powi(2), ae + (p - t).abs())
    });
    Ok(Metrics {
        mse: se / n,
        mae: ae / n,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldScheme {
    /// Consecutive blocks of levels, larger blocks first.
    #[default]
    Contiguous,
    /// Level `i` goes to fold `i mod k`.
    Interleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub scheme: FoldScheme,
    /// Fold index of each level position.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn training_mask(&self, fold: usize) -> Vec<bool> {
        self.assignment.iter().map(|&f| f != fold).collect()
    }

    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }
}

pub fn kfold_split(n_levels: usize, k: usize, scheme: FoldScheme) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if k > n_levels {
        return Err(Error::invalid(format!("k = {k} exceeds {n_levels} levels")));
    }
    let assignment = match scheme {
        FoldScheme::Contiguous => {
            let base = n_levels / k;
            let extra = n_levels % k;
            (0..k)
                .flat_map(|f| std::iter::repeat_n(f, base + usize::from(f < extra)))
                .collect()
        }
        FoldScheme::Interleaved => (0..n_levels).map(|i| i % k).collect(),
    };
    Ok(FoldPlan {
        k,
        scheme,
        assignment,
    })
}

/// Where level difficulties come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DifficultySource {
    /// Aggregated AI gameplay features; difficulties come from the baseline
    /// regression fitted on each fold's training levels.
    Features(Vec<LevelFeatures>),
    /// Fixed difficulties in [0, 1].
    Provided(Vec<f64>),
}

impl DifficultySource {
    fn len(&self) -> usize {
        match self {
            DifficultySource::Features(f) => f.len(),
            DifficultySource::Provided(d) => d.len(),
        }
    }
}

/// `1 - pass rate` for every level.
pub fn oracle_difficulties(truth: &LevelSeries) -> Vec<f64> {
    truth.levels.iter().map(|r| 1.0 - r.pass_rate).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub scheme: FoldScheme,
    pub repeats: usize,
    pub seed: u64,
    pub population_size: usize,
    pub flags: AblationFlags,
    pub seed_policy: SeedPolicy,
    /// The optimizer seed is derived per fold and repeat; the value here is ignored.
    pub optimizer: OptimizerConfig,
    pub x0: Vec<f64>,
    pub ridge: f64,
    /// Restrict evaluation to these folds. `None` runs all of them.
    pub folds: Option<Vec<usize>>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            scheme: FoldScheme::Contiguous,
            repeats: 5,
            seed: 0,
            population_size: 2000,
            flags: AblationFlags::default(),
            seed_policy: SeedPolicy::Common,
            optimizer: OptimizerConfig::default(),
            x0: default_x0(),
            ridge: DEFAULT_RIDGE,
            folds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pass: Metrics,
    pub churn: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub repeat: usize,
    pub optimizer_seed: u64,
    pub simulation_seed: u64,
    pub params: SimParams,
    pub raw_params: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub termination: Termination,
    pub depleted: bool,
    /// Held-out metrics; absent when the fitted simulation depleted.
    pub held_out: Option<PairMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub held_out_levels: Vec<u32>,
    pub w_churn: f64,
    pub difficulties: Vec<f64>,
    /// Regression-only predictions of pass and churn, when features are available.
    pub baseline: Option<PairMetrics>,
    pub runs: Vec<RunReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Stat {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    pub pass_mse: Stat,
    pub pass_mae: Stat,
    pub churn_mse: Stat,
    pub churn_mae: Stat,
}

impl MetricSummary {
    fn of(items: &[PairMetrics]) -> Option<MetricSummary> {
        let col = |f: fn(&PairMetrics) -> f64| -> Vec<f64> { items.iter().map(f).collect() };
        Some(MetricSummary {
            count: items.len(),
            pass_mse: Stat::of(&col(|m| m.pass.mse))?,
            pass_mae: Stat::of(&col(|m| m.pass.mae))?,
            churn_mse: Stat::of(&col(|m| m.churn.mse))?,
            churn_mae: Stat::of(&col(|m| m.churn.mae))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutPrediction {
    pub level_id: u32,
    pub fold: usize,
    pub repeat: usize,
    pub pass_rate: f64,
    pub churn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledMetrics {
    pub repeat: usize,
    pub metrics: PairMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    /// Over every (fold, repeat) run that did not deplete.
    pub runs: Option<MetricSummary>,
    /// Over folds, after averaging each fold's repeats.
    pub folds: Option<MetricSummary>,
    /// Regression-only baseline over folds.
    pub baseline: Option<MetricSummary>,
    pub depleted_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub scheme: FoldScheme,
    pub repeats: usize,
    pub seed: u64,
    pub flags: AblationFlags,
    pub n_levels: usize,
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
    /// Metrics over the concatenated held-out predictions of each repeat.
    pub pooled: Vec<PooledMetrics>,
    pub predictions: Vec<HeldOutPrediction>,
}

fn pick(xs: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| xs[i]).collect()
}

fn masked(xs: &[f64], mask: &[bool]) -> Vec<f64> {
    xs.iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&x, _)| x)
        .collect()
}

struct FoldSetup {
    difficulties: Vec<f64>,
    baseline: Option<PairMetrics>,
    w_churn: f64,
}

fn prepare_fold(
    truth: &LevelSeries,
    source: &DifficultySource,
    mask: &[bool],
    held: &[usize],
    ridge: f64,
) -> Result<FoldSetup> {
    let pass = truth.pass_rates();
    let churn = truth.churn_rates();
    let (difficulties, baseline) = match source {
        DifficultySource::Features(features) => {
            let train: Vec<LevelFeatures> = features
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(f, _)| *f)
                .collect();
            let pass_model = fit_regression(&train, &masked(&pass, mask), ridge)?;
            let churn_model = fit_regression(&train, &masked(&churn, mask), ridge)?;
            let raw_pass = predict_level_pass_rates(&pass_model, features)?;
            let raw_churn = predict_level_pass_rates(&churn_model, features)?;
            let clamp = |xs: Vec<f64>| -> Vec<f64> { xs.into_iter().map(clamp_rate).collect() };
            let baseline = PairMetrics {
                pass: compute_metrics(&clamp(pick(&raw_pass, held)), &pick(&pass, held))?,
                churn: compute_metrics(&clamp(pick(&raw_churn, held)), &pick(&churn, held))?,
            };
            (normalize_difficulty(&raw_pass)?, Some(baseline))
        }
        DifficultySource::Provided(d) => (d.clone(), None),
    };
    let w_churn = compute_w_churn(&masked(&pass, mask), &masked(&churn, mask))?;
    Ok(FoldSetup {
        difficulties,
        baseline,
        w_churn,
    })
}

/// Cross-validation with the population simulator.
pub fn cross_validate(
    truth: &LevelSeries,
    source: &DifficultySource,
    config: &CvConfig,
) -> Result<CvReport> {
    cross_validate_with(truth, source, config, PopulationSimulator::new)
}

/// Cross-validation with a caller-supplied simulator per (fold, repeat).
pub fn cross_validate_with<S, F>(
    truth: &LevelSeries,
    source: &DifficultySource,
    config: &CvConfig,
    make_simulator: F,
) -> Result<CvReport>
where
    S: Simulator + Send,
    F: Fn(SimConfig) -> S + Sync,
{
    truth.validate()?;
    let n = truth.len();
    if source.len() != n {
        return Err(Error::invalid(format!(
            "difficulty source covers {} levels, truth has {n}",
            source.len()
        )));
    }
    if let DifficultySource::Provided(d) = source {
        if d.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("provided difficulties must lie in [0, 1]"));
        }
    }
    if config.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let plan = kfold_split(n, config.k, config.scheme)?;
    let folds: Vec<usize> = match &config.folds {
        Some(f) => {
            if f.is_empty() || f.iter().any(|&i| i >= config.k) {
                return Err(Error::invalid("fold selection out of range"));
            }
            f.clone()
        }
        None => (0..config.k).collect(),
    };

    let setups: Vec<(usize, Vec<bool>, Vec<usize>, FoldSetup)> = folds
        .iter()
        .map(|&fold| {
            let mask = plan.training_mask(fold);
            let held = plan.held_out(fold);
            let setup = prepare_fold(truth, source, &mask, &held, config.ridge)?;
            Ok((fold, mask, held, setup))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|s| (0..config.repeats).map(move |r| (s, r)))
        .collect();

    let pass = truth.pass_rates();
    let churn = truth.churn_rates();
    let ids = truth.level_ids();

    let outcomes: Vec<(RunReport, Vec<HeldOutPrediction>)> = jobs
        .par_iter()
        .map(|&(s, repeat)| {
            let (fold, mask, held, setup) = &setups[s];
            let optimizer_seed = derive_seed(
                config.seed,
                &[rng::DOMAIN_OPTIMIZER, *fold as u64, repeat as u64],
            );
            let simulation_seed = derive_seed(
                config.seed,
                &[rng::DOMAIN_FIT_SIM, *fold as u64, repeat as u64],
            );
            let sim_config = SimConfig {
                population_size: config.population_size,
                flags: config.flags,
                seed: simulation_seed,
                seed_policy: config.seed_policy,
            };
            let objective = build_objective(
                truth,
                &setup.difficulties,
                mask,
                setup.w_churn,
                make_simulator(sim_config),
            )?;
            let opt_config = OptimizerConfig {
                seed: optimizer_seed,
                ..config.optimizer.clone()
            };
            let fit = fit_params(&objective, &config.x0, &opt_config)?;
            let run = match objective.simulate(&fit.params) {
                Ok(run) => Some(run),
                Err(Error::AttemptCapExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            let run = run.filter(|r| !r.depleted && r.pass_rates.len() == n);

            let (held_out, preds) = match &run {
                Some(run) => {
                    let metrics = PairMetrics {
                        pass: compute_metrics(&pick(&run.pass_rates, held), &pick(&pass, held))?,
                        churn: compute_metrics(&pick(&run.churn_rates, held), &pick(&churn, held))?,
                    };
                    let preds = held
                        .iter()
                        .map(|&i| HeldOutPrediction {
                            level_id: ids[i],
                            fold: *fold,
                            repeat,
                            pass_rate: run.pass_rates[i],
                            churn_rate: run.churn_rates[i],
                        })
                        .collect();
                    (Some(metrics), preds)
                }
                None => (None, Vec::new()),
            };
            Ok((
                RunReport {
                    repeat,
                    optimizer_seed,
                    simulation_seed,
                    params: fit.params,
                    raw_params: fit.optimizer.best_raw_vector.clone(),
                    objective: fit.optimizer.best_value,
                    evaluations: fit.optimizer.evaluations_used,
                    generations: fit.optimizer.generations,
                    termination: fit.optimizer.termination_reason,
                    depleted: run.is_none(),
                    held_out,
                },
                preds,
            ))
        })
        .collect::<Result<_>>()?;

    let mut outcomes = outcomes.into_iter();
    let mut fold_reports = Vec::with_capacity(setups.len());
    let mut predictions = Vec::new();
    for (fold, _, held, setup) in setups {
        let mut runs = Vec::with_capacity(config.repeats);
        for _ in 0..config.repeats {
            let (run, preds) = outcomes.next().expect("one outcome per job");
            runs.push(run);
            predictions.extend(preds);
        }
        fold_reports.push(FoldReport {
            fold,
            held_out_levels: held.iter().map(|&i| ids[i]).collect(),
            w_churn: setup.w_churn,
            difficulties: setup.difficulties,
            baseline: setup.baseline,
            runs,
        });
    }
    predictions.sort_by_key(|p| (p.repeat, p.level_id));

    let summary = summarize(&fold_reports);
    let pooled = pool(&fold_reports, &predictions, truth, config.repeats)?;
    Ok(CvReport {
        k: config.k,
        scheme: config.scheme,
        repeats: config.repeats,
        seed: config.seed,
        flags: config.flags,
        n_levels: n,
        folds: fold_reports,
        summary,
        pooled,
        predictions,
    })
}

fn summarize(folds: &[FoldReport]) -> CvSummary {
    let all: Vec<PairMetrics> = folds
        .iter()
        .flat_map(|f| f.runs.iter().filter_map(|r| r.held_out))
        .collect();
    let per_fold: Vec<PairMetrics> = folds
        .iter()
        .filter_map(|f| {
            let ok: Vec<PairMetrics> = f.runs.iter().filter_map(|r| r.held_out).collect();
            let s = MetricSummary::of(&ok)?;
            Some(PairMetrics {
                pass: Metrics {
                    mse: s.pass_mse.mean,
                    mae: s.pass_mae.mean,
                },
                churn: Metrics {
                    mse: s.churn_mse.mean,
                    mae: s.churn_mae.mean,
                },
            })
        })
        .collect();
    let baseline: Vec<PairMetrics> = folds.iter().filter_map(|f| f.baseline).collect();
    CvSummary {
        runs: MetricSummary::of(&all),
        folds: MetricSummary::of(&per_fold),
        baseline: MetricSummary::of(&baseline),
        depleted_runs: folds
            .iter()
            .flat_map(|f| &f.runs)
            .filter(|r| r.depleted)
            .count(),
    }
}

fn pool(
    folds: &[FoldReport],
    predictions: &[HeldOutPrediction],
    truth: &LevelSeries,
    repeats: usize,
) -> Result<Vec<PooledMetrics>> {
    let expected: usize = folds.iter().map(|f| f.held_out_levels.len()).sum();
    let index: std::collections::HashMap<u32, usize> = truth
        .levels
        .iter()
        .enumerate()
        .map(|(i, r)| (r.level_id, i))
        .collect();
    let mut out = Vec::new();
    for repeat in 0..repeats {
        let preds: Vec<&HeldOutPrediction> =
            predictions.iter().filter(|p| p.repeat == repeat).collect();
        // Pooling is only meaningful when no fold of this repeat depleted.
        if preds.len() != expected || preds.is_empty() {
            continue;
        }
        let truth_at = |p: &&HeldOutPrediction| truth.levels[index[&p.level_id]];
        let pp: Vec<f64> = preds.iter().map(|p| p.pass_rate).collect();
        let pc: Vec<f64> = preds.iter().map(|p| p.churn_rate).collect();
        let tp: Vec<f64> = preds.iter().map(|p| truth_at(p).pass_rate).collect();
        let tc: Vec<f64> = preds.iter().map(|p| truth_at(p).churn_rate).collect();
        out.push(PooledMetrics {
            repeat,
            metrics: PairMetrics {
                pass: compute_metrics(&pp, &tp)?,
                churn: compute_metrics(&pc, &tc)?,
            },
        });
    }
    Ok(out)
}

/// Holds out only the last contiguous fifth of the levels.
pub fn tail_holdout(
    truth: &LevelSeries,
    source: &DifficultySource,
    config: &CvConfig,
) -> Result<CvReport> {
    let cfg = CvConfig {
        k: 5,
        scheme: FoldScheme::Contiguous,
        folds: Some(vec![4]),
        ..config.clone()
    };
    cross_validate(truth, source, &cfg)
}

/// Baseline regression fitted on every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub model: RegressionModel,
    /// Unclamped regression output per level.
    pub raw_predictions: Vec<f64>,
    /// Predictions clamped to [0, 1].
    pub pass_estimates: Vec<f64>,
    pub difficulties: Vec<f64>,
    pub in_sample: Metrics,
}

pub fn baseline_fit(
    features: &[LevelFeatures],
    truth: &LevelSeries,
    ridge: f64,
) -> Result<BaselineFit> {
    if features.len() != truth.len() {
        return Err(Error::invalid(
            "features and truth cover different level counts",
        ));
    }
    let pass = truth.pass_rates();
    let model = fit_regression(features, &pass, ridge)?;
    let raw = predict_level_pass_rates(&model, features)?;
    let estimates: Vec<f64> = raw.iter().copied().map(clamp_rate).collect();
    Ok(BaselineFit {
        in_sample: compute_metrics(&estimates, &pass)?,
        difficulties: normalize_difficulty(&raw)?,
        model,
        raw_predictions: raw,
        pass_estimates: estimates,
    })
}

/// A fit that uses every level for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullFitReport {
    pub w_churn: f64,
    pub difficulties: Vec<f64>,
    pub run: RunReport,
    /// In-sample metrics; `None` when the fitted parameters deplete the population.
    pub metrics: Option<PairMetrics>,
    pub predictions: Option<LevelSeries>,
}

const FULL_FIT_TAG: u64 = u64::MAX;

pub fn fit_all_levels(
    truth: &LevelSeries,
    source: &DifficultySource,
    config: &CvConfig,
) -> Result<FullFitReport> {
    truth.validate()?;
    let n = truth.len();
    if source.len() != n {
        return Err(Error::invalid(format!(
            "difficulty source covers {} levels, truth has {n}",
            source.len()
        )));
    }
    let mask = vec![true; n];
    let all: Vec<usize> = (0..n).collect();
    let setup = prepare_fold(truth, source, &mask, &all, config.ridge)?;
    let optimizer_seed = derive_seed(config.seed, &[rng::DOMAIN_OPTIMIZER, FULL_FIT_TAG]);
    let simulation_seed = derive_seed(config.seed, &[rng::DOMAIN_FIT_SIM, FULL_FIT_TAG]);
    let sim_config = SimConfig {
        population_size: config.population_size,
        flags: config.flags,
        seed: simulation_seed,
        seed_policy: config.seed_policy,
    };
    let objective = build_objective(
        truth,
        &setup.difficulties,
        &mask,
        setup.w_churn,
        PopulationSimulator::new(sim_config),
    )?;
    let opt_config = OptimizerConfig {
        seed: optimizer_seed,
        ..config.optimizer.clone()
    };
    let fit = fit_params(&objective, &config.x0, &opt_config)?;
    let run = match objective.simulate(&fit.params) {
        Ok(run) if !run.depleted && run.pass_rates.len() == n => Some(run),
        Ok(_) | Err(Error::AttemptCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let (metrics, predictions) = match &run {
        Some(run) => (
            Some(PairMetrics {
                pass: compute_metrics(&run.pass_rates, &truth.pass_rates())?,
                churn: compute_metrics(&run.churn_rates, &truth.churn_rates())?,
            }),
            Some(LevelSeries::new(
                SeriesRole::Predicted,
                truth
                    .level_ids()
                    .into_iter()
                    .zip(run.pass_rates.iter().zip(&run.churn_rates))
                    .map(|(level_id, (&pass_rate, &churn_rate))| LevelRecord {
                        level_id,
                        pass_rate,
                        churn_rate,
                    })
                    .collect(),
            )?),
        ),
        None => (None, None),
    };
    Ok(FullFitReport {
        w_churn: setup.w_churn,
        difficulties: setup.difficulties,
        run: RunReport {
            repeat: 0,
            optimizer_seed,
            simulation_seed,
            params: fit.params,
            raw_params: fit.optimizer.best_raw_vector.clone(),
            objective: fit.optimizer.best_value,
            evaluations: fit.optimizer.evaluations_used,
            generations: fit.optimizer.generations,
            termination: fit.optimizer.termination_reason,
            depleted: run.is_none(),
            held_out: metrics,
        },
        metrics,
        predictions,
    })
}

pub const ABLATION_VARIANTS: [(&str, AblationFlags); 5] = [
    (
        "All features",
        AblationFlags {
            disable_boredom: false,
            disable_persistence: false,
            disable_learning: false,
            disable_draw_noise: false,
        },
    ),
    (
        "No boredom",
        AblationFlags {
            disable_boredom: true,
            disable_persistence: false,
            disable_learning: false,
            disable_draw_noise: false,
        },
    ),
    (
        "No persistence",
        AblationFlags {
            disable_boredom: false,
            disable_persistence: true,
            disable_learning: false,
            disable_draw_noise: false,
        },
    ),
    (
        "No learning",
        AblationFlags {
            disable_boredom: false,
            disable_persistence: false,
            disable_learning: true,
            disable_draw_noise: false,
        },
    ),
    (
        "No random noise in skill and persistence",
        AblationFlags {
            disable_boredom: false,
            disable_persistence: false,
            disable_learning: false,
            disable_draw_noise: true,
        },
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub flags: AblationFlags,
    pub summary: Option<MetricSummary>,
    pub depleted_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub reports: Vec<CvReport>,
}

/// Refits and cross-validates every variant. The flags in `config` are replaced
/// by each variant's flags.
pub fn ablation_suite(
    truth: &LevelSeries,
    source: &DifficultySource,
    config: &CvConfig,
) -> Result<AblationReport> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (name, flags) in ABLATION_VARIANTS {
        let cfg = CvConfig {
            flags,
            ..config.clone()
        };
        let report = cross_validate(truth, source, &cfg)?;
        rows.push(AblationRow {
            variant: name.to_string(),
            flags,
            summary: report.summary.runs,
            depleted_runs: report.summary.depleted_runs,
        });
        reports.push(report);
    }
    Ok(AblationReport { rows, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle: CvReport,
    pub model: CvReport,
    pub oracle_churn_mse: Option<f64>,
    pub model_churn_mse: Option<f64>,
    /// Oracle churn MSE over model churn MSE.
    pub churn_mse_ratio: Option<f64>,
    /// `(oracle - model) / model`; negative means the oracle is better.
    pub churn_mse_relative_change: Option<f64>,
}

/// Compares fits using `1 - truth pass rate` as difficulty against fits using
/// `model_source`.
pub fn oracle_difficulty_experiment(
    truth: &LevelSeries,
    model_source: &DifficultySource,
    config: &CvConfig,
) -> Result<OracleReport> {
    let oracle_source = DifficultySource::Provided(oracle_difficulties(truth));
    let oracle = cross_validate(truth, &oracle_source, config)?;
    let model = cross_validate(truth, model_source, config)?;
    let o = oracle.summary.runs.map(|s| s.churn_mse.mean);
    let m = model.summary.runs.map(|s| s.churn_mse.mean);
    let (ratio, change) = match (o, m) {
        (Some(o), Some(m)) if m > 0.0 => (Some(o / m), Some((o - m) / m)),
        _ => (None, None),
    };
    Ok(OracleReport {
        oracle,
        model,
        oracle_churn_mse: o,
        model_churn_mse: m,
        churn_mse_ratio: ratio,
        churn_mse_relative_change: change,
    })
}
