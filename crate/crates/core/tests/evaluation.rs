use churnsim::cmaes::OptimizerConfig;
use churnsim::difficulty::aggregate_by_level;
use churnsim::evaluation::{
    ablation_suite, cross_validate, kfold_split, tail_holdout, CvConfig, DifficultySource,
    FoldScheme, ABLATION_VARIANTS,
};
use churnsim::io::Datasets;
use churnsim::population::AblationFlags;
use churnsim::series::{LevelRecord, LevelSeries, SeriesRole};
use churnsim::synthetic::{generate_dataset, TruthSpec};

fn small_data(n_levels: usize, seed: u64) -> Datasets {
    let data = generate_dataset(TruthSpec::moderate(n_levels, seed), 30).unwrap();
    let features = aggregate_by_level(&data.episodes)
        .unwrap()
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    Datasets {
        truth: data.truth,
        features,
    }
}

fn small_config(seed: u64) -> CvConfig {
    CvConfig {
        k: 3,
        repeats: 1,
        seed,
        population_size: 200,
        optimizer: OptimizerConfig {
            population_size: 8,
            no_improvement_generations: 3,
            max_evaluations: 160,
            ..OptimizerConfig::default()
        },
        ..CvConfig::default()
    }
}

#[test]
fn held_out_levels_do_not_leak_into_the_fit() {
    let data = small_data(30, 3);
    let source = DifficultySource::Features(data.features.clone());
    let cfg = CvConfig {
        folds: Some(vec![0]),
        ..small_config(5)
    };
    let a = cross_validate(&data.truth, &source, &cfg).unwrap();

    let plan = kfold_split(30, 3, FoldScheme::Contiguous).unwrap();
    let held = plan.held_out(0);
    let levels: Vec<LevelRecord> = data
        .truth
        .levels
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if held.contains(&i) {
                LevelRecord {
                    pass_rate: 1.0 - r.pass_rate,
                    churn_rate: (r.churn_rate + 0.3).min(1.0),
                    ..*r
                }
            } else {
                *r
            }
        })
        .collect();
    let tampered = LevelSeries::new(SeriesRole::Truth, levels).unwrap();
    let b = cross_validate(&tampered, &source, &cfg).unwrap();

    let (fa, fb) = (&a.folds[0], &b.folds[0]);
    assert_eq!(fa.w_churn, fb.w_churn);
    assert_eq!(fa.difficulties, fb.difficulties);
    assert_eq!(fa.runs[0].params, fb.runs[0].params);
    assert_eq!(fa.runs[0].objective, fb.runs[0].objective);
    assert_ne!(fa.runs[0].held_out, fb.runs[0].held_out);
}

#[test]
fn reports_are_reproducible() {
    let data = small_data(24, 8);
    let source = DifficultySource::Features(data.features);
    let cfg = small_config(11);
    let a = cross_validate(&data.truth, &source, &cfg).unwrap();
    let b = cross_validate(&data.truth, &source, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.folds.len(), 3);
    assert_eq!(a.predictions.len(), 24);
}

#[test]
fn tail_holdout_uses_the_last_block() {
    let data = small_data(30, 9);
    let source = DifficultySource::Features(data.features);
    let cfg = CvConfig {
        k: 5,
        ..small_config(2)
    };
    let report = tail_holdout(&data.truth, &source, &cfg).unwrap();
    assert_eq!(report.folds.len(), 1);
    assert_eq!(
        report.folds[0].held_out_levels,
        (25..=30).collect::<Vec<u32>>()
    );
}

#[test]
fn ablation_rows_and_all_features_variant() {
    let data = small_data(24, 4);
    let source = DifficultySource::Features(data.features);
    let cfg = CvConfig {
        folds: Some(vec![1]),
        ..small_config(6)
    };
    let ablation = ablation_suite(&data.truth, &source, &cfg).unwrap();
    let names: Vec<&str> = ablation.rows.iter().map(|r| r.variant.as_str()).collect();
    assert_eq!(
        names,
        vec![
            "All features",
            "No boredom",
            "No persistence",
            "No learning",
            "No random noise in skill and persistence",
        ]
    );
    assert_eq!(ABLATION_VARIANTS[0].1, AblationFlags::default());
    let plain = cross_validate(&data.truth, &source, &cfg).unwrap();
    assert_eq!(ablation.reports[0], plain);
}
