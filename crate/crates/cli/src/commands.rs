use std::path::PathBuf;

use serde::Serialize;

use churnsim::config::RunConfig;
use churnsim::evaluation::{
    ablation_suite, baseline_fit, cross_validate, fit_all_levels, oracle_difficulty_experiment,
    tail_holdout, BaselineFit, DifficultySource,
};
use churnsim::fitting::PopulationSimulator;
use churnsim::io::{load_datasets, write_episodes, write_levels, write_table, Cell, Datasets};
use churnsim::population::{PopulationStats, SimParams};
use churnsim::report::Report;
use churnsim::series::LevelSeries;
use churnsim::synthetic::{
    generate_dataset, sawtooth_difficulties, TruthSpec, EPISODE_MODEL_VERSION,
};
use churnsim::Result;

type Written = Vec<PathBuf>;

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.output.dir.join(name)
}

fn write_report<T: Serialize>(
    config: &RunConfig,
    command: &str,
    name: &str,
    result: &T,
) -> Result<PathBuf> {
    let path = out_path(config, name);
    Report::new(command, config, result).write(&path)?;
    Ok(path)
}

fn load(config: &RunConfig) -> Result<Datasets> {
    load_datasets(&config.data.episodes, &config.data.levels)
}

#[derive(Serialize)]
struct SynthResult<'a> {
    episode_model_version: u32,
    episodes_per_level: usize,
    spec: &'a TruthSpec,
    truth: &'a LevelSeries,
}

pub fn synth(config: &RunConfig) -> Result<Written> {
    let s = &config.synth;
    let spec = TruthSpec {
        true_params: s.params.to_params()?,
        n_players: s.n_players,
        level_difficulties: sawtooth_difficulties(s.n_levels, config.seed),
        seed: config.seed,
    };
    let data = generate_dataset(spec, s.episodes_per_level)?;
    let episodes = out_path(config, "episodes.csv");
    let levels = out_path(config, "levels.csv");
    write_episodes(&episodes, &data.episodes)?;
    write_levels(&levels, &data.truth)?;
    let result = SynthResult {
        episode_model_version: EPISODE_MODEL_VERSION,
        episodes_per_level: s.episodes_per_level,
        spec: &data.spec,
        truth: &data.truth,
    };
    let report = write_report(config, "synth", "synth.json", &result)?;
    Ok(vec![episodes, levels, report])
}

pub fn fit_baseline(config: &RunConfig) -> Result<Written> {
    let data = load(config)?;
    let fit = baseline_fit(&data.features, &data.truth, config.cv.ridge)?;
    let table = out_path(config, "baseline.csv");
    let rows: Vec<Vec<Cell>> = data
        .truth
        .levels
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                Cell::Int(i64::from(r.level_id)),
                Cell::Num(r.pass_rate),
                Cell::Num(fit.raw_predictions[i]),
                Cell::Num(fit.pass_estimates[i]),
                Cell::Num(fit.difficulties[i]),
            ]
        })
        .collect();
    write_table(
        &table,
        &[
            "level_id",
            "human_pass_rate",
            "raw_prediction",
            "pass_estimate",
            "difficulty",
        ],
        &rows,
    )?;
    let report = write_report(config, "fit-baseline", "baseline.json", &fit)?;
    Ok(vec![table, report])
}

#[derive(Serialize)]
struct LevelRow {
    level_id: u32,
    difficulty: f64,
    pass_rate: f64,
    churn_rate: f64,
    population: PopulationStats,
}

#[derive(Serialize)]
struct SimulateResult {
    params: SimParams,
    depleted_at_level: Option<u32>,
    levels: Vec<LevelRow>,
}

/// Difficulties from the config, or else from the baseline fitted on the data.
fn difficulties(config: &RunConfig) -> Result<(Vec<u32>, Vec<f64>)> {
    match &config.simulation.difficulties {
        Some(d) => Ok(((1..=d.len() as u32).collect(), d.clone())),
        None => {
            let data = load(config)?;
            let fit: BaselineFit = baseline_fit(&data.features, &data.truth, config.cv.ridge)?;
            Ok((data.truth.level_ids(), fit.difficulties))
        }
    }
}

pub fn simulate(config: &RunConfig) -> Result<Written> {
    let params = config.params.to_params()?;
    let (ids, diffs) = difficulties(config)?;
    let sim = PopulationSimulator::new(config.sim_config(config.seed));
    let prog = sim.run(&params, &diffs)?;
    let levels: Vec<LevelRow> = (0..prog.pass_rates.len())
        .map(|i| LevelRow {
            level_id: ids[i],
            difficulty: diffs[i],
            pass_rate: prog.pass_rates[i],
            churn_rate: prog.churn_rates[i],
            population: prog.stats[i],
        })
        .collect();
    let table = out_path(config, "simulate.csv");
    let rows: Vec<Vec<Cell>> = levels
        .iter()
        .map(|l| {
            vec![
                Cell::Int(i64::from(l.level_id)),
                Cell::Num(l.difficulty),
                Cell::Num(l.pass_rate),
                Cell::Num(l.churn_rate),
                Cell::Num(l.population.mean_skill),
                Cell::Num(l.population.std_skill),
                Cell::Num(l.population.mean_persistence),
                Cell::Num(l.population.std_persistence),
                Cell::Num(l.population.mean_boredom),
                Cell::Num(l.population.std_boredom),
            ]
        })
        .collect();
    write_table(
        &table,
        &[
            "level_id",
            "difficulty",
            "pass_rate",
            "churn_rate",
            "mean_skill",
            "std_skill",
            "mean_persistence",
            "std_persistence",
            "mean_boredom",
            "std_boredom",
        ],
        &rows,
    )?;
    let result = SimulateResult {
        params,
        depleted_at_level: prog.depleted_at.map(|k| ids[k]),
        levels,
    };
    let report = write_report(config, "simulate", "simulate.json", &result)?;
    Ok(vec![table, report])
}

pub fn fit(config: &RunConfig) -> Result<Written> {
    let data = load(config)?;
    let result = fit_all_levels(
        &data.truth,
        &DifficultySource::Features(data.features),
        &config.cv_config(),
    )?;
    let report = write_report(config, "fit", "fit.json", &result)?;
    Ok(vec![report])
}

pub fn crossval(config: &RunConfig, tail: bool) -> Result<Written> {
    let data = load(config)?;
    let source = DifficultySource::Features(data.features);
    let cv = config.cv_config();
    let (result, name, command) = if tail {
        (
            tail_holdout(&data.truth, &source, &cv)?,
            "tail_holdout",
            "crossval --tail-holdout",
        )
    } else {
        (
            cross_validate(&data.truth, &source, &cv)?,
            "crossval",
            "crossval",
        )
    };
    let table = out_path(config, &format!("{name}_predictions.csv"));
    let truth_by_id = |id: u32| data.truth.levels.iter().find(|r| r.level_id == id);
    let rows: Vec<Vec<Cell>> = result
        .predictions
        .iter()
        .filter_map(|p| {
            let t = truth_by_id(p.level_id)?;
            Some(vec![
                Cell::Int(i64::from(p.level_id)),
                Cell::Int(p.fold as i64),
                Cell::Int(p.repeat as i64),
                Cell::Num(t.pass_rate),
                Cell::Num(p.pass_rate),
                Cell::Num(t.churn_rate),
                Cell::Num(p.churn_rate),
            ])
        })
        .collect();
    write_table(
        &table,
        &[
            "level_id",
            "fold",
            "repeat",
            "human_pass_rate",
            "predicted_pass_rate",
            "human_churn_rate",
            "predicted_churn_rate",
        ],
        &rows,
    )?;
    let report = write_report(config, command, &format!("{name}.json"), &result)?;
    Ok(vec![table, report])
}

pub fn ablate(config: &RunConfig) -> Result<Written> {
    let data = load(config)?;
    let result = ablation_suite(
        &data.truth,
        &DifficultySource::Features(data.features),
        &config.cv_config(),
    )?;
    let table = out_path(config, "ablation.csv");
    let rows: Vec<Vec<Cell>> = result
        .rows
        .iter()
        .map(|r| {
            let num = |f: fn(&churnsim::evaluation::MetricSummary) -> f64| match &r.summary {
                Some(s) => Cell::Num(f(s)),
                None => Cell::Text(String::new()),
            };
            vec![
                Cell::Text(r.variant.clone()),
                num(|s| s.pass_mse.mean),
                num(|s| s.pass_mae.mean),
                num(|s| s.churn_mse.mean),
                num(|s| s.churn_mae.mean),
                Cell::Int(r.depleted_runs as i64),
            ]
        })
        .collect();
    write_table(
        &table,
        &[
            "variant",
            "pass_mse",
            "pass_mae",
            "churn_mse",
            "churn_mae",
            "depleted_runs",
        ],
        &rows,
    )?;
    let report = write_report(config, "ablate", "ablate.json", &result)?;
    Ok(vec![table, report])
}

pub fn oracle_diff(config: &RunConfig) -> Result<Written> {
    let data = load(config)?;
    let result = oracle_difficulty_experiment(
        &data.truth,
        &DifficultySource::Features(data.features),
        &config.cv_config(),
    )?;
    let report = write_report(config, "oracle-diff", "oracle_diff.json", &result)?;
    Ok(vec![report])
}

#[derive(Serialize)]
struct ScatterSummary {
    rows: usize,
    simulated_depleted_at_level: Option<u32>,
}

/// Pass versus churn per level for the data and for a simulation with the
/// configured parameters, indexed by position in the progression.
pub fn report(config: &RunConfig) -> Result<Written> {
    let data = load(config)?;
    let fit = baseline_fit(&data.features, &data.truth, config.cv.ridge)?;
    let params = config.params.to_params()?;
    let sim = PopulationSimulator::new(config.sim_config(config.seed));
    let prog = sim.run(&params, &fit.difficulties)?;
    let ids = data.truth.level_ids();
    let mut rows = Vec::new();
    for (i, r) in data.truth.levels.iter().enumerate() {
        rows.push(vec![
            Cell::Int(i as i64),
            Cell::Int(i64::from(r.level_id)),
            Cell::Text("human".into()),
            Cell::Num(r.pass_rate),
            Cell::Num(r.churn_rate),
        ]);
    }
    for (i, (&pass, &churn)) in prog.pass_rates.iter().zip(&prog.churn_rates).enumerate() {
        rows.push(vec![
            Cell::Int(i as i64),
            Cell::Int(i64::from(ids[i])),
            Cell::Text("simulated".into()),
            Cell::Num(pass),
            Cell::Num(churn),
        ]);
    }
    let table = out_path(config, "scatter.csv");
    write_table(
        &table,
        &[
            "level_index",
            "level_id",
            "source",
            "pass_rate",
            "churn_rate",
        ],
        &rows,
    )?;
    let summary = ScatterSummary {
        rows: rows.len(),
        simulated_depleted_at_level: prog.depleted_at.map(|k| ids[k]),
    };
    let report = write_report(config, "report", "report.json", &summary)?;
    Ok(vec![table, report])
}
