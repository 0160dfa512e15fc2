//! Synthetic ground truth with known generating parameters.
//!
//! Truth series come from the population simulation itself, run with hidden
//! parameters and a seed from the truth domain, which fitting never draws from.
//!
//! Episode logs stand in for AI gameplay. For a level of difficulty `d` the
//! generator (version [`EPISODE_MODEL_VERSION`]) works as follows:
//!
//! 1. A per-level agent bias `delta ~ N(0, bias_std)` distorts the difficulty
//!    the agent experiences: `d_ai = clamp(d + 4 d (1 - d) delta, 0, 1)`. The
//!    bias vanishes at both ends of the range.
//! 2. The human move budget is `18 + (7 * level_id) mod 13`.
//! 3. Each episode draws `eps ~ N(0, 1)` and a performance score
//!    `r = 1.3 - 1.6 d_ai + noise * d_ai * eps`.
//! 4. `cleared_goals_frac = clamp(r, 0, 1)`, the episode passes when `r >= 1`,
//!    and a passing episode has `floor(budget / 2 * min((r - 1) / 0.3, 1))`
//!    moves left.
//!
//! Cleared fraction, pass probability and moves left all fall with `d`, and at
//! `d = 0` every episode passes with everything cleared.

use serde::{Deserialize, Serialize};

use crate::difficulty::EpisodeLog;
use crate::error::{Error, Result};
use crate::fitting::{PopulationSimulator, SimConfig};
use crate::population::{AblationFlags, PopulationParams, Progression, SimParams};
use crate::rng::{self, derive_seed, normal};
use crate::series::{LevelSeries, SeriesRole};

pub const EPISODE_MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub true_params: SimParams,
    pub n_players: usize,
    pub level_difficulties: Vec<f64>,
    pub seed: u64,
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_players == 0 {
            return Err(Error::invalid("truth needs at least one player"));
        }
        if self
            .level_difficulties
            .iter()
            .any(|d| !(0.0..=1.0).contains(d))
        {
            return Err(Error::invalid("truth difficulties must lie in [0, 1]"));
        }
        self.true_params.validate()
    }

    /// A moderate parameter set with learning, boredom and persistence churn
    /// all active, over a sawtooth difficulty progression. The population is
    /// heterogeneous enough that early levels lose noticeably more players than
    /// later ones.
    pub fn moderate(n_levels: usize, seed: u64) -> Self {
        TruthSpec {
            true_params: moderate_params(),
            n_players: 2000,
            level_difficulties: sawtooth_difficulties(n_levels, seed),
            seed,
        }
    }
}

pub fn moderate_params() -> SimParams {
    SimParams {
        population: PopulationParams {
            mean_skill: 0.55,
            std_skill: 0.15,
            mean_persistence: 3.0,
            std_persistence: 2.0,
            mean_boredom: -1.0,
            std_boredom: 0.6,
        },
        alpha: 0.15,
        beta: 1.0,
        theta: 0.5,
        gamma: 0.08,
    }
}

/// Difficulty rising within blocks of 15 levels, with a slow upward trend and
/// per-level noise, clamped to [0.02, 0.98].
pub fn sawtooth_difficulties(n_levels: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(derive_seed(seed, &[rng::DOMAIN_TRUTH]), 0x6469_6666);
    (0..n_levels)
        .map(|i| {
            let phase = (i % 15) as f64 / 14.0;
            let trend = i as f64 / n_levels.max(1) as f64;
            let d = 0.2 + 0.35 * phase + 0.2 * trend + normal(&mut rng, 0.0, 0.1);
            d.clamp(0.02, 0.98)
        })
        .collect()
}

fn truth_simulator(spec: &TruthSpec) -> PopulationSimulator {
    PopulationSimulator::new(SimConfig::new(
        spec.n_players,
        AblationFlags::default(),
        derive_seed(spec.seed, &[rng::DOMAIN_TRUTH]),
    ))
}

/// Full simulation behind [`generate_truth`], including population statistics.
pub fn generate_truth_progression(spec: &TruthSpec) -> Result<Progression> {
    spec.validate()?;
    let prog = truth_simulator(spec).run(&spec.true_params, &spec.level_difficulties)?;
    if let Some(level) = prog.depleted_at {
        return Err(Error::Depleted { level });
    }
    Ok(prog)
}

pub fn generate_truth(spec: &TruthSpec) -> Result<LevelSeries> {
    let prog = generate_truth_progression(spec)?;
    LevelSeries::from_rates(SeriesRole::Truth, &prog.pass_rates, &prog.churn_rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeModel {
    pub bias_std: f64,
    pub noise: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl Default for EpisodeModel {
    fn default() -> Self {
        EpisodeModel {
            bias_std: 0.08,
            noise: 0.25,
            intercept: 1.3,
            slope: 1.6,
        }
    }
}

impl EpisodeModel {
    pub fn generate(
        &self,
        level_difficulties: &[f64],
        episodes_per_level: usize,
        seed: u64,
    ) -> Result<Vec<EpisodeLog>> {
        if episodes_per_level == 0 {
            return Err(Error::invalid("episodes_per_level must be at least 1"));
        }
        if level_difficulties.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::invalid("difficulties must lie in [0, 1]"));
        }
        if !(self.bias_std >= 0.0 && self.noise >= 0.0) {
            return Err(Error::invalid("episode model scales must be non-negative"));
        }
        let base = derive_seed(seed, &[rng::DOMAIN_EPISODES]);
        let mut out = Vec::with_capacity(level_difficulties.len() * episodes_per_level);
        for (i, &d) in level_difficulties.iter().enumerate() {
            let level_id = i as u32 + 1;
            let mut rng = rng::stream(base, i as u64);
            let delta = normal(&mut rng, 0.0, self.bias_std);
            let d_ai = (d + 4.0 * d * (1.0 - d) * delta).clamp(0.0, 1.0);
            let budget = 18 + (7 * level_id) % 13;
            for e in 0..episodes_per_level {
                let r = self.intercept - self.slope * d_ai
                    + self.noise * d_ai * normal(&mut rng, 0.0, 1.0);
                let passed = r >= 1.0;
                let moves_left = passed
                    .then(|| (budget as f64 / 2.0 * ((r - 1.0) / 0.3).min(1.0)).floor() as u32);
                out.push(EpisodeLog {
                    level_id,
                    episode_id: e as u32,
                    cleared_goals_frac: r.clamp(0.0, 1.0),
                    moves_used: budget - moves_left.unwrap_or(0),
                    moves_budget_human: budget,
                    passed_with_human_budget: passed,
                    moves_left_on_pass: moves_left,
                });
            }
        }
        Ok(out)
    }
}

/// Episode logs from the default [`EpisodeModel`], level ids `1..=n`.
pub fn generate_episode_logs(
    level_difficulties: &[f64],
    episodes_per_level: usize,
    seed: u64,
) -> Result<Vec<EpisodeLog>> {
    EpisodeModel::default().generate(level_difficulties, episodes_per_level, seed)
}

/// A complete synthetic dataset: truth, episodes and the hidden generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub spec: TruthSpec,
    pub truth: LevelSeries,
    pub episodes: Vec<EpisodeLog>,
}

pub fn generate_dataset(spec: TruthSpec, episodes_per_level: usize) -> Result<SyntheticDataset> {
    let truth = generate_truth(&spec)?;
    let episodes = generate_episode_logs(&spec.level_difficulties, episodes_per_level, spec.seed)?;
    Ok(SyntheticDataset {
        spec,
        truth,
        episodes,
    })
}
