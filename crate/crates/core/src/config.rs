//! Run configuration: a sectioned key-value file in TOML syntax.
//!
//! Every key is optional and unknown keys are rejected. Relative data paths
//! are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cmaes::OptimizerConfig;
use crate::difficulty::DEFAULT_RIDGE;
use crate::error::{Error, Result};
use crate::evaluation::{CvConfig, FoldScheme};
use crate::fitting::{default_x0, SeedPolicy, SimConfig};
use crate::population::{AblationFlags, PopulationParams, SimParams};
use crate::synthetic::moderate_params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub simulation: SimulationSection,
    pub flags: AblationFlags,
    pub params: ParamsSection,
    pub optimizer: OptimizerSection,
    pub cv: CvSection,
    pub synth: SynthSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub episodes: PathBuf,
    pub levels: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            episodes: PathBuf::from("episodes.csv"),
            levels: PathBuf::from("levels.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub population_size: usize,
    pub seed_policy: SeedPolicy,
    /// Level difficulties for `simulate`. When absent they come from the
    /// baseline regression on the configured episodes.
    pub difficulties: Option<Vec<f64>>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            population_size: 2000,
            seed_policy: SeedPolicy::Common,
            difficulties: None,
        }
    }
}

/// Decoded simulation parameters in flat form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub mean_skill: f64,
    pub std_skill: f64,
    pub mean_persistence: f64,
    pub std_persistence: f64,
    pub mean_boredom: f64,
    pub std_boredom: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub gamma: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            mean_skill: 0.5,
            std_skill: 0.3,
            mean_persistence: 3.0,
            std_persistence: 0.3,
            mean_boredom: 0.0,
            std_boredom: 0.3,
            alpha: 0.3,
            beta: 0.3,
            theta: 0.3,
            gamma: 0.3,
        }
    }
}

impl ParamsSection {
    pub fn to_params(&self) -> Result<SimParams> {
        let params = SimParams {
            population: PopulationParams {
                mean_skill: self.mean_skill,
                std_skill: self.std_skill,
                mean_persistence: self.mean_persistence,
                std_persistence: self.std_persistence,
                mean_boredom: self.mean_boredom,
                std_boredom: self.std_boredom,
            },
            alpha: self.alpha,
            beta: self.beta,
            theta: self.theta,
            gamma: self.gamma,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub population_size: usize,
    pub no_improvement_generations: usize,
    pub max_evaluations: usize,
    pub initial_step_size: f64,
    pub tol_fun: f64,
    pub tol_x: f64,
    /// Starting raw vector; defaults to the built-in starting point.
    pub x0: Option<Vec<f64>>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        OptimizerSection {
            population_size: d.population_size,
            no_improvement_generations: d.no_improvement_generations,
            max_evaluations: d.max_evaluations,
            initial_step_size: d.initial_step_size,
            tol_fun: d.tol_fun,
            tol_x: d.tol_x,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: usize,
    pub repeats: usize,
    pub scheme: FoldScheme,
    pub ridge: f64,
    /// Restrict evaluation to these folds.
    pub folds: Option<Vec<usize>>,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            k: 5,
            repeats: 5,
            scheme: FoldScheme::Contiguous,
            ridge: DEFAULT_RIDGE,
            folds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_levels: usize,
    pub n_players: usize,
    pub episodes_per_level: usize,
    /// Hidden parameters of the generated truth.
    pub params: ParamsSection,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = moderate_params();
        SynthSection {
            n_levels: 168,
            n_players: 2000,
            episodes_per_level: 50,
            params: ParamsSection {
                mean_skill: p.population.mean_skill,
                std_skill: p.population.std_skill,
                mean_persistence: p.population.mean_persistence,
                std_persistence: p.population.std_persistence,
                mean_boredom: p.population.mean_boredom,
                std_boredom: p.population.std_boredom,
                alpha: p.alpha,
                beta: p.beta,
                theta: p.theta,
                gamma: p.gamma,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its data paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data.episodes = base.join(&config.data.episodes);
        config.data.levels = base.join(&config.data.levels);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.simulation.population_size == 0 {
            return Err(Error::Config(
                "simulation.population_size must be positive".into(),
            ));
        }
        if let Some(d) = &self.simulation.difficulties {
            if d.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config(
                    "simulation.difficulties must lie in [0, 1]".into(),
                ));
            }
        }
        if self.cv.k < 2 {
            return Err(Error::Config("cv.k must be at least 2".into()));
        }
        if self.cv.repeats == 0 {
            return Err(Error::Config("cv.repeats must be positive".into()));
        }
        if self.synth.n_levels == 0
            || self.synth.n_players == 0
            || self.synth.episodes_per_level == 0
        {
            return Err(Error::Config("synth sizes must be positive".into()));
        }
        if let Some(x0) = &self.optimizer.x0 {
            if x0.len() != SimParams::DIM {
                return Err(Error::Config(format!(
                    "optimizer.x0 needs {} entries",
                    SimParams::DIM
                )));
            }
        }
        self.optimizer_config(0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.params
            .to_params()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            population_size: o.population_size,
            no_improvement_generations: o.no_improvement_generations,
            max_evaluations: o.max_evaluations,
            initial_step_size: o.initial_step_size,
            tol_fun: o.tol_fun,
            tol_x: o.tol_x,
            seed,
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        self.optimizer.x0.clone().unwrap_or_else(default_x0)
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            seed_policy: self.simulation.seed_policy,
            ..SimConfig::new(self.simulation.population_size, self.flags, seed)
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            k: self.cv.k,
            scheme: self.cv.scheme,
            repeats: self.cv.repeats,
            seed: self.seed,
            population_size: self.simulation.population_size,
            flags: self.flags,
            seed_policy: self.simulation.seed_policy,
            optimizer: self.optimizer_config(0),
            x0: self.x0(),
            ridge: self.cv.ridge,
            folds: self.cv.folds.clone(),
        }
    }
}
