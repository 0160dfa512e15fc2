//! Parameter encoding and the weighted pass/churn objective minimized by CMA-ES.

use serde::{Deserialize, Serialize};

use crate::cmaes::{self, OptResult, OptimizerConfig};
use crate::error::{Error, Result};
use crate::population::{
    init_population, simulate_progression, simulate_rates, AblationFlags, PopulationParams,
    Progression, SimParams,
};
use crate::rng::{self, derive_seed};
use crate::series::LevelSeries;

/// Objective value for simulations that depleted the population or hit the
/// attempt cap.
pub const PENALTY: f64 = 1e6;

/// Raw vector layout: three attribute means, then the logs of the seven
/// scales (skill/persistence/boredom stds, alpha, beta, theta, gamma).
pub const PARAM_NAMES: [&str; SimParams::DIM] = [
    "mean_skill",
    "mean_persistence",
    "mean_boredom",
    "ln_std_skill",
    "ln_std_persistence",
    "ln_std_boredom",
    "ln_alpha",
    "ln_beta",
    "ln_theta",
    "ln_gamma",
];

pub fn decode_params(raw: &[f64]) -> Result<SimParams> {
    if raw.len() != SimParams::DIM {
        return Err(Error::invalid(format!(
            "expected {} raw parameters, got {}",
            SimParams::DIM,
            raw.len()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("raw parameters must be finite"));
    }
    let params = SimParams {
        population: PopulationParams {
            mean_skill: raw[0],
            mean_persistence: raw[1],
            mean_boredom: raw[2],
            std_skill: raw[3].exp(),
            std_persistence: raw[4].exp(),
            std_boredom: raw[5].exp(),
        },
        alpha: raw[6].exp(),
        beta: raw[7].exp(),
        theta: raw[8].exp(),
        gamma: raw[9].exp(),
    };
    // exp overflows to infinity for very large raw scales
    params.validate()?;
    Ok(params)
}

/// Inverse of [`decode_params`]. Scales must be strictly positive.
pub fn encode_params(params: &SimParams) -> Result<Vec<f64>> {
    params.validate()?;
    let p = &params.population;
    let scales = [
        p.std_skill,
        p.std_persistence,
        p.std_boredom,
        params.alpha,
        params.beta,
        params.theta,
        params.gamma,
    ];
    if scales.iter().any(|&s| s <= 0.0) {
        return Err(Error::invalid("zero scales have no log encoding"));
    }
    let mut raw = vec![p.mean_skill, p.mean_persistence, p.mean_boredom];
    raw.extend(scales.iter().map(|s| s.ln()));
    Ok(raw)
}

/// Default starting point for the fit.
pub fn default_x0() -> Vec<f64> {
    let mut x0 = vec![0.5, 3.0, 0.0];
    x0.extend([0.3f64.ln(); 7]);
    x0
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Ratio of pass-rate variance to churn-rate variance.
pub fn compute_w_churn(human_pass: &[f64], human_churn: &[f64]) -> Result<f64> {
    if human_pass.len() != human_churn.len() {
        return Err(Error::invalid("pass and churn sequences differ in length"));
    }
    if human_pass.len() < 2 {
        return Err(Error::invalid("churn weight needs at least two levels"));
    }
    let churn_var = population_variance(human_churn);
    if churn_var <= 0.0 {
        return Err(Error::DegenerateData(
            "churn rates have zero variance".into(),
        ));
    }
    Ok(population_variance(human_pass) / churn_var)
}

/// Simulated per-level rates for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub pass_rates: Vec<f64>,
    pub churn_rates: Vec<f64>,
    pub depleted: bool,
}

pub trait Simulator: Sync {
    fn simulate(&self, params: &SimParams, difficulties: &[f64]) -> Result<SimRun>;
}

impl<S: Simulator + ?Sized> Simulator for &S {
    fn simulate(&self, params: &SimParams, difficulties: &[f64]) -> Result<SimRun> {
        (**self).simulate(params, difficulties)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// Every candidate is simulated with the same seed.
    Common,
    /// The seed is hashed with the candidate's parameter bits.
    PerCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub population_size: usize,
    pub flags: AblationFlags,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
}

impl SimConfig {
    pub fn new(population_size: usize, flags: AblationFlags, seed: u64) -> Self {
        SimConfig {
            population_size,
            flags,
            seed,
            seed_policy: SeedPolicy::Common,
        }
    }
}

/// Runs the population simulation from a freshly drawn initial population.
#[derive(Debug, Clone, Copy)]
pub struct PopulationSimulator {
    pub config: SimConfig,
}

impl PopulationSimulator {
    pub fn new(config: SimConfig) -> Self {
        PopulationSimulator { config }
    }

    fn seed_for(&self, params: &SimParams) -> u64 {
        match self.config.seed_policy {
            SeedPolicy::Common => self.config.seed,
            SeedPolicy::PerCandidate => {
                let p = &params.population;
                let bits = [
                    p.mean_skill,
                    p.mean_persistence,
                    p.mean_boredom,
                    p.std_skill,
                    p.std_persistence,
                    p.std_boredom,
                    params.alpha,
                    params.beta,
                    params.theta,
                    params.gamma,
                ]
                .map(f64::to_bits);
                derive_seed(self.config.seed, &bits)
            }
        }
    }

    /// Full progression including per-level population statistics.
    pub fn run(&self, params: &SimParams, difficulties: &[f64]) -> Result<Progression> {
        let seed = self.seed_for(params);
        let pop = self.initial_population(params, seed)?;
        simulate_progression(difficulties, &pop, params, self.config.flags, seed)
    }

    fn initial_population(
        &self,
        params: &SimParams,
        seed: u64,
    ) -> Result<Vec<crate::population::Player>> {
        init_population(
            &params.population,
            self.config.population_size,
            derive_seed(seed, &[rng::DOMAIN_POPULATION]),
        )
    }
}

impl Simulator for PopulationSimulator {
    fn simulate(&self, params: &SimParams, difficulties: &[f64]) -> Result<SimRun> {
        let seed = self.seed_for(params);
        let pop = self.initial_population(params, seed)?;
        let prog = simulate_rates(difficulties, &pop, params, self.config.flags, seed)?;
        Ok(SimRun {
            depleted: prog.is_depleted(),
            pass_rates: prog.pass_rates,
            churn_rates: prog.churn_rates,
        })
    }
}

/// Weighted pass/churn MSE over the masked-in levels of a progression.
pub struct Objective<S> {
    truth_pass: Vec<f64>,
    truth_churn: Vec<f64>,
    difficulties: Vec<f64>,
    mask: Vec<bool>,
    w_churn: f64,
    simulator: S,
}

pub fn build_objective<S: Simulator>(
    truth: &LevelSeries,
    difficulties: &[f64],
    training_mask: &[bool],
    w_churn: f64,
    simulator: S,
) -> Result<Objective<S>> {
    let n = truth.len();
    if difficulties.len() != n || training_mask.len() != n {
        return Err(Error::invalid(format!(
            "{} truth levels, {} difficulties, {} mask entries",
            n,
            difficulties.len(),
            training_mask.len()
        )));
    }
    if !training_mask.iter().any(|&m| m) {
        return Err(Error::invalid("training mask selects no levels"));
    }
    if !(w_churn.is_finite() && w_churn >= 0.0) {
        return Err(Error::invalid("w_churn must be finite and non-negative"));
    }
    Ok(Objective {
        truth_pass: truth.pass_rates(),
        truth_churn: truth.churn_rates(),
        difficulties: difficulties.to_vec(),
        mask: training_mask.to_vec(),
        w_churn,
        simulator,
    })
}

impl<S: Simulator> Objective<S> {
    pub fn w_churn(&self) -> f64 {
        self.w_churn
    }

    pub fn simulator(&self) -> &S {
        &self.simulator
    }

    /// Loss of an already simulated run.
    pub fn loss(&self, run: &SimRun) -> f64 {
        let n = self.truth_pass.len();
        if run.depleted || run.pass_rates.len() != n || run.churn_rates.len() != n {
            return PENALTY;
        }
        let mut pass_se = 0.0;
        let mut churn_se = 0.0;
        let mut count = 0usize;
        for i in (0..n).filter(|&i| self.mask[i]) {
            pass_se += (run.pass_rates[i] - self.truth_pass[i]).powi(2);
            churn_se += (run.churn_rates[i] - self.truth_churn[i]).powi(2);
            count += 1;
        }
        let c = count as f64;
        pass_se / c + self.w_churn * churn_se / c
    }

    pub fn simulate(&self, params: &SimParams) -> Result<SimRun> {
        self.simulator.simulate(params, &self.difficulties)
    }

    pub fn evaluate_params(&self, params: &SimParams) -> Result<f64> {
        match self.simulate(params) {
            Ok(run) => Ok(self.loss(&run)),
            Err(Error::AttemptCapExceeded { .. }) => Ok(PENALTY),
            Err(e) => Err(e),
        }
    }

    /// Objective over the raw (log-scale) parameter vector.
    pub fn evaluate(&self, raw: &[f64]) -> Result<f64> {
        self.evaluate_params(&decode_params(raw)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: SimParams,
    pub optimizer: OptResult,
}

/// Minimizes the objective with CMA-ES from `x0`.
pub fn fit_params<S: Simulator>(
    objective: &Objective<S>,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<FitResult> {
    let opt = cmaes::minimize(|raw| objective.evaluate(raw), x0, config)?;
    Ok(FitResult {
        params: decode_params(&opt.best_raw_vector)?,
        optimizer: opt,
    })
}
