//! A (mu/mu_w, lambda) CMA-ES minimizer with cumulative step-size adaptation
//! and rank-one plus rank-mu covariance updates.
//!
//! Candidates of one generation are evaluated in parallel; results are kept in
//! candidate-index order so a run is reproducible for a fixed seed regardless of
//! the thread count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Offspring per generation (lambda).
    pub population_size: usize,
    /// Stop after this many consecutive generations without a new best value.
    pub no_improvement_generations: usize,
    pub max_evaluations: usize,
    pub initial_step_size: f64,
    /// Stop when recent best values and the current generation span less than this.
    pub tol_fun: f64,
    /// Stop when the search distribution has collapsed below this scale.
    pub tol_x: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 120,
            no_improvement_generations: 100,
            max_evaluations: 1_000_000,
            initial_step_size: 0.3,
            tol_fun: 1e-12,
            tol_x: 1e-12,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::invalid("CMA-ES population size must be at least 4"));
        }
        if self.no_improvement_generations == 0 || self.max_evaluations == 0 {
            return Err(Error::invalid("optimizer budgets must be positive"));
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(Error::invalid("initial step size must be positive"));
        }
        if self.tol_fun < 0.0 || self.tol_x < 0.0 {
            return Err(Error::invalid("tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    NoImprovement,
    Budget,
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_raw_vector: Vec<f64>,
    pub best_value: f64,
    pub evaluations_used: usize,
    pub generations: usize,
    pub termination_reason: Termination,
    /// Best-ever value after the initial point and after each generation.
    pub best_history: Vec<f64>,
}

/// Strategy constants derived from the dimension and lambda.
struct Strategy {
    n: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Strategy {
            n,
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
        }
    }
}

/// Mutable search state.
struct State {
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    /// Eigenvectors of `cov` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `cov`.
    scales: DVector<f64>,
    path_c: DVector<f64>,
    path_s: DVector<f64>,
}

impl State {
    fn new(x0: &[f64], sigma: f64) -> Self {
        let n = x0.len();
        State {
            mean: DVector::from_column_slice(x0),
            sigma,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            path_c: DVector::zeros(n),
            path_s: DVector::zeros(n),
        }
    }

    /// C^{-1/2} v.
    fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.basis.tr_mul(v);
        for (c, s) in coeffs.iter_mut().zip(self.scales.iter()) {
            *c /= s;
        }
        &self.basis * coeffs
    }

    fn decompose(&mut self, generation: usize) -> Result<()> {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym;
        let eig = SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::NotPositiveDefinite { generation });
        }
        self.scales = eig.eigenvalues.map(f64::sqrt);
        self.basis = eig.eigenvectors;
        Ok(())
    }

    fn condition(&self) -> f64 {
        let max = self.scales.max();
        let min = self.scales.min();
        (max / min).powi(2)
    }
}

/// Minimizes `objective` starting from `x0`.
///
/// The objective may fail; the first error aborts the run and is returned with
/// the failing evaluation index. Non-finite objective values are treated as
/// errors.
pub fn minimize<F>(objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("x0 must have at least one dimension"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x0 contains non-finite values"));
    }

    let eval = |x: &[f64], index: usize| -> Result<f64> {
        let v = objective(x).map_err(|e| Error::Objective {
            evaluation: index,
            source: Box::new(e),
        })?;
        if v.is_nan() {
            return Err(Error::Objective {
                evaluation: index,
                source: Box::new(Error::invalid("objective returned NaN")),
            });
        }
        Ok(v)
    };

    let strat = Strategy::new(x0.len(), config.population_size);
    let n = strat.n;
    let lambda = strat.lambda;
    let mut state = State::new(x0, config.initial_step_size);
    let mut rng = rng::stream(config.seed, rng::DOMAIN_OPTIMIZER);

    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, 0)?;
    let mut evaluations = 1usize;
    let mut history = vec![best_f];
    let mut stall = 0usize;
    let window = 10 + (30.0 * n as f64 / lambda as f64).ceil() as usize;
    let mut generation = 0usize;

    let termination = loop {
        if evaluations + lambda > config.max_evaluations {
            break Termination::Budget;
        }

        // Sample: y = B D z, x = m + sigma y.
        let ys: Vec<DVector<f64>> = (0..lambda)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                &state.basis * state.scales.component_mul(&z)
            })
            .collect();
        let xs: Vec<Vec<f64>> = ys
            .iter()
            .map(|y| (&state.mean + y * state.sigma).iter().copied().collect())
            .collect();
        let values: Vec<f64> = xs
            .par_iter()
            .enumerate()
            .map(|(k, x)| eval(x, evaluations + k))
            .collect::<Result<_>>()?;
        evaluations += lambda;
        generation += 1;

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

        let gen_best = order[0];
        if values[gen_best] < best_f {
            best_f = values[gen_best];
            best_x = xs[gen_best].clone();
            stall = 0;
        } else {
            stall += 1;
        }
        history.push(best_f);

        // Recombination.
        let mut y_w = DVector::zeros(n);
        for (w, &k) in strat.weights.iter().zip(&order) {
            y_w += &ys[k] * *w;
        }
        state.mean += &y_w * state.sigma;

        // Step-size path.
        let cs = strat.cs;
        state.path_s = &state.path_s * (1.0 - cs)
            + state.whiten(&y_w) * (cs * (2.0 - cs) * strat.mueff).sqrt();
        let ps_norm = state.path_s.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powi(2 * generation as i32)).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * strat.chi_n;

        // Covariance path.
        let cc = strat.cc;
        state.path_c = &state.path_c * (1.0 - cc);
        if h_sigma {
            state.path_c += &y_w * (cc * (2.0 - cc) * strat.mueff).sqrt();
        }
        let delta_h = if h_sigma { 0.0 } else { cc * (2.0 - cc) };

        // Covariance update.
        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, &k) in strat.weights.iter().zip(&order) {
            rank_mu.ger(*w, &ys[k], &ys[k], 1.0);
        }
        let decay = 1.0 + strat.c1 * delta_h - strat.c1 - strat.cmu;
        let mut cov = &state.cov * decay + rank_mu * strat.cmu;
        cov.ger(strat.c1, &state.path_c, &state.path_c, 1.0);
        state.cov = cov;

        state.sigma *= ((cs / strat.damps) * (ps_norm / strat.chi_n - 1.0)).exp();
        state.decompose(generation)?;

        if stall >= config.no_improvement_generations {
            break Termination::NoImprovement;
        }
        if history.len() > window {
            let recent = &history[history.len() - window..];
            let lo = recent.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let gen_lo = values[order[0]];
            let gen_hi = values[order[lambda - 1]];
            if hi.max(gen_hi) - lo.min(gen_lo) < config.tol_fun {
                break Termination::Tolerance;
            }
        }
        let spread = state.sigma * state.cov.diagonal().map(f64::sqrt).max();
        if spread < config.tol_x && state.sigma * state.path_c.amax() < config.tol_x {
            break Termination::Tolerance;
        }
        if !state.sigma.is_finite() || state.condition() > 1e14 {
            break Termination::Tolerance;
        }
    };

    Ok(OptResult {
        best_raw_vector: best_x,
        best_value: best_f,
        evaluations_used: evaluations,
        generations: generation,
        termination_reason: termination,
        best_history: history,
    })
}
