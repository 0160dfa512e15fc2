//! Per-level pass and churn simulation over an evolving player population.
//!
//! Each simulated player carries three attributes: `skill` (compared against
//! the level difficulty), `persistence` (how many failed attempts the player
//! tolerates) and `boredom` (the threshold below which a post-pass boredom draw
//! makes the player quit). For every level the player draws a level-local skill
//! `s ~ N(skill, alpha)` and tolerance `t ~ N(persistence, beta)`, then attempts
//! the level until passing (`s >= d`) or churning:
//!
//! * on a pass the player contributes `1 / attempts` to the pass rate and churns
//!   when `b ~ N(0, theta)` falls below `boredom`;
//! * on a failure `s` grows by the learning increment `gamma` and the player
//!   churns once `attempts > t`.
//!
//! Churned players leave the population. The survivors are then topped back up
//! to the entry size by copying uniformly chosen survivors, and the result is
//! the population entering the next level.
//!
//! Randomness is drawn from one stream per (level, player) pair, derived from
//! the level seed, so a given player index sees the same noise regardless of the
//! parameter values being evaluated.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, mix, normal, StreamKey};

/// Hard bound on attempts per player and level. Reaching it is an error.
pub const ATTEMPT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub skill: f64,
    pub persistence: f64,
    pub boredom: f64,
}

impl Player {
    pub fn new(skill: f64, persistence: f64, boredom: f64) -> Self {
        Player {
            skill,
            persistence,
            boredom,
        }
    }

    fn is_finite(&self) -> bool {
        self.skill.is_finite() && self.persistence.is_finite() && self.boredom.is_finite()
    }
}

pub type Population = Vec<Player>;

/// Normal distributions of the initial player attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub mean_skill: f64,
    pub std_skill: f64,
    pub mean_persistence: f64,
    pub std_persistence: f64,
    pub mean_boredom: f64,
    pub std_boredom: f64,
}

impl PopulationParams {
    pub fn validate(&self) -> Result<()> {
        let values = [
            ("mean_skill", self.mean_skill),
            ("std_skill", self.std_skill),
            ("mean_persistence", self.mean_persistence),
            ("std_persistence", self.std_persistence),
            ("mean_boredom", self.mean_boredom),
            ("std_boredom", self.std_boredom),
        ];
        for (name, v) in values {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} is not finite")));
            }
            if name.starts_with("std") && v < 0.0 {
                return Err(Error::invalid(format!("{name} is negative")));
            }
        }
        Ok(())
    }
}

/// The ten fitted simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub population: PopulationParams,
    /// Std of the per-level skill draw.
    pub alpha: f64,
    /// Std of the per-level persistence draw.
    pub beta: f64,
    /// Std of the post-pass boredom draw.
    pub theta: f64,
    /// Skill increment per failed attempt.
    pub gamma: f64,
}

impl SimParams {
    pub const DIM: usize = 10;

    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("theta", self.theta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Switches that remove one simulation component each.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub disable_boredom: bool,
    pub disable_persistence: bool,
    pub disable_learning: bool,
    pub disable_draw_noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome {
    pub pass_rate: f64,
    pub churn_rate: f64,
    /// Players left after churn, before resampling.
    pub survivors: Population,
    /// Survivors resampled back to the entry size. Empty when depleted.
    pub evolved: Population,
    pub depleted: bool,
}

/// Per-attribute mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub mean_skill: f64,
    pub std_skill: f64,
    pub mean_persistence: f64,
    pub std_persistence: f64,
    pub mean_boredom: f64,
    pub std_boredom: f64,
}

pub fn init_population(params: &PopulationParams, size: usize, seed: u64) -> Result<Population> {
    if size == 0 {
        return Err(Error::invalid("population size must be at least 1"));
    }
    params.validate()?;
    let pop = (0..size)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            Player {
                skill: normal(&mut rng, params.mean_skill, params.std_skill),
                persistence: normal(&mut rng, params.mean_persistence, params.std_persistence),
                boredom: normal(&mut rng, params.mean_boredom, params.std_boredom),
            }
        })
        .collect();
    Ok(pop)
}

/// Draw parameters after applying the ablation flags.
#[derive(Clone, Copy)]
struct Effective {
    alpha: f64,
    beta: f64,
    theta: f64,
    gamma: f64,
    boredom: bool,
    persistence: bool,
}

impl Effective {
    fn new(params: &SimParams, flags: AblationFlags) -> Self {
        let (alpha, beta) = if flags.disable_draw_noise {
            (0.0, 0.0)
        } else {
            (params.alpha, params.beta)
        };
        Effective {
            alpha,
            beta,
            theta: params.theta,
            gamma: if flags.disable_learning {
                0.0
            } else {
                params.gamma
            },
            boredom: !flags.disable_boredom,
            persistence: !flags.disable_persistence,
        }
    }
}

enum PlayerResult {
    Passed { attempts: u64, churned: bool },
    Churned,
}

fn play_level(
    player: &Player,
    index: usize,
    difficulty: f64,
    eff: Effective,
    key: &StreamKey,
) -> Result<PlayerResult> {
    let mut rng = key.stream(index as u64);
    let mut s = normal(&mut rng, player.skill, eff.alpha);
    let t_draw = normal(&mut rng, player.persistence, eff.beta);
    let t = if eff.persistence {
        t_draw
    } else {
        f64::INFINITY
    };

    // Fail fast when the loop provably cannot end before the cap.
    if s < difficulty && t >= ATTEMPT_CAP as f64 {
        let needed = if eff.gamma > 0.0 {
            (difficulty - s) / eff.gamma + 1.0
        } else {
            f64::INFINITY
        };
        if needed > ATTEMPT_CAP as f64 {
            return Err(Error::AttemptCapExceeded {
                player: index,
                cap: ATTEMPT_CAP,
                difficulty,
            });
        }
    }

    let mut attempts: u64 = 0;
    loop {
        attempts += 1;
        if s >= difficulty {
            let churned = eff.boredom && normal(&mut rng, 0.0, eff.theta) < player.boredom;
            return Ok(PlayerResult::Passed { attempts, churned });
        }
        s += eff.gamma;
        if attempts as f64 > t {
            return Ok(PlayerResult::Churned);
        }
        if attempts >= ATTEMPT_CAP {
            return Err(Error::AttemptCapExceeded {
                player: index,
                cap: ATTEMPT_CAP,
                difficulty,
            });
        }
    }
}

fn check_difficulty(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("difficulty {d} outside [0, 1]")));
    }
    Ok(())
}

/// Simulates one level for every player and evolves the population.
pub fn simulate_level(
    difficulty: f64,
    population: &[Player],
    params: &SimParams,
    flags: AblationFlags,
    seed: u64,
) -> Result<LevelOutcome> {
    if population.is_empty() {
        return Err(Error::invalid("cannot simulate an empty population"));
    }
    check_difficulty(difficulty)?;
    params.validate()?;
    if let Some(i) = population.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!(
            "player {i} has non-finite attributes"
        )));
    }
    let mut evolved = Vec::with_capacity(population.len());
    let step = step_level(
        difficulty,
        population,
        Effective::new(params, flags),
        seed,
        &mut evolved,
    )?;
    let survivors = evolved[..step.survivors].to_vec();
    if step.survivors == 0 {
        evolved.clear();
    }
    Ok(LevelOutcome {
        pass_rate: step.pass_rate,
        churn_rate: step.churn_rate,
        survivors,
        evolved,
        depleted: step.survivors == 0,
    })
}

struct Step {
    pass_rate: f64,
    churn_rate: f64,
    survivors: usize,
}

/// Plays one level. On return `out` holds the survivors followed by the
/// resampled replicas; it holds only the (zero) survivors when depleted.
fn step_level(
    difficulty: f64,
    population: &[Player],
    eff: Effective,
    seed: u64,
    out: &mut Vec<Player>,
) -> Result<Step> {
    let m = population.len();
    let key = StreamKey::new(seed);
    let mut pass_sum = 0.0;
    let mut churned = 0usize;
    out.clear();

    for (i, player) in population.iter().enumerate() {
        match play_level(player, i, difficulty, eff, &key)? {
            PlayerResult::Passed {
                attempts,
                churned: quit,
            } => {
                pass_sum += 1.0 / attempts as f64;
                if quit {
                    churned += 1;
                } else {
                    out.push(*player);
                }
            }
            PlayerResult::Churned => churned += 1,
        }
    }

    let survivors = out.len();
    if survivors > 0 {
        let mut rng = rng::resample_stream(seed);
        while out.len() < m {
            let pick = out[rng.random_range(0..survivors)];
            out.push(pick);
        }
    }
    Ok(Step {
        pass_rate: pass_sum / m as f64,
        churn_rate: churned as f64 / m as f64,
        survivors,
    })
}

/// Result of running the level simulation over a progression.
#[derive(Debug, Clone, PartialEq)]
pub struct Progression {
    pub pass_rates: Vec<f64>,
    pub churn_rates: Vec<f64>,
    /// Population statistics on entry to each simulated level.
    pub stats: Vec<PopulationStats>,
    /// Index of the level at which every player churned. Levels after it are
    /// missing from the rate vectors.
    pub depleted_at: Option<usize>,
    /// Population after the last simulated level.
    pub population: Population,
}

impl Progression {
    pub fn is_depleted(&self) -> bool {
        self.depleted_at.is_some()
    }

    pub fn simulated_levels(&self) -> usize {
        self.pass_rates.len()
    }
}

/// Seed used for level `index` of a progression.
pub fn level_seed(seed: u64, index: usize) -> u64 {
    mix(seed, index as u64)
}

pub fn simulate_progression(
    difficulties: &[f64],
    initial: &[Player],
    params: &SimParams,
    flags: AblationFlags,
    seed: u64,
) -> Result<Progression> {
    run_levels(difficulties, initial, params, flags, seed, true)
}

/// Same as [`simulate_progression`] but leaves `stats` empty.
pub fn simulate_rates(
    difficulties: &[f64],
    initial: &[Player],
    params: &SimParams,
    flags: AblationFlags,
    seed: u64,
) -> Result<Progression> {
    run_levels(difficulties, initial, params, flags, seed, false)
}

fn run_levels(
    difficulties: &[f64],
    initial: &[Player],
    params: &SimParams,
    flags: AblationFlags,
    seed: u64,
    record_stats: bool,
) -> Result<Progression> {
    if initial.is_empty() {
        return Err(Error::invalid("cannot simulate an empty population"));
    }
    for &d in difficulties {
        check_difficulty(d)?;
    }
    params.validate()?;
    if let Some(i) = initial.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!(
            "player {i} has non-finite attributes"
        )));
    }

    let eff = Effective::new(params, flags);
    let n = difficulties.len();
    let mut out = Progression {
        pass_rates: Vec::with_capacity(n),
        churn_rates: Vec::with_capacity(n),
        stats: Vec::with_capacity(if record_stats { n } else { 0 }),
        depleted_at: None,
        population: initial.to_vec(),
    };
    let mut next = Vec::with_capacity(initial.len());
    for (k, &d) in difficulties.iter().enumerate() {
        if record_stats {
            out.stats.push(population_stats(&out.population)?);
        }
        let step = step_level(d, &out.population, eff, level_seed(seed, k), &mut next)?;
        out.pass_rates.push(step.pass_rate);
        out.churn_rates.push(step.churn_rate);
        if step.survivors == 0 {
            out.depleted_at = Some(k);
            out.population = Vec::new();
            break;
        }
        std::mem::swap(&mut out.population, &mut next);
    }
    Ok(out)
}

pub fn population_stats(population: &[Player]) -> Result<PopulationStats> {
    if population.is_empty() {
        return Err(Error::invalid("statistics of an empty population"));
    }
    let n = population.len() as f64;
    let (mut ms, mut mp, mut mb) = (0.0, 0.0, 0.0);
    for p in population {
        ms += p.skill;
        mp += p.persistence;
        mb += p.boredom;
    }
    ms /= n;
    mp /= n;
    mb /= n;
    let (mut vs, mut vp, mut vb) = (0.0, 0.0, 0.0);
    for p in population {
        vs += (p.skill - ms).powi(2);
        vp += (p.persistence - mp).powi(2);
        vb += (p.boredom - mb).powi(2);
    }
    Ok(PopulationStats {
        mean_skill: ms,
        std_skill: (vs / n).sqrt(),
        mean_persistence: mp,
        std_persistence: (vp / n).sqrt(),
        mean_boredom: mb,
        std_boredom: (vb / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degenerate(gamma: f64) -> SimParams {
        SimParams {
            population: PopulationParams {
                mean_skill: 0.0,
                std_skill: 0.0,
                mean_persistence: 0.0,
                std_persistence: 0.0,
                mean_boredom: -5.0,
                std_boredom: 0.0,
            },
            alpha: 0.0,
            beta: 0.0,
            theta: 0.0,
            gamma,
        }
    }

    fn mixed() -> Population {
        (0..10)
            .map(|i| Player::new(if i < 5 { 2.0 } else { 0.0 }, 0.0, -5.0))
            .collect()
    }

    #[test]
    fn zero_variance_population_is_the_mean() {
        let params = PopulationParams {
            mean_skill: 0.5,
            std_skill: 0.0,
            mean_persistence: 5.0,
            std_persistence: 0.0,
            mean_boredom: 0.0,
            std_boredom: 0.0,
        };
        let pop = init_population(&params, 3, 1).unwrap();
        assert_eq!(pop, vec![Player::new(0.5, 5.0, 0.0); 3]);
    }

    #[test]
    fn empty_population_size_is_rejected() {
        let params = degenerate(0.0).population;
        assert!(matches!(
            init_population(&params, 0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn standard_normal_population_moments() {
        let params = PopulationParams {
            mean_skill: 0.0,
            std_skill: 1.0,
            mean_persistence: 0.0,
            std_persistence: 1.0,
            mean_boredom: 0.0,
            std_boredom: 1.0,
        };
        let bound = 4.0 / 2000f64.sqrt();
        for seed in 0..10 {
            let pop = init_population(&params, 2000, seed).unwrap();
            let st = population_stats(&pop).unwrap();
            for (m, s) in [
                (st.mean_skill, st.std_skill),
                (st.mean_persistence, st.std_persistence),
                (st.mean_boredom, st.std_boredom),
            ] {
                assert!(m.abs() < bound, "mean {m}");
                assert!((s - 1.0).abs() < bound, "std {s}");
            }
        }
    }

    #[test]
    fn all_players_pass_easy_level() {
        let pop = vec![Player::new(0.0, 0.0, -5.0); 10];
        let out = simulate_level(0.0, &pop, &degenerate(0.0), AblationFlags::default(), 3).unwrap();
        assert_eq!(out.pass_rate, 1.0);
        assert_eq!(out.churn_rate, 0.0);
        assert_eq!(out.survivors.len(), 10);
        assert_eq!(out.evolved.len(), 10);
        assert!(!out.depleted);
    }

    #[test]
    fn unskilled_players_churn_after_one_failure() {
        let out =
            simulate_level(1.0, &mixed(), &degenerate(0.0), AblationFlags::default(), 3).unwrap();
        assert_eq!(out.pass_rate, 0.5);
        assert_eq!(out.churn_rate, 0.5);
        assert_eq!(out.survivors.len(), 5);
        assert!(out.survivors.iter().all(|p| p.skill == 2.0));
        assert_eq!(out.evolved.len(), 10);
        assert!(out.evolved.iter().all(|p| p.skill == 2.0));
    }

    #[test]
    fn learning_passes_on_third_attempt() {
        let pop = vec![Player::new(0.2, 10.0, -5.0)];
        let out = simulate_level(1.0, &pop, &degenerate(0.5), AblationFlags::default(), 3).unwrap();
        assert_eq!(out.pass_rate, 1.0 / 3.0);
        assert_eq!(out.churn_rate, 0.0);
    }

    #[test]
    fn boundary_skill_passes() {
        let pop = vec![Player::new(0.5, 0.0, -5.0)];
        let out = simulate_level(0.5, &pop, &degenerate(0.0), AblationFlags::default(), 0).unwrap();
        assert_eq!(out.pass_rate, 1.0);
    }

    #[test]
    fn negative_persistence_churns_after_first_failure() {
        let pop = vec![Player::new(0.0, -3.0, -5.0)];
        let out = simulate_level(1.0, &pop, &degenerate(0.9), AblationFlags::default(), 0).unwrap();
        assert_eq!(out.pass_rate, 0.0);
        assert_eq!(out.churn_rate, 1.0);
        assert!(out.depleted);
        assert!(out.survivors.is_empty() && out.evolved.is_empty());
    }

    #[test]
    fn boredom_churn_after_pass() {
        // b = 0 is below a boredom threshold of 1.
        let pop = vec![Player::new(1.0, 0.0, 1.0), Player::new(1.0, 0.0, -1.0)];
        let out = simulate_level(0.5, &pop, &degenerate(0.0), AblationFlags::default(), 0).unwrap();
        assert_eq!(out.pass_rate, 1.0);
        assert_eq!(out.churn_rate, 0.5);
        let flags = AblationFlags {
            disable_boredom: true,
            ..Default::default()
        };
        let out = simulate_level(0.5, &pop, &degenerate(0.0), flags, 0).unwrap();
        assert_eq!(out.churn_rate, 0.0);
    }

    #[test]
    fn disabled_persistence_keeps_failing_players() {
        let pop = vec![Player::new(0.0, 0.0, -5.0)];
        let flags = AblationFlags {
            disable_persistence: true,
            ..Default::default()
        };
        let out = simulate_level(1.0, &pop, &degenerate(0.25), flags, 0).unwrap();
        // 0 -> 0.25 -> 0.5 -> 0.75 -> 1.0 passes on attempt 5
        assert_eq!(out.pass_rate, 0.2);
        assert_eq!(out.churn_rate, 0.0);
    }

    #[test]
    fn non_terminating_loop_is_an_error() {
        let pop = vec![Player::new(0.0, 0.0, -5.0)];
        let flags = AblationFlags {
            disable_persistence: true,
            disable_learning: true,
            ..Default::default()
        };
        let err = simulate_level(1.0, &pop, &degenerate(0.25), flags, 0).unwrap_err();
        assert!(matches!(err, Error::AttemptCapExceeded { player: 0, .. }));
    }

    #[test]
    fn disabled_noise_removes_draw_variance() {
        let mut params = degenerate(0.0);
        params.alpha = 10.0;
        params.beta = 10.0;
        let pop = vec![Player::new(0.4, 0.0, -5.0); 50];
        let flags = AblationFlags {
            disable_draw_noise: true,
            ..Default::default()
        };
        let out = simulate_level(0.5, &pop, &params, flags, 9).unwrap();
        assert_eq!(out.pass_rate, 0.0);
        assert_eq!(out.churn_rate, 1.0);
        let noisy = simulate_level(0.5, &pop, &params, AblationFlags::default(), 9).unwrap();
        assert!(noisy.pass_rate > 0.0);
    }

    #[test]
    fn empty_population_is_rejected() {
        let err = simulate_level(0.5, &[], &degenerate(0.0), AblationFlags::default(), 0);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        assert!(population_stats(&[]).is_err());
    }

    #[test]
    fn out_of_range_difficulty_is_rejected() {
        let pop = vec![Player::new(0.0, 0.0, -5.0)];
        for d in [-0.1, 1.5, f64::NAN] {
            assert!(
                simulate_level(d, &pop, &degenerate(0.0), AblationFlags::default(), 0).is_err()
            );
        }
    }

    #[test]
    fn stats_with_divisor_n() {
        let pop = vec![Player::new(0.0, 1.0, 2.0), Player::new(1.0, 1.0, 2.0)];
        let st = population_stats(&pop).unwrap();
        assert_eq!(st.mean_skill, 0.5);
        assert_eq!(st.std_skill, 0.5);
        assert_eq!(st.mean_persistence, 1.0);
        assert_eq!(st.std_persistence, 0.0);
        assert_eq!(st.mean_boredom, 2.0);
        assert_eq!(st.std_boredom, 0.0);
    }

    #[test]
    fn empty_progression_is_identity() {
        let pop = mixed();
        let prog =
            simulate_progression(&[], &pop, &degenerate(0.0), AblationFlags::default(), 1).unwrap();
        assert!(prog.pass_rates.is_empty() && prog.stats.is_empty());
        assert_eq!(prog.population, pop);
    }

    #[test]
    fn easy_progression_is_constant() {
        let pop = vec![Player::new(0.0, 0.0, -5.0); 10];
        let prog = simulate_progression(
            &[0.0; 6],
            &pop,
            &degenerate(0.0),
            AblationFlags::default(),
            1,
        )
        .unwrap();
        assert_eq!(prog.pass_rates, vec![1.0; 6]);
        assert_eq!(prog.churn_rates, vec![0.0; 6]);
        assert!(prog.stats.windows(2).all(|w| w[0] == w[1]));
        assert!(!prog.is_depleted());
    }

    #[test]
    fn rates_only_matches_full_run() {
        let params = SimParams {
            population: PopulationParams {
                mean_skill: 0.5,
                std_skill: 0.2,
                mean_persistence: 3.0,
                std_persistence: 1.0,
                mean_boredom: -2.0,
                std_boredom: 0.3,
            },
            alpha: 0.1,
            beta: 0.5,
            theta: 1.0,
            gamma: 0.1,
        };
        let pop = init_population(&params.population, 300, 8).unwrap();
        let d = [0.3, 0.6, 0.9, 0.1];
        let full = simulate_progression(&d, &pop, &params, AblationFlags::default(), 4).unwrap();
        let fast = simulate_rates(&d, &pop, &params, AblationFlags::default(), 4).unwrap();
        assert_eq!(full.pass_rates, fast.pass_rates);
        assert_eq!(full.churn_rates, fast.churn_rates);
        assert_eq!(full.population, fast.population);
        assert_eq!(full.stats.len(), 4);
        assert!(fast.stats.is_empty());
    }

    #[test]
    fn depletion_truncates_progression() {
        let pop = vec![Player::new(0.0, 0.0, -5.0); 4];
        let prog = simulate_progression(
            &[0.0, 1.0, 0.0, 0.0],
            &pop,
            &degenerate(0.0),
            AblationFlags::default(),
            1,
        )
        .unwrap();
        assert_eq!(prog.depleted_at, Some(1));
        assert_eq!(prog.pass_rates, vec![1.0, 0.0]);
        assert_eq!(prog.churn_rates, vec![0.0, 1.0]);
        assert!(prog.population.is_empty());
    }
}
