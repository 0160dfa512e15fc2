use churnsim::cmaes::{minimize, OptimizerConfig, Termination};

fn sphere(x: &[f64]) -> churnsim::Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn rosenbrock(x: &[f64]) -> churnsim::Result<f64> {
    Ok(x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum())
}

fn config(lambda: usize, max_evaluations: usize, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        population_size: lambda,
        no_improvement_generations: 100,
        max_evaluations,
        initial_step_size: 0.5,
        tol_fun: 0.0,
        tol_x: 0.0,
        seed,
    }
}

#[test]
fn sphere_10d() {
    for seed in 0..3 {
        let r = minimize(sphere, &[1.0; 10], &config(10, 20_000, seed)).unwrap();
        assert!(r.best_value < 1e-10, "seed {seed}: {}", r.best_value);
        assert!(r.evaluations_used <= 20_000);
    }
}

#[test]
fn sphere_10d_with_default_population() {
    let r = minimize(sphere, &[1.0; 10], &config(120, 20_000, 1)).unwrap();
    assert!(r.best_value < 1e-10, "{}", r.best_value);
}

#[test]
fn rosenbrock_5d() {
    for seed in 0..3 {
        let r = minimize(rosenbrock, &[0.0; 5], &config(8, 100_000, seed)).unwrap();
        assert!(r.best_value < 1e-6, "seed {seed}: {}", r.best_value);
        assert!(r.evaluations_used <= 100_000);
        for v in &r.best_raw_vector {
            assert!(
                (v - 1.0).abs() < 1e-3,
                "seed {seed}: {:?}",
                r.best_raw_vector
            );
        }
    }
}

#[test]
fn one_dimensional_against_grid() {
    let f = |x: &[f64]| Ok((x[0] - 3.0).powi(2));
    // grid oracle over [-10, 10]
    let (mut grid_x, mut grid_f) = (0.0, f64::INFINITY);
    for i in 0..=200_000 {
        let x = -10.0 + 20.0 * i as f64 / 200_000.0;
        let v = (x - 3.0f64).powi(2);
        if v < grid_f {
            grid_x = x;
            grid_f = v;
        }
    }
    let r = minimize(f, &[-5.0], &config(6, 20_000, 4)).unwrap();
    assert!((r.best_raw_vector[0] - 3.0).abs() < 1e-6);
    assert!((r.best_raw_vector[0] - grid_x).abs() < 1e-4);
    assert!(r.best_value <= grid_f + 1e-12);
}

#[test]
fn deterministic_per_seed() {
    let a = minimize(rosenbrock, &[0.0; 5], &config(8, 5_000, 11)).unwrap();
    let b = minimize(rosenbrock, &[0.0; 5], &config(8, 5_000, 11)).unwrap();
    let c = minimize(rosenbrock, &[0.0; 5], &config(8, 5_000, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.best_raw_vector, c.best_raw_vector);
}

#[test]
fn budget_termination() {
    let r = minimize(rosenbrock, &[0.0; 5], &config(8, 401, 0)).unwrap();
    assert_eq!(r.termination_reason, Termination::Budget);
    assert!(r.evaluations_used <= 401);
}
