use churnsim::difficulty::{fit_regression, predict_level_pass_rates, DEFAULT_RIDGE, N_FEATURES};
use churnsim::rng::{normal, stream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn design(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, 0);
    (0..n)
        .map(|_| {
            (0..N_FEATURES)
                .map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64 / 4.0))
                .collect()
        })
        .collect()
}

fn true_model(seed: u64) -> (Vec<f64>, f64) {
    let mut rng = stream(seed, 1);
    let w = (0..N_FEATURES)
        .map(|_| normal(&mut rng, 0.0, 1.0))
        .collect();
    (w, normal(&mut rng, 0.0, 1.0))
}

/// Solves `[X 1]^T [X 1] beta = [X 1]^T y` by Cholesky.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let a = DMatrix::from_fn(n, N_FEATURES + 1, |i, j| {
        if j < N_FEATURES {
            x[i][j]
        } else {
            1.0
        }
    });
    let b = DVector::from_column_slice(y);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let beta = ata.cholesky().expect("full rank design").solve(&atb);
    (
        beta.iter().take(N_FEATURES).copied().collect(),
        beta[N_FEATURES],
    )
}

fn targets(x: &[Vec<f64>], w: &[f64], b: f64) -> Vec<f64> {
    x.iter()
        .map(|r| r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b)
        .collect()
}

#[test]
fn noiseless_recovery() {
    for seed in 0..5 {
        let x = design(200, seed);
        let (w, b) = true_model(seed);
        let y = targets(&x, &w, b);
        let (ow, ob) = normal_equations(&x, &y);
        for ridge in [0.0, DEFAULT_RIDGE] {
            let model = fit_regression(&x, &y, ridge).unwrap();
            for j in 0..N_FEATURES {
                assert!(
                    (model.weights[j] - w[j]).abs() <= 1e-8,
                    "seed {seed} ridge {ridge} w{j}"
                );
                assert!((model.weights[j] - ow[j]).abs() <= 1e-8);
            }
            assert!(
                (model.bias - b).abs() <= 1e-8,
                "seed {seed} ridge {ridge} bias"
            );
            assert!((model.bias - ob).abs() <= 1e-8);
        }
    }
}

#[test]
fn residuals_are_orthogonal_to_features() {
    let mut rng = stream(42, 2);
    for seed in 0..5 {
        let x = design(150, seed + 10);
        let (w, b) = true_model(seed + 10);
        let y: Vec<f64> = targets(&x, &w, b)
            .into_iter()
            .map(|v| v + normal(&mut rng, 0.0, 0.3))
            .collect();
        for ridge in [0.0, DEFAULT_RIDGE] {
            let model = fit_regression(&x, &y, ridge).unwrap();
            let pred = predict_level_pass_rates(&model, &x).unwrap();
            let r: Vec<f64> = y.iter().zip(&pred).map(|(a, p)| a - p).collect();
            assert!(r.iter().sum::<f64>().abs() <= 1e-8);
            let mean: Vec<f64> = (0..N_FEATURES)
                .map(|j| x.iter().map(|row| row[j]).sum::<f64>() / 150.0)
                .collect();
            for j in 0..N_FEATURES {
                let dot: f64 = x.iter().zip(&r).map(|(row, e)| row[j] * e).sum();
                // stationarity of the penalized fit: Xc^T r = ridge * w
                let centered: f64 = x
                    .iter()
                    .zip(&r)
                    .map(|(row, e)| (row[j] - mean[j]) * e)
                    .sum();
                assert!(
                    (centered - ridge * model.weights[j]).abs() <= 1e-8,
                    "seed {seed} ridge {ridge} feature {j}"
                );
                if ridge == 0.0 {
                    assert!(dot.abs() <= 1e-8, "seed {seed} feature {j}: {dot}");
                }
            }
        }
    }
}

#[test]
fn prediction_matches_dot_product() {
    let x = design(60, 3);
    let (w, b) = true_model(4);
    let y = targets(&x, &w, b);
    let model = fit_regression(&x, &y, DEFAULT_RIDGE).unwrap();
    let pred = predict_level_pass_rates(&model, &x).unwrap();
    for (row, p) in x.iter().zip(pred) {
        let dot = row
            .iter()
            .zip(&model.weights)
            .map(|(a, c)| a * c)
            .sum::<f64>()
            + model.bias;
        assert!((p - dot).abs() <= 1e-12);
    }
}

#[test]
fn training_error_beats_zero_model() {
    let mut rng = stream(9, 3);
    let x = design(80, 7);
    let y: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..1.0)).collect();
    let model = fit_regression(&x, &y, DEFAULT_RIDGE).unwrap();
    let pred = predict_level_pass_rates(&model, &x).unwrap();
    let mse = y
        .iter()
        .zip(&pred)
        .map(|(a, p)| (a - p).powi(2))
        .sum::<f64>()
        / 80.0;
    let zero = y.iter().map(|a| a * a).sum::<f64>() / 80.0;
    assert!(mse <= zero);
}
