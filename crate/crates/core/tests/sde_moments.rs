use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbridge_core::sde::{euler_maruyama, FnDrift};
use sbridge_core::{Gaussian, MarginalSamples, TimeGrid};

fn ou(theta: f64) -> FnDrift<impl Fn(&[f64], f64, &mut [f64]) + Send + Sync> {
    FnDrift::new(1, move |x: &[f64], _t: f64, out: &mut [f64]| out[0] = -theta * x[0])
}

fn moments(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn ou_keeps_its_stationary_variance() {
    // gamma = 2, theta = 1: stationary law N(0, gamma / (2 theta)) = N(0, 1).
    let grid = TimeGrid::new(0.01).unwrap();
    let init = Gaussian::diagonal(vec![0.0], &[1.0])
        .unwrap()
        .sample(20_000, &mut ChaCha8Rng::seed_from_u64(1), "stationary")
        .unwrap();
    let batch = euler_maruyama(&ou(1.0), 2.0, &init, &grid, 2).unwrap();
    let (mean, var) = moments(batch.terminal().column(0).iter().copied());
    assert!((0.94..=1.06).contains(&var), "variance {var}");
    assert!(mean.abs() < 0.03, "mean {mean}");
}

#[test]
fn ou_mean_and_variance_from_a_point_mass() {
    // x0 = 1: E x1 = e^{-1}, Var x1 = (1 - e^{-2}) gamma / 2.
    let init = MarginalSamples::from_values(&vec![1.0; 20_000], "x0").unwrap();
    for (dt, seed) in [(0.02, 3), (0.01, 4)] {
        let grid = TimeGrid::new(dt).unwrap();
        let batch = euler_maruyama(&ou(1.0), 2.0, &init, &grid, seed).unwrap();
        let (mean, var) = moments(batch.terminal().column(0).iter().copied());
        let exact_var = 1.0 - (-2.0f64).exp();
        let se_mean = (exact_var / 20_000.0).sqrt();
        assert!((mean - (-1.0f64).exp()).abs() < 4.0 * se_mean + 2.0 * dt, "dt {dt}: mean {mean}");
        assert!((var - exact_var).abs() < 0.05 + dt, "dt {dt}: variance {var}");
    }
}

#[test]
fn halving_the_step_halves_the_mean_bias() {
    // The scheme's mean solves m_{k+1} = (1 - dt) m_k, so its bias is known.
    let bias = |dt: f64| ((1.0 - dt).powf(1.0 / dt) - (-1.0f64).exp()).abs();
    let ratio = bias(0.02) / bias(0.01);
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");

    // Zero-noise paths follow the recursion exactly.
    for dt in [0.02, 0.01] {
        let grid = TimeGrid::new(dt).unwrap();
        let init = MarginalSamples::from_values(&[1.0], "x0").unwrap();
        let batch = euler_maruyama(&ou(1.0), 0.0, &init, &grid, 0).unwrap();
        let want = (1.0 - dt).powi(grid.n_steps() as i32);
        assert!((batch.terminal()[[0, 0]] - want).abs() < 1e-12);
    }
}
