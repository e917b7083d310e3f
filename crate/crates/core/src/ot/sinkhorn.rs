use ndarray::{Array1, Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::Distribution;

use crate::error::{Error, Result};
use crate::marginal::MarginalSamples;
use crate::rng::seeded;

/// `C_ij = |x_i - y_j|^2 / (2 gamma)`: negative log Brownian transition density
/// over unit time, up to an additive constant.
pub fn brownian_cost(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, gamma: f64) -> Result<Array2<f64>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cost matrix point dimensions",
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    Ok(Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
        x.row(i)
            .iter()
            .zip(y.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (2.0 * gamma)
    }))
}

/// Entropic coupling returned by [`sinkhorn`].
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    pub row_marginal: Array1<f64>,
    pub col_marginal: Array1<f64>,
    /// Log of the row scaling `u`, so that `coupling = diag(u) exp(-C/eps) diag(v)`.
    pub log_u: Array1<f64>,
    /// Log of the column scaling `v`.
    pub log_v: Array1<f64>,
    pub epsilon: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest L1 violation of the two marginal constraints.
    pub marginal_violation: f64,
    /// Dual objective after each full sweep; non-decreasing.
    pub dual_trace: Vec<f64>,
}

impl TransportPlan {
    pub fn u(&self) -> Array1<f64> {
        self.log_u.mapv(f64::exp)
    }

    pub fn v(&self) -> Array1<f64> {
        self.log_v.mapv(f64::exp)
    }

    /// `<Q, C> + eps <Q, ln Q>`.
    pub fn primal_objective(&self, cost: ArrayView2<'_, f64>) -> f64 {
        self.coupling
            .iter()
            .zip(cost.iter())
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, c)| q * c + self.epsilon * q * q.ln())
            .sum()
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_marginal(m: &[f64], n: usize, what: &str) -> Result<()> {
    if m.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{what} marginal has length {} but the cost has {n}",
            m.len()
        )));
    }
    if m.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} marginal must be strictly positive")));
    }
    let total: f64 = m.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("{what} marginal sums to {total}, not 1")));
    }
    Ok(())
}

/// Log-domain Sinkhorn–Knopp for `min <Q, C> + eps <Q, ln Q>` subject to the
/// marginals. Stops once the L1 marginal violation is below `tol`; otherwise
/// returns the last iterate with `converged = false`.
pub fn sinkhorn(
    cost: ArrayView2<'_, f64>,
    epsilon: f64,
    row_m: &[f64],
    col_m: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<TransportPlan> {
    let (n, m) = cost.dim();
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("cost matrix".into()));
    }
    check_marginal(row_m, n, "row")?;
    check_marginal(col_m, m, "column")?;

    let log_a: Vec<f64> = row_m.iter().map(|p| p.ln()).collect();
    let log_b: Vec<f64> = col_m.iter().map(|p| p.ln()).collect();
    // potentials f = eps log u, g = eps log v
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut dual_trace = Vec::new();
    let mut violation = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        for i in 0..n {
            let lse = log_sum_exp((0..m).map(|j| (g[j] - cost[[i, j]]) / epsilon));
            f[i] = epsilon * (log_a[i] - lse);
        }
        for j in 0..m {
            let lse = log_sum_exp((0..n).map(|i| (f[i] - cost[[i, j]]) / epsilon));
            g[j] = epsilon * (log_b[j] - lse);
        }
        // columns are exact after the g-update; measure the rows
        let mut mass = 0.0;
        violation = 0.0;
        for i in 0..n {
            let row: f64 = (0..m).map(|j| ((f[i] + g[j] - cost[[i, j]]) / epsilon).exp()).sum();
            mass += row;
            violation += (row - row_m[i]).abs();
        }
        let dual = row_m.iter().zip(&f).map(|(a, f)| a * f).sum::<f64>()
            + col_m.iter().zip(&g).map(|(b, g)| b * g).sum::<f64>()
            - epsilon * mass;
        dual_trace.push(dual);
        if violation < tol {
            break;
        }
    }

    let coupling = Array2::from_shape_fn((n, m), |(i, j)| ((f[i] + g[j] - cost[[i, j]]) / epsilon).exp());
    let col_violation: f64 = (0..m)
        .map(|j| (coupling.column(j).sum() - col_m[j]).abs())
        .sum();
    let marginal_violation = violation.max(col_violation);
    Ok(TransportPlan {
        coupling,
        row_marginal: Array1::from(row_m.to_vec()),
        col_marginal: Array1::from(col_m.to_vec()),
        log_u: Array1::from_iter(f.iter().map(|f| f / epsilon)),
        log_v: Array1::from_iter(g.iter().map(|g| g / epsilon)),
        epsilon,
        converged: marginal_violation < tol,
        iterations,
        marginal_violation,
        dual_trace,
    })
}

/// Samples `n_out` pairs `(i, j)` with probability `coupling_ij` and returns
/// the displacement interpolants `(1 - t) x_i + t y_j`.
pub fn mccann_interpolant(
    plan: &TransportPlan,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    t: f64,
    n_out: usize,
    seed: u64,
) -> Result<MarginalSamples> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("interpolation time {t} outside [0, 1]")));
    }
    let (n, m) = plan.coupling.dim();
    if x.nrows() != n || y.nrows() != m || x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "interpolant endpoints vs coupling",
            expected: n,
            found: x.nrows(),
        });
    }
    let dist = WeightedIndex::new(plan.coupling.iter().copied())
        .map_err(|e| Error::Numerical(format!("coupling is not a valid distribution: {e}")))?;
    let mut rng = seeded(seed);
    let d = x.ncols();
    let mut out = Array2::zeros((n_out, d));
    for r in 0..n_out {
        let flat = dist.sample(&mut rng);
        let (i, j) = (flat / m, flat % m);
        for c in 0..d {
            out[[r, c]] = if t == 0.0 {
                x[[i, c]]
            } else if t == 1.0 {
                y[[j, c]]
            } else {
                (1.0 - t) * x[[i, c]] + t * y[[j, c]]
            };
        }
    }
    MarginalSamples::new(out, format!("mccann_t{t}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    /// Plain scaling iterations on `K = exp(-C / eps)`; test oracle only.
    fn naive_sinkhorn(cost: &Array2<f64>, eps: f64, a: &[f64], b: &[f64], iters: usize) -> Array2<f64> {
        let k = cost.mapv(|c| (-c / eps).exp());
        let (n, m) = k.dim();
        let mut u = vec![1.0; n];
        let mut v = vec![1.0; m];
        for _ in 0..iters {
            for i in 0..n {
                u[i] = a[i] / (0..m).map(|j| k[[i, j]] * v[j]).sum::<f64>();
            }
            for j in 0..m {
                v[j] = b[j] / (0..n).map(|i| k[[i, j]] * u[i]).sum::<f64>();
            }
        }
        Array2::from_shape_fn((n, m), |(i, j)| u[i] * k[[i, j]] * v[j])
    }

    #[test]
    fn cost_cases() {
        let x = array![[0.0]];
        let y = array![[2.0]];
        assert_eq!(brownian_cost(x.view(), x.view(), 1.0).unwrap()[[0, 0]], 0.0);
        assert_eq!(brownian_cost(x.view(), y.view(), 1.0).unwrap()[[0, 0]], 2.0);
        let xs = array![[0.0, 1.0], [2.0, -1.0]];
        let ys = array![[1.0, 1.0], [0.5, 0.0], [3.0, 3.0]];
        let c1 = brownian_cost(xs.view(), ys.view(), 0.7).unwrap();
        let c2 = brownian_cost(xs.view(), ys.view(), 1.4).unwrap();
        for (a, b) in c1.iter().zip(c2.iter()) {
            assert!((a / 2.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_fixed_point() {
        // By symmetry Q = [[p, q], [q, p]] with p / q = e and p + q = 1/2.
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        let plan = sinkhorn(cost.view(), 1.0, &uniform(2), &uniform(2), 1000, 1e-14).unwrap();
        let e = std::f64::consts::E;
        let p = e / (2.0 * (e + 1.0));
        let q = 1.0 / (2.0 * (e + 1.0));
        assert!((plan.coupling[[0, 0]] - p).abs() < 1e-10);
        assert!((plan.coupling[[1, 1]] - p).abs() < 1e-10);
        assert!((plan.coupling[[0, 1]] - q).abs() < 1e-10);
        assert!((plan.coupling[[1, 0]] - q).abs() < 1e-10);
        assert!(plan.converged);
    }

    #[test]
    fn huge_epsilon_gives_product_coupling() {
        let mut rng = seeded(4);
        let cost = Array2::from_shape_fn((6, 4), |_| rng.random_range(0.0..3.0));
        let a = [0.1, 0.2, 0.3, 0.1, 0.2, 0.1];
        let b = [0.25, 0.25, 0.4, 0.1];
        let plan = sinkhorn(cost.view(), 1e6, &a, &b, 100, 1e-12).unwrap();
        for i in 0..6 {
            for j in 0..4 {
                assert!((plan.coupling[[i, j]] - a[i] * b[j]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn random_problem_matches_naive_oracle() {
        let mut rng = seeded(7);
        let n = 50;
        let cost = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
        let a = uniform(n);
        let plan = sinkhorn(cost.view(), 0.1, &a, &a, 10_000, 1e-9).unwrap();
        assert!(plan.converged);
        assert!(plan.marginal_violation < 1e-6);
        let oracle = naive_sinkhorn(&cost, 0.1, &a, &a, 5000);
        let objective = |q: &Array2<f64>| -> f64 {
            q.iter().zip(cost.iter()).map(|(q, c)| q * c + 0.1 * q * q.ln()).sum()
        };
        assert!((plan.primal_objective(cost.view()) - objective(&oracle)).abs() < 1e-6);
        for w in plan.dual_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn log_and_naive_domains_agree() {
        let mut rng = seeded(8);
        let cost = Array2::from_shape_fn((20, 20), |_| rng.random_range(0.0..1.0));
        let a = uniform(20);
        let plan = sinkhorn(cost.view(), 0.5, &a, &a, 10_000, 1e-13).unwrap();
        let oracle = naive_sinkhorn(&cost, 0.5, &a, &a, 2000);
        for (p, q) in plan.coupling.iter().zip(oracle.iter()) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mut rng = seeded(9);
        let cost = Array2::from_shape_fn((30, 30), |_| rng.random_range(0.0..1.0));
        let a = uniform(30);
        let plan = sinkhorn(cost.view(), 0.01, &a, &a, 2, 1e-14).unwrap();
        assert!(!plan.converged);
        assert_eq!(plan.iterations, 2);
    }

    #[test]
    fn rejects_bad_marginals() {
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(sinkhorn(cost.view(), 1.0, &[0.5, 0.6], &uniform(2), 10, 1e-9).is_err());
        assert!(sinkhorn(cost.view(), 1.0, &[1.0, 0.0], &uniform(2), 10, 1e-9).is_err());
        assert!(sinkhorn(cost.view(), 0.0, &uniform(2), &uniform(2), 10, 1e-9).is_err());
    }

    #[test]
    fn mccann_endpoints() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let y = array![[5.0, 5.0], [6.0, 5.0]];
        let cost = brownian_cost(x.view(), y.view(), 1.0).unwrap();
        let plan = sinkhorn(cost.view(), 1.0, &uniform(3), &uniform(2), 1000, 1e-12).unwrap();
        let at0 = mccann_interpolant(&plan, x.view(), y.view(), 0.0, 200, 1).unwrap();
        let at1 = mccann_interpolant(&plan, x.view(), y.view(), 1.0, 200, 1).unwrap();
        for r in 0..200 {
            assert!(x.rows().into_iter().any(|row| row == at0.row(r)));
            assert!(y.rows().into_iter().any(|row| row == at1.row(r)));
        }
    }

    #[test]
    fn mccann_identity_coupling() {
        let x = array![[0.0, 0.5], [1.0, -1.0], [3.0, 2.0]];
        let mut plan = sinkhorn(
            brownian_cost(x.view(), x.view(), 1.0).unwrap().view(),
            1.0,
            &uniform(3),
            &uniform(3),
            10,
            1e-6,
        )
        .unwrap();
        plan.coupling = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 1.0 / 3.0 } else { 0.0 });
        let out = mccann_interpolant(&plan, x.view(), x.view(), 0.37, 100, 2).unwrap();
        for r in 0..100 {
            assert!(x.rows().into_iter().any(|row| row
                .iter()
                .zip(out.row(r).iter())
                .all(|(a, b)| (a - b).abs() < 1e-15)));
        }
    }
}
