use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use ndarray::{Array2, ArrayView2, Axis};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sde::DriftField;
use crate::trajectory::RegressionDataset;

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;

/// Uniform, seeded row subsampling applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub max_rows: usize,
    pub seed: u64,
}

/// Fitted predictive-mean drift model. Immutable once built.
#[derive(Clone)]
pub struct GPDriftModel {
    inputs: Array2<f64>,
    weights: Array2<f64>,
    kernel: Kernel,
    mean_fn: Arc<dyn DriftField>,
    noise_variance: f64,
    jitter: f64,
}

impl std::fmt::Debug for GPDriftModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GPDriftModel")
            .field("rows", &self.inputs.nrows())
            .field("dim", &self.weights.ncols())
            .field("kernel", &self.kernel)
            .field("mean_fn", &self.mean_fn.describe())
            .field("noise_variance", &self.noise_variance)
            .field("jitter", &self.jitter)
            .finish()
    }
}

/// Fits one GP per output dimension of `dataset` with `mean_fn` as the prior
/// mean. Weights solve `(K + (noise + jitter) I) w_d = y_d - m_d`.
pub fn fit(
    dataset: &RegressionDataset,
    kernel: Kernel,
    mean_fn: Arc<dyn DriftField>,
    subsample: Option<Subsample>,
) -> Result<GPDriftModel> {
    kernel.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a drift model to an empty dataset".into()));
    }
    let d = dataset.dim();
    if mean_fn.dim() != d || dataset.inputs.ncols() != d + 1 {
        return Err(Error::DimensionMismatch {
            context: "regression dataset vs mean function",
            expected: mean_fn.dim(),
            found: d,
        });
    }
    if !(dataset.noise_variance.is_finite() && dataset.noise_variance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be >= 0, got {}",
            dataset.noise_variance
        )));
    }

    let (inputs, targets) = match subsample {
        Some(s) if dataset.len() > s.max_rows => {
            let mut rng = seeded(s.seed);
            let mut idx = rand::seq::index::sample(&mut rng, dataset.len(), s.max_rows).into_vec();
            idx.sort_unstable();
            (
                dataset.inputs.select(Axis(0), &idx),
                dataset.targets.select(Axis(0), &idx),
            )
        }
        _ => (dataset.inputs.clone(), dataset.targets.clone()),
    };
    let m = inputs.nrows();

    let mut residual = Mat::<f64>::zeros(m, d);
    let mut mean = vec![0.0; d];
    for i in 0..m {
        let z = inputs.row(i);
        let z = z.as_slice().expect("standard layout");
        mean_fn.eval_into(&z[..d], z[d], &mut mean);
        for c in 0..d {
            residual[(i, c)] = targets[[i, c]] - mean[c];
        }
    }

    let gram = gram_matrix(&inputs.view(), &kernel);
    let s2 = kernel.signal_variance;
    let mut jitter = JITTER_START * s2;
    let llt = loop {
        let shifted = Mat::from_fn(m, m, |i, j| {
            if i == j {
                gram[(i, j)] + dataset.noise_variance + jitter
            } else {
                gram[(i, j)]
            }
        });
        match shifted.llt(Side::Lower) {
            Ok(llt) => break llt,
            Err(_) if jitter * 2.0 <= JITTER_MAX * s2 * (1.0 + 1e-12) => jitter *= 2.0,
            Err(_) => {
                let diag = (0..m).map(|i| gram[(i, i)]);
                return Err(Error::Factorization {
                    size: m,
                    max_jitter: jitter,
                    min_diag: diag.clone().fold(f64::INFINITY, f64::min) + dataset.noise_variance,
                    max_diag: diag.fold(f64::NEG_INFINITY, f64::max) + dataset.noise_variance,
                });
            }
        }
    };
    let alpha = llt.solve(&residual);

    let weights = Array2::from_shape_fn((m, d), |(i, c)| alpha[(i, c)]);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("GP weights".into()));
    }
    Ok(GPDriftModel {
        inputs: inputs.as_standard_layout().into_owned(),
        weights,
        kernel,
        mean_fn,
        noise_variance: dataset.noise_variance,
        jitter,
    })
}

fn gram_matrix(inputs: &ArrayView2<'_, f64>, kernel: &Kernel) -> Mat<f64> {
    let m = inputs.nrows();
    let mut gram = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        let zi = inputs.row(i);
        for j in 0..=i {
            let zj = inputs.row(j);
            let sq: f64 = zi.iter().zip(zj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            let k = kernel.from_sq_dist(sq);
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    gram
}

impl GPDriftModel {
    /// `mean_fn(x, t) + k(x ⊕ t, Z) W`.
    pub fn predict(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.predict_into(x, t, &mut out);
        out
    }

    pub fn predict_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let d = self.dim();
        self.mean_fn.eval_into(x, t, out);
        let inputs = self.inputs.as_slice().expect("standard layout");
        let weights = self.weights.as_slice().expect("standard layout");
        for (z, w) in inputs.chunks_exact(d + 1).zip(weights.chunks_exact(d)) {
            let mut sq = (z[d] - t) * (z[d] - t);
            for c in 0..d {
                let diff = z[c] - x[c];
                sq += diff * diff;
            }
            let k = self.kernel.from_sq_dist(sq);
            for c in 0..d {
                out[c] += k * w[c];
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Training rows actually used (after subsampling).
    pub fn n_train(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn mean_fn(&self) -> &Arc<dyn DriftField> {
        &self.mean_fn
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `K + (noise + jitter) I` on the training inputs.
    pub fn regularized_gram(&self) -> Array2<f64> {
        let g = gram_matrix(&self.inputs.view(), &self.kernel);
        let shift = self.noise_variance + self.jitter;
        Array2::from_shape_fn((self.n_train(), self.n_train()), |(i, j)| {
            g[(i, j)] + if i == j { shift } else { 0.0 }
        })
    }

    /// Mean function evaluated at the training inputs.
    pub fn mean_at_inputs(&self) -> Array2<f64> {
        let d = self.dim();
        let mut out = Array2::zeros((self.n_train(), d));
        for (i, z) in self.inputs.rows().into_iter().enumerate() {
            let z = z.as_slice().expect("standard layout");
            let m = self.mean_fn.eval(&z[..d], z[d]);
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&m[..]));
        }
        out
    }
}

impl DriftField for GPDriftModel {
    fn dim(&self) -> usize {
        self.weights.ncols()
    }

    fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        self.predict_into(x, t, out)
    }

    fn describe(&self) -> String {
        format!(
            "GP drift ({} rows, {:?} l={}, mean {})",
            self.n_train(),
            self.kernel.family,
            self.kernel.lengthscale,
            self.mean_fn.describe()
        )
    }
}
