//! Iterative proportional fitting with drift regression.
//!
//! Each iteration solves two half bridges. Paths are simulated from `pi1`
//! under the current backward drift, and the forward drift is regressed on
//! their time reversal. Paths are then simulated from `pi0` under that
//! forward drift, and the backward drift is regressed on their reversal.
//! Both regressions are GP predictive means whose mean function is the prior
//! drift (forward) or its negated time reversal (backward).

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, GPDriftModel, Kernel, Subsample};
use crate::grid::TimeGrid;
use crate::marginal::MarginalSamples;
use crate::metrics::emd_samples;
use crate::rng::{derive_seed, seeded};
use crate::sde::{make_prior_drift, simulate, DriftField, InitialLaw, NegatedReversed, PriorSpec, TimeReversed, ZeroDrift};
use crate::trajectory::{build_regression_dataset, Direction, RegressionDataset, TrajectoryBatch};

const PHASE_PRIOR: u64 = 1;
const PHASE_BASELINE: u64 = 2;
const PHASE_BACKWARD: u64 = 3;
const PHASE_FORWARD: u64 = 4;
const PHASE_FIT_FORWARD: u64 = 5;
const PHASE_FIT_BACKWARD: u64 = 6;
const PHASE_INIT: u64 = 7;
const PHASE_METRICS: u64 = 8;

#[derive(Debug, Clone)]
pub struct IpmlConfig {
    pub gamma: f64,
    pub dt: f64,
    pub iterations: usize,
    pub kernel: Kernel,
    pub prior: PriorSpec,
    /// Paths per half-bridge simulation; `None` means `max(|pi0|, |pi1|)`.
    pub n_sim_paths: Option<usize>,
    pub seed: u64,
    /// Stop once the drift distance to the prior has grown for this many
    /// consecutive iterations.
    pub early_stop_patience: Option<usize>,
    /// Use the prior drift as the GP mean (otherwise a zero mean).
    pub use_prior_mean: bool,
    /// Cap on the regression rows per fit (uniform seeded subsample).
    pub max_fit_rows: Option<usize>,
    /// Regress on every `fit_stride`-th grid point only. Increments over the
    /// coarser step keep the drift information of the skipped points while
    /// dividing the row count by the stride.
    pub fit_stride: usize,
}

impl IpmlConfig {
    pub fn new(prior: PriorSpec) -> Self {
        Self {
            gamma: prior.gamma,
            dt: 0.01,
            iterations: 5,
            kernel: Kernel::default(),
            prior,
            n_sim_paths: None,
            seed: 0,
            early_stop_patience: None,
            use_prior_mean: true,
            max_fit_rows: None,
            fit_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive for a bridge with finite relative entropy, got {}",
                self.gamma
            )));
        }
        if (self.gamma - self.prior.gamma).abs() > 1e-12 * self.gamma.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "solver gamma {} differs from prior gamma {}",
                self.gamma, self.prior.gamma
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if self.n_sim_paths == Some(0) || self.max_fit_rows == Some(0) {
            return Err(Error::InvalidArgument("path and row counts must be >= 1".into()));
        }
        self.kernel.validate()?;
        self.prior.validate()?;
        let grid = TimeGrid::new(self.dt)?;
        if self.fit_stride == 0 || grid.n_steps() % self.fit_stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "fit_stride {} does not divide the {} time steps",
                self.fit_stride,
                grid.n_steps()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.dt)
    }

    fn dataset(&self, batch: &TrajectoryBatch) -> Result<RegressionDataset> {
        build_regression_dataset(&batch.thin(self.fit_stride)?, self.gamma)
    }

    fn subsample(&self, tag: u64) -> Option<Subsample> {
        self.max_fit_rows.map(|max_rows| Subsample {
            max_rows,
            seed: derive_seed(self.seed, tag),
        })
    }
}

/// One line of the per-iteration diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub drift_mse: f64,
    pub emd_pi0: f64,
    pub emd_pi1: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct IpmlResult {
    pub forward_drift: GPDriftModel,
    pub backward_drift: GPDriftModel,
    pub diagnostics: Vec<IterationRecord>,
    /// Paths of the last forward simulation (from `pi0`).
    pub forward_paths: TrajectoryBatch,
    /// Paths of the last backward simulation (from `pi1`).
    pub backward_paths: TrajectoryBatch,
    /// EMD between the prior's own pushforward of `pi0` and `pi1`.
    pub prior_emd_pi1: f64,
}

impl IpmlResult {
    pub fn final_record(&self) -> &IterationRecord {
        self.diagnostics.last().expect("at least one iteration")
    }
}

/// GP mean for a drift fit. Backward fits fall back to the prior read on the
/// reversed clock: unchanged for reversible priors, negated otherwise. The
/// negated field of a confining potential repels, so it is not used there.
fn mean_function(
    use_prior_mean: bool,
    prior: &PriorSpec,
    prior_drift: &Arc<dyn DriftField>,
    direction: Direction,
) -> Arc<dyn DriftField> {
    match (use_prior_mean, direction) {
        (false, _) => Arc::new(ZeroDrift { dim: prior_drift.dim() }),
        (true, Direction::Forward) => prior_drift.clone(),
        (true, Direction::Backward) if prior.kind.is_reversible() => {
            Arc::new(TimeReversed(prior_drift.clone()))
        }
        (true, Direction::Backward) => Arc::new(NegatedReversed(prior_drift.clone())),
    }
}

/// Backward drift of the prior process itself: simulate the prior from its
/// initial law, reverse, and regress.
pub fn obtain_backward_drift(prior: &PriorSpec, grid: &TimeGrid, config: &IpmlConfig) -> Result<GPDriftModel> {
    let prior_drift = make_prior_drift(prior)?;
    let initial = prior.initial.as_ref().ok_or_else(|| {
        Error::InvalidArgument("prior has no initial law to estimate its backward drift from".into())
    })?;
    let n = match (config.n_sim_paths, initial) {
        (Some(n), _) => n,
        (None, InitialLaw::Samples(s)) => s.len(),
        (None, InitialLaw::Gaussian(_)) => 500,
    };
    let mut rng = seeded(derive_seed(config.seed, PHASE_INIT));
    let x0 = initial.draw(n, &mut rng)?;
    let paths = simulate(
        prior_drift.as_ref(),
        prior.gamma,
        &x0,
        grid,
        derive_seed(config.seed, PHASE_PRIOR),
        Direction::Forward,
    )?;
    let data = build_regression_dataset(&paths.thin(config.fit_stride)?, prior.gamma)?;
    gp::fit(
        &data,
        config.kernel,
        mean_function(config.use_prior_mean, prior, &prior_drift, Direction::Backward),
        config.subsample(PHASE_PRIOR),
    )
}

/// Mean over all states of `eval_batch` of `|model(x, t) - prior(x, t)|^2`,
/// with `t` the batch's own clock. No `1 / (2 gamma)` factor is applied.
pub fn drift_mse_to_prior(model: &dyn DriftField, prior: &dyn DriftField, eval_batch: &TrajectoryBatch) -> Result<f64> {
    let d = eval_batch.dim();
    if model.dim() != d || prior.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "drift distance",
            expected: d,
            found: model.dim(),
        });
    }
    let grid = eval_batch.grid();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut total = 0.0;
    let mut count = 0usize;
    for n in 0..eval_batch.n_paths() {
        for k in 0..grid.n_points() {
            let x = eval_batch.state(n, k);
            let x = x.as_slice().expect("standard layout");
            let t = grid.time(k);
            model.eval_into(x, t, &mut a);
            prior.eval_into(x, t, &mut b);
            total += a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn initial_states(samples: &MarginalSamples, m: usize, seed: u64) -> MarginalSamples {
    if samples.len() == m {
        samples.clone()
    } else {
        samples.resample(m, &mut seeded(seed))
    }
}

pub fn run_ipml(pi0: &MarginalSamples, pi1: &MarginalSamples, config: &IpmlConfig) -> Result<IpmlResult> {
    run_ipml_with(pi0, pi1, config, |_| {})
}

/// As [`run_ipml`], calling `observe` after every iteration.
pub fn run_ipml_with<F>(
    pi0: &MarginalSamples,
    pi1: &MarginalSamples,
    config: &IpmlConfig,
    mut observe: F,
) -> Result<IpmlResult>
where
    F: FnMut(&IterationRecord),
{
    config.validate()?;
    let d = config.prior.dim();
    for (m, name) in [(pi0, "pi0"), (pi1, "pi1")] {
        if m.dim() != d {
            return Err(Error::InvalidArgument(format!(
                "{name} has dimension {} but the prior has dimension {d}",
                m.dim()
            )));
        }
    }
    let grid = config.grid()?;
    let gamma = config.gamma;
    let m = config.n_sim_paths.unwrap_or(pi0.len().max(pi1.len()));
    let prior_drift = make_prior_drift(&config.prior)?;

    let mut prior = config.prior.clone();
    if prior.initial.is_none() {
        prior.initial = Some(InitialLaw::Samples(pi0.clone()));
    }
    let mut backward_drift = obtain_backward_drift(&prior, &grid, &IpmlConfig {
        n_sim_paths: Some(m),
        ..config.clone()
    })?;

    let x0 = initial_states(pi0, m, derive_seed(config.seed, PHASE_INIT ^ 0xA));
    let prior_paths = simulate(
        prior_drift.as_ref(),
        gamma,
        &x0,
        &grid,
        derive_seed(config.seed, PHASE_BASELINE),
        Direction::Forward,
    )?;
    let prior_emd_pi1 = emd_samples(
        prior_paths.terminal().view(),
        pi1.data().view(),
        derive_seed(config.seed, PHASE_METRICS),
    )?;

    let mut diagnostics: Vec<IterationRecord> = Vec::with_capacity(config.iterations);
    let mut last = None;
    let mut rising = 0usize;
    for iteration in 1..=config.iterations {
        let started = Instant::now();
        let it_seed = derive_seed(config.seed, 1000 + iteration as u64);

        let y0 = initial_states(pi1, m, derive_seed(it_seed, PHASE_INIT));
        let backward_paths = simulate(
            &backward_drift,
            gamma,
            &y0,
            &grid,
            derive_seed(it_seed, PHASE_BACKWARD),
            Direction::Backward,
        )?;
        let forward_drift = gp::fit(
            &config.dataset(&backward_paths)?,
            config.kernel,
            mean_function(config.use_prior_mean, &config.prior, &prior_drift, Direction::Forward),
            config.subsample(derive_seed(it_seed, PHASE_FIT_FORWARD)),
        )?;

        let x0 = initial_states(pi0, m, derive_seed(it_seed, PHASE_INIT ^ 0xA));
        let forward_paths = simulate(
            &forward_drift,
            gamma,
            &x0,
            &grid,
            derive_seed(it_seed, PHASE_FORWARD),
            Direction::Forward,
        )?;
        backward_drift = gp::fit(
            &config.dataset(&forward_paths)?,
            config.kernel,
            mean_function(config.use_prior_mean, &config.prior, &prior_drift, Direction::Backward),
            config.subsample(derive_seed(it_seed, PHASE_FIT_BACKWARD)),
        )?;

        let metric_seed = derive_seed(it_seed, PHASE_METRICS);
        let drift_mse = drift_mse_to_prior(&forward_drift, prior_drift.as_ref(), &forward_paths)?;
        let emd_pi1 = emd_samples(forward_paths.terminal().view(), pi1.data().view(), metric_seed)?;
        let emd_pi0 = emd_samples(backward_paths.terminal().view(), pi0.data().view(), metric_seed)?;
        if !(emd_pi0.is_finite() && emd_pi1.is_finite() && drift_mse.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite diagnostics at iteration {iteration}: emd_pi0={emd_pi0}, emd_pi1={emd_pi1}, drift_mse={drift_mse}"
            )));
        }
        let record = IterationRecord {
            iteration,
            drift_mse,
            emd_pi0,
            emd_pi1,
            wall_ms: started.elapsed().as_millis() as u64,
        };
        observe(&record);
        if let Some(prev) = diagnostics.last() {
            rising = if record.drift_mse > prev.drift_mse { rising + 1 } else { 0 };
        }
        diagnostics.push(record);
        last = Some((forward_drift, forward_paths, backward_paths));
        if config.early_stop_patience.is_some_and(|p| rising >= p) {
            break;
        }
    }

    let (forward_drift, forward_paths, backward_paths) = last.expect("iterations >= 1");
    Ok(IpmlResult {
        forward_drift,
        backward_drift,
        diagnostics,
        forward_paths,
        backward_paths,
        prior_emd_pi1,
    })
}
