use ndarray::Array3;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::drift::DriftField;
use crate::error::{Error, Result, StateDump};
use crate::grid::TimeGrid;
use crate::marginal::MarginalSamples;
use crate::rng::path_rng;
use crate::trajectory::{Direction, TrajectoryBatch};
use rand::Rng;

/// Euler–Maruyama paths of `dx = drift(x, t) dt + sqrt(gamma) dW` started at
/// the rows of `init`, tagged `Forward`.
pub fn euler_maruyama(
    drift: &dyn DriftField,
    gamma: f64,
    init: &MarginalSamples,
    grid: &TimeGrid,
    seed: u64,
) -> Result<TrajectoryBatch> {
    simulate(drift, gamma, init, grid, seed, Direction::Forward)
}

/// Same scheme with an explicit direction tag. The drift is always evaluated
/// on the simulated process's own clock `t_k`.
///
/// Path `n` draws its noise from the stream `(seed, n)`, so the output does
/// not depend on how the paths are scheduled across threads.
pub fn simulate(
    drift: &dyn DriftField,
    gamma: f64,
    init: &MarginalSamples,
    grid: &TimeGrid,
    seed: u64,
    direction: Direction,
) -> Result<TrajectoryBatch> {
    let d = drift.dim();
    if init.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "initial samples vs drift",
            expected: d,
            found: init.dim(),
        });
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    let n_paths = init.len();
    let len = grid.n_points();
    let dt = grid.dt();
    let scale = (gamma * dt).sqrt();
    let mut buf = vec![0.0; n_paths * len * d];

    let outcomes: Vec<Result<()>> = buf
        .par_chunks_mut(len * d)
        .enumerate()
        .map(|(n, path)| {
            let mut rng = path_rng(seed, n as u64);
            path[..d].iter_mut().zip(init.row(n)).for_each(|(p, &x)| *p = x);
            let mut b = vec![0.0; d];
            for k in 0..grid.n_steps() {
                let (done, rest) = path.split_at_mut((k + 1) * d);
                let x = &done[k * d..];
                drift.eval_into(x, grid.time(k), &mut b);
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged {
                        path: n,
                        step: k,
                        state: StateDump(x.to_vec()),
                    });
                }
                for c in 0..d {
                    let z: f64 = if scale > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                    rest[c] = x[c] + b[c] * dt + scale * z;
                }
                if rest[..d].iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged {
                        path: n,
                        step: k + 1,
                        state: StateDump(x.to_vec()),
                    });
                }
            }
            Ok(())
        })
        .collect();
    // report the lowest failing path so errors are reproducible too
    outcomes.into_iter().collect::<Result<Vec<()>>>()?;

    let paths = Array3::from_shape_vec((n_paths, len, d), buf)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    TrajectoryBatch::new(paths, *grid, direction)
}
