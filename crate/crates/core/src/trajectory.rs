//! Sample paths on a shared grid and the path-to-regression transform.
//!
//! Time convention used throughout the crate: every SDE is simulated in its
//! own clock. A `Forward` batch runs from `pi0` at physical time 0, so its
//! index `k` is physical time `t_k`. A `Backward` batch runs from `pi1`, so its
//! index `k` is physical time `1 - t_k`, and a backward drift is always
//! evaluated at the backward clock `s = 1 - t`.
//!
//! A regression dataset built from a batch targets the drift of the process
//! running the *opposite* way: the batch is time-reversed, and each consecutive
//! pair `(y_j, y_{j+1})` of the reversed path gives the input `y_j ⊕ s_j` and
//! the target `(y_{j+1} - y_j) / dt`, with `s_j` the reversed clock. In the
//! original indexing that is input `x_{k+1} ⊕ (1 - t_{k+1})` and target
//! `(x_k - x_{k+1}) / dt`.

use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// `N` paths of `T + 1` states in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    paths: Array3<f64>,
    grid: TimeGrid,
    direction: Direction,
}

impl TrajectoryBatch {
    pub fn new(paths: Array3<f64>, grid: TimeGrid, direction: Direction) -> Result<Self> {
        let (n, len, d) = paths.dim();
        if len != grid.n_points() {
            return Err(Error::DimensionMismatch {
                context: "trajectory length vs time grid",
                expected: grid.n_points(),
                found: len,
            });
        }
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "trajectory batch needs at least one path and one dimension, got {n} paths of dim {d}"
            )));
        }
        if let Some(pos) = paths.iter().position(|v| !v.is_finite()) {
            let (pn, pk) = (pos / (len * d), (pos / d) % len);
            return Err(Error::NonFinite(format!("trajectory batch (path {pn}, step {pk})")));
        }
        Ok(Self {
            paths,
            grid,
            direction,
        })
    }

    pub fn paths(&self) -> &Array3<f64> {
        &self.paths
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn n_paths(&self) -> usize {
        self.paths.dim().0
    }

    pub fn dim(&self) -> usize {
        self.paths.dim().2
    }

    pub fn state(&self, n: usize, k: usize) -> ArrayView1<'_, f64> {
        self.paths.slice(s![n, k, ..])
    }

    /// All states at grid index `k`, one row per path.
    pub fn slice_at(&self, k: usize) -> ArrayView2<'_, f64> {
        self.paths.slice(s![.., k, ..])
    }

    /// States at the last grid index.
    pub fn terminal(&self) -> Array2<f64> {
        self.slice_at(self.grid.n_steps()).to_owned()
    }

    /// Every `stride`-th grid point, on the coarser grid with `T / stride`
    /// steps. `stride` must divide `T`.
    pub fn thin(&self, stride: usize) -> Result<Self> {
        let steps = self.grid.n_steps();
        if stride == 0 || !steps.is_multiple_of(stride) {
            return Err(Error::InvalidArgument(format!(
                "stride {stride} does not divide the {steps} steps of the grid"
            )));
        }
        if stride == 1 {
            return Ok(self.clone());
        }
        Ok(Self {
            paths: self.paths.slice(s![.., ..;stride, ..]).to_owned(),
            grid: TimeGrid::with_steps(steps / stride)?,
            direction: self.direction,
        })
    }

    /// Physical time of grid index `k` for this batch's direction.
    pub fn physical_time(&self, k: usize) -> f64 {
        match self.direction {
            Direction::Forward => self.grid.time(k),
            Direction::Backward => self.grid.time(self.grid.n_steps() - k),
        }
    }
}

/// Relabels time: `out[n][k] = in[n][T - k]`, direction flipped.
pub fn reverse_trajectories(batch: &TrajectoryBatch) -> TrajectoryBatch {
    let mut paths = batch.paths.clone();
    paths.invert_axis(ndarray::Axis(1));
    TrajectoryBatch {
        paths: paths.as_standard_layout().into_owned(),
        grid: batch.grid,
        direction: batch.direction.flipped(),
    }
}

/// Drift regression problem: `inputs` are `state ⊕ time`, `targets` are
/// finite-difference drift estimates with noise variance `gamma / dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub noise_variance: f64,
}

impl RegressionDataset {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// State dimension `d` (inputs carry `d + 1` columns).
    pub fn dim(&self) -> usize {
        self.targets.ncols()
    }
}

/// Regression data for the drift of the process reversed relative to `batch`.
/// See the module docs for the exact time convention.
pub fn build_regression_dataset(batch: &TrajectoryBatch, gamma: f64) -> Result<RegressionDataset> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let reversed = reverse_trajectories(batch);
    let grid = reversed.grid;
    let (n_paths, _, d) = reversed.paths.dim();
    let steps = grid.n_steps();
    let dt = grid.dt();
    let m = n_paths * steps;

    let mut inputs = Array2::zeros((m, d + 1));
    let mut targets = Array2::zeros((m, d));
    for n in 0..n_paths {
        for j in 0..steps {
            let row = n * steps + j;
            let here = reversed.paths.slice(s![n, j, ..]);
            let next = reversed.paths.slice(s![n, j + 1, ..]);
            for c in 0..d {
                inputs[[row, c]] = here[c];
                targets[[row, c]] = (next[c] - here[c]) / dt;
            }
            inputs[[row, d]] = grid.time(j);
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression targets".into()));
    }
    Ok(RegressionDataset {
        inputs,
        targets,
        noise_variance: gamma / dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;

    fn batch_1d(values: &[f64], dt: f64, direction: Direction) -> TrajectoryBatch {
        let grid = TimeGrid::new(dt).unwrap();
        let paths = Array3::from_shape_vec((1, values.len(), 1), values.to_vec()).unwrap();
        TrajectoryBatch::new(paths, grid, direction).unwrap()
    }

    #[test]
    fn reverse_single_path() {
        let b = batch_1d(&[0.0, 1.0, 2.0], 0.5, Direction::Forward);
        let r = reverse_trajectories(&b);
        assert_eq!(r.paths().iter().copied().collect::<Vec<_>>(), vec![2.0, 1.0, 0.0]);
        assert_eq!(r.direction(), Direction::Backward);
        assert_eq!(r.grid(), b.grid());
        assert_eq!(r.physical_time(0), 1.0);
    }

    #[test]
    fn thinning_keeps_every_stride_th_point() {
        let b = batch_1d(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.25, Direction::Backward);
        let t = b.thin(2).unwrap();
        assert_eq!(t.paths().iter().copied().collect::<Vec<_>>(), vec![0.0, 2.0, 4.0]);
        assert_eq!(t.grid().n_steps(), 2);
        assert_eq!(t.direction(), Direction::Backward);
        let data = build_regression_dataset(&t, 1.0).unwrap();
        assert_eq!(data.noise_variance, 2.0);
        assert_eq!(data.targets[[0, 0]], -4.0);
        assert!(b.thin(3).is_err());
        assert!(b.thin(0).is_err());
        assert_eq!(b.thin(1).unwrap(), b);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let grid = TimeGrid::new(0.5).unwrap();
        assert!(TrajectoryBatch::new(Array3::zeros((2, 4, 1)), grid, Direction::Forward).is_err());
        let mut p = Array3::zeros((2, 3, 1));
        p[[1, 2, 0]] = f64::INFINITY;
        assert!(TrajectoryBatch::new(p, grid, Direction::Forward).is_err());
    }

    #[test]
    fn dataset_two_point_forward_path() {
        // Path [x0 = 0, x1 = 1] with dt = 0.5: the pair (x_0, x_1) gives input
        // 1 ⊕ 0.5 and target (0 - 1) / 0.5 = -2.
        let grid = TimeGrid::new(0.5).unwrap();
        let paths = Array3::from_shape_vec((1, 3, 1), vec![0.0, 1.0, 1.0]).unwrap();
        let b = TrajectoryBatch::new(paths, grid, Direction::Forward).unwrap();
        let ds = build_regression_dataset(&b, 1.0).unwrap();
        assert_eq!(ds.noise_variance, 2.0);
        assert_eq!(ds.len(), 2);
        // Row for k = 0 sits at reversed index j = T - k - 1 = 1.
        assert_eq!(ds.inputs.row(1).to_vec(), vec![1.0, 0.5]);
        assert_eq!(ds.targets[[1, 0]], -2.0);
        // Row for k = 1: constant segment.
        assert_eq!(ds.inputs.row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(ds.targets[[0, 0]], 0.0);
    }

    #[test]
    fn constant_path_has_zero_targets() {
        let b = batch_1d(&[3.5; 11], 0.1, Direction::Backward);
        let ds = build_regression_dataset(&b, 0.7).unwrap();
        assert!(ds.targets.iter().all(|&v| v == 0.0));
        assert_eq!(ds.len(), 10);
    }

    #[test]
    fn deterministic_constant_drift_gives_negated_targets() {
        // dx = a dt integrated exactly on the grid; reverse drift is -a.
        let a = 1.7;
        let dt = 0.01;
        let values: Vec<f64> = (0..=100).map(|k| 0.3 + a * k as f64 * dt).collect();
        let b = batch_1d(&values, dt, Direction::Forward);
        let ds = build_regression_dataset(&b, 1.0).unwrap();
        for &t in ds.targets.iter() {
            assert!((t + a).abs() < 1e-12, "target {t}");
        }
    }

    #[test]
    fn rejects_bad_gamma() {
        let b = batch_1d(&[0.0, 1.0, 2.0], 0.5, Direction::Forward);
        assert!(build_regression_dataset(&b, 0.0).is_err());
        assert!(build_regression_dataset(&b, f64::NAN).is_err());
    }

    fn arb_batch() -> impl Strategy<Value = TrajectoryBatch> {
        (1usize..5, 1usize..6, 1usize..4, any::<bool>()).prop_flat_map(|(n, steps, d, fwd)| {
            proptest::collection::vec(-10.0f64..10.0, n * (steps + 1) * d).prop_map(move |v| {
                let grid = TimeGrid::with_steps(steps).unwrap();
                let paths = Array3::from_shape_vec((n, steps + 1, d), v).unwrap();
                let dir = if fwd { Direction::Forward } else { Direction::Backward };
                TrajectoryBatch::new(paths, grid, dir).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn reverse_is_an_involution(b in arb_batch()) {
            let rr = reverse_trajectories(&reverse_trajectories(&b));
            prop_assert_eq!(rr.direction(), b.direction());
            let lhs: Vec<u64> = rr.paths().iter().map(|v| v.to_bits()).collect();
            let rhs: Vec<u64> = b.paths().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn reversed_dataset_negates_targets(b in arb_batch(), gamma in 0.1f64..3.0) {
            let steps = b.grid().n_steps();
            let dt = b.grid().dt();
            let own = build_regression_dataset(&b, gamma).unwrap();
            let rev = build_regression_dataset(&reverse_trajectories(&b), gamma).unwrap();
            prop_assert_eq!(own.len(), b.n_paths() * steps);
            prop_assert_eq!(rev.len(), b.n_paths() * steps);
            let d = b.dim();
            for n in 0..b.n_paths() {
                for k in 0..steps {
                    // `rev` row k uses the pair (x_k, x_{k+1}) at time t_k;
                    // `own` uses the same pair at reversed index T - k - 1,
                    // time 1 - t_{k+1}.
                    let r = n * steps + k;
                    let o = n * steps + (steps - k - 1);
                    prop_assert!((rev.inputs[[r, d]] - b.grid().time(k)).abs() < 1e-12);
                    prop_assert!((own.inputs[[o, d]] - (1.0 - b.grid().time(k) - dt)).abs() < 1e-12);
                    for c in 0..d {
                        prop_assert_eq!(own.targets[[o, c]], -rev.targets[[r, c]]);
                    }
                }
            }
            prop_assert!(own.inputs.column(d).iter().all(|&t| (0.0..=1.0).contains(&t)));
        }
    }
}
