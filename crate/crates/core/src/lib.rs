//! Schrödinger bridge solver for arbitrary diffusion priors.
//!
//! The bridge is found by iterative proportional fitting where each half
//! bridge is realised by simulating the current SDE, reversing the sampled
//! paths in time, and regressing the reversed drift with a Gaussian process
//! whose mean function is the prior drift.

pub mod error;
pub mod gp;
pub mod grid;
pub mod io;
pub mod ipml;
pub mod marginal;
pub mod metrics;
pub mod ot;
pub mod presets;
pub mod rng;
pub mod sde;
pub mod trajectory;

pub use error::{Error, Result};
pub use gp::{GPDriftModel, Kernel, KernelFamily, Subsample};
pub use grid::TimeGrid;
pub use marginal::{Gaussian, MarginalSamples};
pub use sde::{DriftField, PriorKind, PriorSpec};
pub use trajectory::{build_regression_dataset, reverse_trajectories, Direction, RegressionDataset, TrajectoryBatch};
pub use ipml::{drift_mse_to_prior, obtain_backward_drift, run_ipml, run_ipml_with, IpmlConfig, IpmlResult, IterationRecord};
pub use metrics::{marginal_report, Metric, MetricReport};
pub use ot::TransportPlan;
pub use presets::{generate_preset, Preset, PresetName};
