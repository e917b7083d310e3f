//! Entropic optimal transport baseline for the Brownian prior.
//!
//! With a Brownian reference of volatility `gamma`, the static bridge between
//! two empirical measures is entropic OT with the cost `|y - x|^2 / (2 gamma)`
//! and unit regularisation: [`brownian_cost`] already carries the `1/(2 gamma)`
//! scale, so callers pass `epsilon = 1` to [`sinkhorn`]. Intermediate times
//! come from the McCann interpolant of the resulting coupling.

mod sinkhorn;

pub use sinkhorn::{brownian_cost, mccann_interpolant, sinkhorn, TransportPlan};
