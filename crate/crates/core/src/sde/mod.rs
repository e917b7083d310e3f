//! SDE priors and the Euler–Maruyama simulator.

mod drift;
mod prior;
mod simulate;

pub use drift::{DriftField, FnDrift, NegatedReversed, TimeReversed, ZeroDrift};
pub use prior::{
    double_well_potential, make_prior_drift, DoubleWell, InitialLaw, Potential, PriorDrift, PriorKind,
    PriorSpec, DEFAULT_WELL_DELTA,
};
pub use simulate::{euler_maruyama, simulate};
