use std::fmt;
use std::sync::Arc;

/// Deterministic drift `(x, t) -> R^d`. Implementations are read-only and
/// are called concurrently from the path simulator.
pub trait DriftField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes the drift at `(x, t)` into `out` (both of length `dim()`).
    fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]);

    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, t, &mut out);
        out
    }

    fn describe(&self) -> String {
        format!("drift field in R^{}", self.dim())
    }
}

impl fmt::Debug for dyn DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl<D: DriftField + ?Sized> DriftField for Arc<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (**self).eval_into(x, t, out)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroDrift {
    pub dim: usize,
}

impl DriftField for ZeroDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, _x: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn describe(&self) -> String {
        "zero".into()
    }
}

/// `s -> -b(x, 1 - s)`: a forward drift seen from the backward clock with
/// its sign flipped. Backward GP mean for priors that are not reversible.
#[derive(Clone)]
pub struct NegatedReversed(pub Arc<dyn DriftField>);

impl DriftField for NegatedReversed {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_into(&self, x: &[f64], s: f64, out: &mut [f64]) {
        self.0.eval_into(x, 1.0 - s, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
    fn describe(&self) -> String {
        format!("negated time-reversed ({})", self.0.describe())
    }
}

/// The wrapped drift read on the reversed clock, `s -> b(x, 1 - s)`. For a
/// reversible prior at equilibrium this is its own backward drift.
#[derive(Clone)]
pub struct TimeReversed(pub Arc<dyn DriftField>);

impl DriftField for TimeReversed {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_into(&self, x: &[f64], s: f64, out: &mut [f64]) {
        self.0.eval_into(x, 1.0 - s, out);
    }
    fn describe(&self) -> String {
        format!("time-reversed ({})", self.0.describe())
    }
}

/// Drift given by a closure.
pub struct FnDrift<F> {
    dim: usize,
    f: F,
}

impl<F> FnDrift<F>
where
    F: Fn(&[f64], f64, &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> DriftField for FnDrift<F>
where
    F: Fn(&[f64], f64, &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.f)(x, t, out)
    }
    fn describe(&self) -> String {
        "closure".into()
    }
}
