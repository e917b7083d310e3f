use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::drift::DriftField;
use crate::error::{Error, Result};
use crate::marginal::{Gaussian, MarginalSamples};

/// Width of the central bump of the double-well potential.
pub const DEFAULT_WELL_DELTA: f64 = 0.5;

/// Scalar potential `U` with an analytic gradient.
pub trait Potential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn name(&self) -> &str;
}

/// `U(x, y) = 5/2 (x^2 - 1)^2 + y^2 + exp(-(x^2 + y^2) / delta) / delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub delta: f64,
}

impl Default for DoubleWell {
    fn default() -> Self {
        Self {
            delta: DEFAULT_WELL_DELTA,
        }
    }
}

pub fn double_well_potential(p: [f64; 2], delta: f64) -> f64 {
    let [x, y] = p;
    2.5 * (x * x - 1.0).powi(2) + y * y + (-(x * x + y * y) / delta).exp() / delta
}

impl Potential for DoubleWell {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, p: &[f64]) -> f64 {
        double_well_potential([p[0], p[1]], self.delta)
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let (x, y) = (p[0], p[1]);
        let d = self.delta;
        let bump = (-(x * x + y * y) / d).exp() / (d * d);
        out[0] = 10.0 * x * (x * x - 1.0) - 2.0 * x * bump;
        out[1] = 2.0 * y - 2.0 * y * bump;
    }

    fn name(&self) -> &str {
        "double_well"
    }
}

/// Drift family of the reference process.
#[derive(Debug, Clone)]
pub enum PriorKind {
    /// Zero drift in `dim` dimensions.
    Brownian { dim: usize },
    /// `-grad U`.
    GradientPotential(Arc<dyn Potential>),
    /// `A x + b`.
    LinearOu { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Second-order dynamics in companion form on `(x, v)`:
    /// `d(x, v) = (v, K x - beta v) dt`. The state dimension is `2 * K.len()`.
    LangevinCompanion { spring: Vec<Vec<f64>>, damping: f64 },
}

impl PriorKind {
    /// Whether the drift is a gradient field, so that the prior is
    /// time-reversible at equilibrium.
    pub fn is_reversible(&self) -> bool {
        match self {
            PriorKind::Brownian { .. } | PriorKind::GradientPotential(_) => true,
            PriorKind::LinearOu { a, .. } => {
                (0..a.len()).all(|i| (0..i).all(|j| a[i][j] == a[j][i]))
            }
            PriorKind::LangevinCompanion { .. } => false,
        }
    }
}

/// Initial law of the reference process, used to estimate its backward drift.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    Samples(MarginalSamples),
    Gaussian(Gaussian),
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Samples(s) => s.dim(),
            InitialLaw::Gaussian(g) => g.dim(),
        }
    }

    /// `n` initial states. Samples are used as-is when the sizes agree and
    /// resampled with replacement otherwise.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<MarginalSamples> {
        match self {
            InitialLaw::Samples(s) if s.len() == n => Ok(s.clone()),
            InitialLaw::Samples(s) => Ok(s.resample(n, rng)),
            InitialLaw::Gaussian(g) => g.sample(n, rng, "prior_initial"),
        }
    }
}

/// Reference process `dx = b0(x, t) dt + sqrt(gamma) dW`, `x(0) ~ initial`.
/// When `initial` is `None` the solver uses the `pi0` samples.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub gamma: f64,
    pub initial: Option<InitialLaw>,
}

impl PriorSpec {
    pub fn new(kind: PriorKind, gamma: f64) -> Self {
        Self {
            kind,
            gamma,
            initial: None,
        }
    }

    pub fn with_initial(mut self, initial: InitialLaw) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PriorKind::Brownian { dim } => *dim,
            PriorKind::GradientPotential(p) => p.dim(),
            PriorKind::LinearOu { b, .. } => b.len(),
            PriorKind::LangevinCompanion { spring, .. } => 2 * spring.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior gamma must be positive, got {}",
                self.gamma
            )));
        }
        let square = |m: &Vec<Vec<f64>>, n: usize, what: &'static str| -> Result<()> {
            if m.len() != n {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: n,
                    found: m.len(),
                });
            }
            for row in m {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: what,
                        expected: n,
                        found: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(what.into()));
                }
            }
            Ok(())
        };
        match &self.kind {
            PriorKind::Brownian { dim } if *dim == 0 => {
                return Err(Error::InvalidArgument("Brownian prior needs dim >= 1".into()))
            }
            PriorKind::LinearOu { a, b } => {
                if b.is_empty() {
                    return Err(Error::InvalidArgument("linear OU offset is empty".into()));
                }
                square(a, b.len(), "linear OU matrix")?;
            }
            PriorKind::LangevinCompanion { spring, damping } => {
                if spring.is_empty() {
                    return Err(Error::InvalidArgument("Langevin spring matrix is empty".into()));
                }
                square(spring, spring.len(), "Langevin spring matrix")?;
                if !damping.is_finite() {
                    return Err(Error::NonFinite("Langevin damping".into()));
                }
            }
            _ => {}
        }
        if let Some(init) = &self.initial {
            if init.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    context: "prior initial law",
                    expected: self.dim(),
                    found: init.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Drift of a validated [`PriorSpec`].
#[derive(Debug, Clone)]
pub struct PriorDrift {
    kind: PriorKind,
    dim: usize,
}

impl DriftField for PriorDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        match &self.kind {
            PriorKind::Brownian { .. } => out.fill(0.0),
            PriorKind::GradientPotential(u) => {
                u.gradient(x, out);
                for v in out.iter_mut() {
                    *v = -*v;
                }
            }
            PriorKind::LinearOu { a, b } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = b[i] + a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>();
                }
            }
            PriorKind::LangevinCompanion { spring, damping } => {
                let m = spring.len();
                let (pos, vel) = x.split_at(m);
                out[..m].copy_from_slice(vel);
                for i in 0..m {
                    let kx: f64 = spring[i].iter().zip(pos).map(|(k, p)| k * p).sum();
                    out[m + i] = kx - damping * vel[i];
                }
            }
        }
    }

    fn describe(&self) -> String {
        match &self.kind {
            PriorKind::Brownian { .. } => "brownian".into(),
            PriorKind::GradientPotential(u) => format!("-grad {}", u.name()),
            PriorKind::LinearOu { .. } => "linear_ou".into(),
            PriorKind::LangevinCompanion { .. } => "langevin".into(),
        }
    }
}

pub fn make_prior_drift(spec: &PriorSpec) -> Result<Arc<dyn DriftField>> {
    spec.validate()?;
    Ok(Arc::new(PriorDrift {
        kind: spec.kind.clone(),
        dim: spec.dim(),
    }))
}
