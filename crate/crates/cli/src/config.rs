//! Run configuration: a single TOML file, every key optional.
//!
//! ```toml
//! preset = "unimodal1d"      # or [data] pi0 / pi1 CSV paths
//! seed = 0
//! n = 500
//! out = "runs/unimodal"
//! gamma = 1.0                # defaults to the prior's gamma
//! dt = 0.01
//! iterations = 5
//! n_sim_paths = 500
//! early_stop_patience = 2
//! use_prior_mean = true
//! max_fit_rows = 6000
//! fit_stride = 10            # default: largest divisor of 1/dt up to 10
//!
//! [kernel]
//! family = "exponential"     # or "eq"
//! lengthscale = 1.0
//! signal_variance = 1.0
//!
//! [prior]
//! kind = "brownian"          # "double_well", "linear_ou", "langevin"; default: the preset's prior
//! delta = 0.5                # double_well
//! a = [[-1.0]]               # linear_ou
//! b = [0.0]
//! spring = [[-9.8696]]       # langevin
//! damping = 0.0
//! initial_mean = [0.0]       # Gaussian law of the prior at t = 0; default: pi0
//! initial_variance = [1.0]
//!
//! [data]
//! pi0 = "pi0.csv"
//! pi1 = "pi1.csv"
//! frames = ["f1.csv", "f2.csv"]
//! frame_times = [0.33, 0.67]
//!
//! [sinkhorn]
//! epsilon = 1.0
//! max_iters = 2000
//! tol = 1e-9
//! times = [0.5]
//! n_out = 500
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use sbridge_core::sde::{DoubleWell, InitialLaw};
use sbridge_core::{Gaussian, IpmlConfig, Kernel, KernelFamily, PresetName, PriorKind, PriorSpec, TimeGrid};

use crate::CliError;

const DEFAULT_MAX_FIT_ROWS: usize = 6000;
const MAX_AUTO_STRIDE: usize = 10;

#[derive(Debug, Clone, Default, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub dt: Option<f64>,
    pub iterations: Option<usize>,
    pub n_sim_paths: Option<usize>,
    pub early_stop_patience: Option<usize>,
    pub use_prior_mean: Option<bool>,
    pub max_fit_rows: Option<usize>,
    pub fit_stride: Option<usize>,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub sinkhorn: SinkhornSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct KernelSection {
    pub family: Option<KernelFamily>,
    pub lengthscale: Option<f64>,
    pub signal_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PriorSection {
    pub kind: Option<String>,
    pub delta: Option<f64>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub spring: Option<Vec<Vec<f64>>>,
    pub damping: Option<f64>,
    pub initial_mean: Option<Vec<f64>>,
    pub initial_variance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct DataSection {
    pub pi0: Option<PathBuf>,
    pub pi1: Option<PathBuf>,
    #[serde(default)]
    pub frames: Vec<PathBuf>,
    #[serde(default)]
    pub frame_times: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SinkhornSection {
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub n_out: Option<usize>,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "preset",
            "seed",
            "n",
            "out",
            "gamma",
            "dt",
            "iterations",
            "n_sim_paths",
            "early_stop_patience",
            "use_prior_mean",
            "max_fit_rows",
            "fit_stride",
            "kernel",
            "prior",
            "data",
            "sinkhorn",
        ],
    ),
    ("kernel", &["family", "lengthscale", "signal_variance"]),
    (
        "prior",
        &["kind", "delta", "a", "b", "spring", "damping", "initial_mean", "initial_variance"],
    ),
    ("data", &["pi0", "pi1", "frames", "frame_times"]),
    ("sinkhorn", &["epsilon", "max_iters", "tol", "times", "n_out"]),
];

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let top = KNOWN_KEYS[0].1;
    let mut unknown = Vec::new();
    for (key, value) in table {
        if !top.contains(&key.as_str()) {
            unknown.push(key.clone());
            continue;
        }
        if let (Some((_, allowed)), Some(sub)) = (KNOWN_KEYS.iter().find(|(s, _)| s == key), value.as_table()) {
            for inner in sub.keys() {
                if !allowed.contains(&inner.as_str()) {
                    unknown.push(format!("{key}.{inner}"));
                }
            }
        }
    }
    unknown
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("not valid TOML: {}", e.message())))?;
        let unknown = unknown_keys(&table);
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            CliError::Config(format!("invalid value for `{}`: {}", e.path(), e.inner().message()))
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse_str(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Data paths are relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.pi0.as_mut().map(fix);
        self.data.pi1.as_mut().map(fix);
        self.data.frames.iter_mut().for_each(fix);
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("invalid value for `{key}`: {msg}")));
        if let Some(dt) = self.dt {
            if TimeGrid::new(dt).is_err() {
                return bad("dt", format!("{dt} does not divide [0, 1] into whole steps"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return bad("gamma", format!("must be positive, got {g}"));
            }
        }
        for (key, v) in [
            ("kernel.lengthscale", self.kernel.lengthscale),
            ("kernel.signal_variance", self.kernel.signal_variance),
            ("sinkhorn.epsilon", self.sinkhorn.epsilon),
            ("sinkhorn.tol", self.sinkhorn.tol),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(key, format!("must be positive, got {v}"));
                }
            }
        }
        for (key, v) in [
            ("iterations", self.iterations),
            ("n", self.n),
            ("n_sim_paths", self.n_sim_paths),
            ("max_fit_rows", self.max_fit_rows),
            ("fit_stride", self.fit_stride),
        ] {
            if v == Some(0) {
                return bad(key, "must be at least 1".into());
            }
        }
        if let Some(p) = &self.preset {
            if let Err(e) = p.parse::<PresetName>() {
                return bad("preset", e.to_string());
            }
        }
        if self.data.frames.len() != self.data.frame_times.len() {
            return bad(
                "data.frame_times",
                format!(
                    "{} times given for {} frames",
                    self.data.frame_times.len(),
                    self.data.frames.len()
                ),
            );
        }
        if let Some(t) = self.data.frame_times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad("data.frame_times", format!("{t} is outside [0, 1]"));
        }
        if let Some(kind) = &self.prior.kind {
            if !["brownian", "double_well", "linear_ou", "langevin"].contains(&kind.as_str()) {
                return bad(
                    "prior.kind",
                    format!("unknown prior '{kind}' (expected brownian, double_well, linear_ou or langevin)"),
                );
            }
        }
        Ok(())
    }

    pub fn preset_name(&self) -> Option<PresetName> {
        self.preset.as_ref().map(|p| p.parse().expect("checked on load"))
    }

    pub fn kernel(&self) -> Kernel {
        let mut k = Kernel::default();
        if let Some(f) = self.kernel.family {
            k.family = f;
        }
        if let Some(l) = self.kernel.lengthscale {
            k.lengthscale = l;
        }
        if let Some(s) = self.kernel.signal_variance {
            k.signal_variance = s;
        }
        k
    }

    /// The prior: explicit `[prior]` settings win over the preset's prior.
    /// `dim` is the marginal dimension.
    pub fn prior(&self, preset_prior: Option<&PriorSpec>, dim: usize) -> Result<PriorSpec, CliError> {
        let gamma = self.gamma.or(preset_prior.map(|p| p.gamma)).unwrap_or(1.0);
        let p = &self.prior;
        let kind = match p.kind.as_deref() {
            None => match preset_prior {
                Some(spec) => spec.kind.clone(),
                None => PriorKind::Brownian { dim },
            },
            Some("brownian") => PriorKind::Brownian { dim },
            Some("double_well") => PriorKind::GradientPotential(Arc::new(DoubleWell {
                delta: p.delta.unwrap_or(sbridge_core::sde::DEFAULT_WELL_DELTA),
            })),
            Some("linear_ou") => PriorKind::LinearOu {
                a: p.a.clone().ok_or_else(|| missing("prior.a"))?,
                b: p.b.clone().unwrap_or_else(|| vec![0.0; dim]),
            },
            Some("langevin") => PriorKind::LangevinCompanion {
                spring: p.spring.clone().ok_or_else(|| missing("prior.spring"))?,
                damping: p.damping.unwrap_or(0.0),
            },
            Some(other) => unreachable!("prior kind '{other}' passed validation"),
        };
        let mut spec = PriorSpec::new(kind, gamma);
        match (&p.initial_mean, &p.initial_variance) {
            (Some(mean), Some(var)) => {
                let g = Gaussian::diagonal(mean.clone(), var).map_err(|e| {
                    CliError::Config(format!("invalid value for `prior.initial_variance`: {e}"))
                })?;
                spec = spec.with_initial(InitialLaw::Gaussian(g));
            }
            (None, None) if p.kind.is_none() => spec.initial = preset_prior.and_then(|s| s.initial.clone()),
            (None, None) => {}
            _ => {
                return Err(CliError::Config(
                    "`prior.initial_mean` and `prior.initial_variance` must be given together".into(),
                ))
            }
        }
        if spec.dim() != dim {
            return Err(CliError::Config(format!(
                "prior has dimension {} but the marginals have dimension {dim}",
                spec.dim()
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn ipml_config(&self, prior: PriorSpec, seed: u64) -> Result<IpmlConfig, CliError> {
        let mut c = IpmlConfig::new(prior);
        c.gamma = c.prior.gamma;
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        if let Some(it) = self.iterations {
            c.iterations = it;
        }
        c.kernel = self.kernel();
        c.seed = seed;
        c.n_sim_paths = self.n_sim_paths;
        c.early_stop_patience = self.early_stop_patience;
        c.use_prior_mean = self.use_prior_mean.unwrap_or(true);
        c.max_fit_rows = Some(self.max_fit_rows.unwrap_or(DEFAULT_MAX_FIT_ROWS));
        let steps = TimeGrid::new(c.dt)?.n_steps();
        c.fit_stride = match self.fit_stride {
            Some(s) => s,
            None => (1..=MAX_AUTO_STRIDE.min(steps)).rev().find(|s| steps % s == 0).unwrap_or(1),
        };
        c.validate().map_err(|e| match e {
            sbridge_core::Error::InvalidArgument(msg) if msg.starts_with("fit_stride") => {
                CliError::Config(format!("invalid value for `fit_stride`: {msg}"))
            }
            other => other.into(),
        })?;
        Ok(c)
    }
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("`{key}` is required for this prior kind"))
}
