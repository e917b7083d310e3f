//! Named synthetic experiments. Every preset is a pure function of
//! `(seed, n)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::marginal::{Gaussian, MarginalSamples};
use crate::rng::{derive_seed, seeded};
use crate::sde::{DoubleWell, InitialLaw, PriorKind, PriorSpec, DEFAULT_WELL_DELTA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Unimodal1d,
    Bimodal1d,
    DoubleWell2d,
    FiniteSampleStudy,
    LangevinDemo,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Unimodal1d,
        PresetName::Bimodal1d,
        PresetName::DoubleWell2d,
        PresetName::FiniteSampleStudy,
        PresetName::LangevinDemo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Unimodal1d => "unimodal1d",
            PresetName::Bimodal1d => "bimodal1d",
            PresetName::DoubleWell2d => "doublewell2d",
            PresetName::FiniteSampleStudy => "finite_sample_study",
            PresetName::LangevinDemo => "langevin_demo",
        }
    }

    /// Sample count used when the caller does not pick one.
    pub fn default_size(&self) -> usize {
        match self {
            PresetName::FiniteSampleStudy => 100,
            _ => 500,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = PresetName::ALL.iter().map(|p| p.as_str()).collect();
                Error::InvalidArgument(format!("unknown preset '{s}' (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub pi0: MarginalSamples,
    pub pi1: MarginalSamples,
    pub prior: PriorSpec,
}

/// Unimodal target: `N(4, 0.1^2)`.
pub const UNIMODAL_TARGET: (f64, f64) = (4.0, 0.1);
/// Bimodal target: equal mixture of these `(mean, std)` components.
pub const BIMODAL_TARGET: [(f64, f64); 2] = [(1.8, 0.6), (-1.9, 0.6)];
/// Covariance of both double-well boundary laws.
pub const WELL_BOUNDARY_VARIANCES: [f64; 2] = [0.0125, 0.15];
pub const WELL_GAMMA: f64 = 3.0;
pub const LANGEVIN_GAMMA: f64 = 0.5;

fn gaussian_1d(mean: f64, std: f64, n: usize, seed: u64, label: &str) -> Result<MarginalSamples> {
    Gaussian::diagonal(vec![mean], &[std * std])?.sample(n, &mut seeded(seed), label)
}

/// Boundary laws for the double-well experiment, centred in each well.
pub fn double_well_marginals(n: usize, seed: u64) -> Result<(MarginalSamples, MarginalSamples)> {
    let pi0 = Gaussian::diagonal(vec![-1.0, 0.0], &WELL_BOUNDARY_VARIANCES)?.sample(
        n,
        &mut seeded(derive_seed(seed, 1)),
        "pi0",
    )?;
    let pi1 = Gaussian::diagonal(vec![1.0, 0.0], &WELL_BOUNDARY_VARIANCES)?.sample(
        n,
        &mut seeded(derive_seed(seed, 2)),
        "pi1",
    )?;
    Ok((pi0, pi1))
}

/// The double-well prior with a broad initial law `N(0, 0.5 I)` that covers
/// both wells.
pub fn double_well_prior(delta: f64) -> Result<PriorSpec> {
    Ok(PriorSpec::new(PriorKind::GradientPotential(Arc::new(DoubleWell { delta })), WELL_GAMMA)
        .with_initial(InitialLaw::Gaussian(Gaussian::diagonal(vec![0.0, 0.0], &[0.5, 0.5])?)))
}

pub fn generate_preset(name: PresetName, seed: u64, n: usize) -> Result<Preset> {
    if n == 0 {
        return Err(Error::InvalidArgument("preset sample count must be >= 1".into()));
    }
    let s0 = derive_seed(seed, 1);
    let s1 = derive_seed(seed, 2);
    let preset = match name {
        PresetName::Unimodal1d => Preset {
            name,
            pi0: gaussian_1d(0.0, 1.0, n, s0, "pi0")?,
            pi1: gaussian_1d(UNIMODAL_TARGET.0, UNIMODAL_TARGET.1, n, s1, "pi1")?,
            prior: PriorSpec::new(PriorKind::Brownian { dim: 1 }, 1.0),
        },
        PresetName::Bimodal1d => {
            let mut rng = seeded(s1);
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    let (m, s) = BIMODAL_TARGET[rng.random_range(0..2)];
                    m + s * rng.sample::<f64, _>(rand_distr::StandardNormal)
                })
                .collect();
            Preset {
                name,
                pi0: gaussian_1d(0.0, 1.0, n, s0, "pi0")?,
                pi1: MarginalSamples::from_values(&values, "pi1")?,
                prior: PriorSpec::new(PriorKind::Brownian { dim: 1 }, 1.0),
            }
        }
        PresetName::DoubleWell2d | PresetName::FiniteSampleStudy => {
            let (pi0, pi1) = double_well_marginals(n, seed)?;
            Preset {
                name,
                pi0,
                pi1,
                prior: double_well_prior(DEFAULT_WELL_DELTA)?,
            }
        }
        PresetName::LangevinDemo => {
            // One oscillator: position moves from rest at 0 to rest at 1.
            let omega = std::f64::consts::PI;
            let law = |x: f64| Gaussian::diagonal(vec![x, 0.0], &[0.01, 0.01]);
            Preset {
                name,
                pi0: law(0.0)?.sample(n, &mut seeded(s0), "pi0")?,
                pi1: law(1.0)?.sample(n, &mut seeded(s1), "pi1")?,
                prior: PriorSpec::new(
                    PriorKind::LangevinCompanion {
                        spring: vec![vec![-omega * omega]],
                        damping: 0.0,
                    },
                    LANGEVIN_GAMMA,
                ),
            }
        }
    };
    Ok(preset)
}

/// Gaussian snapshots of a cloud drifting along a straight line, used to
/// exercise the multi-frame evaluation path. Frame `i` sits at time
/// `i / (n_frames - 1)`.
pub fn drifting_frames(seed: u64, n: usize, dim: usize, n_frames: usize) -> Result<Vec<(f64, MarginalSamples)>> {
    if n_frames < 2 || dim == 0 {
        return Err(Error::InvalidArgument("need at least two frames and one dimension".into()));
    }
    let mut rng = seeded(seed);
    let direction: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 2.0 } else { -1.0 }).collect();
    (0..n_frames)
        .map(|i| {
            let t = i as f64 / (n_frames - 1) as f64;
            let data = Array2::from_shape_fn((n, dim), |(_, c)| {
                direction[c] * t + 0.5 * rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            Ok((t, MarginalSamples::new(data, format!("frame_{i}"))?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn unimodal_moments() {
        let p = generate_preset(PresetName::Unimodal1d, 3, 1000).unwrap();
        assert!(p.pi0.mean()[0].abs() < 0.1);
        assert!((p.pi1.mean()[0] - 4.0).abs() < 0.04);
        assert_eq!(p.prior.dim(), 1);
    }

    #[test]
    fn double_well_moments() {
        let p = generate_preset(PresetName::DoubleWell2d, 3, 4000).unwrap();
        let m = p.pi0.mean();
        assert!((m[0] + 1.0).abs() < 0.01 && m[1].abs() < 0.03);
        assert!((variance(&p.pi0.column(0)) - 0.0125).abs() < 0.0015);
        assert!((variance(&p.pi0.column(1)) - 0.15).abs() < 0.015);
        assert!((p.pi1.mean()[0] - 1.0).abs() < 0.01);
        assert_eq!(p.prior.gamma, 3.0);
        assert!(matches!(p.prior.initial, Some(InitialLaw::Gaussian(_))));
    }

    #[test]
    fn bimodal_mode_split() {
        let p = generate_preset(PresetName::Bimodal1d, 5, 2000).unwrap();
        let right = p.pi1.column(0).iter().filter(|&&x| (x - 1.8).abs() < (x + 1.9).abs()).count();
        let frac = right as f64 / 2000.0;
        assert!((frac - 0.5).abs() < 0.05, "{frac}");
    }

    #[test]
    fn presets_are_deterministic() {
        for name in PresetName::ALL {
            let a = generate_preset(name, 9, 50).unwrap();
            let b = generate_preset(name, 9, 50).unwrap();
            assert_eq!(a.pi0, b.pi0);
            assert_eq!(a.pi1, b.pi1);
            assert_eq!(a.pi0.dim(), a.prior.dim());
        }
        assert!("nope".parse::<PresetName>().is_err());
        assert_eq!("doublewell2d".parse::<PresetName>().unwrap(), PresetName::DoubleWell2d);
    }
}
