use std::fmt;

use ndarray::{ArrayView2, Axis};

use super::{emd_1d, emd_assignment, ks_statistic};
use crate::error::{Error, Result};
use crate::ipml::{IpmlConfig, IpmlResult};
use crate::marginal::MarginalSamples;
use crate::rng::{derive_seed, seeded};
use crate::sde::simulate;
use crate::trajectory::Direction;

/// Largest point cloud handed to the exact assignment solver; bigger clouds
/// are subsampled (seeded) to this size.
pub const MAX_ASSIGNMENT_SIZE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Emd,
    Ks,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Emd => "EMD",
            Metric::Ks => "KS",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EMD" => Ok(Metric::Emd),
            "KS" => Ok(Metric::Ks),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub label: String,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub entries: Vec<MetricEntry>,
}

impl MetricReport {
    pub fn push(&mut self, label: impl Into<String>, metric: Metric, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) || (metric == Metric::Ks && value > 1.0) {
            return Err(Error::Numerical(format!("invalid {metric} value {value}")));
        }
        self.entries.push(MetricEntry {
            label: label.into(),
            metric,
            value,
        });
        Ok(())
    }

    pub fn get(&self, label: &str, metric: Metric) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label && e.metric == metric)
            .map(|e| e.value)
    }
}

/// EMD between two point clouds of any dimension. One-dimensional samples
/// use the exact quantile formula; otherwise both clouds are subsampled to
/// a common size (at most [`MAX_ASSIGNMENT_SIZE`]) and solved exactly.
pub fn emd_samples(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, seed: u64) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "emd sample dimensions",
            expected: a.ncols(),
            found: b.ncols(),
        });
    }
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::InvalidArgument("emd needs non-empty samples".into()));
    }
    if a.ncols() == 1 {
        return Ok(emd_1d(&a.column(0).to_vec(), &b.column(0).to_vec()));
    }
    let n = a.nrows().min(b.nrows()).min(MAX_ASSIGNMENT_SIZE);
    let mut rng = seeded(seed);
    let pick = |x: ArrayView2<'_, f64>, rng: &mut _| {
        if x.nrows() == n {
            x.to_owned()
        } else {
            let mut idx = rand::seq::index::sample(rng, x.nrows(), n).into_vec();
            idx.sort_unstable();
            x.select(Axis(0), &idx)
        }
    };
    let a = pick(a, &mut rng);
    let b = pick(b, &mut rng);
    emd_assignment(a.view(), b.view())
}

/// KS statistic; for `d > 1` the maximum over coordinates.
pub fn ks_samples(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "ks sample dimensions",
            expected: a.ncols(),
            found: b.ncols(),
        });
    }
    Ok((0..a.ncols())
        .map(|c| ks_statistic(&a.column(c).to_vec(), &b.column(c).to_vec()))
        .fold(0.0, f64::max))
}

/// Extra evaluation inputs for [`marginal_report`].
#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Reference samples at intermediate physical times, compared with the
    /// forward model's marginal at the nearest grid time.
    pub frames: Vec<(f64, MarginalSamples)>,
    pub seed: u64,
}

/// Simulates the fitted forward model from `pi0` and the backward model from
/// `pi1`, and scores each terminal cloud against the opposite marginal. The
/// entries labelled `pi0` compare the backward terminal against `pi0`; `pi1`
/// compares the forward terminal against `pi1`.
pub fn marginal_report(
    result: &IpmlResult,
    pi0: &MarginalSamples,
    pi1: &MarginalSamples,
    config: &IpmlConfig,
    options: &ReportOptions,
) -> Result<MetricReport> {
    let grid = config.grid()?;
    let fwd = simulate(
        &result.forward_drift,
        config.gamma,
        pi0,
        &grid,
        derive_seed(options.seed, 11),
        Direction::Forward,
    )?;
    let bwd = simulate(
        &result.backward_drift,
        config.gamma,
        pi1,
        &grid,
        derive_seed(options.seed, 12),
        Direction::Backward,
    )?;
    let emd_seed = derive_seed(options.seed, 13);
    let mut report = MetricReport::default();
    let back_end = bwd.terminal();
    let fwd_end = fwd.terminal();
    report.push("pi0", Metric::Ks, ks_samples(back_end.view(), pi0.data().view())?)?;
    report.push("pi0", Metric::Emd, emd_samples(back_end.view(), pi0.data().view(), emd_seed)?)?;
    report.push("pi1", Metric::Ks, ks_samples(fwd_end.view(), pi1.data().view())?)?;
    report.push("pi1", Metric::Emd, emd_samples(fwd_end.view(), pi1.data().view(), emd_seed)?)?;
    for (i, (t, frame)) in options.frames.iter().enumerate() {
        if frame.dim() != pi0.dim() {
            return Err(Error::DimensionMismatch {
                context: "intermediate frame",
                expected: pi0.dim(),
                found: frame.dim(),
            });
        }
        let k = grid.nearest_index(*t);
        let value = emd_samples(fwd.slice_at(k), frame.data().view(), derive_seed(emd_seed, i as u64))?;
        report.push(format!("frame_{i}"), Metric::Emd, value)?;
    }
    Ok(report)
}
