//! Sample-based distances between marginals: EMD (1-Wasserstein) and the
//! two-sample Kolmogorov–Smirnov statistic, plus the marginal-fit report.

mod assignment;
mod emd;
mod ks;
mod report;

pub use assignment::{emd_assignment, min_cost_assignment};
pub use emd::emd_1d;
pub use ks::ks_statistic;
pub use report::{emd_samples, ks_samples, marginal_report, Metric, MetricEntry, MetricReport, ReportOptions, MAX_ASSIGNMENT_SIZE};
