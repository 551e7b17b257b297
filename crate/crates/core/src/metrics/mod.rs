//! Operating characteristics across replications and their reports.

mod aggregate;
mod render;

pub use aggregate::{aggregate, Estimate, MetricsSummary, METRIC_NAMES};
pub use render::{parse_csv, render, ReportFormat};
