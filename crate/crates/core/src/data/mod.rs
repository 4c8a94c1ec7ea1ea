//! Datasets, estimand contrasts and interval results.

mod contrast;
mod csv_io;
mod dataset;
mod interval;

pub use contrast::ContrastSpec;
pub use csv_io::{load_csv, read_csv, write_csv, written_schema, CovariateColumn, Schema};
pub use dataset::{validate, Finding, ObservationalDataset, Severity};
pub use interval::IntervalEstimate;
