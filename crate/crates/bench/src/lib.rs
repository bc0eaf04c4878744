//! Accuracy, scaling and property suites for surfoffset.

pub mod data;
pub mod properties;
pub mod suites;

pub use properties::Check;
pub use suites::{
    geodesic_deviation, linear_fit, run_accuracy, run_accuracy_suite, run_scaling_suite, run_suites, to_csv,
    AccuracyReport, BenchOptions, BenchOutput, BenchRow, GeodesicDeviation, LinearFit, ScalingOptions, ScalingReport,
    Suite,
};
