//! Batch experiments over random multi-access caching instances: delivery
//! synthesis, converse bounds, delivery simulation, and the dataset files
//! exchanged with external coloring models.

pub mod batch;
pub mod config;
pub mod dataset;
pub mod metrics;

pub use batch::{run_batch, BatchOutput};
pub use config::{ExperimentSpec, Settings, Stage};
pub use dataset::{export_dataset, import_and_score};
pub use metrics::MetricsRow;
