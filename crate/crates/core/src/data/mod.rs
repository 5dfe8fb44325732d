//! Datasets, synthetic cubes, patches, train/test splits and evaluation.

mod dataset;
mod map;
mod metrics;
mod patch;
mod report;
mod split;
mod synth;

pub use dataset::{load_dataset, save_dataset, CubeHeader, HsiDataset};
pub use map::{mean_average_precision, MapReport, DEFAULT_MAP_QUERIES, MAP_FULL_BELOW};
pub use metrics::{compute_metrics, MetricsReport};
pub use patch::{extract_patch, FeatureCube};
pub use report::{ClassRow, EvalReport, RepeatSummary, Stat};
pub use split::{split, Role, SplitMask, SplitMode};
pub use synth::{make_synthetic, SynthConfig};
