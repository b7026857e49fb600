//! The two redundant steering controllers and the raster lane detector.

pub mod bench;
pub mod cv;
pub mod dataset;
pub mod ld;
pub mod lec;

pub use cv::{cv_classify, CvOutput, SegmentLabel};
pub use dataset::{read_dataset, write_dataset};
pub use ld::{classification_metrics, ld_accuracy, ld_pipeline, ClassMetrics, LdMetrics, LdParams};
pub use lec::{lec_predict, ErrorModel, LecOutput, LecSurrogate, LecSurrogateParams, LecTruth};
pub use bench::{ld_sweep, synthetic_dataset, SweepParams};
