//! File formats, label files, the noise-spec grammar and the evaluation
//! runner behind the `pulse-tn` command line tool.

pub mod clipfile;
pub mod evaluate;
pub mod features;
pub mod labels;
pub mod noise_spec;

use thiserror::Error;

pub use clipfile::{decode_clip, encode_clip, read_clip, write_clip, ClipIoError, Dtype, FormatError};
pub use evaluate::{
    compare, evaluate, simulate_to_files, CompareDoc, CompareRow, EvalOptions, Manifest,
    ReportDoc, RowStatus, SimulatedFiles, VideoRow,
};
pub use features::{pulse_correlation, residual_ratio, FeatureKind};
pub use labels::{read_labels, upsert_label, LabelError, Labels};
pub use noise_spec::{parse_noise_spec, NoiseParseError, NoiseSpecDisplay};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Clip(#[from] ClipIoError),
    #[error(transparent)]
    Labels(#[from] LabelError),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error(transparent)]
    Noise(#[from] NoiseParseError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
