//! Temporal normalization (TN) features for camera-based pulse sensing.
//!
//! The crate bundles four pieces that are used together:
//!
//! * [`tn`]: per-pixel least-squares detrending followed by temporal RMS
//!   normalization, plus the differential baseline in [`diff`].
//! * [`srm`]: a reflectance-model clip generator with controllable
//!   illumination and specular noise, and the exact noise residual.
//! * [`hr`]: Butterworth bandpass, Welch PSD, heart-rate peak picking,
//!   per-video averaging and MAE / RMSE / Pearson metrics.
//! * [`harness`]: the clip file format, label files, noise-spec grammar and
//!   the evaluation runner used by the command line tool.

pub mod diff;
pub mod error;
pub mod extract;
pub mod harness;
pub mod hr;
pub mod model;
pub mod srm;
pub mod tn;

pub use diff::{diff_noise_residual, diff_normalized, frame_diff, DiffClip};
pub use error::{Error, Result};
pub use extract::{
    extract_diff_pooled, extract_green, extract_tn_pooled, run_extractor, ExtractorConfig,
    ExtractorKind,
};
pub use hr::{
    bandpass, compute_metrics, hr_from_psd, video_hr, welch_psd, BandpassSpec, MetricsReport,
    PowerSpectrum, VideoHr, WelchSpec,
};
pub use model::{pool_spatial, segment_clip, FrameClip, HrEstimate, PixelTrace, Waveform};
pub use srm::{
    analytic_noise_residual, render_ideal, render_noisy, synth_pulse, NoiseComponent, NoiseSpec,
    PulseShape, PulseSpec, SceneSpec,
};
pub use tn::{detrend_trace, fit_trend, rms_normalize, tn, TnConfig, TrendFit};
