//! Feature-space noise measurements on simulated clips.

use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::diff::{diff_normalized, frame_diff};
use crate::error::{Error, Result};
use crate::extract::{run_extractor, ExtractorConfig, ExtractorKind};
use crate::hr::{bandpass, pearson, BandpassSpec};
use crate::model::{FrameClip, Waveform};
use crate::tn::{tn, TnConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Raw,
    Tn,
    FrameDiff,
    DiffNormalized,
}

impl FeatureKind {
    /// Feature map behind each extractor.
    pub fn for_extractor(kind: ExtractorKind) -> Self {
        match kind {
            ExtractorKind::GreenRaw => FeatureKind::Raw,
            ExtractorKind::TnPooled => FeatureKind::Tn,
            ExtractorKind::DiffPooled => FeatureKind::DiffNormalized,
        }
    }
}

pub fn features(kind: FeatureKind, clip: &FrameClip, cfg: &TnConfig) -> Result<Array4<f64>> {
    Ok(match kind {
        FeatureKind::Raw => clip.data().clone(),
        FeatureKind::Tn => tn(clip, cfg)?.into_data(),
        FeatureKind::FrameDiff => frame_diff(clip).data().clone(),
        FeatureKind::DiffNormalized => diff_normalized(clip).data().clone(),
    })
}

fn rms<'a>(x: impl Iterator<Item = &'a f64>) -> f64 {
    let (sum, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// `RMS(F(noisy) - F(ideal)) / RMS(F(ideal))` over every feature element.
pub fn residual_ratio(
    kind: FeatureKind,
    ideal: &FrameClip,
    noisy: &FrameClip,
    cfg: &TnConfig,
) -> Result<f64> {
    if ideal.dims() != noisy.dims() {
        return Err(Error::invalid("ideal and noisy clips differ in shape"));
    }
    let fi = features(kind, ideal, cfg)?;
    let fn_ = features(kind, noisy, cfg)?;
    let signal = rms(fi.iter());
    if signal == 0.0 {
        return Err(Error::invalid("ideal features are identically zero"));
    }
    let residual = (&fn_ - &fi).iter().map(|v| v * v).sum::<f64>() / fi.len() as f64;
    Ok(residual.sqrt() / signal)
}

/// Pearson correlation between the bandpassed extractor output and the
/// true pulse. Difference waveforms are aligned to `pulse[1..]`.
pub fn pulse_correlation(
    kind: ExtractorKind,
    clip: &FrameClip,
    pulse: &Waveform,
    cfg: &ExtractorConfig,
    band: &BandpassSpec,
) -> Result<f64> {
    let w = run_extractor(kind, clip, cfg)?;
    let filtered = bandpass(&w, band)?;
    let truth = &pulse.samples()[pulse.len() - w.len()..];
    pearson(filtered.samples(), truth)
        .ok_or_else(|| Error::invalid("correlation undefined for constant waveform"))
}
