//! Clip to pulse-waveform extractors: raw green averaging, TN features
//! pooled after normalization, and pooled normalized frame differences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::diff_normalized;
use crate::error::{Error, Result};
use crate::model::{pool_spatial, FrameClip, Waveform};
use crate::tn::{tn, TnConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    GreenRaw,
    TnPooled,
    DiffPooled,
}

impl ExtractorKind {
    pub const ALL: [ExtractorKind; 3] = [
        ExtractorKind::GreenRaw,
        ExtractorKind::TnPooled,
        ExtractorKind::DiffPooled,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExtractorKind::GreenRaw => "green_raw",
            ExtractorKind::TnPooled => "tn_pooled",
            ExtractorKind::DiffPooled => "diff_pooled",
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtractorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExtractorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown extractor '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtractorConfig {
    pub tn: TnConfig,
    /// Pulse channel; `None` picks green (1) for colour clips, 0 otherwise.
    pub channel: Option<usize>,
}

impl ExtractorConfig {
    pub fn channel_for(&self, clip: &FrameClip) -> usize {
        self.channel
            .unwrap_or(if clip.channels() >= 2 { 1 } else { 0 })
    }
}

pub fn extract_green(clip: &FrameClip) -> Result<Waveform> {
    extract_green_with(clip, &ExtractorConfig::default())
}

fn extract_green_with(clip: &FrameClip, cfg: &ExtractorConfig) -> Result<Waveform> {
    pool_spatial(clip, cfg.channel_for(clip))
}

/// TN on every pixel, then the spatial mean of the pulse channel.
pub fn extract_tn_pooled(clip: &FrameClip, cfg: &ExtractorConfig) -> Result<Waveform> {
    let channel = cfg.channel_for(clip);
    if channel >= clip.channels() {
        return Err(Error::invalid(format!("channel {channel} out of range")));
    }
    pool_spatial(&tn(clip, &cfg.tn)?, channel)
}

/// Normalized frame differences pooled over the pulse channel; `T - 1` long.
pub fn extract_diff_pooled(clip: &FrameClip, cfg: &ExtractorConfig) -> Result<Waveform> {
    let channel = cfg.channel_for(clip);
    if clip.frames() < 3 {
        return Err(Error::invalid("difference waveform needs T >= 3"));
    }
    pool_spatial(&diff_normalized(clip).into_frame_clip()?, channel)
}

pub fn run_extractor(kind: ExtractorKind, clip: &FrameClip, cfg: &ExtractorConfig) -> Result<Waveform> {
    match kind {
        ExtractorKind::GreenRaw => extract_green_with(clip, cfg),
        ExtractorKind::TnPooled => extract_tn_pooled(clip, cfg),
        ExtractorKind::DiffPooled => extract_diff_pooled(clip, cfg),
    }
}
