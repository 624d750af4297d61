//! Heart-rate estimation: bandpass, Welch PSD, peak picking, per-video
//! averaging over fixed-length segments, and evaluation metrics.

mod filter;
mod metrics;
mod welch;

pub use filter::{bandpass, BandpassSpec, Biquad, SosFilter};
pub use metrics::{compute_metrics, pearson, HrPair, MetricsReport};
pub use welch::{welch_psd, PowerSpectrum, WelchSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{segment_clip, segment_len, HrEstimate, Waveform};

/// In-band power below this marks a segment as degenerate.
pub const MIN_BAND_POWER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrConfig {
    pub segment_s: f64,
    pub bandpass: BandpassSpec,
    pub welch: WelchSpec,
    pub min_band_power: f64,
}

impl Default for HrConfig {
    fn default() -> Self {
        Self {
            segment_s: 15.0,
            bandpass: BandpassSpec::default(),
            welch: WelchSpec::default(),
            min_band_power: MIN_BAND_POWER,
        }
    }
}

/// Frequency of the strongest bin inside `[low_hz, high_hz]`, in BPM.
/// Ties go to the lower frequency.
pub fn hr_from_psd(s: &PowerSpectrum, low_hz: f64, high_hz: f64) -> Result<HrEstimate> {
    let mut best: Option<(f64, f64)> = None;
    for (&f, &p) in s.freqs.iter().zip(&s.power) {
        if f < low_hz || f > high_hz {
            continue;
        }
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((f, p));
        }
    }
    best.map(|(f, _)| HrEstimate { bpm: 60.0 * f })
        .ok_or_else(|| Error::invalid(format!("no spectrum bins in [{low_hz}, {high_hz}] Hz")))
}

/// Per-video heart rate and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoHr {
    pub bpm: f64,
    /// Heart rate of each segment that produced one, in order.
    pub segment_bpm: Vec<f64>,
    /// Segments skipped because their in-band power was degenerate.
    pub dropped_segments: usize,
}

impl VideoHr {
    pub fn estimate(&self) -> HrEstimate {
        HrEstimate { bpm: self.bpm }
    }
}

/// Heart rate of one segment: bandpass, Welch, peak pick.
///
/// Segments shorter than the Welch window are analysed as a single window.
pub fn segment_hr(seg: &Waveform, cfg: &HrConfig) -> Result<HrEstimate> {
    let filtered = bandpass(seg, &cfg.bandpass)?;
    let welch = WelchSpec {
        window_len: cfg.welch.window_len.min(seg.len()),
        nfft: cfg.welch.nfft.max(seg.len().min(cfg.welch.window_len)),
        ..cfg.welch
    };
    let psd = welch_psd(&filtered, &welch)?;
    let power = psd.band_power(cfg.bandpass.low_hz, cfg.bandpass.high_hz);
    if power.is_nan() || power < cfg.min_band_power {
        return Err(Error::DegenerateSignal {
            power,
            threshold: cfg.min_band_power,
        });
    }
    hr_from_psd(&psd, cfg.bandpass.low_hz, cfg.bandpass.high_hz)
}

/// Mean heart rate over all full `cfg.segment_s` segments of `w`.
///
/// Degenerate segments are dropped and counted; if every segment is
/// degenerate the last degenerate-signal error is returned.
pub fn video_hr(w: &Waveform, cfg: &HrConfig) -> Result<VideoHr> {
    let segments = segment_clip(w, cfg.segment_s)?;
    if segments.is_empty() {
        let need = segment_len(cfg.segment_s, w.fps())?;
        return Err(Error::invalid(format!(
            "waveform of {} samples shorter than one {} s segment ({need} samples)",
            w.len(),
            cfg.segment_s
        )));
    }
    let mut segment_bpm = Vec::with_capacity(segments.len());
    let mut dropped = 0;
    let mut last_err = None;
    for seg in &segments {
        match segment_hr(seg, cfg) {
            Ok(hr) => segment_bpm.push(hr.bpm),
            Err(e @ Error::DegenerateSignal { .. }) => {
                dropped += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if segment_bpm.is_empty() {
        return Err(last_err.expect("at least one segment was processed"));
    }
    let bpm = segment_bpm.iter().sum::<f64>() / segment_bpm.len() as f64;
    Ok(VideoHr {
        bpm,
        segment_bpm,
        dropped_segments: dropped,
    })
}
