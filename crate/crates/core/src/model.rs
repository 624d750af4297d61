//! Shared domain types, segmentation and spatial pooling.

use ndarray::{Array4, ArrayView1, Axis};

use crate::error::{Error, Result};

fn check_fps(fps: f64) -> Result<()> {
    if fps.is_finite() && fps > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fps must be finite and > 0, got {fps}")))
    }
}

fn check_series(values: &[f64], what: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "{what} needs at least 2 samples, got {}",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} sample {i} is not finite")));
    }
    Ok(())
}

/// A `T x H x W x C` video tensor with its frame rate.
///
/// Raw clips hold intensities in `[0, 1]`; feature clips (TN output) are
/// unbounded. Axis order is time, row, column, channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameClip {
    data: Array4<f64>,
    fps: f64,
}

impl FrameClip {
    pub fn new(data: Array4<f64>, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        let (t, h, w, c) = data.dim();
        if t < 2 {
            return Err(Error::invalid(format!("clip needs T >= 2, got {t}")));
        }
        if h == 0 || w == 0 {
            return Err(Error::invalid(format!("clip needs H, W >= 1, got {h}x{w}")));
        }
        if c != 1 && c != 3 {
            return Err(Error::invalid(format!("clip needs C in {{1, 3}}, got {c}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("clip contains non-finite values"));
        }
        Ok(Self { data, fps })
    }

    /// Builds a clip by evaluating `f(t, i, j, c)` for every element.
    pub fn from_fn<F>(dims: (usize, usize, usize, usize), fps: f64, f: F) -> Result<Self>
    where
        F: FnMut((usize, usize, usize, usize)) -> f64,
    {
        Self::new(Array4::from_shape_fn(dims, f), fps)
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array4<f64> {
        self.data
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// `(T, H, W, C)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn frames(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn channels(&self) -> usize {
        self.data.len_of(Axis(3))
    }

    pub fn trace_view(&self, i: usize, j: usize, c: usize) -> ArrayView1<'_, f64> {
        self.data.slice(ndarray::s![.., i, j, c])
    }

    pub fn trace(&self, i: usize, j: usize, c: usize) -> PixelTrace {
        PixelTrace {
            values: self.trace_view(i, j, c).to_vec(),
            fps: self.fps,
        }
    }

    /// Element-wise `self - other`; shapes must match.
    pub fn sub(&self, other: &FrameClip) -> Result<FrameClip> {
        if self.dims() != other.dims() {
            return Err(Error::invalid(format!(
                "shape mismatch {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        FrameClip::new(&self.data - &other.data, self.fps)
    }

    /// Applies `f` to every element, keeping shape and fps.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<FrameClip> {
        FrameClip::new(self.data.mapv(f), self.fps)
    }
}

/// Time series of a single `(i, j, c)` pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTrace {
    values: Vec<f64>,
    fps: f64,
}

impl PixelTrace {
    pub fn new(values: Vec<f64>, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        check_series(&values, "pixel trace")?;
        Ok(Self { values, fps })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A pooled pulse signal sampled at `fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    fps: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        check_series(&samples, "waveform")?;
        Ok(Self { samples, fps })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fps
    }
}

/// A heart-rate value in beats per minute.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HrEstimate {
    pub bpm: f64,
}

impl HrEstimate {
    pub fn hz(&self) -> f64 {
        self.bpm / 60.0
    }
}

/// Number of samples in a `seconds`-long segment at `fps`.
pub(crate) fn segment_len(seconds: f64, fps: f64) -> Result<usize> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Error::invalid(format!("segment length must be > 0 s, got {seconds}")));
    }
    // Absorb representation error so 0.1 s * 30 fps is 3 samples, not 2.
    let len = (seconds * fps * (1.0 + 1e-12)).floor();
    if len < 2.0 {
        return Err(Error::invalid(format!(
            "segment of {seconds} s at {fps} fps has fewer than 2 samples"
        )));
    }
    Ok(len as usize)
}

/// Splits `w` into consecutive non-overlapping segments of `seconds`.
///
/// A trailing remainder shorter than one segment is discarded, so a waveform
/// shorter than one segment yields an empty list.
pub fn segment_clip(w: &Waveform, seconds: f64) -> Result<Vec<Waveform>> {
    let len = segment_len(seconds, w.fps)?;
    Ok(w.samples
        .chunks_exact(len)
        .map(|chunk| Waveform {
            samples: chunk.to_vec(),
            fps: w.fps,
        })
        .collect())
}

/// Mean over all pixels of one channel, per frame.
pub fn pool_spatial(clip: &FrameClip, channel: usize) -> Result<Waveform> {
    let c = clip.channels();
    if channel >= c {
        return Err(Error::invalid(format!("channel {channel} out of range for C={c}")));
    }
    let plane = clip.data.index_axis(Axis(3), channel);
    let (_, h, w) = plane.dim();
    let n = (h * w) as f64;
    let samples = plane
        .outer_iter()
        .map(|frame| frame.sum() / n)
        .collect();
    Waveform::new(samples, clip.fps)
}
