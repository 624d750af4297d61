//! Frame-difference features, the baseline TN replaces.

use ndarray::{s, Array4, Axis};

use crate::error::{Error, Result};
use crate::model::{FrameClip, Waveform};
use crate::srm::{render_ideal, render_noisy, NoiseSpec, SceneSpec};

/// Guard added to the denominator of [`diff_normalized`].
pub const DIFF_NORM_DELTA: f64 = 1e-8;

/// `(T-1) x H x W x C` difference features.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffClip {
    data: Array4<f64>,
    fps: f64,
}

impl DiffClip {
    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    /// Reinterprets as a [`FrameClip`]; needs at least 2 difference frames.
    pub fn into_frame_clip(self) -> Result<FrameClip> {
        FrameClip::new(self.data, self.fps)
    }

    pub fn sub(&self, other: &DiffClip) -> Result<DiffClip> {
        if self.dims() != other.dims() {
            return Err(Error::invalid("diff clip shape mismatch"));
        }
        Ok(DiffClip {
            data: &self.data - &other.data,
            fps: self.fps,
        })
    }
}

/// `out[t] = clip[t+1] - clip[t]`.
pub fn frame_diff(clip: &FrameClip) -> DiffClip {
    let d = clip.data();
    DiffClip {
        data: &d.slice(s![1.., .., .., ..]) - &d.slice(s![..-1, .., .., ..]),
        fps: clip.fps(),
    }
}

/// `out[t] = (clip[t+1] - clip[t]) / (clip[t+1] + clip[t] + delta)`.
pub fn diff_normalized(clip: &FrameClip) -> DiffClip {
    let d = clip.data();
    let next = d.slice(s![1.., .., .., ..]);
    let prev = d.slice(s![..-1, .., .., ..]);
    let mut data = Array4::zeros(next.raw_dim());
    ndarray::Zip::from(&mut data)
        .and(&next)
        .and(&prev)
        .for_each(|o, &n, &p| *o = (n - p) / (n + p + DIFF_NORM_DELTA));
    DiffClip {
        data,
        fps: clip.fps(),
    }
}

/// `frame_diff(noisy) - frame_diff(ideal)` for one simulated scene.
pub fn diff_noise_residual(
    scene: &SceneSpec,
    pulse: &Waveform,
    noise: &NoiseSpec,
    h: usize,
    w: usize,
) -> Result<DiffClip> {
    let ideal = render_ideal(scene, pulse, h, w)?;
    let noisy = render_noisy(scene, pulse, noise, h, w)?;
    frame_diff(&noisy).sub(&frame_diff(&ideal))
}
