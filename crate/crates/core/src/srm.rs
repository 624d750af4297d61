//! Synthetic clips from the Shafer reflectance model.
//!
//! A skin pixel is the sum of a specular surface reflection `v_s` and a
//! diffuse subsurface reflection `v_d` modulated by the blood-volume pulse
//! `v_p(t)`, all scaled by the illumination `I`:
//!
//! ```text
//! ideal:    C(t) = I * (v_s + v_d * (1 + v_p(t)))
//! noisy:    C(t) = (I + dI(t)) * (v_s + dv_s(t) + v_d * (1 + v_p(t)))
//! residual: dC(t) = I * dv_s(t) + dI(t) * (v_s + dv_s(t) + v_d * (1 + v_p(t)))
//! ```
//!
//! The illumination noise `dI` and specular noise `dv_s` are absolute,
//! spatially uniform and identical across channels. `v_d` carries a seeded
//! per-pixel multiplicative jitter so spatial pooling is not degenerate.

use std::f64::consts::TAU;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameClip, Waveform};

pub const MIN_HR_BPM: f64 = 30.0;
pub const MAX_HR_BPM: f64 = 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Per-channel illumination, `> 0`.
    pub illumination: Vec<f64>,
    /// Per-channel specular reflectance, `>= 0`.
    pub specular: Vec<f64>,
    /// Per-channel diffuse reflectance, `>= 0`.
    pub diffuse: Vec<f64>,
    /// Relative half-width of the uniform per-pixel jitter on `diffuse`.
    pub pixel_jitter: f64,
    /// Seed of the jitter realization.
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::uniform(3, 1.0, 0.2, 0.5)
    }
}

impl SceneSpec {
    /// Same `I`, `v_s`, `v_d` on every channel, 5% jitter, seed 0.
    pub fn uniform(channels: usize, illumination: f64, specular: f64, diffuse: f64) -> Self {
        Self {
            illumination: vec![illumination; channels],
            specular: vec![specular; channels],
            diffuse: vec![diffuse; channels],
            pixel_jitter: 0.05,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.pixel_jitter = jitter;
        self
    }

    pub fn channels(&self) -> usize {
        self.illumination.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.illumination.len();
        if c != 1 && c != 3 {
            return Err(Error::invalid(format!("scene needs 1 or 3 channels, got {c}")));
        }
        if self.specular.len() != c || self.diffuse.len() != c {
            return Err(Error::invalid("scene channel vectors differ in length"));
        }
        if self.illumination.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("illumination must be finite and > 0"));
        }
        if self
            .specular
            .iter()
            .chain(&self.diffuse)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::invalid("reflectances must be finite and >= 0"));
        }
        if !(self.pixel_jitter.is_finite() && (0.0..1.0).contains(&self.pixel_jitter)) {
            return Err(Error::invalid("pixel jitter must be in [0, 1)"));
        }
        Ok(())
    }

    /// Per-pixel diffuse reflectance `v_d[i, j, c]` for this seed.
    pub fn diffuse_map(&self, h: usize, w: usize) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let c = self.channels();
        let mut map = Array3::zeros((h, w, c));
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    map[[i, j, ch]] = self.diffuse[ch] * (1.0 + self.pixel_jitter * u);
                }
            }
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Sinusoid,
    SinusoidWithHarmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub hr_bpm: f64,
    pub amplitude: f64,
    pub shape: PulseShape,
    /// Second-harmonic amplitude relative to the fundamental.
    pub harmonic_ratio: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            hr_bpm: 72.0,
            amplitude: 0.005,
            shape: PulseShape::Sinusoid,
            harmonic_ratio: 0.3,
            phase_rad: 0.0,
        }
    }
}

impl PulseSpec {
    pub fn sinusoid(hr_bpm: f64, amplitude: f64) -> Self {
        Self {
            hr_bpm,
            amplitude,
            ..Self::default()
        }
    }
}

/// One additive term of a noise profile, in absolute intensity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseComponent {
    /// `gain` for `t >= t0_s`, zero before.
    Step { t0_s: f64, gain: f64 },
    /// Ramp from 0 at the first frame to `total` at the last.
    Linear { total: f64 },
    /// `amplitude * sin(2 pi freq_hz t)`.
    Sinusoid { freq_hz: f64, amplitude: f64 },
}

impl NoiseComponent {
    pub fn value(&self, frame: usize, frames: usize, fps: f64) -> f64 {
        let t_s = frame as f64 / fps;
        match *self {
            NoiseComponent::Step { t0_s, gain } => {
                // Compare in frames so that t0 on a frame boundary is inclusive.
                if frame as f64 >= t0_s * fps - 1e-9 {
                    gain
                } else {
                    0.0
                }
            }
            NoiseComponent::Linear { total } => {
                if frames > 1 {
                    total * frame as f64 / (frames - 1) as f64
                } else {
                    0.0
                }
            }
            NoiseComponent::Sinusoid { freq_hz, amplitude } => {
                amplitude * (TAU * freq_hz * t_s).sin()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseComponent::Step { t0_s, gain } => t0_s.is_finite() && gain.is_finite(),
            NoiseComponent::Linear { total } => total.is_finite(),
            NoiseComponent::Sinusoid { freq_hz, amplitude } => {
                freq_hz.is_finite() && freq_hz >= 0.0 && amplitude.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad noise component {self:?}")))
        }
    }
}

/// Illumination noise `dI(t)` and specular noise `dv_s(t)`, each a sum of
/// components. Empty lists mean no noise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta_i: Vec<NoiseComponent>,
    pub delta_vs: Vec<NoiseComponent>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Small drift plus slow specular motion, sized comparable to a 0.005
    /// pulse and far below `I`.
    pub fn typical() -> Self {
        Self {
            delta_i: vec![NoiseComponent::Linear { total: 0.01 }],
            delta_vs: vec![NoiseComponent::Sinusoid {
                freq_hz: 0.2,
                amplitude: 0.005,
            }],
        }
    }

    pub fn is_none(&self) -> bool {
        self.delta_i.is_empty() && self.delta_vs.is_empty()
    }

    pub fn delta_i_at(&self, frame: usize, frames: usize, fps: f64) -> f64 {
        self.delta_i.iter().map(|c| c.value(frame, frames, fps)).sum()
    }

    pub fn delta_vs_at(&self, frame: usize, frames: usize, fps: f64) -> f64 {
        self.delta_vs.iter().map(|c| c.value(frame, frames, fps)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.delta_i
            .iter()
            .chain(&self.delta_vs)
            .try_for_each(NoiseComponent::validate)
    }
}

/// Zero-phase-offset pulse at `hr_bpm`, optionally with a second harmonic.
pub fn synth_pulse(p: &PulseSpec, fps: f64, frames: usize) -> Result<Waveform> {
    if !(MIN_HR_BPM..=MAX_HR_BPM).contains(&p.hr_bpm) {
        return Err(Error::invalid(format!(
            "hr_bpm {} outside [{MIN_HR_BPM}, {MAX_HR_BPM}]",
            p.hr_bpm
        )));
    }
    if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
        return Err(Error::invalid("pulse amplitude must be finite and >= 0"));
    }
    if !(0.0..=1.0).contains(&p.harmonic_ratio) {
        return Err(Error::invalid("harmonic ratio must be in [0, 1]"));
    }
    if frames < 2 {
        return Err(Error::invalid("pulse needs at least 2 frames"));
    }
    let f = p.hr_bpm / 60.0;
    let samples = (0..frames)
        .map(|t| {
            let phase = TAU * f * t as f64 / fps + p.phase_rad;
            let mut v = phase.sin();
            if p.shape == PulseShape::SinusoidWithHarmonic {
                v += p.harmonic_ratio * (2.0 * phase).sin();
            }
            p.amplitude * v
        })
        .collect();
    Waveform::new(samples, fps)
}

fn check_dims(scene: &SceneSpec, pulse: &Waveform, h: usize, w: usize) -> Result<()> {
    scene.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::invalid("frame size must be at least 1x1"));
    }
    if pulse.len() < 2 {
        return Err(Error::invalid("pulse needs at least 2 frames"));
    }
    Ok(())
}

pub fn render_ideal(scene: &SceneSpec, pulse: &Waveform, h: usize, w: usize) -> Result<FrameClip> {
    check_dims(scene, pulse, h, w)?;
    let vd = scene.diffuse_map(h, w);
    let vp = pulse.samples();
    let c = scene.channels();
    FrameClip::from_fn((vp.len(), h, w, c), pulse.fps(), |(t, i, j, ch)| {
        scene.illumination[ch] * (scene.specular[ch] + vd[[i, j, ch]] * (1.0 + vp[t]))
    })
}

pub fn render_noisy(
    scene: &SceneSpec,
    pulse: &Waveform,
    noise: &NoiseSpec,
    h: usize,
    w: usize,
) -> Result<FrameClip> {
    check_dims(scene, pulse, h, w)?;
    noise.validate()?;
    let vd = scene.diffuse_map(h, w);
    let vp = pulse.samples();
    let (frames, fps) = (vp.len(), pulse.fps());
    let di: Vec<f64> = (0..frames).map(|t| noise.delta_i_at(t, frames, fps)).collect();
    let dvs: Vec<f64> = (0..frames).map(|t| noise.delta_vs_at(t, frames, fps)).collect();
    FrameClip::from_fn((frames, h, w, scene.channels()), fps, |(t, i, j, ch)| {
        (scene.illumination[ch] + di[t])
            * (scene.specular[ch] + dvs[t] + vd[[i, j, ch]] * (1.0 + vp[t]))
    })
}

/// Closed-form `noisy - ideal` for the same jitter realization.
pub fn analytic_noise_residual(
    scene: &SceneSpec,
    pulse: &Waveform,
    noise: &NoiseSpec,
    h: usize,
    w: usize,
) -> Result<FrameClip> {
    check_dims(scene, pulse, h, w)?;
    noise.validate()?;
    let vd = scene.diffuse_map(h, w);
    let vp = pulse.samples();
    let (frames, fps) = (vp.len(), pulse.fps());
    FrameClip::from_fn((frames, h, w, scene.channels()), fps, |(t, i, j, ch)| {
        let di = noise.delta_i_at(t, frames, fps);
        let dvs = noise.delta_vs_at(t, frames, fps);
        scene.illumination[ch] * dvs
            + di * (scene.specular[ch] + dvs + vd[[i, j, ch]] * (1.0 + vp[t]))
    })
}

/// Everything needed to regenerate a synthetic clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub scene: SceneSpec,
    pub pulse: PulseSpec,
    pub noise: NoiseSpec,
    pub fps: f64,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Simulation {
    pub fn pulse_waveform(&self) -> Result<Waveform> {
        synth_pulse(&self.pulse, self.fps, self.frames)
    }

    pub fn ideal(&self) -> Result<FrameClip> {
        render_ideal(&self.scene, &self.pulse_waveform()?, self.height, self.width)
    }

    pub fn noisy(&self) -> Result<FrameClip> {
        render_noisy(
            &self.scene,
            &self.pulse_waveform()?,
            &self.noise,
            self.height,
            self.width,
        )
    }

    pub fn residual(&self) -> Result<FrameClip> {
        analytic_noise_residual(
            &self.scene,
            &self.pulse_waveform()?,
            &self.noise,
            self.height,
            self.width,
        )
    }
}
