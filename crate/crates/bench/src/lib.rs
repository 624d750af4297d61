//! Fixtures shared by the criterion benches.

use pulse_tn_core::srm::Simulation;
use pulse_tn_core::{FrameClip, NoiseComponent, NoiseSpec, PulseSpec, SceneSpec, Waveform};

/// A drifting 30 fps synthetic clip of `seconds` at `size x size` pixels.
pub fn drifting_clip(seconds: f64, size: usize) -> FrameClip {
    Simulation {
        scene: SceneSpec::default().with_seed(1),
        pulse: PulseSpec::default(),
        noise: NoiseSpec {
            delta_i: vec![NoiseComponent::Linear { total: 0.1 }],
            delta_vs: vec![],
        },
        fps: 30.0,
        frames: (seconds * 30.0) as usize,
        height: size,
        width: size,
    }
    .noisy()
    .expect("valid simulation")
}

pub fn pulse_waveform(seconds: f64) -> Waveform {
    pulse_tn_core::synth_pulse(&PulseSpec::default(), 30.0, (seconds * 30.0) as usize)
        .expect("valid pulse")
}
