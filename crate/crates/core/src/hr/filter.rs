//! Butterworth bandpass as cascaded second-order sections.
//!
//! Design follows the usual analog-prototype route: Butterworth lowpass
//! poles, lowpass-to-bandpass transform on prewarped edges, bilinear
//! transform, then pairing conjugate poles into biquads. Zero-phase mode
//! runs the cascade forward and backward over an odd-extended signal with
//! steady-state initial conditions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// Total filter order; even, each pair of poles is one biquad.
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            low_hz: 0.5,
            high_hz: 3.0,
            order: 4,
            zero_phase: true,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, fps: f64) -> Result<()> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "bandpass order must be even and > 0, got {}",
                self.order
            )));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < fps / 2.0) {
            return Err(Error::invalid(format!(
                "need 0 < low < high < fps/2, got {}..{} Hz at {fps} fps",
                self.low_hz, self.high_hz
            )));
        }
        Ok(())
    }
}

/// One direct-form-II-transposed biquad, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// State that makes a constant unit input produce a constant output.
    fn unit_step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let y = (b0 + b1 + b2) / (1.0 + a1 + a2);
        [(b1 + b2) - (a1 + a2) * y, b2 - a2 * y]
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2)
            / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }
}

/// Designed cascade for a given sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn butterworth_bandpass(spec: &BandpassSpec, fps: f64) -> Result<Self> {
        spec.validate(fps)?;
        let n = spec.order / 2;
        let fs2 = 2.0 * fps;
        let warp = |f: f64| fs2 * (PI * f / fps).tan();
        let (wl, wh) = (warp(spec.low_hz), warp(spec.high_hz));
        let bw = wh - wl;
        let w0sq = wl * wh;

        let mut analog = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let half = proto * (bw / 2.0);
            let root = (half * half - w0sq).sqrt();
            analog.push(half + root);
            analog.push(half - root);
        }

        // N analog zeros at s = 0 map to z = 1; the N at infinity map to z = -1.
        let mut gain = Complex64::new(bw.powi(n as i32) * fs2.powi(n as i32), 0.0);
        let mut digital = Vec::with_capacity(2 * n);
        for &p in &analog {
            gain /= fs2 - p;
            digital.push((fs2 + p) / (fs2 - p));
        }

        let sections = pair_poles(&digital)
            .into_iter()
            .enumerate()
            .map(|(idx, (a1, a2))| {
                let k = if idx == 0 { gain.re } else { 1.0 };
                Biquad {
                    b: [k, 0.0, -k],
                    a: [1.0, a1, a2],
                }
            })
            .collect();
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex response at `freq_hz` for sample rate `fps`.
    pub fn response(&self, freq_hz: f64, fps: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fps);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Steady-state initial conditions for a constant input of 1.
    fn initial_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.unit_step_state();
                let out = [z1 * scale, z2 * scale];
                scale *= s.dc_gain();
                out
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], mut state: Vec<[f64; 2]>) {
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z[0];
                z[0] = b1 * input - a1 * y + z[1];
                z[1] = b2 * input - a2 * y;
                *v = y;
            }
        }
    }

    fn run_from_rest_of(&self, x: &mut [f64]) {
        let x0 = x[0];
        let state = self
            .initial_state()
            .into_iter()
            .map(|[a, b]| [a * x0, b * x0])
            .collect();
        self.run(x, state);
    }

    /// Single forward pass, started in steady state for `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        if !y.is_empty() {
            self.run_from_rest_of(&mut y);
        }
        y
    }

    /// Forward-backward pass over an odd extension of `x`.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let pad = self.pad_len().min(n.saturating_sub(1));
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|k| 2.0 * x[0] - x[k]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|k| 2.0 * x[n - 1] - x[n - 1 - k]));

        self.run_from_rest_of(&mut ext);
        ext.reverse();
        self.run_from_rest_of(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }

    fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }
}

/// Groups conjugate pairs (upper half-plane representative) and leftover
/// real poles into `(a1, a2)` denominators.
fn pair_poles(poles: &[Complex64]) -> Vec<(f64, f64)> {
    const IMAG_TOL: f64 = 1e-12;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im > IMAG_TOL {
            out.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= IMAG_TOL {
            reals.push(p.re);
        }
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        match *pair {
            [r1, r2] => out.push((-(r1 + r2), r1 * r2)),
            [r] => out.push((-r, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}

/// Butterworth bandpass of `w`; zero-phase when `spec.zero_phase`.
pub fn bandpass(w: &Waveform, spec: &BandpassSpec) -> Result<Waveform> {
    let filter = SosFilter::butterworth_bandpass(spec, w.fps())?;
    let min_len = 3 * spec.order;
    if w.len() < min_len {
        return Err(Error::invalid(format!(
            "bandpass of order {} needs at least {min_len} samples, got {}",
            spec.order,
            w.len()
        )));
    }
    let y = if spec.zero_phase {
        filter.filtfilt(w.samples())
    } else {
        filter.filter(w.samples())
    };
    Waveform::new(y, w.fps())
}
