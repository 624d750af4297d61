//! Welch averaged-periodogram PSD with a periodic Hann window.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchSpec {
    pub window_len: usize,
    /// Fraction of `window_len` shared by consecutive segments, in `[0, 1)`.
    pub overlap: f64,
    /// FFT length; segments are zero-padded up to it.
    pub nfft: usize,
}

impl Default for WelchSpec {
    fn default() -> Self {
        Self {
            window_len: 256,
            overlap: 0.5,
            nfft: 3300,
        }
    }
}

/// One-sided power spectral density (power per Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn bin_width(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0) - self.freqs[0]
    }

    /// Integral of the density over all bins.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }

    /// Integral of the density over `[low_hz, high_hz]`.
    pub fn band_power(&self, low_hz: f64, high_hz: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| (low_hz..=high_hz).contains(*f))
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.bin_width()
    }

    /// Frequency of the largest bin over the whole spectrum.
    pub fn peak_freq(&self) -> f64 {
        let mut best = 0;
        for (k, p) in self.power.iter().enumerate() {
            if *p > self.power[best] {
                best = k;
            }
        }
        self.freqs[best]
    }
}

fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (TAU * n as f64 / len as f64).cos())
        .collect()
}

pub fn welch_psd(w: &Waveform, spec: &WelchSpec) -> Result<PowerSpectrum> {
    let WelchSpec {
        window_len,
        overlap,
        nfft,
    } = *spec;
    if window_len < 2 {
        return Err(Error::invalid("Welch window needs at least 2 samples"));
    }
    if nfft < window_len {
        return Err(Error::invalid(format!("nfft {nfft} shorter than window {window_len}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let x = w.samples();
    if x.len() < window_len {
        return Err(Error::invalid(format!(
            "waveform of {} samples shorter than Welch window {window_len}",
            x.len()
        )));
    }

    let fs = w.fps();
    let window = hann_periodic(window_len);
    let window_power: f64 = window.iter().map(|v| v * v).sum();
    let step = (window_len - (window_len as f64 * overlap).floor() as usize).max(1);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);

    let bins = nfft / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut segments = 0usize;
    let mut start = 0;
    while start + window_len <= x.len() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (k, (v, h)) in x[start..start + window_len].iter().zip(&window).enumerate() {
            buf[k].re = v * h;
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (nfft % 2 == 0 && k == nfft / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / nfft as f64).collect();
    Ok(PowerSpectrum { freqs, power })
}
