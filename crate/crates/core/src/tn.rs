//! Temporal normalization: per-trace linear detrending followed by RMS
//! normalization along time.
//!
//! For every `(i, j, c)` trace `P(t)`, `t = 0..T-1`:
//!
//! ```text
//! P~(t) = P(t) - (a t + b)                 (a, b) = OLS fit of P on t
//! P^(t) = P~(t) / sqrt(mean_t P~(t)^2 + eps)
//! ```
//!
//! Any time-constant gain, offset or linear drift applied to `P` drops out
//! of `P^`, while the shared RMS divisor couples every output sample to the
//! whole window.

use ndarray::Array4;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FrameClip, PixelTrace};

/// Default `eps` for inputs scaled to `[0, 1]`.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Least-squares line `slope * t + intercept` with `t` the frame index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
}

impl TrendFit {
    pub fn at(&self, t: usize) -> f64 {
        self.slope * t as f64 + self.intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnConfig {
    epsilon: f64,
}

impl TnConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Self { epsilon })
        } else {
            Err(Error::invalid(format!("epsilon must be finite and > 0, got {epsilon}")))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for TnConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// OLS on centered sums; requires `values.len() >= 2`.
pub(crate) fn fit_slice(values: &[f64]) -> TrendFit {
    let n = values.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = values.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, &x) in values.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (x - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    TrendFit {
        slope,
        intercept: x_mean - slope * t_mean,
    }
}

pub(crate) fn detrend_in_place(values: &mut [f64]) {
    let fit = fit_slice(values);
    for (t, v) in values.iter_mut().enumerate() {
        *v -= fit.at(t);
    }
}

pub(crate) fn rms_normalize_in_place(values: &mut [f64], epsilon: f64) {
    let ms = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    let denom = (ms + epsilon).sqrt();
    for v in values.iter_mut() {
        *v /= denom;
    }
}

pub fn fit_trend(trace: &PixelTrace) -> Result<TrendFit> {
    if trace.len() < 2 {
        return Err(Error::invalid("trend fit needs at least 2 samples"));
    }
    Ok(fit_slice(trace.values()))
}

/// Subtracts the trace's own least-squares line.
pub fn detrend_trace(trace: &PixelTrace) -> Result<PixelTrace> {
    let fit = fit_trend(trace)?;
    let values = trace
        .values()
        .iter()
        .enumerate()
        .map(|(t, v)| v - fit.at(t))
        .collect();
    PixelTrace::new(values, trace.fps())
}

/// Divides by `sqrt(mean square + eps)`. All-zero traces stay zero.
pub fn rms_normalize(trace: &PixelTrace, cfg: &TnConfig) -> PixelTrace {
    let mut values = trace.values().to_vec();
    rms_normalize_in_place(&mut values, cfg.epsilon);
    PixelTrace::new(values, trace.fps()).expect("normalizing a valid trace keeps it valid")
}

/// Detrend then RMS-normalize every `(i, j, c)` trace of `clip` independently.
pub fn tn(clip: &FrameClip, cfg: &TnConfig) -> Result<FrameClip> {
    let (t, h, w, c) = clip.dims();
    if t < 3 {
        return Err(Error::invalid(format!("TN needs T >= 3, got {t}")));
    }
    let traces: Vec<Vec<f64>> = (0..h * w * c)
        .into_par_iter()
        .map(|k| {
            let (i, j, ch) = (k / (w * c), (k / c) % w, k % c);
            let mut v = clip.trace_view(i, j, ch).to_vec();
            detrend_in_place(&mut v);
            rms_normalize_in_place(&mut v, cfg.epsilon);
            v
        })
        .collect();
    let out = Array4::from_shape_fn((t, h, w, c), |(tt, i, j, ch)| {
        traces[(i * w + j) * c + ch][tt]
    });
    FrameClip::new(out, clip.fps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(v: &[f64]) -> PixelTrace {
        PixelTrace::new(v.to_vec(), 30.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Normal equations on raw sums solved by Cramer's rule.
    fn oracle_fit(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let (mut st, mut stt, mut sx, mut stx) = (0.0, 0.0, 0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let t = t as f64;
            st += t;
            stt += t * t;
            sx += v;
            stx += t * v;
        }
        let det = n * stt - st * st;
        ((n * stx - st * sx) / det, (stt * sx - st * stx) / det)
    }

    #[test]
    fn fit_exact_line() {
        let f = fit_trend(&trace(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant() {
        let f = fit_trend(&trace(&[0.3; 4])).unwrap();
        assert_eq!(f.slope, 0.0);
        assert!((f.intercept - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fit_alternating_matches_oracle() {
        let x = [0.0, 1.0, 0.0, 1.0];
        let (s, i) = oracle_fit(&x);
        assert!((s - 0.2).abs() < 1e-12 && (i - 0.2).abs() < 1e-12);
        let f = fit_trend(&trace(&x)).unwrap();
        assert!((f.slope - s).abs() < 1e-12 && (f.intercept - i).abs() < 1e-12);
    }

    #[test]
    fn detrend_alternating() {
        let d = detrend_trace(&trace(&[0.0, 1.0, 0.0, 1.0])).unwrap();
        assert!(close(d.values(), &[-0.2, 0.6, -0.6, 0.2], 1e-12));
    }

    #[test]
    fn detrend_affine_is_zero() {
        let x: Vec<f64> = (0..17).map(|t| 0.37 * t as f64 - 2.5).collect();
        let d = detrend_trace(&trace(&x)).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rms_normalize_zero_trace() {
        let out = rms_normalize(&trace(&[0.0; 5]), &TnConfig::default());
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rms_normalize_detrended_alternating() {
        let cfg = TnConfig::new(1e-300).unwrap();
        let out = rms_normalize(&trace(&[-0.2, 0.6, -0.6, 0.2]), &cfg);
        let r = 0.2f64.sqrt();
        let expect = [-0.2 / r, 0.6 / r, -0.6 / r, 0.2 / r];
        assert!(close(out.values(), &expect, 1e-12));
        assert!(close(out.values(), &[-0.4472, 1.3416, -1.3416, 0.4472], 1e-4));
    }

    #[test]
    fn tn_single_pixel_composition() {
        let clip = FrameClip::from_fn((4, 1, 1, 1), 30.0, |(t, ..)| (t % 2) as f64).unwrap();
        let out = tn(&clip, &TnConfig::new(1e-12).unwrap()).unwrap();
        let v = out.trace(0, 0, 0);
        assert!(close(v.values(), &[-0.4472, 1.3416, -1.3416, 0.4472], 1e-4));
    }

    #[test]
    fn tn_affine_clip_is_zero() {
        let clip = FrameClip::from_fn((20, 3, 2, 3), 30.0, |(t, i, j, c)| {
            0.1 * (i + j + c) as f64 + 0.003 * (i as f64 - 1.0) * t as f64
        })
        .unwrap();
        let out = tn(&clip, &TnConfig::default()).unwrap();
        assert!(out.data().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn tn_gain_offset_drift_invariance() {
        let clip = FrameClip::from_fn((64, 2, 3, 3), 30.0, |(t, i, j, c)| {
            0.5 + 0.1 * ((t * 7 + i * 3 + j * 5 + c) as f64).sin()
        })
        .unwrap();
        let shifted = FrameClip::from_fn(clip.dims(), 30.0, |(t, i, j, c)| {
            2.0 * clip.data()[[t, i, j, c]] + 0.1 + 0.01 * t as f64
        })
        .unwrap();
        let cfg = TnConfig::new(1e-14).unwrap();
        let a = tn(&clip, &cfg).unwrap();
        let b = tn(&shifted, &cfg).unwrap();
        assert!(close(
            a.data().as_slice().unwrap(),
            b.data().as_slice().unwrap(),
            1e-6
        ));
    }

    #[test]
    fn tn_rejects_short_clip() {
        let clip = FrameClip::from_fn((2, 1, 1, 1), 30.0, |(t, ..)| t as f64).unwrap();
        assert!(matches!(tn(&clip, &TnConfig::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tn_preserves_shape_and_fps() {
        let clip = FrameClip::from_fn((9, 2, 5, 1), 25.0, |(t, i, j, _)| {
            ((t * t + i + 2 * j) as f64).cos()
        })
        .unwrap();
        let out = tn(&clip, &TnConfig::default()).unwrap();
        assert_eq!(out.dims(), clip.dims());
        assert_eq!(out.fps(), 25.0);
    }

    #[test]
    fn config_rejects_nonpositive_epsilon() {
        assert!(TnConfig::new(0.0).is_err());
        assert!(TnConfig::new(-1.0).is_err());
        assert!(TnConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn single_sample_change_moves_every_output() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64 * 0.77).sin() + 0.01 * t as f64).collect();
        let cfg = TnConfig::default();
        let base = {
            let d = detrend_trace(&trace(&x)).unwrap();
            rms_normalize(&d, &cfg)
        };
        let mut y = x.clone();
        y[17] += 0.3;
        let moved = {
            let d = detrend_trace(&trace(&y)).unwrap();
            rms_normalize(&d, &cfg)
        };
        assert!(base
            .values()
            .iter()
            .zip(moved.values())
            .all(|(a, b)| (a - b).abs() > 1e-9));
    }

    fn arb_trace() -> impl Strategy<Value = Vec<f64>> {
        (2usize..=64).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n))
    }

    proptest! {
        #[test]
        fn fit_matches_normal_equations(x in arb_trace()) {
            let (s, i) = oracle_fit(&x);
            let f = fit_slice(&x);
            prop_assert!((f.slope - s).abs() < 1e-9);
            prop_assert!((f.intercept - i).abs() < 1e-9);
        }

        #[test]
        fn detrended_has_zero_mean_and_no_slope(x in arb_trace()) {
            let d = detrend_trace(&trace(&x)).unwrap();
            let v = d.values();
            let n = v.len() as f64;
            let rms = (x.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
            let mean = v.iter().sum::<f64>() / n;
            let tm = (n - 1.0) / 2.0;
            let cov = v.iter().enumerate().map(|(t, a)| (t as f64 - tm) * a).sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-9 * rms.max(1e-300) + 1e-15);
            prop_assert!(cov.abs() <= 1e-9 * rms.max(1e-300) * n + 1e-15);
        }

        #[test]
        fn detrend_is_idempotent(x in arb_trace()) {
            let once = detrend_trace(&trace(&x)).unwrap();
            let twice = detrend_trace(&once).unwrap();
            prop_assert!(close(once.values(), twice.values(), 1e-12));
        }

        #[test]
        fn rms_normalize_is_scale_free(x in arb_trace(), a in 0.01f64..100.0) {
            let cfg = TnConfig::new(1e-300).unwrap();
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
            let p = rms_normalize(&trace(&x), &cfg);
            let q = rms_normalize(&trace(&scaled), &cfg);
            prop_assert!(close(p.values(), q.values(), 1e-9));
        }

        #[test]
        fn tn_is_sign_equivariant(x in prop::collection::vec(-1.0f64..1.0, 3..64)) {
            let cfg = TnConfig::default();
            let pos = FrameClip::from_fn((x.len(), 1, 1, 1), 30.0, |(t, ..)| x[t]).unwrap();
            let neg = FrameClip::from_fn((x.len(), 1, 1, 1), 30.0, |(t, ..)| -x[t]).unwrap();
            let a = tn(&pos, &cfg).unwrap();
            let b = tn(&neg, &cfg).unwrap();
            for (p, q) in a.data().iter().zip(b.data().iter()) {
                prop_assert_eq!(*p, -*q);
            }
        }

        #[test]
        fn tn_output_statistics(x in prop::collection::vec(-1.0f64..1.0, 3..64)) {
            let cfg = TnConfig::default();
            let d = detrend_trace(&trace(&x)).unwrap();
            let n = x.len() as f64;
            let ms = d.values().iter().map(|v| v * v).sum::<f64>() / n;
            let clip = FrameClip::from_fn((x.len(), 1, 1, 1), 30.0, |(t, ..)| x[t]).unwrap();
            let out = tn(&clip, &cfg).unwrap().trace(0, 0, 0);
            let mean = out.values().iter().sum::<f64>() / n;
            let rms = (out.values().iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-9);
            prop_assert!((rms - (ms / (ms + cfg.epsilon())).sqrt()).abs() < 1e-12);
            if ms >= 1e4 * cfg.epsilon() {
                prop_assert!((rms - 1.0).abs() <= 1e-4);
            }
        }
    }
}
