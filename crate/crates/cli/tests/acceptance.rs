//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Runs without the libtest harness so the lines are printed under plain
//! `cargo test`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pulse_tn_cli::{cmd_simulate, Cli, Command};
use pulse_tn_core::harness::{decode_clip, encode_clip, pulse_correlation, residual_ratio, Dtype, FeatureKind};
use pulse_tn_core::hr::{bandpass, pearson, HrConfig, HrPair};
use pulse_tn_core::srm::Simulation;
use pulse_tn_core::{
    analytic_noise_residual, compute_metrics, fit_trend, hr_from_psd, render_ideal, render_noisy, run_extractor,
    synth_pulse, tn, video_hr, welch_psd, BandpassSpec, ExtractorConfig, ExtractorKind, FrameClip, NoiseComponent,
    NoiseSpec, PixelTrace, PulseSpec, SceneSpec, TnConfig, Waveform, WelchSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Normal equations for `y = a t + b` solved by Gaussian elimination with
/// partial pivoting on the 2x2 system.
fn brute_force_line(y: &[f64]) -> (f64, f64) {
    let mut m = [[0.0f64; 3]; 2];
    for (t, &v) in y.iter().enumerate() {
        let row = [t as f64, 1.0];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += row[r] * row[c];
            }
            m[r][2] += row[r] * v;
        }
    }
    if m[1][0].abs() > m[0][0].abs() {
        m.swap(0, 1);
    }
    let f = m[1][0] / m[0][0];
    let pivot = m[0];
    for (dst, src) in m[1].iter_mut().zip(pivot) {
        *dst -= f * src;
    }
    let x1 = m[1][2] / m[1][1];
    let x0 = (m[0][2] - m[0][1] * x1) / m[0][0];
    (x0, x1)
}

fn c1_ols_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..=64);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let fit = fit_trend(&PixelTrace::new(y.clone(), 30.0).unwrap()).unwrap();
        let (slope, intercept) = brute_force_line(&y);
        worst = worst.max((fit.slope - slope).abs()).max((fit.intercept - intercept).abs());
    }
    outcome(worst < 1e-9, format!("1000 traces, max coefficient error {worst:.2e}"))
}

fn tn_trace(x: &[f64], cfg: &TnConfig) -> Vec<f64> {
    let clip = FrameClip::from_fn((x.len(), 1, 1, 1), 30.0, |(t, ..)| x[t]).unwrap();
    tn(&clip, cfg).unwrap().trace(0, 0, 0).into_values()
}

fn detrended_rms(x: &[f64]) -> f64 {
    let fit = fit_trend(&PixelTrace::new(x.to_vec(), 30.0).unwrap()).unwrap();
    let ss: f64 = x.iter().enumerate().map(|(t, v)| (v - fit.at(t)).powi(2)).sum();
    (ss / x.len() as f64).sqrt()
}

fn c2_tn_invariance() -> Outcome {
    // Invariance holds once the trace mean square dominates epsilon; with
    // detrended RMS down to 1e-3 and gain down to 0.1 that means a tiny epsilon.
    let cfg = TnConfig::new(1e-18).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut inv, mut idem) = (0.0f64, 0.0f64);
    let mut sign_exact = true;
    let mut min_rms = f64::INFINITY;
    let mut traces = 0;
    while traces < 200 {
        let n = rng.random_range(3..=256);
        let scale = 10f64.powf(rng.random_range(-3.0..=0.0));
        let x: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..=1.0)).collect();
        let r = detrended_rms(&x);
        if r < 1e-3 {
            continue;
        }
        traces += 1;
        min_rms = min_rms.min(r);
        let a = rng.random_range(0.1..=10.0);
        let b = rng.random_range(-1.0..=1.0);
        let c = rng.random_range(-0.01..=0.01);
        let y: Vec<f64> = x.iter().enumerate().map(|(t, v)| a * v + b + c * t as f64).collect();
        let base = tn_trace(&x, &cfg);
        let moved = tn_trace(&y, &cfg);
        inv = base.iter().zip(&moved).map(|(p, q)| (p - q).abs()).fold(inv, f64::max);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        sign_exact &= tn_trace(&neg, &cfg).iter().zip(&base).all(|(p, q)| *p == -*q);
        let twice = tn_trace(&base, &cfg);
        idem = base.iter().zip(&twice).map(|(p, q)| (p - q).abs()).fold(idem, f64::max);
    }
    outcome(
        inv < 1e-6 && sign_exact && idem < 1e-4,
        format!(
            "200 traces (min detrended RMS {min_rms:.1e}), affine error {inv:.2e}, sign exact {sign_exact}, \
             idempotence error {idem:.2e}"
        ),
    )
}

fn c3_residual_identity() -> Outcome {
    let scenes = [
        SceneSpec::default().with_seed(3),
        SceneSpec::uniform(3, 0.8, 0.1, 0.6).with_seed(4),
        SceneSpec {
            illumination: vec![1.2, 1.0, 0.7],
            specular: vec![0.3, 0.25, 0.2],
            diffuse: vec![0.4, 0.55, 0.35],
            ..SceneSpec::default().with_seed(5).with_jitter(0.1)
        },
    ];
    let step = NoiseComponent::Step { t0_s: 4.0, gain: 0.05 };
    let lin = NoiseComponent::Linear { total: 0.1 };
    let sin = NoiseComponent::Sinusoid {
        freq_hz: 0.3,
        amplitude: 0.05,
    };
    let vs_sin = NoiseComponent::Sinusoid {
        freq_hz: 0.2,
        amplitude: 0.01,
    };
    let spec = |di: &[NoiseComponent], dv: &[NoiseComponent]| NoiseSpec {
        delta_i: di.to_vec(),
        delta_vs: dv.to_vec(),
    };
    let noises = [
        NoiseSpec::none(),
        spec(&[step], &[]),
        spec(&[lin], &[]),
        spec(&[sin], &[]),
        spec(&[], &[vs_sin]),
        spec(&[], &[step]),
        spec(&[lin, sin], &[]),
        spec(&[lin], &[vs_sin]),
        spec(&[step, lin, sin], &[lin, vs_sin]),
    ];
    let pulse = synth_pulse(&PulseSpec::default(), 30.0, 300).unwrap();
    let mut worst = 0.0f64;
    let mut combos = 0;
    for scene in &scenes {
        for noise in &noises {
            let ideal = render_ideal(scene, &pulse, 8, 8).unwrap();
            let noisy = render_noisy(scene, &pulse, noise, 8, 8).unwrap();
            let analytic = analytic_noise_residual(scene, &pulse, noise, 8, 8).unwrap();
            let measured = noisy.sub(&ideal).unwrap();
            worst = measured
                .data()
                .iter()
                .zip(analytic.data())
                .map(|(p, q)| (p - q).abs())
                .fold(worst, f64::max);
            combos += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{combos} scene x noise combinations, max deviation {worst:.2e}"))
}

fn c4_welch() -> Outcome {
    let fps = 30.0;
    let x: Vec<f64> = (0..450)
        .map(|k| (2.0 * std::f64::consts::PI * 1.2 * k as f64 / fps).sin())
        .collect();
    let psd = welch_psd(&Waveform::new(x, fps).unwrap(), &WelchSpec::default()).unwrap();
    let peak = psd.peak_freq();
    let hr = hr_from_psd(&psd, 0.5, 3.0).unwrap().bpm;
    outcome(
        (peak - 1.2).abs() <= 0.00909 && (hr - 72.0).abs() <= 0.55,
        format!("peak {peak:.5} Hz, HR {hr:.3} BPM"),
    )
}

fn c5_end_to_end() -> Outcome {
    let sim = Simulation {
        scene: SceneSpec::default().with_seed(5).with_jitter(0.05),
        pulse: PulseSpec::sinusoid(72.0, 0.005),
        noise: NoiseSpec::none(),
        fps: 30.0,
        frames: 600,
        height: 8,
        width: 8,
    };
    let clip = sim.noisy().unwrap();
    let cfg = ExtractorConfig::default();
    let hrs: Vec<(ExtractorKind, f64)> = ExtractorKind::ALL
        .iter()
        .map(|&k| (k, video_hr(&run_extractor(k, &clip, &cfg).unwrap(), &HrConfig::default()).unwrap().bpm))
        .collect();
    let bin_bpm = 60.0 * 30.0 / 3300.0;
    let near = hrs.iter().all(|(_, h)| (h - 72.0).abs() <= 1.0);
    let spread = hrs.iter().map(|p| p.1).fold(f64::MIN, f64::max) - hrs.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let listed: Vec<String> = hrs.iter().map(|(k, h)| format!("{k} {h:.3}")).collect();
    outcome(
        near && spread <= bin_bpm + 1e-9,
        format!("{} BPM, spread {spread:.3} (bin {bin_bpm:.3})", listed.join(", ")),
    )
}

fn c6_directional() -> Outcome {
    let noise = NoiseSpec {
        delta_i: vec![
            NoiseComponent::Linear { total: 0.1 },
            NoiseComponent::Sinusoid {
                freq_hz: 0.3,
                amplitude: 0.05,
            },
        ],
        delta_vs: vec![],
    };
    let cfg = ExtractorConfig::default();
    let band = BandpassSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut tn_ratios, mut diff_ratios) = (Vec::new(), Vec::new());
    let (mut r_wins, mut ratio_wins) = (0, 0);
    let (mut r_tn_sum, mut r_diff_sum) = (0.0, 0.0);
    // diff_pooled follows the derivative of the pulse, so its correlation
    // with v_p is reported next to its correlation with the differenced pulse.
    let mut r_diff_own_sum = 0.0;
    for seed in 0..20u64 {
        let sim = Simulation {
            scene: SceneSpec::default().with_seed(100 + seed),
            pulse: PulseSpec {
                phase_rad: rng.random_range(0.0..std::f64::consts::TAU),
                ..PulseSpec::sinusoid(rng.random_range(60.0..=100.0), 0.005)
            },
            noise: noise.clone(),
            fps: 30.0,
            frames: 600,
            height: 8,
            width: 8,
        };
        let (ideal, noisy, pulse) = (sim.ideal().unwrap(), sim.noisy().unwrap(), sim.pulse_waveform().unwrap());
        let rt = residual_ratio(FeatureKind::Tn, &ideal, &noisy, &cfg.tn).unwrap();
        let rd = residual_ratio(FeatureKind::FrameDiff, &ideal, &noisy, &cfg.tn).unwrap();
        ratio_wins += usize::from(rt <= 0.1 * rd);
        tn_ratios.push(rt);
        diff_ratios.push(rd);
        let ct = pulse_correlation(ExtractorKind::TnPooled, &noisy, &pulse, &cfg, &band).unwrap();
        let cd = pulse_correlation(ExtractorKind::DiffPooled, &noisy, &pulse, &cfg, &band).unwrap();
        r_wins += usize::from(ct >= cd);
        r_tn_sum += ct;
        r_diff_sum += cd;
        let diff_wave = run_extractor(ExtractorKind::DiffPooled, &noisy, &cfg).unwrap();
        let diff_band = bandpass(&diff_wave, &band).unwrap();
        let dp: Vec<f64> = pulse.samples().windows(2).map(|w| w[1] - w[0]).collect();
        r_diff_own_sum += pearson(diff_band.samples(), &dp).unwrap();
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mt, md) = (mean(&tn_ratios), mean(&diff_ratios));
    let ratio_ok = mt <= 0.1 * md;
    let r_ok = r_wins >= 18;
    outcome(
        ratio_ok && r_ok,
        format!(
            "residual ratio tn {mt:.3} vs frame_diff {md:.3} (quotient {:.3}, need <= 0.1; {ratio_wins}/20 seeds) [{}]; \
             Pearson tn >= diff in {r_wins}/20 seeds (mean r {:.3} vs {:.3}) [{}]; \
             diff_pooled vs differenced pulse mean r {:.3}",
            mt / md,
            if ratio_ok { "ok" } else { "not met" },
            r_tn_sum / 20.0,
            r_diff_sum / 20.0,
            if r_ok { "ok" } else { "not met" },
            r_diff_own_sum / 20.0,
        ),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn c7_metrics() -> Outcome {
    let m = compute_metrics(&HrPair::zip(&[70.0, 80.0, 90.0], &[72.0, 78.0, 95.0])).unwrap();
    let fixed = close(m.mae, 3.0)
        && close(m.rmse, 11f64.sqrt())
        && m.pearson.is_some_and(|r| close(r, 230.0 / (200.0f64 * 854.0 / 3.0).sqrt()));
    let z = compute_metrics(&HrPair::zip(&[75.0, 75.0, 75.0], &[70.0, 80.0, 90.0])).unwrap();
    let flat = close(z.mae, 25.0 / 3.0) && close(z.rmse, (275.0f64 / 3.0).sqrt()) && z.pearson.is_none() && !z.pearson_defined();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ordered = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=40);
        let preds: Vec<f64> = (0..n).map(|_| rng.random_range(30.0..=180.0)).collect();
        let labels: Vec<f64> = (0..n).map(|_| rng.random_range(30.0..=180.0)).collect();
        let r = compute_metrics(&HrPair::zip(&preds, &labels)).unwrap();
        ordered += usize::from(r.rmse >= r.mae - 1e-12 * r.mae);
    }
    outcome(
        fixed && flat && ordered == 1000,
        format!("fixed vectors {fixed}, zero-variance case {flat}, RMSE >= MAE in {ordered}/1000 sets"),
    )
}

fn simulate_into(dir: &std::path::Path) -> Vec<Vec<u8>> {
    let out = dir.join("clip.rpgc");
    let cli = Cli::try_parse_from([
        "pulse-tn",
        "simulate",
        "--hr",
        "77",
        "--seed",
        "42",
        "--frames",
        "300",
        "--size",
        "8x8",
        "--noise",
        "linear:0.1+sin:0.3:0.05+vs/step:3:0.01",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let Command::Simulate(args) = &cli.command else {
        unreachable!()
    };
    let files = cmd_simulate(args).unwrap();
    [files.clip, files.sidecar, files.labels]
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect()
}

fn c8_harness() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let identical = simulate_into(a.path()) == simulate_into(b.path());

    let clip = FrameClip::from_fn((20, 4, 4, 3), 30.0, |(t, i, j, c)| 0.1 * (t + i + j + c) as f64 / 30.0).unwrap();
    let valid = encode_clip(&clip, Dtype::F32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut panics, mut rejected, mut accepted, mut unexpected_ok) = (0, 0, 0, 0);
    for case in 0..50 {
        let mut bytes = valid.clone();
        let mut touched_fps_only = true;
        if case % 5 == 4 {
            bytes.truncate(rng.random_range(0..32));
            touched_fps_only = false;
        } else {
            for _ in 0..rng.random_range(1..=3) {
                let pos = rng.random_range(0..32);
                bytes[pos] ^= rng.random_range(1..=255u8);
                touched_fps_only &= pos >= 28;
            }
        }
        match catch_unwind(AssertUnwindSafe(|| decode_clip(&bytes))) {
            Err(_) => panics += 1,
            Ok(Err(_)) => rejected += 1,
            Ok(Ok(_)) => {
                accepted += 1;
                unexpected_ok += usize::from(!touched_fps_only);
            }
        }
    }
    outcome(
        identical && panics == 0 && unexpected_ok == 0,
        format!(
            "simulate byte-identical {identical}; header fuzz: {rejected} rejected, {accepted} accepted (fps only), \
             {panics} panics, {unexpected_ok} structural mutations accepted"
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("OLS oracle equivalence", Duration::from_secs(1), c1_ols_oracle),
        ("TN invariance", Duration::from_secs(5), c2_tn_invariance),
        ("analytic residual identity", Duration::from_secs(10), c3_residual_identity),
        ("Welch accuracy", Duration::from_secs(1), c4_welch),
        ("end-to-end HR recovery", Duration::from_secs(5), c5_end_to_end),
        ("directional noise suppression", Duration::from_secs(30), c6_directional),
        ("metrics correctness", Duration::from_secs(1), c7_metrics),
        ("harness determinism and robustness", Duration::from_secs(10), c8_harness),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {name}: {} ({:.2} s of {} s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/8 passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
