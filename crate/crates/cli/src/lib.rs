//! Command line front end for pulse-tn.
//!
//! Every subcommand is a plain function from parsed arguments to the text
//! it prints, so integration tests can drive the tool without a subprocess.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pulse_tn_core::harness::{
    self, compare, evaluate, parse_noise_spec, read_clip, simulate_to_files, write_clip, Dtype,
    EvalOptions, HarnessError, Manifest, SimulatedFiles,
};
use pulse_tn_core::hr::{bandpass, video_hr, welch_psd, BandpassSpec, HrConfig, WelchSpec};
use pulse_tn_core::srm::Simulation;
use pulse_tn_core::{
    diff_normalized, frame_diff, run_extractor, tn, ExtractorConfig, ExtractorKind, PulseShape,
    PulseSpec, SceneSpec, TnConfig,
};

#[derive(Debug, Parser)]
#[command(name = "pulse-tn", version, about = "Temporal-normalization pulse toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic reflectance-model clip and record its label.
    Simulate(SimulateArgs),
    /// Apply TN or a difference transform to a clip file.
    Transform(TransformArgs),
    /// Estimate the heart rate of one clip.
    Estimate(EstimateArgs),
    /// Score one extractor over a manifest directory.
    Evaluate(EvaluateArgs),
    /// Score several extractors side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DtypeArg {
    F32,
    U8,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::F32 => Dtype::F32,
            DtypeArg::U8 => Dtype::U8,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Sinusoid,
    Harmonic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 72.0)]
    pub hr: f64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 600)]
    pub frames: usize,
    /// Frame size as HxW.
    #[arg(long, default_value = "8x8", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Noise spec, e.g. "linear:0.1+sin:0.3:0.05+vs/step:2:0.01".
    #[arg(long, default_value = "none")]
    pub noise: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Label file to update; defaults to labels.csv next to --out.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.005)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Sinusoid)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 0.3)]
    pub harmonic_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phase: f64,
    #[arg(long, default_value_t = 0.05)]
    pub jitter: f64,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long, default_value_t = 1.0)]
    pub illumination: f64,
    #[arg(long, default_value_t = 0.2)]
    pub specular: f64,
    #[arg(long, default_value_t = 0.5)]
    pub diffuse: f64,
    #[arg(long, value_enum, default_value_t = DtypeArg::F32)]
    pub dtype: DtypeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Tn,
    Diff,
    Diffnorm,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = pulse_tn_core::tn::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

/// Heart-rate pipeline settings shared by estimate, evaluate and compare.
#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 15.0)]
    pub segment_s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub low_hz: f64,
    #[arg(long, default_value_t = 3.0)]
    pub high_hz: f64,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Single forward filter pass instead of forward-backward.
    #[arg(long)]
    pub causal: bool,
    #[arg(long, default_value_t = 256)]
    pub window: usize,
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, default_value_t = 3300)]
    pub nfft: usize,
    #[arg(long, default_value_t = pulse_tn_core::tn::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Pulse channel; green by default.
    #[arg(long)]
    pub channel: Option<usize>,
}

impl PipelineArgs {
    pub fn hr_config(&self) -> HrConfig {
        HrConfig {
            segment_s: self.segment_s,
            bandpass: BandpassSpec {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                order: self.order,
                zero_phase: !self.causal,
            },
            welch: WelchSpec {
                window_len: self.window,
                overlap: self.overlap,
                nfft: self.nfft,
            },
            ..HrConfig::default()
        }
    }

    pub fn extractor_config(&self) -> Result<ExtractorConfig> {
        Ok(ExtractorConfig {
            tn: TnConfig::new(self.epsilon)?,
            channel: self.channel,
        })
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "tn_pooled", value_parser = parse_extractor)]
    pub extractor: ExtractorKind,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write the extracted waveform as CSV (t_s,value).
    #[arg(long)]
    pub dump_waveform: Option<PathBuf>,
    /// Write the Welch PSD of the bandpassed waveform as CSV (freq_hz,power).
    #[arg(long)]
    pub dump_psd: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "tn_pooled", value_parser = parse_extractor)]
    pub extractor: ExtractorKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Report unreadable clips as flagged rows instead of failing.
    #[arg(long)]
    pub skip_bad: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "green_raw,tn_pooled,diff_pooled",
        value_parser = parse_extractor
    )]
    pub extractors: Vec<ExtractorKind>,
    /// Write the comparison document here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in '{s}'"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in '{s}'"))?;
    if h == 0 || w == 0 {
        return Err(format!("size must be at least 1x1, got '{s}'"));
    }
    Ok((h, w))
}

fn parse_extractor(s: &str) -> Result<ExtractorKind, String> {
    s.parse().map_err(|e: pulse_tn_core::Error| e.to_string())
}

/// Whether `err` should map to the usage exit code.
pub fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(e.downcast_ref::<HarnessError>(), Some(HarnessError::Usage(_)))
            || e.is::<harness::NoiseParseError>()
    })
}

pub fn simulation_from_args(args: &SimulateArgs) -> Result<Simulation> {
    let noise = parse_noise_spec(&args.noise).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let scene = SceneSpec {
        pixel_jitter: args.jitter,
        seed: args.seed,
        ..SceneSpec::uniform(args.channels, args.illumination, args.specular, args.diffuse)
    };
    scene.validate()?;
    let pulse = PulseSpec {
        hr_bpm: args.hr,
        amplitude: args.amplitude,
        shape: match args.shape {
            ShapeArg::Sinusoid => PulseShape::Sinusoid,
            ShapeArg::Harmonic => PulseShape::SinusoidWithHarmonic,
        },
        harmonic_ratio: args.harmonic_ratio,
        phase_rad: args.phase,
    };
    Ok(Simulation {
        scene,
        pulse,
        noise,
        fps: args.fps,
        frames: args.frames,
        height: args.size.0,
        width: args.size.1,
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulatedFiles> {
    let sim = simulation_from_args(args)?;
    Ok(simulate_to_files(&sim, &args.out, args.labels.as_deref(), args.dtype.into())?)
}

pub fn cmd_transform(args: &TransformArgs) -> Result<()> {
    let clip = read_clip(&args.input)?;
    let out = match args.method {
        Method::Tn => tn(&clip, &TnConfig::new(args.epsilon)?)?,
        Method::Diff => frame_diff(&clip).into_frame_clip()?,
        Method::Diffnorm => diff_normalized(&clip).into_frame_clip()?,
    };
    write_clip(&out, &args.out, Dtype::F32)?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let mut file = std::io::BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(file, "{header}")?;
    for (a, b) in rows {
        writeln!(file, "{a},{b}")?;
    }
    file.flush()?;
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String> {
    let clip = read_clip(&args.input)?;
    let hr_cfg = args.pipeline.hr_config();
    let waveform = run_extractor(args.extractor, &clip, &args.pipeline.extractor_config()?)?;
    if let Some(path) = &args.dump_waveform {
        let fps = waveform.fps();
        write_csv(
            path,
            "t_s,value",
            waveform.samples().iter().enumerate().map(|(k, &v)| (k as f64 / fps, v)),
        )?;
    }
    if let Some(path) = &args.dump_psd {
        let filtered = bandpass(&waveform, &hr_cfg.bandpass)?;
        let welch = WelchSpec {
            window_len: hr_cfg.welch.window_len.min(filtered.len()),
            ..hr_cfg.welch
        };
        let psd = welch_psd(&filtered, &welch)?;
        write_csv(path, "freq_hz,power", psd.freqs.iter().copied().zip(psd.power.iter().copied()))?;
    }
    let hr = video_hr(&waveform, &hr_cfg)?;
    let doc = serde_json::json!({
        "input": args.input.display().to_string(),
        "extractor": args.extractor,
        "hr_bpm": hr.bpm,
        "segment_bpm": hr.segment_bpm,
        "dropped_segments": hr.dropped_segments,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn eval_options(
    extractor: ExtractorKind,
    pipeline: &PipelineArgs,
    skip_bad: bool,
) -> Result<EvalOptions> {
    Ok(EvalOptions {
        extractor,
        extractor_cfg: pipeline.extractor_config()?,
        hr: pipeline.hr_config(),
        skip_bad,
        threads: None,
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String> {
    let opts = eval_options(args.extractor, &args.pipeline, args.skip_bad)?;
    let manifest = Manifest::load(&args.manifest, &opts.hr)?;
    let report = evaluate(&manifest, &opts)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    fs::write(&args.out, &text).with_context(|| format!("writing {}", args.out.display()))?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    Ok(format!(
        "{}: {} videos, {} scored, MAE {} RMSE {} Pearson {}",
        args.extractor,
        report.per_video.len(),
        report.n_scored,
        fmt(report.mae),
        fmt(report.rmse),
        fmt(report.pearson),
    ))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let Some(&first) = args.extractors.first() else {
        bail!(HarnessError::Usage("--extractors is empty".into()));
    };
    let opts = eval_options(first, &args.pipeline, args.skip_bad)?;
    let manifest = Manifest::load(&args.manifest, &opts.hr)?;
    let doc = compare(&manifest, &args.extractors, &opts)?;
    let text = serde_json::to_string_pretty(&doc)?;
    if let Some(out) = &args.out {
        fs::write(out, text.clone() + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(text)
}

/// Runs one parsed command and returns what it prints on success.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(a) => {
            let files = cmd_simulate(a)?;
            Ok(format!(
                "wrote {} ({}), label {} bpm -> {}",
                files.clip.display(),
                files.video_id,
                a.hr,
                files.labels.display()
            ))
        }
        Command::Transform(a) => {
            cmd_transform(a)?;
            Ok(format!("wrote {}", a.out.display()))
        }
        Command::Estimate(a) => cmd_estimate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}
