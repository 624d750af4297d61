//! Manifest evaluation and extractor comparison.
//!
//! A manifest is a directory of `*.rpgc` clips plus `labels.csv`. Clips are
//! processed on a bounded worker pool and rows are reported in sorted
//! video-id order, so reports do not depend on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clipfile::{read_clip, write_clip, Dtype};
use super::features::{residual_ratio, FeatureKind};
use super::labels::{read_labels, upsert_label, Labels};
use super::HarnessError;
use crate::extract::{run_extractor, ExtractorConfig, ExtractorKind};
use crate::hr::{compute_metrics, video_hr, HrConfig, HrPair};
use crate::srm::Simulation;

pub const CLIP_EXT: &str = "rpgc";
pub const LABELS_FILE: &str = "labels.csv";
pub const THREADS_ENV: &str = "PULSE_TN_THREADS";

/// `foo.rpgc` -> `foo.sim.json`.
pub fn sidecar_path(clip: &Path) -> PathBuf {
    clip.with_extension("sim.json")
}

pub fn video_id(clip: &Path) -> String {
    clip.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Worker count from `PULSE_TN_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub dir: PathBuf,
    /// `(video_id, path)` sorted by id.
    pub clips: Vec<(String, PathBuf)>,
    pub labels: Labels,
}

impl Manifest {
    pub fn load(dir: &Path, hr: &HrConfig) -> Result<Self, HarnessError> {
        let entries = fs::read_dir(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut clips = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|source| HarnessError::Io {
                    path: dir.display().to_string(),
                    source,
                })?
                .path();
            if path.extension().is_some_and(|e| e == CLIP_EXT) {
                clips.push((video_id(&path), path));
            }
        }
        if clips.is_empty() {
            return Err(HarnessError::Usage(format!(
                "manifest {} contains no .{CLIP_EXT} clips",
                dir.display()
            )));
        }
        clips.sort();
        let labels_path = dir.join(LABELS_FILE);
        let labels = if labels_path.exists() {
            read_labels(&labels_path, hr)?
        } else {
            Labels::new()
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            clips,
            labels,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub extractor: ExtractorKind,
    pub extractor_cfg: ExtractorConfig,
    pub hr: HrConfig,
    pub skip_bad: bool,
    pub threads: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            extractor: ExtractorKind::TnPooled,
            extractor_cfg: ExtractorConfig::default(),
            hr: HrConfig::default(),
            skip_bad: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    MissingLabel,
    Unreadable,
    EstimateFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRow {
    pub id: String,
    pub hr_pred: Option<f64>,
    pub hr_label: Option<f64>,
    pub abs_err: Option<f64>,
    pub segments_used: usize,
    pub dropped_segments: usize,
    pub status: RowStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub extractor: ExtractorKind,
    pub epsilon: f64,
    pub channel: Option<usize>,
    pub hr: HrConfig,
    pub manifest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub config: ReportConfig,
    pub per_video: Vec<VideoRow>,
    pub n_scored: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub pearson: Option<f64>,
    pub pearson_defined: bool,
}

/// `(n_scored, mae, rmse, pearson)` from rows that have both values.
pub fn aggregate(rows: &[VideoRow]) -> (usize, Option<f64>, Option<f64>, Option<f64>) {
    let pairs: Vec<HrPair> = rows
        .iter()
        .filter_map(|r| Some(HrPair::new(r.id.clone(), r.hr_pred?, r.hr_label?)))
        .collect();
    match compute_metrics(&pairs) {
        Ok(m) => (pairs.len(), Some(m.mae), Some(m.rmse), m.pearson),
        Err(_) => (0, None, None, None),
    }
}

impl ReportDoc {
    fn from_rows(config: ReportConfig, per_video: Vec<VideoRow>) -> Self {
        let (n_scored, mae, rmse, pearson) = aggregate(&per_video);
        Self {
            config,
            per_video,
            n_scored,
            mae,
            rmse,
            pearson,
            pearson_defined: pearson.is_some(),
        }
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let n = threads
        .or_else(threads_from_env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start {n} workers: {e}")))
}

fn eval_clip(id: &str, path: &Path, label: Option<f64>, opts: &EvalOptions) -> Result<VideoRow, HarnessError> {
    let mut row = VideoRow {
        id: id.to_string(),
        hr_pred: None,
        hr_label: label,
        abs_err: None,
        segments_used: 0,
        dropped_segments: 0,
        status: RowStatus::Ok,
        error: None,
    };
    let clip = match read_clip(path) {
        Ok(c) => c,
        Err(e) if opts.skip_bad => {
            row.status = RowStatus::Unreadable;
            row.error = Some(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e.into()),
    };
    let estimate = run_extractor(opts.extractor, &clip, &opts.extractor_cfg)
        .and_then(|w| video_hr(&w, &opts.hr));
    match estimate {
        Ok(v) => {
            row.hr_pred = Some(v.bpm);
            row.segments_used = v.segment_bpm.len();
            row.dropped_segments = v.dropped_segments;
            match label {
                Some(l) => row.abs_err = Some((v.bpm - l).abs()),
                None => row.status = RowStatus::MissingLabel,
            }
        }
        Err(e) => {
            row.status = RowStatus::EstimateFailed;
            row.error = Some(e.to_string());
        }
    }
    Ok(row)
}

pub fn evaluate(manifest: &Manifest, opts: &EvalOptions) -> Result<ReportDoc, HarnessError> {
    let rows: Vec<VideoRow> = pool(opts.threads)?.install(|| {
        manifest
            .clips
            .par_iter()
            .map(|(id, path)| eval_clip(id, path, manifest.labels.get(id).copied(), opts))
            .collect::<Result<_, _>>()
    })?;
    let config = ReportConfig {
        extractor: opts.extractor,
        epsilon: opts.extractor_cfg.tn.epsilon(),
        channel: opts.extractor_cfg.channel,
        hr: opts.hr,
        manifest: manifest.dir.display().to_string(),
    };
    Ok(ReportDoc::from_rows(config, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub extractor: ExtractorKind,
    pub n_scored: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub pearson: Option<f64>,
    pub pearson_defined: bool,
    pub feature: FeatureKind,
    /// Mean feature-space noise-residual ratio over clips with a simulation
    /// sidecar; absent when none have one.
    pub residual_ratio: Option<f64>,
    pub residual_clips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDoc {
    pub manifest: String,
    pub hr: HrConfig,
    pub epsilon: f64,
    pub rows: Vec<CompareRow>,
}

fn load_sidecar(path: &Path) -> Result<Option<Simulation>, HarnessError> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|source| HarnessError::Io {
        path: side.display().to_string(),
        source,
    })?;
    Ok(Some(serde_json::from_str(&text)?))
}

pub fn compare(
    manifest: &Manifest,
    kinds: &[ExtractorKind],
    opts: &EvalOptions,
) -> Result<CompareDoc, HarnessError> {
    if kinds.is_empty() {
        return Err(HarnessError::Usage("no extractors to compare".into()));
    }
    let sims: Vec<Simulation> = manifest
        .clips
        .iter()
        .map(|(_, p)| load_sidecar(p))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let workers = pool(opts.threads)?;
    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let report = evaluate(manifest, &EvalOptions { extractor: kind, ..*opts })?;
        let feature = FeatureKind::for_extractor(kind);
        let ratios: Vec<f64> = workers.install(|| {
            sims.par_iter()
                .map(|s| {
                    let (ideal, noisy) = (s.ideal()?, s.noisy()?);
                    residual_ratio(feature, &ideal, &noisy, &opts.extractor_cfg.tn)
                })
                .collect::<Result<_, _>>()
        })?;
        rows.push(CompareRow {
            extractor: kind,
            n_scored: report.n_scored,
            mae: report.mae,
            rmse: report.rmse,
            pearson: report.pearson,
            pearson_defined: report.pearson_defined,
            feature,
            residual_ratio: (!ratios.is_empty())
                .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            residual_clips: ratios.len(),
        });
    }
    Ok(CompareDoc {
        manifest: manifest.dir.display().to_string(),
        hr: opts.hr,
        epsilon: opts.extractor_cfg.tn.epsilon(),
        rows,
    })
}

/// Paths written by [`simulate_to_files`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFiles {
    pub clip: PathBuf,
    pub sidecar: PathBuf,
    pub labels: PathBuf,
    pub video_id: String,
}

/// Renders `sim`'s noisy clip to `out`, its parameters to the sidecar, and
/// its heart rate into `labels` (default: `labels.csv` next to `out`).
pub fn simulate_to_files(
    sim: &Simulation,
    out: &Path,
    labels: Option<&Path>,
    dtype: Dtype,
) -> Result<SimulatedFiles, HarnessError> {
    let clip = sim.noisy()?;
    write_clip(&clip, out, dtype)?;
    let sidecar = sidecar_path(out);
    let json = serde_json::to_string_pretty(sim)?;
    fs::write(&sidecar, json + "\n").map_err(|source| HarnessError::Io {
        path: sidecar.display().to_string(),
        source,
    })?;
    let labels = labels.map(Path::to_path_buf).unwrap_or_else(|| {
        out.parent()
            .unwrap_or_else(|| Path::new("."))
            .join(LABELS_FILE)
    });
    let id = video_id(out);
    upsert_label(&labels, &id, sim.pulse.hr_bpm)?;
    Ok(SimulatedFiles {
        clip: out.to_path_buf(),
        sidecar,
        labels,
        video_id: id,
    })
}
