//! Ground-truth label CSVs.
//!
//! Two layouts are accepted, told apart by the header:
//!
//! * `video_id,hr_bpm` with one row per video;
//! * `video_id,t_s,bvp` with a sampled reference pulse per video. Its label
//!   is the heart rate the standard pipeline finds in that reference pulse.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hr::{video_hr, HrConfig};
use crate::model::Waveform;
use crate::srm::{MAX_HR_BPM, MIN_HR_BPM};

pub type Labels = BTreeMap<String, f64>;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: unrecognised header {header:?}; expected video_id,hr_bpm or video_id,t_s,bvp")]
    Header { path: String, header: Vec<String> },
    #[error("{path}: row {row}: {reason}")]
    Row {
        path: String,
        row: usize,
        reason: String,
    },
    #[error("{path}: reference pulse for '{id}': {reason}")]
    Reference {
        path: String,
        id: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryRow {
    video_id: String,
    hr_bpm: f64,
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    video_id: String,
    t_s: f64,
    bvp: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabelError + '_ {
    move |source| LabelError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn check_hr(path: &Path, row: usize, hr: f64) -> Result<(), LabelError> {
    if (MIN_HR_BPM..=MAX_HR_BPM).contains(&hr) {
        Ok(())
    } else {
        Err(LabelError::Row {
            path: path.display().to_string(),
            row,
            reason: format!("hr_bpm {hr} outside [{MIN_HR_BPM}, {MAX_HR_BPM}]"),
        })
    }
}

pub fn read_labels(path: &Path, hr_cfg: &HrConfig) -> Result<Labels, LabelError> {
    let text = fs::read_to_string(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labels(&text, path, hr_cfg)
}

/// Parses label CSV text; `path` is only used in error messages.
pub fn parse_labels(text: &str, path: &Path, hr_cfg: &HrConfig) -> Result<Labels, LabelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["video_id", "hr_bpm"] => {
            let mut labels = Labels::new();
            for (k, row) in rdr.deserialize::<SummaryRow>().enumerate() {
                let row = row.map_err(csv_err(path))?;
                check_hr(path, k + 1, row.hr_bpm)?;
                labels.insert(row.video_id, row.hr_bpm);
            }
            Ok(labels)
        }
        ["video_id", "t_s", "bvp"] => {
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for row in rdr.deserialize::<SeriesRow>() {
                let row = row.map_err(csv_err(path))?;
                series.entry(row.video_id).or_default().push((row.t_s, row.bvp));
            }
            series
                .into_iter()
                .map(|(id, samples)| {
                    let hr = reference_hr(&samples, hr_cfg).map_err(|reason| {
                        LabelError::Reference {
                            path: path.display().to_string(),
                            id: id.clone(),
                            reason,
                        }
                    })?;
                    Ok((id, hr))
                })
                .collect()
        }
        _ => Err(LabelError::Header {
            path: path.display().to_string(),
            header,
        }),
    }
}

fn reference_hr(samples: &[(f64, f64)], cfg: &HrConfig) -> Result<f64, String> {
    if samples.len() < 2 {
        return Err("needs at least 2 samples".into());
    }
    let span = samples[samples.len() - 1].0 - samples[0].0;
    if span.is_nan() || span <= 0.0 {
        return Err("time stamps must increase".into());
    }
    let fps = (samples.len() - 1) as f64 / span;
    let dt = 1.0 / fps;
    if samples
        .windows(2)
        .any(|p| ((p[1].0 - p[0].0) - dt).abs() > 0.01 * dt)
    {
        return Err("time stamps are not uniformly spaced".into());
    }
    let w = Waveform::new(samples.iter().map(|s| s.1).collect(), fps).map_err(|e| e.to_string())?;
    video_hr(&w, cfg).map(|v| v.bpm).map_err(|e| e.to_string())
}

/// Sets `id`'s `hr_bpm` in a summary label file, creating it if needed.
/// Existing rows keep their order; a new id is appended.
pub fn upsert_label(path: &Path, id: &str, hr_bpm: f64) -> Result<(), LabelError> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    if path.exists() {
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
        for row in rdr.deserialize() {
            rows.push(row.map_err(csv_err(path))?);
        }
    }
    match rows.iter_mut().find(|r| r.video_id == id) {
        Some(r) => r.hr_bpm = hr_bpm,
        None => rows.push(SummaryRow {
            video_id: id.to_string(),
            hr_bpm,
        }),
    }
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        wtr.write_record(["video_id", "hr_bpm"]).map_err(csv_err(path))?;
    }
    for r in &rows {
        wtr.serialize(r).map_err(csv_err(path))?;
    }
    wtr.flush().map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })
}
