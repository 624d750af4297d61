use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicted and reference heart rate for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrPair {
    pub video_id: String,
    pub hr_pred: f64,
    pub hr_label: f64,
}

impl HrPair {
    pub fn new(video_id: impl Into<String>, hr_pred: f64, hr_label: f64) -> Self {
        Self {
            video_id: video_id.into(),
            hr_pred,
            hr_label,
        }
    }

    /// Pairs `preds[k]` with `labels[k]`, ids are the indices.
    pub fn zip(preds: &[f64], labels: &[f64]) -> Vec<HrPair> {
        preds
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(k, (&p, &l))| HrPair::new(k.to_string(), p, l))
            .collect()
    }

    pub fn abs_err(&self) -> f64 {
        (self.hr_pred - self.hr_label).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pairs: Vec<HrPair>,
    pub mae: f64,
    pub rmse: f64,
    /// `None` when either vector has zero variance or fewer than 2 pairs.
    pub pearson: Option<f64>,
}

impl MetricsReport {
    pub fn pearson_defined(&self) -> bool {
        self.pearson.is_some()
    }
}

/// Linear correlation; `None` for fewer than 2 points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// MAE, RMSE and Pearson correlation over `pairs`.
pub fn compute_metrics(pairs: &[HrPair]) -> Result<MetricsReport> {
    if pairs.is_empty() {
        return Err(Error::invalid("metrics need at least one pair"));
    }
    let n = pairs.len() as f64;
    let mae = pairs.iter().map(HrPair::abs_err).sum::<f64>() / n;
    let mse = pairs
        .iter()
        .map(|p| (p.hr_pred - p.hr_label).powi(2))
        .sum::<f64>()
        / n;
    let preds: Vec<f64> = pairs.iter().map(|p| p.hr_pred).collect();
    let labels: Vec<f64> = pairs.iter().map(|p| p.hr_label).collect();
    Ok(MetricsReport {
        pairs: pairs.to_vec(),
        mae,
        rmse: mse.sqrt(),
        pearson: pearson(&preds, &labels),
    })
}
