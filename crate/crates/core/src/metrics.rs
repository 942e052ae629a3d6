//! Probabilistic and point metrics for ordinal classifiers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(probs: &[Vec<f64>], labels: &[usize]) -> Result<usize> {
    if probs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Shape("no rows to evaluate".into()));
    }
    let k = probs[0].len();
    if k == 0 {
        return Err(Error::Shape("probability rows are empty".into()));
    }
    if let Some(i) = probs.iter().position(|p| p.len() != k) {
        return Err(Error::Shape(format!("row {i} has {} classes, expected {k}", probs[i].len())));
    }
    if let Some(i) = labels.iter().position(|&y| y >= k) {
        return Err(Error::Shape(format!("label {} at row {i} exceeds {k} classes", labels[i])));
    }
    Ok(k)
}

/// Mean over rows of the squared distance to the one-hot truth. In [0, 2].
pub fn brier(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check(probs, labels)?;
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            p.iter()
                .enumerate()
                .map(|(k, v)| (v - if k == y { 1.0 } else { 0.0 }).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Ranked probability score, averaged over rows and normalized by `K - 1`
/// per row. In [0, 1].
pub fn rps(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let k = check(probs, labels)?;
    if k < 2 {
        return Err(Error::Shape("ranked probability score needs at least two classes".into()));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let mut cum = 0.0;
            let mut s = 0.0;
            for (j, v) in p.iter().enumerate() {
                cum += v;
                let obs = if j >= y { 1.0 } else { 0.0 };
                s += (cum - obs).powi(2);
            }
            s / (k - 1) as f64
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Index of the largest probability; ties go to the lower index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Unweighted mean over classes present in truth or predictions.
    #[default]
    Macro,
    /// Mean weighted by true class support.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub f1: f64,
    pub mse: f64,
    pub wmse: f64,
    /// Per-class WMSE weights actually applied.
    pub wmse_weights: Vec<f64>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// `N / (K * N_k)`; zero for classes absent from `labels`.
pub fn inverse_frequency_weights(labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { n / (n_classes as f64 * c as f64) })
        .collect()
}

pub fn point_metrics(
    probs: &[Vec<f64>],
    labels: &[usize],
    weights: Option<&[f64]>,
    averaging: Averaging,
) -> Result<PointMetrics> {
    let k = check(probs, labels)?;
    let weights = match weights {
        Some(w) if w.len() != k => {
            return Err(Error::Config(format!("{} WMSE weights for {k} classes", w.len())));
        }
        Some(w) if w.iter().any(|v| !v.is_finite() || *v < 0.0) => {
            return Err(Error::Config("WMSE weights must be finite and non-negative".into()));
        }
        Some(w) => w.to_vec(),
        None => inverse_frequency_weights(labels, k),
    };
    let n = labels.len() as f64;
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let mut confusion = vec![vec![0usize; k]; k];
    let (mut correct, mut se, mut wse, mut wsum) = (0usize, 0.0, 0.0, 0.0);
    for (&y, &p) in labels.iter().zip(&preds) {
        confusion[y][p] += 1;
        correct += usize::from(y == p);
        let d2 = (p as f64 - y as f64).powi(2);
        se += d2;
        wse += weights[y] * d2;
        wsum += weights[y];
    }

    let mut prec_acc = 0.0;
    let mut f1_acc = 0.0;
    let mut denom = 0.0;
    for (c, row) in confusion.iter().enumerate() {
        let support = row.iter().sum::<usize>();
        let predicted = confusion.iter().map(|r| r[c]).sum::<usize>();
        if support == 0 && predicted == 0 {
            continue;
        }
        let tp = row[c] as f64;
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let w = match averaging {
            Averaging::Macro => 1.0,
            Averaging::Weighted => support as f64,
        };
        prec_acc += w * precision;
        f1_acc += w * f1;
        denom += w;
    }
    let (precision, f1) = if denom > 0.0 {
        (prec_acc / denom, f1_acc / denom)
    } else {
        (0.0, 0.0)
    };

    Ok(PointMetrics {
        accuracy: correct as f64 / n,
        precision,
        f1,
        mse: se / n,
        wmse: if wsum > 0.0 { wse / wsum } else { 0.0 },
        wmse_weights: weights,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub coverage: f64,
    /// `None` when no row reaches `tau`.
    pub accuracy: Option<f64>,
}

pub fn confidence_curve(probs: &[Vec<f64>], labels: &[usize], taus: &[f64]) -> Result<Vec<CurvePoint>> {
    check(probs, labels)?;
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Config(format!("confidence threshold {t} outside [0, 1]")));
    }
    let scored: Vec<(f64, bool)> = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let a = argmax(p);
            (p[a], a == y)
        })
        .collect();
    let n = scored.len() as f64;
    Ok(taus
        .iter()
        .map(|&tau| {
            let (kept, hits) = scored
                .iter()
                .filter(|(c, _)| *c >= tau)
                .fold((0usize, 0usize), |(k, h), (_, ok)| (k + 1, h + usize::from(*ok)));
            CurvePoint {
                tau,
                coverage: kept as f64 / n,
                accuracy: (kept > 0).then(|| hits as f64 / kept as f64),
            }
        })
        .collect())
}

/// 0, 0.05, ..., 1.
pub fn default_taus() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub wmse_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            wmse_weights: None,
            averaging: Averaging::Macro,
            taus: default_taus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub target: String,
    pub n: usize,
    pub n_classes: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub f1: f64,
    pub mse: f64,
    pub wmse: f64,
    pub brier: f64,
    pub rps: f64,
    pub averaging: Averaging,
    pub wmse_weights: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub confidence_curve: Vec<CurvePoint>,
}

pub const METRIC_NAMES: [&str; 7] = ["accuracy", "precision", "f1", "mse", "wmse", "brier", "rps"];

impl EvalReport {
    pub fn evaluate(
        model: &str,
        target: &str,
        probs: &[Vec<f64>],
        labels: &[usize],
        options: &EvalOptions,
    ) -> Result<Self> {
        let k = check(probs, labels)?;
        let point = point_metrics(probs, labels, options.wmse_weights.as_deref(), options.averaging)?;
        Ok(Self {
            model: model.to_string(),
            target: target.to_string(),
            n: labels.len(),
            n_classes: k,
            accuracy: point.accuracy,
            precision: point.precision,
            f1: point.f1,
            mse: point.mse,
            wmse: point.wmse,
            brier: brier(probs, labels)?,
            rps: rps(probs, labels)?,
            averaging: options.averaging,
            wmse_weights: point.wmse_weights,
            confusion: point.confusion,
            confidence_curve: confidence_curve(probs, labels, &options.taus)?,
        })
    }

    /// Values in `METRIC_NAMES` order.
    pub fn values(&self) -> [f64; 7] {
        [self.accuracy, self.precision, self.f1, self.mse, self.wmse, self.brier, self.rps]
    }

    /// Per metric, whether `self` is strictly better than `other`. The first
    /// three are higher-is-better; the rest are losses.
    pub fn beats(&self, other: &EvalReport) -> [bool; 7] {
        let (a, b) = (self.values(), other.values());
        std::array::from_fn(|i| if i < 3 { a[i] > b[i] } else { a[i] < b[i] })
    }

    pub fn write_confusion_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["true", "predicted", "count"])?;
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, c) in row.iter().enumerate() {
                w.write_record([t.to_string(), p.to_string(), c.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<confusion writer>", e))?;
        Ok(())
    }

    /// `tau,coverage,accuracy`; accuracy is empty where undefined.
    pub fn write_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["tau", "coverage", "accuracy"])?;
        for p in &self.confidence_curve {
            w.write_record([
                p.tau.to_string(),
                p.coverage.to_string(),
                p.accuracy.map(|a| a.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<curve writer>", e))?;
        Ok(())
    }
}
