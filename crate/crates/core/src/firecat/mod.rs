//! FireCat: gradient-boosted trees over mixed categorical and numeric
//! factors with ordered target-statistic encoding, plus the
//! empirical-distribution baseline.

mod encoding;
mod features;
pub mod tree;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use encoding::{encode_categorical, EncodingTable, PriorMode};
pub use features::{
    catalog, FeatureColumn, FeatureFrame, FeatureGroup, FeatureKind, FeatureManifest, FeatureSpec,
};
pub use tree::Node;
use tree::{grow_tree, BinnedMatrix, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStopping {
    /// Share of the training rows held out to monitor log-loss.
    pub validation_fraction: f64,
    /// Rounds without improvement before stopping.
    pub patience: usize,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        EarlyStopping {
            validation_fraction: 0.1,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub min_samples_leaf: usize,
    pub prior_weight: f64,
    pub prior: PriorMode,
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: 200,
            max_depth: 6,
            learning_rate: 0.1,
            l2: 1.0,
            min_samples_leaf: 5,
            prior_weight: 1.0,
            prior: PriorMode::Prefix,
            early_stopping: Some(EarlyStopping::default()),
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.l2 >= 0.0) || !(self.prior_weight > 0.0) {
            return Err(Error::Config("l2 must be >= 0 and prior_weight > 0".into()));
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) || es.patience == 0 {
                return Err(Error::Config(
                    "early stopping needs a validation fraction in (0, 1) and patience >= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Numeric feature matrix in manifest order, column major; NaN is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub columns: Vec<Vec<f64>>,
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub version: u32,
    pub target: String,
    pub n_classes: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub params: BoostParams,
    pub manifest: FeatureManifest,
    /// Keyed by categorical feature name.
    pub encodings: BTreeMap<String, EncodingTable>,
    /// One entry per round, each holding `n_classes` trees.
    pub rounds: Vec<Vec<Node>>,
    /// Mean training log-loss before any round and after each round.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let m = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = margins.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_loss(margins: &[Vec<f64>], labels: &[usize]) -> f64 {
    margins
        .iter()
        .zip(labels)
        .map(|(m, &y)| {
            let mx = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + m.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            lse - m[y]
        })
        .sum::<f64>()
        / labels.len().max(1) as f64
}

fn check_numeric(name: &str, values: &[Option<f64>]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|v| match v {
            None => Ok(f64::NAN),
            Some(x) if x.is_finite() => Ok(*x),
            Some(x) => Err(Error::Data {
                column: name.to_string(),
                message: format!("non-finite value {x}"),
            }),
        })
        .collect()
}

impl BoostModel {
    /// Numeric matrix for inference, using the stored encoding tables.
    pub fn encode(&self, frame: &FeatureFrame) -> Result<EncodedMatrix> {
        if frame.manifest != self.manifest {
            return Err(Error::Shape("frame manifest differs from the model's".into()));
        }
        let columns = self
            .manifest
            .features
            .iter()
            .zip(&frame.columns)
            .map(|(f, col)| match col {
                FeatureColumn::Numeric(v) => check_numeric(&f.name, v),
                FeatureColumn::Categorical(v) => {
                    let table = self
                        .encodings
                        .get(&f.name)
                        .ok_or_else(|| Error::lookup("encoding table", f.name.as_str()))?;
                    Ok(v.iter().map(|c| table.encode(c)).collect())
                }
            })
            .collect::<Result<_>>()?;
        Ok(EncodedMatrix { columns })
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Raw class margins for one encoded row.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                m[k] += tree.predict(|f| x[f]);
            }
        }
        m
    }

    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.margins(x))
    }

    pub fn predict_encoded(&self, x: &EncodedMatrix) -> Vec<Vec<f64>> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row(&x.row(i)))
            .collect()
    }

    pub fn predict_proba(&self, frame: &FeatureFrame) -> Result<Vec<Vec<f64>>> {
        Ok(self.predict_encoded(&self.encode(frame)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: BoostModel = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Training-time encoding: ordered statistics for categorical columns
/// along a seeded permutation.
fn encode_training(
    frame: &FeatureFrame,
    labels: &[usize],
    params: &BoostParams,
) -> Result<(EncodedMatrix, BTreeMap<String, EncodingTable>)> {
    let mut perm: Vec<usize> = (0..labels.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_0e4c));
    let mut encodings = BTreeMap::new();
    let mut columns = Vec::with_capacity(frame.columns.len());
    for (f, col) in frame.manifest.features.iter().zip(&frame.columns) {
        columns.push(match col {
            FeatureColumn::Numeric(v) => check_numeric(&f.name, v)?,
            FeatureColumn::Categorical(v) => {
                let (enc, table) =
                    encode_categorical(v, labels, &perm, params.prior_weight, params.prior, params.seed);
                if let Some(bad) = enc.iter().find(|e| !e.is_finite()) {
                    return Err(Error::Data {
                        column: f.name.clone(),
                        message: format!("encoded value {bad}"),
                    });
                }
                encodings.insert(f.name.clone(), table);
                enc
            }
        });
    }
    Ok((EncodedMatrix { columns }, encodings))
}

/// Fits `n_classes` trees per round to the softmax cross-entropy gradients.
pub fn fit_firecat(
    frame: &FeatureFrame,
    labels: &[usize],
    n_classes: usize,
    target: &str,
    params: &BoostParams,
) -> Result<BoostModel> {
    params.validate()?;
    if frame.n_rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} label(s) for {} row(s)",
            labels.len(),
            frame.n_rows()
        )));
    }
    if let Some(y) = labels.iter().find(|y| **y >= n_classes) {
        return Err(Error::Label(format!("class {y} out of range for {n_classes} classes")));
    }
    let distinct = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
    if distinct < 2 {
        return Err(Error::DegenerateFit(format!(
            "target `{target}` has {distinct} class(es) in the training data"
        )));
    }

    let (train_rows, valid_rows) = match params.early_stopping {
        Some(es) => {
            let (t, v) = split_train_test(labels.len(), 1.0 - es.validation_fraction, params.seed ^ 0xea51)?;
            (t, v)
        }
        None => ((0..labels.len()).collect(), Vec::new()),
    };
    let train_frame = frame.subset(&train_rows);
    let train_labels: Vec<usize> = train_rows.iter().map(|&i| labels[i]).collect();
    let (x, encodings) = encode_training(&train_frame, &train_labels, params)?;

    let mut model = BoostModel {
        version: MODEL_FORMAT_VERSION,
        target: target.to_string(),
        n_classes,
        learning_rate: params.learning_rate,
        max_depth: params.max_depth,
        params: *params,
        manifest: frame.manifest.clone(),
        encodings,
        rounds: Vec::new(),
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
    };
    let valid_x = if valid_rows.is_empty() {
        None
    } else {
        Some(model.encode(&frame.subset(&valid_rows))?)
    };
    let valid_labels: Vec<usize> = valid_rows.iter().map(|&i| labels[i]).collect();

    let binned = BinnedMatrix::build(&x.columns);
    let n = train_labels.len();
    let rows: Vec<usize> = (0..n).collect();
    let tp = TreeParams {
        max_depth: params.max_depth,
        l2: params.l2,
        min_samples_leaf: params.min_samples_leaf.max(1),
        min_hessian: 1e-6,
        shrinkage: params.learning_rate,
    };
    let mut margins = vec![vec![0.0; n_classes]; n];
    let mut valid_margins = vec![vec![0.0; n_classes]; valid_labels.len()];
    model.train_loss.push(log_loss(&margins, &train_labels));
    if valid_x.is_some() {
        model.validation_loss.push(log_loss(&valid_margins, &valid_labels));
    }
    let mut best = (f64::INFINITY, 0usize);

    for round in 0..params.rounds {
        let probs: Vec<Vec<f64>> = margins.par_iter().map(|m| softmax(m)).collect();
        let trees: Vec<Node> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let grad: Vec<f64> = probs
                    .iter()
                    .zip(&train_labels)
                    .map(|(p, &y)| p[k] - if y == k { 1.0 } else { 0.0 })
                    .collect();
                let hess: Vec<f64> = probs.iter().map(|p| (p[k] * (1.0 - p[k])).max(1e-16)).collect();
                grow_tree(&binned, &rows, &grad, &hess, &tp)
            })
            .collect();
        margins.par_iter_mut().enumerate().for_each(|(i, m)| {
            for (k, t) in trees.iter().enumerate() {
                m[k] += t.predict(|f| x.columns[f][i]);
            }
        });
        model.train_loss.push(log_loss(&margins, &train_labels));
        if let Some(vx) = &valid_x {
            valid_margins.par_iter_mut().enumerate().for_each(|(i, m)| {
                for (k, t) in trees.iter().enumerate() {
                    m[k] += t.predict(|f| vx.columns[f][i]);
                }
            });
            let vl = log_loss(&valid_margins, &valid_labels);
            model.validation_loss.push(vl);
            model.rounds.push(trees);
            if vl < best.0 {
                best = (vl, round + 1);
            } else if round + 1 - best.1 >= params.early_stopping.map_or(usize::MAX, |e| e.patience) {
                break;
            }
        } else {
            model.rounds.push(trees);
        }
    }
    if valid_x.is_some() {
        model.rounds.truncate(best.1);
        model.train_loss.truncate(best.1 + 1);
        model.validation_loss.truncate(best.1 + 1);
    }
    Ok(model)
}

/// Predicts the training class frequencies for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub target: String,
    pub probs: Vec<f64>,
}

impl BaselineModel {
    pub fn predict(&self, n_rows: usize) -> Vec<Vec<f64>> {
        vec![self.probs.clone(); n_rows]
    }
}

pub fn fit_baseline(labels: &[usize], n_classes: usize, target: &str) -> Result<BaselineModel> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("baseline needs at least one label".into()));
    }
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        *counts
            .get_mut(y)
            .ok_or_else(|| Error::Label(format!("class {y} out of range for {n_classes} classes")))? += 1;
    }
    Ok(BaselineModel {
        target: target.to_string(),
        probs: counts.iter().map(|&c| c as f64 / labels.len() as f64).collect(),
    })
}

/// Seeded shuffle split: `round(n * fraction)` training indices, the rest
/// for testing. Both lists are sorted.
pub fn split_train_test(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} must lie in (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * fraction).round() as usize;
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub params: BoostParams,
    pub validation_log_loss: f64,
}

/// Scores each candidate on one seeded holdout of the given rows and
/// returns all results, best (lowest log-loss, earliest on ties) first.
pub fn grid_search(
    frame: &FeatureFrame,
    labels: &[usize],
    n_classes: usize,
    candidates: &[BoostParams],
    validation_fraction: f64,
    seed: u64,
) -> Result<Vec<GridResult>> {
    let (fit_rows, val_rows) = split_train_test(labels.len(), 1.0 - validation_fraction, seed)?;
    let fit_frame = frame.subset(&fit_rows);
    let fit_labels: Vec<usize> = fit_rows.iter().map(|&i| labels[i]).collect();
    let val_frame = frame.subset(&val_rows);
    let val_labels: Vec<usize> = val_rows.iter().map(|&i| labels[i]).collect();
    let mut results = candidates
        .iter()
        .map(|p| {
            let model = fit_firecat(&fit_frame, &fit_labels, n_classes, "grid", p)?;
            let probs = model.predict_proba(&val_frame)?;
            let ll = probs
                .iter()
                .zip(&val_labels)
                .map(|(p, &y)| -p[y].max(1e-15).ln())
                .sum::<f64>()
                / val_labels.len().max(1) as f64;
            Ok(GridResult {
                params: *p,
                validation_log_loss: ll,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.validation_log_loss.total_cmp(&b.validation_log_loss));
    Ok(results)
}
