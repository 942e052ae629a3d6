//! Exact path-dependent TreeSHAP for FireCat models, factor rankings,
//! per-category effects, and one- and two-factor partial dependence.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firecat::{BoostModel, EncodedMatrix, FeatureColumn, FeatureFrame, FeatureGroup, FeatureKind, FeatureManifest, Node};

/// Margin-scale attributions for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub class: usize,
    pub features: Vec<String>,
    /// Cover-weighted expected margin; identical for every row.
    pub base: f64,
    /// `values[row][feature]`.
    pub values: Vec<Vec<f64>>,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    /// `base + sum of contributions` for one row.
    pub fn reconstructed_margin(&self, row: usize) -> f64 {
        self.base + self.values[row].iter().sum::<f64>()
    }

    pub fn mean_abs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.features.len()];
        for row in &self.values {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v.abs();
            }
        }
        let n = self.n_rows().max(1) as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// Cover-weighted mean leaf value.
pub fn expected_value(tree: &Node) -> f64 {
    match tree {
        Node::Leaf { value, .. } => *value,
        Node::Split { left, right, cover, .. } => {
            (left.cover() * expected_value(left) + right.cover() * expected_value(right)) / cover
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, depth: usize, zero: f64, one: f64, feature: Option<usize>) {
    path.truncate(depth);
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let l = depth as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / (l + 1.0);
        path[i].weight = zero * path[i].weight * (l - i as f64) / (l + 1.0);
    }
}

fn unwind(path: &mut Vec<PathElem>, depth: usize, index: usize) {
    let PathElem { one, zero, .. } = path[index];
    let l = depth as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * (l + 1.0) / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (l - i as f64) / (l + 1.0);
        } else {
            path[i].weight = path[i].weight * (l + 1.0) / (zero * (l - i as f64));
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.truncate(depth);
}

fn unwound_sum(path: &[PathElem], depth: usize, index: usize) -> f64 {
    let PathElem { one, zero, .. } = path[index];
    let l = depth as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (l - i as f64);
        } else {
            total += path[i].weight / (zero * (l - i as f64));
        }
    }
    total * (l + 1.0)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    node: &Node,
    x: &[f64],
    phi: &mut [f64],
    parent: &[PathElem],
    depth: usize,
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    let mut path = parent.to_vec();
    extend(&mut path, depth, zero, one, feature);
    match node {
        Node::Leaf { value, .. } => {
            for i in 1..=depth {
                let w = unwound_sum(&path, depth, i);
                let el = path[i];
                phi[el.feature.unwrap()] += w * (el.one - el.zero) * value;
            }
        }
        Node::Split {
            feature: f,
            threshold,
            default_left,
            cover,
            left,
            right,
        } => {
            let v = x[*f];
            let go_left = if v.is_nan() { *default_left } else { v <= *threshold };
            let (hot, cold) = if go_left { (left, right) } else { (right, left) };
            let (mut in_zero, mut in_one) = (1.0, 1.0);
            let mut depth = depth;
            if let Some(k) = (1..=depth).find(|&k| path[k].feature == Some(*f)) {
                in_zero = path[k].zero;
                in_one = path[k].one;
                unwind(&mut path, depth, k);
                depth -= 1;
            }
            recurse(hot, x, phi, &path, depth + 1, hot.cover() / cover * in_zero, in_one, Some(*f));
            recurse(cold, x, phi, &path, depth + 1, cold.cover() / cover * in_zero, 0.0, Some(*f));
        }
    }
}

/// Adds one tree's SHAP values for row `x` into `phi`.
pub fn tree_shap_row(tree: &Node, x: &[f64], phi: &mut [f64]) {
    recurse(tree, x, phi, &[], 0, 1.0, 1.0, None);
}

/// Attributions of class `class` margins for every row of `x`.
pub fn tree_shap(model: &BoostModel, x: &EncodedMatrix, class: usize) -> Result<ShapMatrix> {
    if class >= model.n_classes {
        return Err(Error::Shape(format!(
            "class {class} out of range for {} classes",
            model.n_classes
        )));
    }
    let n_features = model.manifest.len();
    let base = model.rounds.iter().map(|r| expected_value(&r[class])).sum();
    let values = (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut phi = vec![0.0; n_features];
            for round in &model.rounds {
                tree_shap_row(&round[class], &row, &mut phi);
            }
            phi
        })
        .collect();
    Ok(ShapMatrix {
        class,
        features: model.manifest.names().map(str::to_string).collect(),
        base,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorImportance {
    pub feature: String,
    pub mean_abs_shap: f64,
}

/// Per group, features by descending mean |SHAP| (summed over the given
/// class matrices), truncated to `top`. Ties keep manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRanking {
    pub incident: Vec<FactorImportance>,
    pub local: Vec<FactorImportance>,
}

pub const TOP_FACTORS: usize = 8;

pub fn rank_factors(shaps: &[ShapMatrix], manifest: &FeatureManifest, top: usize) -> Result<FactorRanking> {
    let first = shaps
        .first()
        .ok_or_else(|| Error::InsufficientData("no SHAP matrices to rank".into()))?;
    if first.n_rows() == 0 {
        return Err(Error::InsufficientData("SHAP matrix has no rows".into()));
    }
    let mut importance = vec![0.0; manifest.len()];
    for s in shaps {
        if s.features.len() != manifest.len() {
            return Err(Error::Shape("SHAP matrix does not match the manifest".into()));
        }
        for (acc, v) in importance.iter_mut().zip(s.mean_abs()) {
            *acc += v;
        }
    }
    let ranked = |group: FeatureGroup| {
        let mut items: Vec<(usize, f64)> = manifest
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.group == group)
            .map(|(i, _)| (i, importance[i]))
            .collect();
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        items
            .into_iter()
            .take(top)
            .map(|(i, v)| FactorImportance {
                feature: manifest.features[i].name.clone(),
                mean_abs_shap: v,
            })
            .collect()
    };
    Ok(FactorRanking {
        incident: ranked(FeatureGroup::Incident),
        local: ranked(FeatureGroup::Local),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEffect {
    pub mean_shap: f64,
    pub count: usize,
}

/// Mean SHAP of a categorical feature grouped by each row's raw level.
pub fn category_effects(
    shap: &ShapMatrix,
    frame: &FeatureFrame,
    feature: &str,
) -> Result<BTreeMap<String, CategoryEffect>> {
    let j = frame.manifest.index_of(feature)?;
    let FeatureColumn::Categorical(levels) = &frame.columns[j] else {
        return Err(Error::Config(format!("feature `{feature}` is not categorical")));
    };
    if levels.len() != shap.n_rows() {
        return Err(Error::Shape("frame and SHAP matrix differ in row count".into()));
    }
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (level, row) in levels.iter().zip(&shap.values) {
        let e = acc.entry(level.clone()).or_default();
        e.0 += row[j];
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (s, n))| {
            (
                k,
                CategoryEffect {
                    mean_shap: s / n as f64,
                    count: n,
                },
            )
        })
        .collect())
}

fn expected_class(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(k, v)| k as f64 * v).sum()
}

/// Mean expected class index with feature `f` set to each grid value.
pub fn pdp1(model: &BoostModel, x: &EncodedMatrix, f: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if x.n_rows() == 0 {
        return Err(Error::InsufficientData("partial dependence needs data rows".into()));
    }
    if f >= x.columns.len() {
        return Err(Error::Shape(format!("feature index {f} out of range")));
    }
    Ok(grid
        .par_iter()
        .map(|&g| {
            let total: f64 = (0..x.n_rows())
                .map(|i| {
                    let mut row = x.row(i);
                    row[f] = g;
                    expected_class(&model.predict_row(&row))
                })
                .sum();
            total / x.n_rows() as f64
        })
        .collect())
}

/// `out[i][j]`: mean expected class index with `fx = grid_x[i]` and
/// `fy = grid_y[j]` substituted into every row.
pub fn pdp2(
    model: &BoostModel,
    x: &EncodedMatrix,
    fx: usize,
    fy: usize,
    grid_x: &[f64],
    grid_y: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if x.n_rows() == 0 {
        return Err(Error::InsufficientData("partial dependence needs data rows".into()));
    }
    if fx == fy {
        return Err(Error::Config("two-factor partial dependence needs two distinct features".into()));
    }
    if fx.max(fy) >= x.columns.len() {
        return Err(Error::Shape("feature index out of range".into()));
    }
    let n = x.n_rows();
    let cells: Vec<(usize, usize)> = (0..grid_x.len())
        .flat_map(|i| (0..grid_y.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let total: f64 = (0..n)
                .map(|r| {
                    let mut row = x.row(r);
                    row[fx] = grid_x[i];
                    row[fy] = grid_y[j];
                    expected_class(&model.predict_row(&row))
                })
                .sum();
            total / n as f64
        })
        .collect();
    Ok(values.chunks(grid_y.len().max(1)).map(<[f64]>::to_vec).take(grid_x.len()).collect())
}

/// `points` evenly spaced values between the observed (non-missing)
/// minimum and maximum of column `f`.
pub fn feature_grid(x: &EncodedMatrix, f: usize, points: usize) -> Vec<f64> {
    let (lo, hi) = x.columns[f]
        .iter()
        .filter(|v| !v.is_nan())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !lo.is_finite() || points == 0 {
        return Vec::new();
    }
    if points == 1 || lo == hi {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Long-format CSV `row_id,feature,value,shap,class`; `value` is the model
/// input (encoded for categorical features), empty when missing.
pub fn write_shap_long<W: Write>(
    writer: W,
    shaps: &[ShapMatrix],
    x: &EncodedMatrix,
    row_ids: &[String],
    class_names: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_id", "feature", "value", "shap", "class"])?;
    for s in shaps {
        let class = class_names.get(s.class).cloned().unwrap_or_else(|| s.class.to_string());
        for (r, row) in s.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.write_record([
                    row_ids[r].as_str(),
                    s.features[j].as_str(),
                    &fmt_value(x.columns[j][r]),
                    &v.to_string(),
                    class.as_str(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<shap writer>", e))?;
    Ok(())
}

/// CSV `x,y,value` with one row per grid cell.
pub fn write_pdp2<W: Write>(writer: W, grid_x: &[f64], grid_y: &[f64], values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "value"])?;
    for (i, gx) in grid_x.iter().enumerate() {
        for (j, gy) in grid_y.iter().enumerate() {
            w.write_record([gx.to_string(), gy.to_string(), values[i][j].to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<pdp writer>", e))?;
    Ok(())
}

/// Kind check used by callers choosing grids for categorical inputs.
pub fn is_categorical(manifest: &FeatureManifest, f: usize) -> bool {
    manifest.features[f].kind == FeatureKind::Categorical
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firecat::{fit_firecat, BoostParams, FeatureSpec, PriorMode, MODEL_FORMAT_VERSION};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leaf(value: f64, cover: f64) -> Node {
        Node::Leaf { value, cover }
    }

    fn split(feature: usize, threshold: f64, left: Node, right: Node) -> Node {
        Node::Split {
            feature,
            threshold,
            default_left: true,
            cover: left.cover() + right.cover(),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn manifest(n: usize) -> FeatureManifest {
        FeatureManifest {
            features: (0..n)
                .map(|i| FeatureSpec {
                    name: format!("f{i}"),
                    kind: FeatureKind::Numeric,
                    group: if i % 2 == 0 { FeatureGroup::Incident } else { FeatureGroup::Local },
                })
                .collect(),
        }
    }

    fn model_of(trees: Vec<Node>, n_features: usize) -> BoostModel {
        BoostModel {
            version: MODEL_FORMAT_VERSION,
            target: "t".into(),
            n_classes: 1,
            learning_rate: 1.0,
            max_depth: 6,
            params: BoostParams::default(),
            manifest: manifest(n_features),
            encodings: BTreeMap::new(),
            rounds: trees.into_iter().map(|t| vec![t]).collect(),
            train_loss: Vec::new(),
            validation_loss: Vec::new(),
        }
    }

    /// Cover-weighted conditional expectation with only `known` features
    /// observed.
    fn cond_expectation(node: &Node, x: &[f64], known: &[bool]) -> f64 {
        match node {
            Node::Leaf { value, .. } => *value,
            Node::Split {
                feature,
                threshold,
                default_left,
                cover,
                left,
                right,
            } => {
                if known[*feature] {
                    let v = x[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v <= *threshold };
                    cond_expectation(if go_left { left } else { right }, x, known)
                } else {
                    (left.cover() * cond_expectation(left, x, known)
                        + right.cover() * cond_expectation(right, x, known))
                        / cover
                }
            }
        }
    }

    /// Shapley values by enumerating every coalition.
    fn brute_force(tree: &Node, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
        let mut phi = vec![0.0; m];
        for mask in 0..(1u32 << m) {
            let known: Vec<bool> = (0..m).map(|j| mask & (1 << j) != 0).collect();
            let s = known.iter().filter(|b| **b).count();
            let v_s = cond_expectation(tree, x, &known);
            for j in 0..m {
                if known[j] {
                    continue;
                }
                let mut with = known.clone();
                with[j] = true;
                let w = fact(s) * fact(m - s - 1) / fact(m);
                phi[j] += w * (cond_expectation(tree, x, &with) - v_s);
            }
        }
        phi
    }

    fn random_tree(rng: &mut ChaCha8Rng, depth: usize, n_features: usize) -> Node {
        if depth == 0 || rng.random::<f64>() < 0.15 {
            return leaf(rng.random_range(-2.0..2.0), rng.random_range(1..20) as f64);
        }
        split(
            rng.random_range(0..n_features),
            rng.random_range(0.0..1.0),
            random_tree(rng, depth - 1, n_features),
            random_tree(rng, depth - 1, n_features),
        )
    }

    #[test]
    fn stump_matches_hand_formula() {
        let (a, b) = (1.7, -0.4);
        let (nl, nr) = (30.0, 70.0);
        let q = nl / (nl + nr);
        let model = model_of(vec![split(0, 0.5, leaf(a, nl), leaf(b, nr))], 1);
        let x = EncodedMatrix {
            columns: vec![vec![0.2, 0.9]],
        };
        let s = tree_shap(&model, &x, 0).unwrap();
        assert!((s.base - (q * a + (1.0 - q) * b)).abs() < 1e-12);
        assert!((s.values[0][0] - (1.0 - q) * (a - b)).abs() < 1e-9);
        assert!((s.values[1][0] - q * (b - a)).abs() < 1e-9);
    }

    #[test]
    fn zero_round_model_has_zero_attribution() {
        let model = model_of(vec![], 3);
        let x = EncodedMatrix {
            columns: vec![vec![0.1], vec![0.2], vec![0.3]],
        };
        let s = tree_shap(&model, &x, 0).unwrap();
        assert_eq!(s.base, 0.0);
        assert!(s.values[0].iter().all(|v| *v == 0.0));
        assert!(tree_shap(&model, &x, 1).is_err());
    }

    #[test]
    fn xor_features_share_credit() {
        // f(x0, x1) = 1 when exactly one is high
        let xor = split(
            0,
            0.5,
            split(1, 0.5, leaf(0.0, 25.0), leaf(1.0, 25.0)),
            split(1, 0.5, leaf(1.0, 25.0), leaf(0.0, 25.0)),
        );
        let model = model_of(vec![xor], 2);
        let pts = [0.0, 1.0];
        let x = EncodedMatrix {
            columns: vec![
                pts.iter().flat_map(|a| pts.iter().map(move |_| *a)).collect(),
                pts.iter().flat_map(|_| pts.iter().copied()).collect(),
            ],
        };
        let s = tree_shap(&model, &x, 0).unwrap();
        let m = s.mean_abs();
        assert!((m[0] - m[1]).abs() < 1e-12);
        for r in 0..4 {
            assert!((s.values[r][0] - s.values[r][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_feature_on_path() {
        let tree = split(0, 0.3, leaf(1.0, 10.0), split(0, 0.7, split(1, 0.5, leaf(2.0, 5.0), leaf(0.0, 7.0)), leaf(-1.0, 8.0)));
        for x in [[0.1, 0.2], [0.5, 0.9], [0.5, 0.1], [0.9, 0.4]] {
            let mut phi = vec![0.0; 2];
            tree_shap_row(&tree, &x, &mut phi);
            let want = brute_force(&tree, &x);
            for j in 0..2 {
                assert!((phi[j] - want[j]).abs() < 1e-12, "{x:?}: {phi:?} vs {want:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force_shapley(seed in any::<u64>(), xs in prop::collection::vec(0.0f64..1.0, 4)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(&mut rng, 5, 4);
            let mut phi = vec![0.0; 4];
            tree_shap_row(&tree, &xs, &mut phi);
            let want = brute_force(&tree, &xs);
            for j in 0..4 {
                prop_assert!((phi[j] - want[j]).abs() < 1e-9, "{:?} vs {:?}", phi, want);
            }
            let total: f64 = phi.iter().sum::<f64>() + expected_value(&tree);
            prop_assert!((total - tree.predict(|f| xs[f])).abs() < 1e-9);
        }
    }

    fn fitted() -> (BoostModel, FeatureFrame, EncodedMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1500;
        let levels = ["a", "b", "c", "s"];
        let a: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let cat: Vec<String> = (0..n).map(|_| levels[rng.random_range(0..4)].to_string()).collect();
        let y: Vec<usize> = (0..n)
            .map(|i| {
                if cat[i] == "s" {
                    2
                } else if a[i] > 0.5 {
                    1
                } else {
                    0
                }
            })
            .collect();
        let mut m = manifest(2);
        m.features.push(FeatureSpec {
            name: "cat".into(),
            kind: FeatureKind::Categorical,
            group: FeatureGroup::Incident,
        });
        m.features.push(FeatureSpec {
            name: "unused".into(),
            kind: FeatureKind::Numeric,
            group: FeatureGroup::Local,
        });
        let frame = FeatureFrame::new(
            m,
            vec![
                FeatureColumn::Numeric(a.into_iter().map(Some).collect()),
                FeatureColumn::Numeric(noise.into_iter().map(Some).collect()),
                FeatureColumn::Categorical(cat),
                FeatureColumn::Numeric(vec![Some(1.0); n]),
            ],
        )
        .unwrap();
        let params = BoostParams {
            rounds: 40,
            max_depth: 3,
            prior: PriorMode::Prefix,
            ..BoostParams::default()
        };
        let model = fit_firecat(&frame, &y, 3, "t", &params).unwrap();
        let x = model.encode(&frame).unwrap();
        (model, frame, x)
    }

    #[test]
    fn local_accuracy_on_fitted_model() {
        let (model, _, x) = fitted();
        for k in 0..3 {
            let s = tree_shap(&model, &x, k).unwrap();
            for r in 0..x.n_rows() {
                let margin = model.margins(&x.row(r))[k];
                assert!((s.reconstructed_margin(r) - margin).abs() < 1e-6);
            }
            // constant column is never split on
            assert!(s.values.iter().all(|row| row[3] == 0.0));
        }
    }

    #[test]
    fn ranking_and_category_effects() {
        let (model, frame, x) = fitted();
        let shaps: Vec<ShapMatrix> = (0..3).map(|k| tree_shap(&model, &x, k).unwrap()).collect();
        let ranking = rank_factors(&shaps, &model.manifest, TOP_FACTORS).unwrap();
        assert_eq!(ranking.incident.len(), 2);
        assert_eq!(ranking.local.len(), 2);
        assert!(ranking.incident[0].mean_abs_shap >= ranking.incident[1].mean_abs_shap);
        assert_eq!(ranking.local[1].feature, "unused");

        let effects = category_effects(&shaps[2], &frame, "cat").unwrap();
        let best = effects
            .iter()
            .max_by(|a, b| a.1.mean_shap.total_cmp(&b.1.mean_shap))
            .unwrap();
        assert_eq!(best.0, "s");
        assert_eq!(effects.values().map(|e| e.count).sum::<usize>(), x.n_rows());
        assert!(category_effects(&shaps[2], &frame, "f0").is_err());
        assert!(category_effects(&shaps[2], &frame, "nope").is_err());
    }

    #[test]
    fn sole_signal_feature_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1200;
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
        let y: Vec<usize> = cols[2].iter().map(|v| usize::from(*v > 0.4) + usize::from(*v > 0.8)).collect();
        let frame = FeatureFrame::new(
            manifest(4),
            cols.iter().map(|c| FeatureColumn::Numeric(c.iter().copied().map(Some).collect())).collect(),
        )
        .unwrap();
        let params = BoostParams {
            rounds: 30,
            max_depth: 2,
            ..BoostParams::default()
        };
        let model = fit_firecat(&frame, &y, 3, "t", &params).unwrap();
        let x = model.encode(&frame).unwrap();
        let shaps: Vec<ShapMatrix> = (0..3).map(|k| tree_shap(&model, &x, k).unwrap()).collect();
        let r = rank_factors(&shaps, &model.manifest, TOP_FACTORS).unwrap();
        assert_eq!(r.incident[0].feature, "f2");
        assert!(r.incident[0].mean_abs_shap > 10.0 * r.incident[1].mean_abs_shap);
    }

    #[test]
    fn all_zero_ties_keep_manifest_order() {
        let s = ShapMatrix {
            class: 0,
            features: (0..5).map(|i| format!("f{i}")).collect(),
            base: 0.0,
            values: vec![vec![0.0; 5]; 3],
        };
        let r = rank_factors(&[s], &manifest(5), TOP_FACTORS).unwrap();
        let names: Vec<_> = r.incident.iter().map(|f| f.feature.as_str()).collect();
        assert_eq!(names, vec!["f0", "f2", "f4"]);
    }

    #[test]
    fn single_level_category_equals_overall_mean() {
        let (model, frame, x) = fitted();
        let s = tree_shap(&model, &x, 1).unwrap();
        let mut one = frame.clone();
        one.columns[2] = FeatureColumn::Categorical(vec!["only".into(); x.n_rows()]);
        let effects = category_effects(&s, &one, "cat").unwrap();
        let overall = s.values.iter().map(|r| r[2]).sum::<f64>() / x.n_rows() as f64;
        assert_eq!(effects.len(), 1);
        assert!((effects["only"].mean_shap - overall).abs() < 1e-12);
    }

    #[test]
    fn pdp2_stump_is_step_in_x_and_flat_in_y() {
        // margins for a 2-class model: class 1 favoured when x0 > 0.5
        let mut model = model_of(vec![], 2);
        model.n_classes = 2;
        model.rounds = vec![vec![
            split(0, 0.5, leaf(0.0, 10.0), leaf(0.0, 10.0)),
            split(0, 0.5, leaf(-1.0, 10.0), leaf(2.0, 10.0)),
        ]];
        let x = EncodedMatrix {
            columns: vec![vec![0.1, 0.7, 0.3], vec![0.5, 0.2, 0.9]],
        };
        let gx = [0.2, 0.4, 0.6, 0.8];
        let gy = [0.0, 0.5, 1.0];
        let out = pdp2(&model, &x, 0, 1, &gx, &gy).unwrap();
        let p1 = |m: f64| 1.0 / (1.0 + (-m).exp());
        for (i, g) in gx.iter().enumerate() {
            let want = if *g <= 0.5 { p1(-1.0) } else { p1(2.0) };
            for v in &out[i] {
                assert!((v - want).abs() < 1e-12);
            }
        }
        // row order does not matter
        let perm = EncodedMatrix {
            columns: x.columns.iter().map(|c| vec![c[2], c[0], c[1]]).collect(),
        };
        assert_eq!(pdp2(&model, &perm, 0, 1, &gx, &gy).unwrap(), out);
        assert!(pdp2(&model, &x, 0, 0, &gx, &gy).is_err());
        let empty = EncodedMatrix {
            columns: vec![vec![], vec![]],
        };
        assert!(pdp2(&model, &empty, 0, 1, &gx, &gy).is_err());
        let constant = pdp2(&model_of(vec![], 2), &x, 0, 1, &gx, &gy).unwrap();
        assert!(constant.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn csv_exports() {
        let model = model_of(vec![split(0, 0.5, leaf(1.0, 1.0), leaf(0.0, 1.0))], 1);
        let x = EncodedMatrix {
            columns: vec![vec![0.2, f64::NAN]],
        };
        let s = tree_shap(&model, &x, 0).unwrap();
        let mut out = Vec::new();
        write_shap_long(&mut out, &[s], &x, &["r1".into(), "r2".into()], &["low".into()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "row_id,feature,value,shap,class");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("r2,f0,,"));

        let mut out = Vec::new();
        write_pdp2(&mut out, &[1.0, 2.0], &[3.0], &[vec![0.5], vec![0.25]]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x,y,value\n1,3,0.5\n2,3,0.25\n");
        assert_eq!(feature_grid(&x, 0, 3), vec![0.2]);
    }
}
