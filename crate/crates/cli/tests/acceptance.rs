//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Criteria 5, 6, 8, 9, 11 and 12 run against the shipped example
//! configuration, executed twice through the CLI binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use firerisk::firecat::{
    encode_categorical, fit_firecat, BoostModel, BoostParams, EncodedMatrix, FeatureColumn, FeatureFrame,
    FeatureGroup, FeatureKind, FeatureManifest, FeatureSpec, Node, PriorMode,
};
use firerisk::gam::{fit_gam, GamData, GamFit, GamSpec, StratumFit, TermSpec};
use firerisk::ingest::{
    join_factors, load_incidents, FactorTable, GeoLevel, HourlyWeather, InjuryCounts, LoadConfig,
};
use firerisk::metrics::{brier, confidence_curve, point_metrics, rps, Averaging, EvalReport};
use firerisk::shap::tree_shap;
use firerisk::targets::{
    injury_index, loss_label, quantile_levels, InjuryWeights, QuantileCuts, RiskLevel, RiskThresholds,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

const BIN: &str = env!("CARGO_BIN_EXE_firerisk");
const TARGETS: [&str; 3] = ["spread", "injury", "loss"];

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../firerisk.example.toml")
}

const PIPELINE: [&[&str]; 7] = [
    &["ingest", "--synthetic"],
    &["targets"],
    &["rates"],
    &["fit-gam"],
    &["fit-firecat"],
    &["evaluate"],
    &["explain"],
];

fn run_pipeline(out: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    for args in PIPELINE {
        let o = Command::new(BIN)
            .arg("-c")
            .arg(example_config())
            .args(args)
            .env("FIRERISK_OUT", out)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    Ok(start.elapsed())
}

fn gamma_draw(rng: &mut ChaCha8Rng, mean: f64, shape: f64) -> f64 {
    Gamma::new(shape, mean / shape).unwrap().sample(rng)
}

fn monotone(fit: &GamFit) -> bool {
    fit.convergence.penalized_deviance.windows(2).all(|w| w[1] <= w[0])
}

// ---------------------------------------------------------------- fixtures

fn intercept_fit() -> Result<GamFit, String> {
    let data = GamData {
        response: vec![1.0, 2.0, 3.0],
        states: vec!["AL".into(); 3],
        months: vec![1; 3],
        covariates: BTreeMap::new(),
    };
    let spec = GamSpec {
        min_obs_per_coef: 1,
        ..GamSpec::default()
    };
    fit_gam(&data, &spec).map_err(|e| e.to_string())
}

/// `log mu = sin(2 pi x)`, Gamma shape 5.
fn sine_fixture() -> (GamData, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let n = 2000;
    let mut data = GamData::default();
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let truth: Vec<f64> = x.iter().map(|v| (std::f64::consts::TAU * v).sin()).collect();
    data.response = truth.iter().map(|f| gamma_draw(&mut rng, f.exp(), 5.0)).collect();
    data.states = vec!["CA".into(); n];
    data.months = (0..n).map(|i| (i % 12 + 1) as u32).collect();
    data.covariates.insert("x".into(), x);
    (data, truth)
}

/// Two states, the second shifted by +0.5 on the log scale.
fn state_fixture() -> GamData {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let n = 5000;
    let mut data = GamData::default();
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let shifted = i % 2 == 1;
        let xi: f64 = rng.random();
        let eta = 0.7 + 0.4 * (3.0 * xi).cos() + if shifted { 0.5 } else { 0.0 };
        data.response.push(gamma_draw(&mut rng, eta.exp(), 5.0));
        data.states.push(if shifted { "TX" } else { "NY" }.into());
        data.months.push(6);
        x.push(xi);
    }
    data.covariates.insert("x".into(), x);
    data
}

struct RunData {
    frame: FeatureFrame,
    /// `(is_test, [spread, injury, loss])` per incident.
    labels: Vec<(bool, [Option<usize>; 3])>,
    models: BTreeMap<&'static str, BoostModel>,
}

fn load_run(out: &Path) -> Result<RunData, String> {
    let err = |e: firerisk::Error| e.to_string();
    let (table, _) = load_incidents(&out.join("ingest/incidents.csv"), &LoadConfig::default()).map_err(err)?;
    let zip = FactorTable::from_path(&out.join("data/zip_factors.csv"), GeoLevel::Zip).map_err(err)?;
    let weather = HourlyWeather::from_path(&out.join("data/weather.csv")).map_err(err)?;
    let joined = join_factors(&table, &zip, &weather).map_err(err)?;
    let frame = FeatureFrame::from_joined(&joined, &FeatureManifest::default()).map_err(err)?;

    let mut rdr = csv::Reader::from_path(out.join("targets/labels.csv")).map_err(|e| e.to_string())?;
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let cell = |j: usize| rec[j].parse::<usize>().ok();
        labels.push((&rec[1] == "test", [cell(2), cell(3), cell(4)]));
    }
    let mut models = BTreeMap::new();
    for t in TARGETS {
        let text = fs::read_to_string(out.join("firecat").join(t).join("model.json")).map_err(|e| e.to_string())?;
        models.insert(t, BoostModel::from_json(&text).map_err(err)?);
    }
    Ok(RunData { frame, labels, models })
}

impl RunData {
    fn test_rows(&self, target: usize) -> (Vec<usize>, Vec<usize>) {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, (test, l))| l[target].filter(|_| *test).map(|y| (i, y)))
            .unzip()
    }

    fn train_labels(&self, target: usize) -> Vec<usize> {
        self.labels
            .iter()
            .filter(|(test, _)| !test)
            .filter_map(|(_, l)| l[target])
            .collect()
    }
}

fn read_report(out: &Path, target: &str, model: &str) -> Result<EvalReport, String> {
    let path = out.join("firecat").join(target).join(format!("eval_{model}.json"));
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_files(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

// ---------------------------------------------------------------- criteria

fn c1_metric_oracles() -> Check {
    let start = Instant::now();
    let uniform = brier(&[vec![1.0 / 3.0; 3]], &[0]).map_err(|e| e.to_string())?;
    let r = rps(&[vec![0.5, 0.3, 0.2]], &[0]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!((uniform - 2.0 / 3.0).abs() <= 1e-12, "brier {uniform} != 2/3");
    ensure!((r - 0.145).abs() <= 1e-12, "rps {r} != 0.145");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("brier {uniform:.15}, rps {r:.15}, {elapsed:?}"))
}

fn c2_rps_ordinality() -> Check {
    let adjacent = rps(&[vec![0.0, 1.0, 0.0]], &[0]).map_err(|e| e.to_string())?;
    let far = rps(&[vec![0.0, 0.0, 1.0]], &[0]).map_err(|e| e.to_string())?;
    ensure!(adjacent < far, "adjacent {adjacent} !< far {far}");
    Ok(format!("adjacent {adjacent} < far {far}"))
}

fn c3_gam_intercept() -> Check {
    let fit = intercept_fit()?;
    let err = (fit.intercept - 2f64.ln()).abs();
    ensure!(err <= 1e-6, "beta0 {} off ln 2 by {err:e}", fit.intercept);
    Ok(format!("beta0 = {:.12} (|err| {err:.1e})", fit.intercept))
}

fn c4_gam_recovery() -> Check {
    let (data, truth) = sine_fixture();
    let spec = GamSpec {
        terms: vec![TermSpec::new("x")],
        ..GamSpec::default()
    };
    let start = Instant::now();
    let fit = fit_gam(&data, &spec).map_err(|e| e.to_string())?;
    let t_sine = start.elapsed();
    let x = data.covariate("x").unwrap();
    let f = fit.term("x").unwrap().evaluate(x).map_err(|e| e.to_string())?;
    let centre = truth.iter().sum::<f64>() / truth.len() as f64;
    let rmse = (f.iter().zip(&truth).map(|(a, t)| (a - (t - centre)).powi(2)).sum::<f64>() / f.len() as f64).sqrt();

    let data = state_fixture();
    let spec = GamSpec {
        terms: vec![TermSpec::new("x").with_k(8)],
        ..GamSpec::default()
    };
    let start = Instant::now();
    let fit = fit_gam(&data, &spec).map_err(|e| e.to_string())?;
    let t_state = start.elapsed();
    let effect = fit.state_effects["TX"];

    ensure!(rmse < 0.1, "sine partial RMSE {rmse}");
    ensure!((effect - 0.5).abs() <= 0.1, "state effect {effect}");
    ensure!(t_sine < Duration::from_secs(60) && t_state < Duration::from_secs(60), "fit times {t_sine:?} {t_state:?}");
    Ok(format!("sine RMSE {rmse:.4} ({t_sine:.2?}); state effect {effect:.4} ({t_state:.2?})"))
}

fn c5_deviance_monotone(out: &Path) -> Check {
    let mut fits = vec![("intercept".to_string(), intercept_fit()?)];
    let (sine, _) = sine_fixture();
    let spec = GamSpec {
        terms: vec![TermSpec::new("x")],
        ..GamSpec::default()
    };
    fits.push(("sine".into(), fit_gam(&sine, &spec).map_err(|e| e.to_string())?));
    let spec = GamSpec {
        terms: vec![TermSpec::new("x").with_k(8)],
        ..GamSpec::default()
    };
    fits.push(("state".into(), fit_gam(&state_fixture(), &spec).map_err(|e| e.to_string())?));

    let gam = out.join("gam");
    let national: GamFit =
        serde_json::from_str(&fs::read_to_string(gam.join("national.json")).unwrap()).map_err(|e| e.to_string())?;
    fits.push(("national".into(), national));
    let mut skipped = 0;
    for prefix in ["seasonal", "regional"] {
        for entry in fs::read_dir(&gam).unwrap() {
            let p = entry.unwrap().path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            if !name.starts_with(prefix) {
                continue;
            }
            let s: StratumFit = serde_json::from_str(&fs::read_to_string(&p).unwrap()).map_err(|e| e.to_string())?;
            match s {
                StratumFit::Fitted(f) => fits.push((name, *f)),
                StratumFit::Skipped { .. } => skipped += 1,
            }
        }
    }
    let bad: Vec<&str> = fits.iter().filter(|(_, f)| !monotone(f)).map(|(n, _)| n.as_str()).collect();
    ensure!(bad.is_empty(), "non-monotone traces: {bad:?}");
    ensure!(skipped == 0, "{skipped} example strata were skipped");
    Ok(format!("{} fits, all traces non-increasing", fits.len()))
}

fn c6_simplex_and_determinism(run: &RunData, a: &Path, b: &Path) -> Check {
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for (t, model) in &run.models {
        let probs = model.predict_proba(&run.frame).map_err(|e| e.to_string())?;
        for p in &probs {
            worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
            ensure!(p.iter().all(|v| (0.0..=1.0).contains(v)), "{t}: probability outside [0, 1]");
        }
        rows += probs.len();
    }
    ensure!(worst <= 1e-9, "max |sum - 1| = {worst:e}");
    for t in TARGETS {
        let rel = Path::new("firecat").join(t).join("model.json");
        ensure!(fs::read(a.join(&rel)).unwrap() == fs::read(b.join(&rel)).unwrap(), "{t} model files differ");
    }
    // in-process refit with the same seed
    let (idx, y) = run.test_rows(1);
    let sub = run.frame.subset(&idx[..idx.len().min(2000)]);
    let params = BoostParams {
        rounds: 20,
        seed: 99,
        ..BoostParams::default()
    };
    let fit = || fit_firecat(&sub, &y[..sub.n_rows()], 3, "injury", &params).and_then(|m| m.to_json());
    ensure!(fit().map_err(|e| e.to_string())? == fit().map_err(|e| e.to_string())?, "refit JSON differs");
    Ok(format!("{rows} prediction vectors, max |sum - 1| {worst:.1e}; model files byte-identical"))
}

fn c7_encoding_leakage(run: &RunData) -> Check {
    let mut checks = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // random small fixtures
    for _ in 0..200 {
        let n = rng.random_range(1..80);
        let col: Vec<String> = (0..n).map(|_| format!("c{}", rng.random_range(0..5))).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        for i in 0..n {
            for mode in [PriorMode::Prefix, PriorMode::Fixed(1.5)] {
                let (before, _) = encode_categorical(&col, &y, &perm, 1.0, mode, 0);
                let mut z = y.clone();
                z[i] = (z[i] + 1 + rng.random_range(0..3)) % 4;
                let (after, _) = encode_categorical(&col, &z, &perm, 1.0, mode, 0);
                ensure!(before[i] == after[i], "random fixture row {i} leaked");
                checks += 1;
            }
        }
    }
    // corpus categorical columns, every target
    for (t, target) in TARGETS.iter().enumerate() {
        let rows: Vec<usize> = (0..run.labels.len()).filter(|&i| run.labels[i].1[t].is_some()).collect();
        let y: Vec<usize> = rows.iter().map(|&i| run.labels[i].1[t].unwrap()).collect();
        let k = run.models[target].n_classes;
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        for (f, col) in run.frame.manifest.features.iter().zip(&run.frame.columns) {
            let FeatureColumn::Categorical(values) = col else { continue };
            let col: Vec<String> = rows.iter().map(|&i| values[i].clone()).collect();
            let (before, _) = encode_categorical(&col, &y, &perm, 1.0, PriorMode::Prefix, 0);
            for s in 0..20 {
                let i = (s * 7919) % rows.len();
                let mut z = y.clone();
                z[i] = (z[i] + 1) % k;
                let (after, _) = encode_categorical(&col, &z, &perm, 1.0, PriorMode::Prefix, 0);
                ensure!(before[i] == after[i], "{target}/{}: row {i} leaked", f.name);
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} perturbations, encoded value never changed"))
}

fn c8_table_one_mirror(out: &Path, elapsed: Duration) -> Check {
    let mut lines = Vec::new();
    for t in TARGETS {
        let f = read_report(out, t, "firecat")?;
        let b = read_report(out, t, "baseline")?;
        let wins = f.beats(&b);
        let lost: Vec<&str> = firerisk::metrics::METRIC_NAMES
            .iter()
            .zip(wins)
            .filter(|(_, w)| !w)
            .map(|(n, _)| *n)
            .collect();
        ensure!(lost.is_empty(), "{t}: FireCat does not beat baseline on {lost:?}");
        lines.push(format!("{t} acc {:.3} vs {:.3}", f.accuracy, b.accuracy));
    }
    ensure!(elapsed < Duration::from_secs(300), "pipeline took {elapsed:?}");
    Ok(format!("7/7 metrics on all targets ({}); pipeline {elapsed:.1?}", lines.join(", ")))
}

fn c9_shap(run: &RunData) -> Check {
    let mut evaluated = 0;
    let mut worst: f64 = 0.0;
    for (t, target) in TARGETS.iter().enumerate() {
        let model = &run.models[target];
        let (mut idx, _) = run.test_rows(t);
        idx.truncate(1000);
        ensure!(idx.len() == 1000, "{target}: only {} test rows", idx.len());
        let x = model.encode(&run.frame.subset(&idx)).map_err(|e| e.to_string())?;
        for k in 0..model.n_classes {
            let s = tree_shap(model, &x, k).map_err(|e| e.to_string())?;
            for r in 0..x.n_rows() {
                let margin = model.margins(&x.row(r))[k];
                worst = worst.max((s.reconstructed_margin(r) - margin).abs());
                evaluated += 1;
            }
        }
    }
    ensure!(worst <= 1e-6, "local accuracy error {worst:e}");

    // stump: fitted single split, then the hand formula
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    let y: Vec<usize> = xs.iter().map(|v| usize::from(*v > 0.3)).collect();
    let manifest = FeatureManifest {
        features: vec![FeatureSpec {
            name: "x".into(),
            kind: FeatureKind::Numeric,
            group: FeatureGroup::Incident,
        }],
    };
    let frame = FeatureFrame::new(manifest, vec![FeatureColumn::Numeric(xs.iter().copied().map(Some).collect())])
        .map_err(|e| e.to_string())?;
    let params = BoostParams {
        rounds: 1,
        max_depth: 1,
        early_stopping: None,
        ..BoostParams::default()
    };
    let model = fit_firecat(&frame, &y, 2, "stump", &params).map_err(|e| e.to_string())?;
    let Node::Split { threshold, left, right, cover, .. } = &model.rounds[0][0] else {
        return Err("stump did not split".into());
    };
    let (a, b, q) = (leaf_value(left)?, leaf_value(right)?, left.cover() / cover);
    let x = EncodedMatrix { columns: vec![xs.clone()] };
    let s = tree_shap(&model, &x, 0).map_err(|e| e.to_string())?;
    ensure!((s.base - (q * a + (1.0 - q) * b)).abs() <= 1e-9, "stump base {}", s.base);
    let mut stump_err: f64 = 0.0;
    for (r, v) in xs.iter().enumerate() {
        let want = if *v <= *threshold { (1.0 - q) * (a - b) } else { q * (b - a) };
        stump_err = stump_err.max((s.values[r][0] - want).abs());
    }
    ensure!(stump_err <= 1e-9, "stump SHAP error {stump_err:e}");
    Ok(format!("{evaluated} row-class checks, max error {worst:.1e}; stump error {stump_err:.1e}"))
}

fn leaf_value(n: &Node) -> Result<f64, String> {
    match n {
        Node::Leaf { value, .. } => Ok(*value),
        _ => Err("expected a leaf".into()),
    }
}

fn c10_targets(out: &Path) -> Check {
    let counts = InjuryCounts {
        minor: 2,
        severe: 1,
        ..Default::default()
    };
    let index = injury_index(&counts, &InjuryWeights::default());
    ensure!(index == 0.272, "injury index {index}");
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let (levels, t100) = quantile_levels(&values, QuantileCuts::default()).map_err(|e| e.to_string())?;
    let count = |l| levels.iter().filter(|x| **x == l).count();
    let split = (count(RiskLevel::Low), count(RiskLevel::Moderate), count(RiskLevel::High));
    ensure!(split == (40, 35, 25), "split {split:?}");

    let cpi = firerisk::ingest::CpiTable::cpi_u_2012_2022();
    let thresholds: BTreeMap<String, RiskThresholds> =
        serde_json::from_str(&fs::read_to_string(out.join("targets/thresholds.json")).unwrap())
            .map_err(|e| e.to_string())?;
    for t in [&t100, &thresholds["loss"]] {
        let l = loss_label(0.0, 0.0, 2022, &cpi, t).map_err(|e| e.to_string())?;
        ensure!(l == RiskLevel::Low, "zero loss labelled {l:?}");
    }
    Ok(format!("index {index}; split {split:?}; zero loss -> low"))
}

fn c11_confidence_curve(run: &RunData) -> Check {
    let taus: Vec<f64> = (0..=100).map(|i| f64::from(i) / 100.0).collect();
    let mut fixtures: Vec<(String, Vec<Vec<f64>>, Vec<usize>)> = Vec::new();
    for (t, target) in TARGETS.iter().enumerate() {
        let (idx, y) = run.test_rows(t);
        let probs = run.models[target].predict_proba(&run.frame.subset(&idx)).map_err(|e| e.to_string())?;
        fixtures.push((target.to_string(), probs, y.clone()));
        let base = firerisk::firecat::fit_baseline(&run.train_labels(t), run.models[target].n_classes, target)
            .map_err(|e| e.to_string())?;
        fixtures.push((format!("{target}-baseline"), base.predict(y.len()), y));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in 0..20 {
        let n = rng.random_range(1..300);
        let k = rng.random_range(2..6);
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let y = (0..n).map(|_| rng.random_range(0..k)).collect();
        fixtures.push((format!("random-{f}"), probs, y));
    }
    for (name, probs, y) in &fixtures {
        let curve = confidence_curve(probs, y, &taus).map_err(|e| e.to_string())?;
        let acc = point_metrics(probs, y, None, Averaging::Macro).map_err(|e| e.to_string())?.accuracy;
        ensure!(curve[0].coverage == 1.0 && curve[0].accuracy == Some(acc), "{name}: tau=0 point {:?} vs {acc}", curve[0]);
        ensure!(curve.windows(2).all(|w| w[1].coverage <= w[0].coverage), "{name}: coverage increases");
    }
    Ok(format!("{} fixtures x {} thresholds", fixtures.len(), taus.len()))
}

fn c12_pipeline_determinism(a: &Path, b: &Path) -> Check {
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    collect_files(a, a, &mut fa);
    collect_files(b, b, &mut fb);
    fa.sort();
    fb.sort();
    ensure!(fa == fb, "file lists differ");
    for rel in &fa {
        ensure!(fs::read(a.join(rel)).unwrap() == fs::read(b.join(rel)).unwrap(), "{} differs", rel.display());
    }
    Ok(format!("{} files byte-identical", fa.len()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    let first = run_pipeline(&a);
    let second = run_pipeline(&b);
    let pipeline_err = first.as_ref().err().or(second.as_ref().err()).cloned();
    let run = match &pipeline_err {
        None => load_run(&a),
        Some(e) => Err(format!("pipeline failed: {e}")),
    };

    let with_run = |f: &dyn Fn(&RunData) -> Check| match &run {
        Ok(r) => f(r),
        Err(e) => Err(e.clone()),
    };
    let needs_pipeline = |f: &dyn Fn() -> Check| match &pipeline_err {
        None => f(),
        Some(e) => Err(format!("pipeline failed: {e}")),
    };

    let results: Vec<(u32, &str, Check)> = vec![
        (1, "metric oracles", c1_metric_oracles()),
        (2, "RPS ordinality", c2_rps_ordinality()),
        (3, "GAM intercept oracle", c3_gam_intercept()),
        (4, "GAM smooth and state recovery", c4_gam_recovery()),
        (5, "P-IRLS deviance monotone", needs_pipeline(&|| c5_deviance_monotone(&a))),
        (6, "FireCat simplex and determinism", with_run(&|r| c6_simplex_and_determinism(r, &a, &b))),
        (7, "encoding leakage-freedom", with_run(&c7_encoding_leakage)),
        (8, "FireCat beats baseline", needs_pipeline(&|| c8_table_one_mirror(&a, *first.as_ref().unwrap()))),
        (9, "SHAP local accuracy and stump", with_run(&c9_shap)),
        (10, "target derivation", needs_pipeline(&|| c10_targets(&a))),
        (11, "confidence curve", with_run(&c11_confidence_curve)),
        (12, "pipeline determinism", needs_pipeline(&|| c12_pipeline_determinism(&a, &b))),
    ];

    let mut failed = 0;
    for (id, name, result) in &results {
        match result {
            Ok(detail) => println!("[PASS] {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id:>2} {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
