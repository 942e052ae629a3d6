use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use firerisk::firecat::{
    fit_baseline, fit_firecat, grid_search, split_train_test, BaselineModel, BoostModel, BoostParams,
    FeatureFrame, FeatureGroup, FeatureKind, FeatureManifest,
};
use firerisk::gam::{
    fit_gam, fit_stratified, term_significance, write_partial_dependence, GamData, GamFit, StratumFit,
    Stratifier,
};
use firerisk::ingest::geo::census_regions;
use firerisk::ingest::{
    generate_synthetic, join_factors, load_incidents, write_incidents, CpiTable, FactorTable,
    GeoLevel, HourlyWeather, IncidentTable, JoinedTable, LoadConfig, SyntheticCorpus, WeatherSource,
};
use firerisk::metrics::EvalReport;
use firerisk::rates::{county_month_rates, RateTable};
use firerisk::shap::{
    category_effects, feature_grid, pdp1, pdp2, rank_factors, tree_shap, write_pdp2, write_shap_long, ShapMatrix,
};
use firerisk::targets::{derive_labels, TargetKind};
use firerisk::{Error, Result};
use serde::Serialize;

use crate::config::RunConfig;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn cpi_table(cfg: &RunConfig) -> Result<CpiTable> {
    match &cfg.paths.cpi {
        Some(p) => CpiTable::from_path(p),
        None => Ok(CpiTable::cpi_u_2012_2022()),
    }
}

fn ingest_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output().join("ingest")
}

fn clean_incidents(cfg: &RunConfig) -> Result<IncidentTable> {
    let (table, _) = load_incidents(&ingest_dir(cfg).join("incidents.csv"), &LoadConfig::default())?;
    Ok(table)
}

#[derive(Serialize)]
struct JoinReport {
    incidents: usize,
    missing_local_factors: usize,
    missing_zip: usize,
    weather_sources: BTreeMap<String, usize>,
}

fn join_report(joined: &JoinedTable) -> JoinReport {
    let mut weather_sources = BTreeMap::new();
    for row in &joined.rows {
        let key = match row.weather_source {
            WeatherSource::Hourly => "hourly",
            WeatherSource::MonthlyFallback => "monthly_fallback",
            WeatherSource::Missing => "missing",
        };
        *weather_sources.entry(key.to_string()).or_insert(0) += 1;
    }
    JoinReport {
        incidents: joined.len(),
        missing_local_factors: joined.rows.iter().filter(|r| r.missing_local_factors).count(),
        missing_zip: joined.rows.iter().filter(|r| r.incident.zip.is_none()).count(),
        weather_sources,
    }
}

/// Writes the synthetic corpus under `<output>/data`.
pub fn synth(cfg: &RunConfig) -> Result<()> {
    write_synthetic(cfg).map(drop)
}

fn write_synthetic(cfg: &RunConfig) -> Result<SyntheticCorpus> {
    let corpus = generate_synthetic(&cfg.synthetic, cfg.seed())?;
    let data = cfg.output().join("data");
    write_with(&data.join("incidents.csv"), |w| write_incidents(w, &corpus.incidents.records))?;
    write_with(&data.join("zip_factors.csv"), |w| corpus.zip_factors.write(w))?;
    write_with(&data.join("county_factors.csv"), |w| corpus.county_factors.write(w))?;
    write_with(&data.join("weather.csv"), |w| corpus.weather.write(w))?;
    let cpi_path = data.join("cpi.csv");
    write_with(&cpi_path, |w| {
        w.write_all(corpus.cpi.to_csv_string().as_bytes()).map_err(|e| io_err(&cpi_path, e))
    })?;
    #[derive(Serialize)]
    struct Truth<'a> {
        seed: u64,
        base_rate: f64,
        state_effects: &'a BTreeMap<String, f64>,
        incidents: usize,
    }
    write_json(
        &data.join("synthetic_truth.json"),
        &Truth {
            seed: cfg.seed(),
            base_rate: corpus.base_rate,
            state_effects: &corpus.state_effects,
            incidents: corpus.incidents.len(),
        },
    )?;
    Ok(corpus)
}

/// Validates raw inputs and writes the cleaned incident table plus load and
/// join reports. With `synthetic`, generates the corpus first and checks that
/// re-loading reproduces it exactly.
pub fn ingest(cfg: &RunConfig, synthetic: bool) -> Result<()> {
    let (generated, cfg) = if synthetic {
        // generated tables always land in the default data directory
        let mut local = cfg.clone();
        local.paths.incidents = None;
        local.paths.zip_factors = None;
        local.paths.county_factors = None;
        local.paths.weather = None;
        (Some(write_synthetic(&local)?), std::borrow::Cow::Owned(local))
    } else {
        (None, std::borrow::Cow::Borrowed(cfg))
    };
    let incidents_path = cfg.incidents_path();
    if !incidents_path.exists() {
        return Err(Error::Config(format!("incidents file not found: {}", incidents_path.display())));
    }
    let (table, report) = load_incidents(&incidents_path, &cfg.load)?;
    let zip = FactorTable::from_path(&cfg.zip_factors_path(), GeoLevel::Zip)?;
    let county = FactorTable::from_path(&cfg.county_factors_path(), GeoLevel::County)?;
    let weather = HourlyWeather::from_path(&cfg.weather_path())?;
    let joined = join_factors(&table, &zip, &weather)?;

    let dir = ingest_dir(&cfg);
    write_with(&dir.join("incidents.csv"), |w| write_incidents(w, &table.records))?;
    write_json(&dir.join("load_report.json"), &report)?;
    write_json(&dir.join("join_report.json"), &join_report(&joined))?;

    if let Some(corpus) = generated {
        let roundtrip = corpus.incidents == table
            && corpus.zip_factors == zip
            && corpus.county_factors == county
            && corpus.weather == weather;
        if !roundtrip {
            return Err(Error::Shape("re-loaded synthetic tables differ from the generated ones".into()));
        }
        write_json(&dir.join("roundtrip.json"), &serde_json::json!({ "identical": true }))?;
    }
    Ok(())
}

const SPLITS: [&str; 2] = ["train", "test"];

/// Per-incident labels for every target, in cleaned-table order.
struct Labels {
    ids: Vec<String>,
    is_test: Vec<bool>,
    by_target: BTreeMap<TargetKind, Vec<Option<usize>>>,
}

fn labels_path(cfg: &RunConfig) -> PathBuf {
    cfg.output().join("targets").join("labels.csv")
}

/// Seeded train/test split, then labels with quantile thresholds fitted on
/// the training rows only.
pub fn targets(cfg: &RunConfig) -> Result<()> {
    let table = clean_incidents(cfg)?;
    if table.is_empty() {
        return Err(Error::InsufficientData("no incidents to label".into()));
    }
    let cpi = cpi_table(cfg)?;
    let (train, _) = split_train_test(table.len(), 1.0 - cfg.split.test_fraction, cfg.seed())?;
    let mut is_test = vec![true; table.len()];
    for &i in &train {
        is_test[i] = false;
    }
    let mut sets = Vec::new();
    let mut thresholds = BTreeMap::new();
    for target in TargetKind::ALL {
        let set = derive_labels(&table.records, &train, target, &cpi, &cfg.labels)?;
        if let Some(t) = &set.thresholds {
            thresholds.insert(target.as_str(), t.clone());
        }
        sets.push(set);
    }
    let dir = cfg.output().join("targets");
    write_with(&dir.join("labels.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["incident_id", "split", "spread", "injury", "loss"])?;
        for (i, rec) in table.records.iter().enumerate() {
            let cell = |t: usize| sets[t].labels[i].map(|l| l.to_string()).unwrap_or_default();
            csv.write_record([
                rec.incident_id.clone(),
                SPLITS[usize::from(is_test[i])].to_string(),
                cell(0),
                cell(1),
                cell(2),
            ])?;
        }
        csv.flush().map_err(|e| io_err(&dir, e))
    })?;
    write_json(&dir.join("thresholds.json"), &thresholds)
}

fn read_labels(cfg: &RunConfig, table: &IncidentTable) -> Result<Labels> {
    let path = labels_path(cfg);
    let file = File::open(&path).map_err(|e| io_err(&path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut labels = Labels {
        ids: Vec::new(),
        is_test: Vec::new(),
        by_target: TargetKind::ALL.iter().map(|t| (*t, Vec::new())).collect(),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |message: String| Error::Parse { row: row + 1, message };
        if rec.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, found {}", rec.len())));
        }
        labels.ids.push(rec[0].to_string());
        labels.is_test.push(match &rec[1] {
            "train" => false,
            "test" => true,
            other => return Err(parse_err(format!("unknown split `{other}`"))),
        });
        for (j, target) in TargetKind::ALL.iter().enumerate() {
            let cell = &rec[2 + j];
            let v = if cell.is_empty() {
                None
            } else {
                let v: usize = cell
                    .parse()
                    .map_err(|_| parse_err(format!("bad {} label `{cell}`", target.as_str())))?;
                if v >= target.n_classes() {
                    return Err(parse_err(format!("{} label {v} out of range", target.as_str())));
                }
                Some(v)
            };
            labels.by_target.get_mut(target).unwrap().push(v);
        }
    }
    let ids_match = labels.ids.len() == table.len()
        && labels.ids.iter().zip(&table.records).all(|(a, r)| *a == r.incident_id);
    if !ids_match {
        return Err(Error::Config(format!(
            "{} does not match the cleaned incident table; rerun `targets`",
            path.display()
        )));
    }
    Ok(labels)
}

pub fn rates(cfg: &RunConfig) -> Result<()> {
    let table = clean_incidents(cfg)?;
    let county = FactorTable::from_path(&cfg.county_factors_path(), GeoLevel::County)?;
    let (rates, exclusions) = county_month_rates(&table.records, &county)?;
    let dir = cfg.output().join("rates");
    write_with(&dir.join("rates.csv"), |w| rates.write(w))?;
    write_json(&dir.join("exclusions.json"), &exclusions)
}

fn write_gam_outputs(dir: &Path, name: &str, fit: &GamFit, pdp_points: usize) -> Result<()> {
    write_json(&dir.join("diagnostics").join(format!("{name}.json")), &term_significance(fit))?;
    write_with(&dir.join("pdp").join(format!("{name}.csv")), |w| {
        write_partial_dependence(fit, pdp_points, w)
    })
}

/// National, seasonal and regional occurrence models.
pub fn fit_gam_cmd(cfg: &RunConfig, rates_path: Option<&Path>) -> Result<()> {
    let default_rates = cfg.output().join("rates").join("rates.csv");
    let rates = RateTable::from_path(rates_path.unwrap_or(&default_rates))?;
    let county = FactorTable::from_path(&cfg.county_factors_path(), GeoLevel::County)?;
    let data = GamData::from_rates(&rates, &county)?;
    let spec = cfg.gam.spec();
    let regions = census_regions();
    let dir = cfg.output().join("gam");

    let national = fit_gam(&data, &spec)?;
    write_json(&dir.join("national.json"), &national)?;
    write_gam_outputs(&dir, "national", &national, cfg.gam.pdp_points)?;

    for (prefix, stratifier) in [("seasonal", Stratifier::Season), ("regional", Stratifier::Region)] {
        for (stratum, fit) in fit_stratified(&data, &spec, stratifier, &regions)? {
            let name = format!("{prefix}_{stratum}");
            write_json(&dir.join(format!("{name}.json")), &fit)?;
            if let StratumFit::Fitted(fit) = &fit {
                write_gam_outputs(&dir, &name, fit, cfg.gam.pdp_points)?;
            }
        }
    }
    Ok(())
}

fn manifest(cfg: &RunConfig) -> Result<FeatureManifest> {
    if cfg.firecat.features.is_empty() {
        Ok(FeatureManifest::default())
    } else {
        FeatureManifest::from_names(cfg.firecat.features.iter().map(String::as_str))
    }
}

/// Joined feature frame for all cleaned incidents plus their labels.
struct Prepared {
    frame: FeatureFrame,
    labels: Labels,
}

fn prepare(cfg: &RunConfig, manifest: &FeatureManifest) -> Result<Prepared> {
    let table = clean_incidents(cfg)?;
    let labels = read_labels(cfg, &table)?;
    let zip = FactorTable::from_path(&cfg.zip_factors_path(), GeoLevel::Zip)?;
    let weather = HourlyWeather::from_path(&cfg.weather_path())?;
    let joined = join_factors(&table, &zip, &weather)?;
    Ok(Prepared {
        frame: FeatureFrame::from_joined(&joined, manifest)?,
        labels,
    })
}

/// Labelled row indices and labels for one split.
fn split_rows(p: &Prepared, target: TargetKind, test: bool) -> (Vec<usize>, Vec<usize>) {
    p.labels.by_target[&target]
        .iter()
        .enumerate()
        .filter(|(i, l)| l.is_some() && p.labels.is_test[*i] == test)
        .map(|(i, l)| (i, l.unwrap()))
        .unzip()
}

fn targets_or_all(cfg: &RunConfig, target: Option<TargetKind>) -> Vec<TargetKind> {
    target.map_or_else(|| cfg.firecat.targets.clone(), |t| vec![t])
}

fn write_report(dir: &Path, suffix: &str, report: &EvalReport) -> Result<()> {
    write_json(&dir.join(format!("eval_{suffix}.json")), report)?;
    write_with(&dir.join(format!("confusion_{suffix}.csv")), |w| report.write_confusion_csv(w))?;
    write_with(&dir.join(format!("curve_{suffix}.csv")), |w| report.write_curve_csv(w))
}

fn model_dir(cfg: &RunConfig, target: TargetKind) -> PathBuf {
    cfg.output().join("firecat").join(target.as_str())
}

/// Fits FireCat and the empirical baseline on the training split and
/// evaluates both on the test split.
pub fn fit_firecat_cmd(cfg: &RunConfig, target: Option<TargetKind>) -> Result<()> {
    let manifest = manifest(cfg)?;
    let prepared = prepare(cfg, &manifest)?;
    for target in targets_or_all(cfg, target) {
        let (train_rows, train_labels) = split_rows(&prepared, target, false);
        let (test_rows, test_labels) = split_rows(&prepared, target, true);
        if train_rows.is_empty() || test_rows.is_empty() {
            return Err(Error::InsufficientData(format!(
                "target `{}` needs labelled train and test rows",
                target.as_str()
            )));
        }
        let train = prepared.frame.subset(&train_rows);
        let test = prepared.frame.subset(&test_rows);
        let k = target.n_classes();
        let dir = model_dir(cfg, target);

        let mut params = BoostParams {
            seed: cfg.seed(),
            ..cfg.firecat.params
        };
        if !cfg.firecat.grid.is_empty() {
            let candidates: Vec<BoostParams> = cfg
                .firecat
                .grid
                .iter()
                .map(|p| BoostParams { seed: cfg.seed(), ..*p })
                .collect();
            let results = grid_search(
                &train,
                &train_labels,
                k,
                &candidates,
                cfg.firecat.grid_validation_fraction,
                cfg.seed(),
            )?;
            params = results[0].params;
            write_json(&dir.join("grid.json"), &results)?;
        }

        let model = fit_firecat(&train, &train_labels, k, target.as_str(), &params)?;
        let baseline = fit_baseline(&train_labels, k, target.as_str())?;
        write_with(&dir.join("model.json"), |w| {
            w.write_all(model.to_json()?.as_bytes()).map_err(|e| io_err(&dir, e))
        })?;
        write_json(&dir.join("baseline.json"), &baseline)?;

        let probs = model.predict_proba(&test)?;
        let report = EvalReport::evaluate("firecat", target.as_str(), &probs, &test_labels, &cfg.metrics)?;
        write_report(&dir, "firecat", &report)?;
        let base_probs = baseline.predict(test_labels.len());
        let base = EvalReport::evaluate("baseline", target.as_str(), &base_probs, &test_labels, &cfg.metrics)?;
        write_report(&dir, "baseline", &base)?;
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<BoostModel> {
    if !path.exists() {
        return Err(Error::Config(format!("model file not found: {}", path.display())));
    }
    BoostModel::from_json(&read_to_string(path)?)
}

fn model_for(cfg: &RunConfig, target: TargetKind, model: Option<&Path>) -> Result<BoostModel> {
    let default = model_dir(cfg, target).join("model.json");
    let model = load_model(model.unwrap_or(&default))?;
    if model.target != target.as_str() {
        return Err(Error::Config(format!(
            "model was fitted for `{}`, not `{}`",
            model.target,
            target.as_str()
        )));
    }
    Ok(model)
}

/// Re-scores saved models (and baselines, when present) on the test split.
pub fn evaluate(cfg: &RunConfig, target: Option<TargetKind>, model: Option<&Path>) -> Result<()> {
    let targets = targets_or_all(cfg, target);
    if model.is_some() && targets.len() != 1 {
        return Err(Error::Config("--model needs --target".into()));
    }
    let mut prepared: Option<(FeatureManifest, Prepared)> = None;
    for target in targets {
        let m = model_for(cfg, target, model)?;
        if prepared.as_ref().is_none_or(|(man, _)| *man != m.manifest) {
            prepared = Some((m.manifest.clone(), prepare(cfg, &m.manifest)?));
        }
        let p = &prepared.as_ref().unwrap().1;
        let (rows, labels) = split_rows(p, target, true);
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("no labelled test rows for `{}`", target.as_str())));
        }
        let dir = cfg.output().join("evaluate").join(target.as_str());
        let probs = m.predict_proba(&p.frame.subset(&rows))?;
        write_report(&dir, "firecat", &EvalReport::evaluate("firecat", target.as_str(), &probs, &labels, &cfg.metrics)?)?;
        let baseline_path = model_dir(cfg, target).join("baseline.json");
        if model.is_none() && baseline_path.exists() {
            let baseline: BaselineModel = serde_json::from_str(&read_to_string(&baseline_path)?)?;
            let probs = baseline.predict(labels.len());
            let report = EvalReport::evaluate("baseline", target.as_str(), &probs, &labels, &cfg.metrics)?;
            write_report(&dir, "baseline", &report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PdpPoint<'a> {
    feature: &'a str,
    x: f64,
    value: f64,
}

/// SHAP attributions, factor rankings, category effects and partial
/// dependence on the first `explain.rows` labelled test rows.
pub fn explain(cfg: &RunConfig, target: Option<TargetKind>, model: Option<&Path>) -> Result<()> {
    let targets = targets_or_all(cfg, target);
    if model.is_some() && targets.len() != 1 {
        return Err(Error::Config("--model needs --target".into()));
    }
    for target in targets {
        let m = model_for(cfg, target, model)?;
        let prepared = prepare(cfg, &m.manifest)?;
        let (mut rows, _) = split_rows(&prepared, target, true);
        rows.truncate(cfg.explain.rows);
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("no labelled test rows for `{}`", target.as_str())));
        }
        let frame = prepared.frame.subset(&rows);
        let x = m.encode(&frame)?;
        let shaps = (0..m.n_classes)
            .map(|k| tree_shap(&m, &x, k))
            .collect::<Result<Vec<ShapMatrix>>>()?;
        let dir = cfg.output().join("explain").join(target.as_str());
        let class_names = target.class_names();
        let row_ids: Vec<String> = rows.iter().map(|&i| prepared.labels.ids[i].clone()).collect();

        write_with(&dir.join("shap_long.csv"), |w| write_shap_long(w, &shaps, &x, &row_ids, &class_names))?;
        let ranking = rank_factors(&shaps, &m.manifest, cfg.explain.top)?;
        write_json(&dir.join("ranking.json"), &ranking)?;

        let mut effects = BTreeMap::new();
        for f in m.manifest.features.iter().filter(|f| f.kind == FeatureKind::Categorical) {
            let mut per_class = BTreeMap::new();
            for (s, name) in shaps.iter().zip(&class_names) {
                per_class.insert(name.clone(), category_effects(s, &frame, &f.name)?);
            }
            effects.insert(f.name.clone(), per_class);
        }
        write_json(&dir.join("category_effects.json"), &effects)?;

        write_with(&dir.join("pdp1.csv"), |w| {
            let mut csv = csv::Writer::from_writer(w);
            for group in [FeatureGroup::Incident, FeatureGroup::Local] {
                let ranked = match group {
                    FeatureGroup::Incident => &ranking.incident,
                    FeatureGroup::Local => &ranking.local,
                };
                for item in ranked {
                    let f = m.manifest.index_of(&item.feature)?;
                    let grid = feature_grid(&x, f, cfg.explain.pdp_points);
                    for (g, v) in grid.iter().zip(pdp1(&m, &x, f, &grid)?) {
                        csv.serialize(PdpPoint {
                            feature: &item.feature,
                            x: *g,
                            value: v,
                        })?;
                    }
                }
            }
            csv.flush().map_err(|e| io_err(&dir, e))
        })?;

        for (fx, fy) in &cfg.explain.pairs {
            let out = dir.join(format!("pdp2_{fx}__{fy}.csv"));
            write_pdp2_file(&m, &x, fx, fy, cfg.explain.pdp_points, &out)?;
        }
    }
    Ok(())
}

fn write_pdp2_file(
    m: &BoostModel,
    x: &firerisk::firecat::EncodedMatrix,
    fx: &str,
    fy: &str,
    points: usize,
    out: &Path,
) -> Result<()> {
    let (ix, iy) = (m.manifest.index_of(fx)?, m.manifest.index_of(fy)?);
    let gx = feature_grid(x, ix, points);
    let gy = feature_grid(x, iy, points);
    let values = pdp2(m, x, ix, iy, &gx, &gy)?;
    write_with(out, |w| write_pdp2(w, &gx, &gy, &values))
}

/// Two-factor partial dependence over the first `explain.rows` test rows.
pub fn pdp2_cmd(
    cfg: &RunConfig,
    target: TargetKind,
    fx: &str,
    fy: &str,
    points: Option<usize>,
    model: Option<&Path>,
) -> Result<()> {
    let m = model_for(cfg, target, model)?;
    let prepared = prepare(cfg, &m.manifest)?;
    let (mut rows, _) = split_rows(&prepared, target, true);
    rows.truncate(cfg.explain.rows);
    let x = m.encode(&prepared.frame.subset(&rows))?;
    let out = cfg
        .output()
        .join("pdp2")
        .join(format!("{}_{fx}__{fy}.csv", target.as_str()));
    write_pdp2_file(&m, &x, fx, fy, points.unwrap_or(cfg.explain.pdp_points), &out)
}
