use std::path::{Path, PathBuf};

use firerisk::firecat::BoostParams;
use firerisk::gam::{GamSpec, LambdaGrid, TermSpec, DEFAULT_BASIS_DIM};
use firerisk::ingest::{FactorColumn, LoadConfig, SyntheticConfig};
use firerisk::metrics::EvalOptions;
use firerisk::targets::{LabelOptions, TargetKind};
use firerisk::{Error, Result};
use serde::{Deserialize, Serialize};

/// Overrides `paths.output` when set.
pub const OUTPUT_ENV: &str = "FIRERISK_OUT";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub output: Option<PathBuf>,
    /// Input tables; each defaults to `<output>/data/<name>.csv`, where
    /// `synth` writes them.
    pub incidents: Option<PathBuf>,
    pub zip_factors: Option<PathBuf>,
    pub county_factors: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    /// Defaults to the bundled CPI-U table.
    pub cpi: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { test_fraction: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GamConfig {
    /// Basis dimension for every occurrence covariate not listed in `terms`.
    pub k: usize,
    /// Explicit terms; empty means all occurrence covariates.
    pub terms: Vec<TermSpec>,
    pub state_effects: bool,
    pub lambda_grid: LambdaGrid,
    pub sweeps: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub min_obs_per_coef: usize,
    pub pdp_points: usize,
}

impl Default for GamConfig {
    fn default() -> Self {
        let spec = GamSpec::default();
        GamConfig {
            k: DEFAULT_BASIS_DIM,
            terms: Vec::new(),
            state_effects: spec.state_effects,
            lambda_grid: spec.lambda_grid,
            sweeps: spec.sweeps,
            max_iter: spec.max_iter,
            tol: spec.tol,
            min_obs_per_coef: spec.min_obs_per_coef,
            pdp_points: 50,
        }
    }
}

impl GamConfig {
    pub fn spec(&self) -> GamSpec {
        let terms = if self.terms.is_empty() {
            FactorColumn::OCCURRENCE_COVARIATES
                .iter()
                .map(|c| TermSpec::new(c.as_str()).with_k(self.k))
                .collect()
        } else {
            self.terms.clone()
        };
        GamSpec {
            terms,
            state_effects: self.state_effects,
            lambda_grid: self.lambda_grid,
            sweeps: self.sweeps,
            max_iter: self.max_iter,
            tol: self.tol,
            min_obs_per_coef: self.min_obs_per_coef,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirecatConfig {
    pub targets: Vec<TargetKind>,
    /// Feature names; empty means the full default manifest.
    pub features: Vec<String>,
    pub params: BoostParams,
    /// Candidate hyperparameters; when non-empty the best by holdout
    /// log-loss replaces `params`.
    pub grid: Vec<BoostParams>,
    pub grid_validation_fraction: f64,
}

impl Default for FirecatConfig {
    fn default() -> Self {
        FirecatConfig {
            targets: TargetKind::ALL.to_vec(),
            features: Vec::new(),
            params: BoostParams::default(),
            grid: Vec::new(),
            grid_validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Test rows explained, taken in order.
    pub rows: usize,
    pub top: usize,
    pub pdp_points: usize,
    /// Feature pairs for two-factor partial dependence.
    pub pairs: Vec<(String, String)>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            rows: 1000,
            top: 8,
            pdp_points: 10,
            pairs: vec![("response_minutes".into(), "total_sqft".into())],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub load: LoadConfig,
    pub synthetic: SyntheticConfig,
    pub labels: LabelOptions,
    pub split: SplitConfig,
    pub gam: GamConfig,
    pub firecat: FirecatConfig,
    pub metrics: EvalOptions,
    pub explain: ExplainConfig,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // relative paths resolve against the config file's directory
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut config.paths;
        for slot in [
            &mut p.output,
            &mut p.incidents,
            &mut p.zip_factors,
            &mut p.county_factors,
            &mut p.weather,
            &mut p.cpi,
        ] {
            if let Some(v) = slot.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        }
        if let Some(out) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            config.paths.output = Some(PathBuf::from(out));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::Config("`seed` is required so that runs are reproducible".into()));
        }
        if self.paths.output.is_none() {
            return Err(Error::Config(format!("set `paths.output` or {OUTPUT_ENV}")));
        }
        let t = self.split.test_fraction;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("split.test_fraction {t} must lie in (0, 1)")));
        }
        if self.firecat.targets.is_empty() {
            return Err(Error::Config("firecat.targets is empty".into()));
        }
        self.synthetic.validate()?;
        self.labels.injury_weights.validate()?;
        self.labels.cuts.validate()?;
        self.gam.spec().validate()?;
        self.firecat.params.validate()?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn output(&self) -> &Path {
        self.paths.output.as_deref().expect("validated")
    }

    fn input(&self, slot: &Option<PathBuf>, name: &str) -> PathBuf {
        slot.clone()
            .unwrap_or_else(|| self.output().join("data").join(format!("{name}.csv")))
    }

    pub fn incidents_path(&self) -> PathBuf {
        self.input(&self.paths.incidents, "incidents")
    }

    pub fn zip_factors_path(&self) -> PathBuf {
        self.input(&self.paths.zip_factors, "zip_factors")
    }

    pub fn county_factors_path(&self) -> PathBuf {
        self.input(&self.paths.county_factors, "county_factors")
    }

    pub fn weather_path(&self) -> PathBuf {
        self.input(&self.paths.weather, "weather")
    }
}
