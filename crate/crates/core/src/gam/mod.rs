//! Gamma/log-link additive models for county-month incidence rates.
//!
//! Smooths are cubic P-splines on standardized covariates with a
//! second-difference penalty and a sum-to-zero constraint. Smoothing
//! parameters are picked per term by GCV over a log10 grid.

pub mod basis;
mod data;
mod diagnostics;
mod fit;
mod stratify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FactorColumn;

pub use basis::{bspline_basis, clamped_knots, difference_penalty, null_space_of, uniform_knots};
pub use data::GamData;
pub use diagnostics::{
    partial_dependence, pd_grid, significance_stars, term_significance, write_partial_dependence,
    TermDiagnostic,
};
pub use fit::{fit_gam, ConvergenceRecord, GamFit, SmoothTerm};
pub use stratify::{fit_stratified, stratum_rows, Season, Stratifier, StratumFit};

pub const DEFAULT_BASIS_DIM: usize = 10;

fn default_k() -> usize {
    DEFAULT_BASIS_DIM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub name: String,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Fixes the smoothing parameter instead of searching the grid.
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl TermSpec {
    pub fn new(name: impl Into<String>) -> Self {
        TermSpec {
            name: name.into(),
            k: DEFAULT_BASIS_DIM,
            lambda: None,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
}

/// `points` values of lambda, equally spaced in log10 between the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaGrid {
    pub min_log10: f64,
    pub max_log10: f64,
    pub points: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            min_log10: -4.0,
            max_log10: 4.0,
            points: 25,
        }
    }
}

impl LambdaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![10f64.powf(self.min_log10)];
        }
        let step = (self.max_log10 - self.min_log10) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| 10f64.powf(self.min_log10 + i as f64 * step))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GamSpec {
    pub terms: Vec<TermSpec>,
    /// State fixed effects, with the alphabetically first state as reference.
    pub state_effects: bool,
    pub lambda_grid: LambdaGrid,
    /// Coordinate-descent passes over the terms during lambda search.
    pub sweeps: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub min_obs_per_coef: usize,
}

impl Default for GamSpec {
    fn default() -> Self {
        GamSpec {
            terms: Vec::new(),
            state_effects: true,
            lambda_grid: LambdaGrid::default(),
            sweeps: 2,
            max_iter: 200,
            tol: 1e-8,
            min_obs_per_coef: 10,
        }
    }
}

impl GamSpec {
    /// One smooth per occurrence covariate, each with basis dimension `k`.
    pub fn occurrence(k: usize) -> Self {
        GamSpec {
            terms: FactorColumn::OCCURRENCE_COVARIATES
                .iter()
                .map(|c| TermSpec::new(c.as_str()).with_k(k))
                .collect(),
            ..GamSpec::default()
        }
    }

    pub fn n_coefficients(&self, n_states: usize) -> usize {
        let states = if self.state_effects {
            n_states.saturating_sub(1)
        } else {
            0
        };
        1 + states + self.terms.iter().map(|t| t.k - 1).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.lambda_grid;
        if g.points == 0 || !(g.min_log10 <= g.max_log10) {
            return Err(Error::Config("lambda grid needs points >= 1 and min <= max".into()));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::Config("max_iter and tol must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.terms {
            if t.k < basis::CUBIC + 2 {
                return Err(Error::Config(format!(
                    "term `{}`: basis dimension must be at least {}",
                    t.name,
                    basis::CUBIC + 2
                )));
            }
            if t.lambda.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
                return Err(Error::Config(format!("term `{}`: lambda must be finite and >= 0", t.name)));
            }
            if !seen.insert(t.name.as_str()) {
                return Err(Error::Config(format!("term `{}` listed twice", t.name)));
            }
        }
        Ok(())
    }
}
