use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{bspline_basis, difference_penalty, null_space_of, uniform_knots, CUBIC};
use super::{GamData, GamSpec};
use crate::error::{Error, Result};

const PENALTY_ORDER: usize = 2;
const MAX_HALVINGS: usize = 50;

/// A fitted smooth. Stores everything needed to re-evaluate the curve and
/// to test it: knots live on the standardized scale `(x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothTerm {
    pub name: String,
    pub k: usize,
    pub degree: usize,
    pub center: f64,
    pub scale: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub knots: Vec<f64>,
    /// k x (k-1) sum-to-zero null-space basis, row major.
    pub constraint: Vec<Vec<f64>>,
    pub penalty_order: usize,
    /// Multiplier applied to the difference penalty so lambda is scale free.
    pub penalty_scale: f64,
    pub lambda: f64,
    /// Constrained coefficients (length k-1).
    pub coefficients: Vec<f64>,
    pub edf: f64,
    /// Bayesian posterior covariance of `coefficients`.
    pub covariance: Vec<Vec<f64>>,
}

impl SmoothTerm {
    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.constraint)
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.covariance)
    }

    /// Coefficients on the unconstrained B-spline basis.
    pub fn basis_coefficients(&self) -> DVector<f64> {
        self.constraint_matrix() * DVector::from_column_slice(&self.coefficients)
    }

    /// Centered effect on the log scale. Inputs beyond the fitted data
    /// range are clamped to it.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data {
                column: self.name.clone(),
                message: format!("non-finite value {v}"),
            });
        }
        let (lo, hi) = (self.knots[self.degree], self.knots[self.k]);
        let z: Vec<f64> = x
            .iter()
            .map(|v| ((v - self.center) / self.scale).clamp(lo, hi))
            .collect();
        let b = bspline_basis(&z, &self.knots, self.degree)?;
        Ok((b * self.basis_coefficients()).iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iterations: usize,
    pub final_change: f64,
    pub converged: bool,
    /// Penalized deviance at the start and after each iteration.
    pub penalized_deviance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamFit {
    pub n_obs: usize,
    pub intercept: f64,
    pub reference_state: Option<String>,
    /// Includes the reference state at exactly 0.
    pub state_effects: BTreeMap<String, f64>,
    pub terms: Vec<SmoothTerm>,
    pub dispersion: f64,
    pub deviance: f64,
    pub null_deviance: f64,
    pub edf_total: f64,
    pub residual_df: f64,
    pub gcv: f64,
    pub convergence: ConvergenceRecord,
}

impl GamFit {
    pub fn term(&self, name: &str) -> Result<&SmoothTerm> {
        self.terms
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::lookup("term", name))
    }

    pub fn linear_predictor(&self, data: &GamData) -> Result<Vec<f64>> {
        data.check_shape()?;
        let mut eta = vec![self.intercept; data.len()];
        if !self.state_effects.is_empty() {
            for (e, s) in eta.iter_mut().zip(&data.states) {
                *e += self
                    .state_effects
                    .get(s)
                    .ok_or_else(|| Error::lookup("state", s.as_str()))?;
            }
        }
        for t in &self.terms {
            for (e, f) in eta.iter_mut().zip(t.evaluate(data.covariate(&t.name)?)?) {
                *e += f;
            }
        }
        Ok(eta)
    }

    /// Fitted mean rates.
    pub fn predict(&self, data: &GamData) -> Result<Vec<f64>> {
        Ok(self.linear_predictor(data)?.into_iter().map(f64::exp).collect())
    }
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

struct TermDesign {
    name: String,
    k: usize,
    center: f64,
    scale: f64,
    x_min: f64,
    x_max: f64,
    knots: Vec<f64>,
    z: DMatrix<f64>,
    penalty: DMatrix<f64>,
    penalty_scale: f64,
    offset: usize,
    fixed_lambda: Option<f64>,
}

impl TermDesign {
    fn width(&self) -> usize {
        self.k - 1
    }
}

struct Design {
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    y: DVector<f64>,
    reference_state: Option<String>,
    dummy_states: Vec<String>,
    terms: Vec<TermDesign>,
}

fn build_design(data: &GamData, spec: &GamSpec) -> Result<Design> {
    spec.validate()?;
    data.check_shape()?;
    let n = data.len();
    if n == 0 {
        return Err(Error::InsufficientData("no observations".into()));
    }
    if let Some(y) = data.response.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
        return Err(Error::Family(format!(
            "Gamma family needs a positive finite response, found {y}"
        )));
    }

    let (reference_state, dummy_states) = if spec.state_effects {
        let mut states: Vec<String> = data
            .states
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let reference = states.remove(0);
        (Some(reference), states)
    } else {
        (None, Vec::new())
    };

    let p = spec.n_coefficients(dummy_states.len() + 1);
    let needed = spec.min_obs_per_coef.saturating_mul(p);
    if n < needed {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} coefficients; need at least {needed}"
        )));
    }

    let mut x = DMatrix::zeros(n, p);
    x.column_mut(0).fill(1.0);
    let mut col = 1;
    for s in &dummy_states {
        for (i, st) in data.states.iter().enumerate() {
            if st == s {
                x[(i, col)] = 1.0;
            }
        }
        col += 1;
    }

    let mut terms = Vec::with_capacity(spec.terms.len());
    for t in &spec.terms {
        let raw = data.covariate(&t.name)?;
        if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data {
                column: t.name.clone(),
                message: format!("non-finite value {v}"),
            });
        }
        let center = raw.iter().sum::<f64>() / n as f64;
        let scale = (raw.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n as f64).sqrt();
        if !(scale > 0.0) {
            return Err(Error::Rank(t.name.clone()));
        }
        let z: Vec<f64> = raw.iter().map(|v| (v - center) / scale).collect();
        let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let knots = uniform_knots(lo, hi, t.k, CUBIC);
        let b = bspline_basis(&z, &knots, CUBIC)?;
        let sums = DVector::from_iterator(t.k, b.column_iter().map(|c| c.sum()));
        let zmat = null_space_of(&sums);
        let xj = &b * &zmat;
        let raw_penalty = zmat.transpose() * difference_penalty(t.k, PENALTY_ORDER) * &zmat;
        let gram = xj.transpose() * &xj;
        let penalty_scale = gram.norm() / raw_penalty.norm();
        x.columns_mut(col, t.k - 1).copy_from(&xj);
        terms.push(TermDesign {
            name: t.name.clone(),
            k: t.k,
            center,
            scale,
            x_min: raw.iter().copied().fold(f64::INFINITY, f64::min),
            x_max: raw.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            knots,
            z: zmat,
            penalty: raw_penalty * penalty_scale,
            penalty_scale,
            offset: col,
            fixed_lambda: t.lambda,
        });
        col += t.k - 1;
    }

    let xtx = x.tr_mul(&x);
    Ok(Design {
        x,
        xtx,
        y: DVector::from_column_slice(&data.response),
        reference_state,
        dummy_states,
        terms,
    })
}

impl Design {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn p(&self) -> usize {
        self.x.ncols()
    }

    fn penalty(&self, lambdas: &[f64]) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.p(), self.p());
        for (t, &l) in self.terms.iter().zip(lambdas) {
            let w = t.width();
            s.view_mut((t.offset, t.offset), (w, w)).copy_from(&(&t.penalty * l));
        }
        s
    }

    fn intercept_start(&self) -> DVector<f64> {
        let mut beta = DVector::zeros(self.p());
        beta[0] = self.y.mean().ln();
        beta
    }

    fn factor(&self, s: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
        let h = &self.xtx + s;
        Cholesky::new(h.clone()).ok_or_else(|| self.rank_error(&h))
    }

    /// Names the first block whose own penalized cross-product is singular.
    fn rank_error(&self, h: &DMatrix<f64>) -> Error {
        for t in &self.terms {
            let w = t.width();
            let block = h.view((t.offset, t.offset), (w, w)).into_owned();
            if Cholesky::new(block).is_none() {
                return Error::Rank(t.name.clone());
            }
        }
        let d = self.dummy_states.len() + 1;
        if Cholesky::new(h.view((0, 0), (d, d)).into_owned()).is_none() {
            return Error::Rank("state".into());
        }
        Error::Rank("model".into())
    }
}

fn gamma_deviance(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    2.0 * y
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| {
            let mu = e.exp();
            (y - mu) / mu - (y.ln() - e)
        })
        .sum::<f64>()
}

struct Pirls {
    beta: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    deviance: f64,
    record: ConvergenceRecord,
}

/// Penalized IRLS. With the log link and Gamma variance the working weights
/// are identically 1, so the penalized normal matrix is factored once.
fn pirls(
    design: &Design,
    lambdas: &[f64],
    start: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<Pirls> {
    let s = design.penalty(lambdas);
    let chol = design.factor(&s)?;
    let pen = |beta: &DVector<f64>, eta: &DVector<f64>| {
        gamma_deviance(&design.y, eta) + beta.dot(&(&s * beta))
    };

    let mut beta = start.clone();
    let mut eta = &design.x * &beta;
    let mut pd = pen(&beta, &eta);
    if !pd.is_finite() {
        beta = design.intercept_start();
        eta = &design.x * &beta;
        pd = pen(&beta, &eta);
    }
    let mut record = ConvergenceRecord {
        iterations: 0,
        final_change: f64::INFINITY,
        converged: false,
        penalized_deviance: vec![pd],
    };

    for iter in 1..=max_iter {
        let z = DVector::from_iterator(
            design.n(),
            design.y.iter().zip(eta.iter()).map(|(&y, &e)| {
                let mu = e.exp();
                e + (y - mu) / mu
            }),
        );
        let mut cand = chol.solve(&design.x.tr_mul(&z));
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand_eta = &design.x * &cand;
            let cand_pd = pen(&cand, &cand_eta);
            if cand_pd.is_finite() && cand_pd <= pd {
                accepted = Some((cand_eta, cand_pd));
                break;
            }
            cand = (&beta + &cand) * 0.5;
        }
        record.iterations = iter;
        let Some((cand_eta, cand_pd)) = accepted else {
            // no descent direction left: already at the minimum to working precision
            record.final_change = 0.0;
            record.converged = true;
            break;
        };
        let change = (pd - cand_pd) / cand_pd.abs().max(1e-300);
        beta = cand;
        eta = cand_eta;
        pd = cand_pd;
        record.penalized_deviance.push(pd);
        record.final_change = change;
        if change < tol {
            record.converged = true;
            break;
        }
    }

    Ok(Pirls {
        deviance: gamma_deviance(&design.y, &eta),
        beta,
        chol,
        record,
    })
}

fn gcv(design: &Design, fit: &Pirls) -> f64 {
    let n = design.n() as f64;
    let tr = fit.chol.solve(&design.xtx).trace();
    let denom = n - tr;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    n * fit.deviance / (denom * denom)
}

/// Coordinate descent over terms: each term's lambda is set to the grid
/// value minimizing GCV with the others held fixed.
fn select_lambdas(design: &Design, spec: &GamSpec) -> Result<Vec<f64>> {
    let grid = spec.lambda_grid.values();
    let mid = grid[grid.len() / 2];
    let mut lambdas: Vec<f64> = design
        .terms
        .iter()
        .map(|t| t.fixed_lambda.unwrap_or(mid))
        .collect();
    let free: Vec<usize> = (0..design.terms.len())
        .filter(|&j| design.terms[j].fixed_lambda.is_none())
        .collect();
    if free.is_empty() {
        return Ok(lambdas);
    }
    let mut warm = pirls(design, &lambdas, &design.intercept_start(), spec.max_iter, spec.tol)?.beta;
    for _ in 0..spec.sweeps {
        let mut changed = false;
        for &j in &free {
            let scored: Vec<(f64, DVector<f64>)> = grid
                .par_iter()
                .map(|&l| {
                    let mut trial = lambdas.clone();
                    trial[j] = l;
                    let fit = pirls(design, &trial, &warm, spec.max_iter, spec.tol)?;
                    let score = gcv(design, &fit);
                    Ok((if score.is_nan() { f64::INFINITY } else { score }, fit.beta))
                })
                .collect::<Result<_>>()?;
            let best = (0..scored.len())
                .min_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0))
                .unwrap();
            if grid[best] != lambdas[j] {
                changed = true;
            }
            lambdas[j] = grid[best];
            warm = scored[best].1.clone();
        }
        if !changed {
            break;
        }
    }
    Ok(lambdas)
}

/// Fits `log E[y] = b0 + b_state + sum_j f_j(x_j)` with Gamma errors.
pub fn fit_gam(data: &GamData, spec: &GamSpec) -> Result<GamFit> {
    let design = build_design(data, spec)?;
    let lambdas = select_lambdas(&design, spec)?;
    let fit = pirls(&design, &lambdas, &design.intercept_start(), spec.max_iter, spec.tol)?;

    let n = design.n();
    let influence = fit.chol.solve(&design.xtx);
    let edf_total = influence.trace();
    let residual_df = n as f64 - edf_total;
    let eta = &design.x * &fit.beta;
    let pearson: f64 = design
        .y
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| {
            let mu = e.exp();
            ((y - mu) / mu).powi(2)
        })
        .sum();
    let dispersion = pearson / residual_df.max(1.0);
    let vb = fit.chol.inverse() * dispersion;
    let gcv_score = gcv(&design, &fit);
    let null_eta = DVector::from_element(n, design.y.mean().ln());
    let null_deviance = gamma_deviance(&design.y, &null_eta);

    let mut state_effects = BTreeMap::new();
    if let Some(r) = &design.reference_state {
        state_effects.insert(r.clone(), 0.0);
        for (i, s) in design.dummy_states.iter().enumerate() {
            state_effects.insert(s.clone(), fit.beta[1 + i]);
        }
    }

    let terms = design
        .terms
        .iter()
        .zip(&lambdas)
        .map(|(t, &lambda)| {
            let w = t.width();
            SmoothTerm {
                name: t.name.clone(),
                k: t.k,
                degree: CUBIC,
                center: t.center,
                scale: t.scale,
                x_min: t.x_min,
                x_max: t.x_max,
                knots: t.knots.clone(),
                constraint: to_rows(&t.z),
                penalty_order: PENALTY_ORDER,
                penalty_scale: t.penalty_scale,
                lambda,
                coefficients: fit.beta.rows(t.offset, w).iter().copied().collect(),
                edf: (t.offset..t.offset + w).map(|i| influence[(i, i)]).sum(),
                covariance: to_rows(&vb.view((t.offset, t.offset), (w, w)).into_owned()),
            }
        })
        .collect();

    Ok(GamFit {
        n_obs: n,
        intercept: fit.beta[0],
        reference_state: design.reference_state.clone(),
        state_effects,
        terms,
        dispersion,
        deviance: fit.deviance,
        null_deviance,
        edf_total,
        residual_df,
        gcv: gcv_score,
        convergence: fit.record,
    })
}
