use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use super::{GamFit, SmoothTerm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDiagnostic {
    pub term: String,
    pub edf: f64,
    /// Rank of the truncated covariance used in the Wald statistic.
    pub test_rank: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub stars: String,
    /// 1 for the largest statistic.
    pub rank: usize,
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Wald statistic of one smooth, using the leading `round(edf)` eigenpairs
/// of its posterior covariance. Returns `(F, rank)`.
fn wald(term: &SmoothTerm) -> (f64, usize) {
    let eig = SymmetricEigen::new(term.covariance_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let usable = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > top * 1e-10 && eig.eigenvalues[i] > 0.0)
        .count();
    let r = (term.edf.round() as usize).clamp(1, term.k - 1).min(usable.max(1));
    let gamma = DVector::from_column_slice(&term.coefficients);
    let t: f64 = order[..r]
        .iter()
        .map(|&i| {
            let u = eig.eigenvectors.column(i);
            u.dot(&gamma).powi(2) / eig.eigenvalues[i]
        })
        .sum();
    (t / r as f64, r)
}

/// Approximate significance of every smooth, ranked by statistic
/// (ties keep model order). F reference on the residual degrees of freedom,
/// chi-squared when none are left.
pub fn term_significance(fit: &GamFit) -> Vec<TermDiagnostic> {
    let mut out: Vec<TermDiagnostic> = fit
        .terms
        .iter()
        .map(|term| {
            let (f, r) = wald(term);
            let p_value = if !f.is_finite() {
                0.0
            } else if fit.residual_df > 0.0 {
                FisherSnedecor::new(r as f64, fit.residual_df)
                    .map(|d| d.sf(f))
                    .unwrap_or(f64::NAN)
            } else {
                ChiSquared::new(r as f64)
                    .map(|d| d.sf(f * r as f64))
                    .unwrap_or(f64::NAN)
            };
            TermDiagnostic {
                term: term.name.clone(),
                edf: term.edf,
                test_rank: r,
                statistic: f,
                p_value,
                stars: significance_stars(p_value).to_string(),
                rank: 0,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out[b].statistic.total_cmp(&out[a].statistic).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        out[i].rank = rank + 1;
    }
    order.into_iter().map(|i| out[i].clone()).collect()
}

/// `(x, centered log-scale effect)` pairs. Grid values outside the fitted
/// range are evaluated at the nearest end of it.
pub fn partial_dependence(fit: &GamFit, term: &str, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let t = fit.term(term)?;
    let effect = t.evaluate(grid)?;
    Ok(grid.iter().copied().zip(effect).collect())
}

/// `points` equally spaced values spanning the term's data range.
pub fn pd_grid(term: &SmoothTerm, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (term.x_min + term.x_max)],
        _ => (0..points)
            .map(|i| term.x_min + (term.x_max - term.x_min) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// CSV with columns `term,x,effect`, one row per grid point per term.
pub fn write_partial_dependence<W: Write>(fit: &GamFit, points: usize, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["term", "x", "effect"])?;
    for t in &fit.terms {
        for (x, e) in partial_dependence(fit, &t.name, &pd_grid(t, points))? {
            w.write_record([t.name.as_str(), &x.to_string(), &e.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<partial dependence writer>", e))?;
    Ok(())
}
