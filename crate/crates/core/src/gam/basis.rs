//! B-spline bases, difference penalties, and sum-to-zero constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const CUBIC: usize = 3;

/// Evaluates every B-spline of the given degree on `knots` at each `x`.
///
/// Row `i` holds the basis values at `x[i]`; there are
/// `knots.len() - degree - 1` columns. Points must lie in
/// `[knots[degree], knots[ncols]]`.
pub fn bspline_basis(x: &[f64], knots: &[f64], degree: usize) -> Result<DMatrix<f64>> {
    if knots.len() < 2 * (degree + 1) {
        return Err(Error::Basis(format!(
            "need at least {} knots for degree {degree}, got {}",
            2 * (degree + 1),
            knots.len()
        )));
    }
    if knots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Basis("knots must be non-decreasing".into()));
    }
    let n_basis = knots.len() - degree - 1;
    let (lo, hi) = (knots[degree], knots[n_basis]);
    if !(lo < hi) {
        return Err(Error::Basis("empty basis domain".into()));
    }
    let mut out = DMatrix::zeros(x.len(), n_basis);
    let mut values = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    for (row, &xi) in x.iter().enumerate() {
        if !(lo..=hi).contains(&xi) {
            return Err(Error::Basis(format!(
                "x = {xi} outside basis domain [{lo}, {hi}]"
            )));
        }
        let span = find_span(knots, degree, n_basis, xi);
        // triangular Cox-de Boor recursion over the degree + 1 non-zero splines
        values[0] = 1.0;
        for j in 1..=degree {
            left[j] = xi - knots[span + 1 - j];
            right[j] = knots[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        for (j, v) in values.iter().enumerate() {
            out[(row, span - degree + j)] = *v;
        }
    }
    Ok(out)
}

fn find_span(knots: &[f64], degree: usize, n_basis: usize, x: f64) -> usize {
    if x >= knots[n_basis] {
        // right end: last non-degenerate interval
        let mut span = n_basis - 1;
        while span > degree && knots[span] >= knots[span + 1] {
            span -= 1;
        }
        return span;
    }
    // largest span with knots[span] <= x, within [degree, n_basis - 1]
    let mut lo = degree;
    let mut hi = n_basis;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if knots[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Equally spaced knots extending `degree` intervals past each end, so the
/// `n_basis` splines cover `[lo, hi]` with uniform shape.
pub fn uniform_knots(lo: f64, hi: f64, n_basis: usize, degree: usize) -> Vec<f64> {
    let intervals = n_basis - degree;
    let h = (hi - lo) / intervals as f64;
    let mut knots: Vec<f64> = (0..n_basis + degree + 1)
        .map(|j| lo + (j as f64 - degree as f64) * h)
        .collect();
    knots[degree] = lo;
    knots[n_basis] = hi;
    knots
}

/// Open (clamped) knots: boundary knots repeated `degree + 1` times.
pub fn clamped_knots(lo: f64, hi: f64, n_basis: usize, degree: usize) -> Vec<f64> {
    let intervals = n_basis - degree;
    let h = (hi - lo) / intervals as f64;
    let mut knots = vec![lo; degree];
    knots.extend((0..intervals).map(|j| lo + j as f64 * h));
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    knots
}

/// `D^T D` for the `order`-th difference operator on `k` coefficients.
pub fn difference_penalty(k: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(k, k);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, k, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d.transpose() * d
}

/// Orthonormal basis (k x (k-1)) for the complement of `c`, built from the
/// Householder reflection mapping `c` onto the first axis.
pub fn null_space_of(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let norm = c.norm();
    let mut v = c.clone();
    let sign = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign * norm;
    let vv = v.dot(&v);
    let h = if vv > 0.0 {
        DMatrix::<f64>::identity(k, k) - (&v * v.transpose()) * (2.0 / vv)
    } else {
        DMatrix::<f64>::identity(k, k)
    };
    h.columns(1, k - 1).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamped_endpoints_select_single_spline() {
        let knots = clamped_knots(0.0, 1.0, 8, 3);
        let b = bspline_basis(&[0.0, 1.0], &knots, 3).unwrap();
        assert_eq!(b[(0, 0)], 1.0);
        assert!((1..8).all(|j| b[(0, j)] == 0.0));
        assert_eq!(b[(1, 7)], 1.0);
        assert!((0..7).all(|j| b[(1, j)] == 0.0));
    }

    #[test]
    fn linear_hats_at_midpoint() {
        let knots = [0.0, 1.0, 2.0, 3.0, 4.0];
        // degree 1: hat functions peaking at 1, 2, 3; midpoint 1.5 straddles
        // the first two
        let b = bspline_basis(&[1.5], &knots, 1).unwrap();
        assert_eq!(b.ncols(), 3);
        assert!((b[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((b[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(b[(0, 2)], 0.0);
    }

    #[test]
    fn outside_domain_is_error() {
        let knots = uniform_knots(0.0, 1.0, 10, 3);
        assert!(bspline_basis(&[1.0 + 1e-9], &knots, 3).is_err());
        assert!(bspline_basis(&[-0.1], &knots, 3).is_err());
        assert!(bspline_basis(&[0.5], &[0.0, 1.0, 0.5, 2.0], 0).is_err());
    }

    #[test]
    fn second_difference_penalty_annihilates_lines() {
        let s = difference_penalty(6, 2);
        let line = DVector::from_fn(6, |i, _| 2.0 * i as f64 - 1.0);
        assert!((&s * line).norm() < 1e-12);
        let bump = DVector::from_fn(6, |i, _| if i == 3 { 1.0 } else { 0.0 });
        assert!((bump.transpose() * &s * &bump)[0] > 0.0);
    }

    #[test]
    fn null_space_is_orthonormal_complement() {
        let c = DVector::from_vec(vec![3.0, -1.0, 2.0, 0.5, 7.0]);
        let z = null_space_of(&c);
        assert_eq!(z.shape(), (5, 4));
        assert!((c.transpose() * &z).norm() < 1e-12);
        assert!((z.transpose() * &z - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn partition_of_unity(xs in prop::collection::vec(-3.0f64..5.0, 1..40), k in 5usize..14) {
            let knots = uniform_knots(-3.0, 5.0, k, 3);
            let b = bspline_basis(&xs, &knots, 3).unwrap();
            for i in 0..xs.len() {
                let s: f64 = b.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                prop_assert!(b.row(i).iter().all(|v| *v >= -1e-15));
            }
            let knots = clamped_knots(-3.0, 5.0, k, 3);
            let b = bspline_basis(&xs, &knots, 3).unwrap();
            for i in 0..xs.len() {
                let s: f64 = b.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }
}
