//! Tiny least-squares helpers for slope extraction from experiment logs.

use crate::{Error, Result};

/// Ordinary least squares with an explicit design matrix.
///
/// `columns` are the regressor columns (each of length `y.len()`); the
/// returned vector holds one coefficient per column.  Solved through the
/// normal equations with partial pivoting; the systems here are tiny
/// (two to four regressors), so conditioning is not a concern.
pub fn ols(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::Empty {
            what: "regressor columns",
        });
    }
    let n = y.len();
    if n < k {
        return Err(Error::TableTooShort { need: k, got: n });
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::GridMismatch {
                why: format!("regressor length {} != response length {}", c.len(), n),
            });
        }
    }
    // Normal equations: (X^T X) beta = X^T y.
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = dot(&columns[i], &columns[j]);
        }
        a[i][k] = dot(&columns[i], y);
    }
    solve_dense(&mut a)
}

/// Slope and intercept of `y` against `x` (straight line, least squares).
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let ones = vec![1.0; x.len()];
    let beta = ols(&[x.to_vec(), ones], y)?;
    Ok((beta[0], beta[1]))
}

/// Slope of `log y` against `log x`: the exponent of a power-law fit.
///
/// All `x` must be positive and all `y` strictly positive.
pub fn power_law_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|&v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|&v| v.ln()).collect();
    for (&v, &l) in x.iter().zip(&lx) {
        if !(v > 0.0 && l.is_finite()) {
            return Err(Error::bad_param(
                "power-law abscissa",
                format!("{v} is not positive"),
            ));
        }
    }
    for (&v, &l) in y.iter().zip(&ly) {
        if !(v > 0.0 && l.is_finite()) {
            return Err(Error::bad_param(
                "power-law ordinate",
                format!("{v} is not positive"),
            ));
        }
    }
    Ok(line_fit(&lx, &ly)?.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented k x (k+1) system.
fn solve_dense(a: &mut [Vec<f64>]) -> Result<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::bad_param(
                "least squares",
                "singular normal equations",
            ));
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (dst, &src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= factor * src;
            }
        }
    }
    Ok((0..k).map(|i| a[i][k] / a[i][i]).collect())
}
