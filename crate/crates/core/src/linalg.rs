//! Small dense helpers on top of faer.

use faer::linalg::matmul::triangular::{matmul, BlockStructure};
use faer::{Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};

pub(crate) fn par() -> Par {
    faer::get_global_parallelism()
}

/// `scale · XᵀX`, computed on the lower triangle and mirrored so the result
/// is exactly symmetric.
pub fn scaled_gram(x: MatRef<'_, f64>, scale: f64) -> Mat<f64> {
    let p = x.ncols();
    let mut out = Mat::<f64>::zeros(p, p);
    matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        x.transpose(),
        BlockStructure::Rectangular,
        x,
        BlockStructure::Rectangular,
        scale,
        par(),
    );
    for j in 0..p {
        for i in 0..j {
            out[(i, j)] = out[(j, i)];
        }
    }
    out
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

pub fn frobenius_sq(m: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)] * m[(i, j)];
        }
    }
    acc
}

pub fn all_finite(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn col_to_vec(m: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn row_to_vec(m: MatRef<'_, f64>, i: usize) -> Vec<f64> {
    (0..m.ncols()).map(|j| m[(i, j)]).collect()
}

/// Builds a matrix from row vectors of equal length.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: bad.len() });
    }
    Ok(Mat::from_fn(n, p, |i, j| rows[i][j]))
}

/// Builds a matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vec<f64>]) -> Result<Mat<f64>> {
    let k = cols.len();
    let p = cols.first().map_or(0, Vec::len);
    if let Some(bad) = cols.iter().find(|c| c.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: bad.len() });
    }
    Ok(Mat::from_fn(p, k, |i, j| cols[j][i]))
}

/// `‖AᵀA − I‖_max` for a matrix with (supposedly) orthonormal columns.
pub fn orthonormality_defect(a: MatRef<'_, f64>) -> f64 {
    let g = a.transpose() * a;
    let k = g.nrows();
    let mut worst = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Two-pass column means; constant columns come out exact.
pub fn column_means(x: MatRef<'_, f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let rough = (0..x.nrows()).map(|i| x[(i, j)]).sum::<f64>() / n;
            rough + (0..x.nrows()).map(|i| x[(i, j)] - rough).sum::<f64>() / n
        })
        .collect()
}

pub fn subtract_row(x: MatRef<'_, f64>, row: &[f64]) -> Mat<f64> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - row[j])
}
