//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;

pub type Matrix = DMatrix<f64>;

/// Relative tolerance below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Scale-relative floor for positive definiteness.
pub const PD_TOL: f64 = 1e-10;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_in_place(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `||M - M^T||_F / ||M||_F`, zero for the zero matrix.
pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Smallest and largest eigenvalue of the symmetric part of `m`.
pub fn symmetric_eigen_range(m: &Matrix) -> (f64, f64) {
    if m.nrows() == 1 {
        return (m[(0, 0)], m[(0, 0)]);
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Minimum eigenvalue must exceed `1e-10 * (1 + max eigenvalue)`.
pub fn is_positive_definite(m: &Matrix) -> bool {
    let (min, max) = symmetric_eigen_range(m);
    min > PD_TOL * (1.0 + max)
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].abs(),
        2 => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let half_tr = 0.5 * (a + d);
            let det = a * d - b * c;
            let disc = half_tr * half_tr - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (half_tr + s).abs().max((half_tr - s).abs())
            } else {
                // complex pair: |lambda|^2 = det
                det.abs().sqrt()
            }
        }
        _ => m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
    }
}

/// Numerical rank with singular values below `RANK_TOL * sigma_max` treated as zero.
pub fn numerical_rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

pub fn one_norm(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Reciprocal 1-norm condition number from a matrix and its inverse.
pub fn rcond_from_inverse(m: &Matrix, inv: &Matrix) -> f64 {
    let denom = one_norm(m) * one_norm(inv);
    if denom == 0.0 || !denom.is_finite() {
        0.0
    } else {
        1.0 / denom
    }
}

/// Horizontal concatenation of blocks with equal row counts.
pub fn hstack(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(b);
        c0 += b.ncols();
    }
    out
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn symmetric_sqrt(m: &Matrix) -> Matrix {
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    Matrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn scalar(v: f64) -> Matrix {
    Matrix::from_element(1, 1, v)
}
