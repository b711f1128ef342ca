//! Dense linear algebra with explicit tolerances: numerical rank, orthonormal
//! null spaces, projectors and pseudo-inverse solves.
//!
//! Everything here goes through a singular value decomposition. Wide matrices
//! are padded with zero rows first so the right singular vectors form a full
//! basis of the domain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Projector distance below which two subspaces are considered equal.
pub const SPAN_EQ_TOL: f64 = 1e-7;

/// Numerical thresholds shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values at or below `rank_rel_tol * sigma_max` count as zero.
    pub rank_rel_tol: f64,
    /// Absolute threshold under which a coordinate has sign 0.
    pub sign_tol: f64,
    pub lp_tol: f64,
    pub solver_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel_tol: 1e-9,
            sign_tol: 1e-8,
            lp_tol: 1e-9,
            solver_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_rel_tol, self.sign_tol, self.lp_tol, self.solver_tol];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::input("tolerances must be finite and strictly positive"));
        }
        if self.sign_tol <= self.solver_tol {
            return Err(Error::input("sign_tol must exceed solver_tol"));
        }
        Ok(())
    }
}

pub fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite entries")))
    }
}

pub fn check_finite_slice(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite entries")))
    }
}

/// Builds a matrix from row vectors. All rows must have `cols` entries.
pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Matrix> {
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::input(format!(
            "row {bad} has {} entries, expected {cols}",
            rows[bad].len()
        )));
    }
    let m = Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    check_finite(&m, "matrix")?;
    Ok(m)
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Submatrix made of the listed rows, in order.
pub fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_cols(m: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Stacks matrices vertically. They must share a column count.
pub fn vstack(ms: &[&Matrix]) -> Result<Matrix> {
    let cols = match ms.first() {
        Some(m) => m.ncols(),
        None => return Err(Error::input("cannot stack an empty list of matrices")),
    };
    if let Some(bad) = ms.iter().find(|m| m.ncols() != cols) {
        return Err(Error::input(format!(
            "column count mismatch while stacking: {} vs {cols}",
            bad.ncols()
        )));
    }
    let rows: usize = ms.iter().map(|m| m.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for m in ms {
        out.rows_mut(at, m.nrows()).copy_from(m);
        at += m.nrows();
    }
    Ok(out)
}

/// Singular values and right singular vectors (as columns of `v`), with `v`
/// square of size `cols(m)`.
fn full_right_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let padded = if rows < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    (svd.singular_values.iter().copied().collect(), v_t.transpose())
}

fn threshold(sv: &[f64], tol: &Tolerances) -> f64 {
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    tol.rank_rel_tol * smax
}

pub fn rank(m: &Matrix, tol: &Tolerances) -> Result<usize> {
    check_finite(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let (sv, _) = full_right_svd(m);
    let cut = threshold(&sv, tol);
    Ok(sv.iter().filter(|&&s| s > cut && s > 0.0).count())
}

/// Orthonormal basis of `Ker m`, one column per kernel dimension.
///
/// Columns are sign-normalized so that their largest-magnitude entry (first
/// one on ties) is positive, which makes one-dimensional results canonical.
pub fn null_space_basis(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    check_finite(m, "matrix")?;
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Ok(Matrix::identity(cols, cols));
    }
    let (sv, v) = full_right_svd(m);
    let cut = threshold(&sv, tol);
    let kernel: Vec<usize> = (0..cols).filter(|&i| !(sv[i] > cut && sv[i] > 0.0)).collect();
    let mut basis = select_cols(&v, &kernel);
    for mut col in basis.column_iter_mut() {
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() + 1e-12 {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the intersection of the kernels of `ms`.
pub fn intersect_null_spaces(ms: &[&Matrix], tol: &Tolerances) -> Result<Matrix> {
    let stacked = vstack(ms)?;
    null_space_basis(&stacked, tol)
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in
/// `R^ambient`.
pub fn orthogonal_complement(basis: &Matrix, ambient: usize, tol: &Tolerances) -> Result<Matrix> {
    if basis.ncols() == 0 {
        return Ok(Matrix::identity(ambient, ambient));
    }
    if basis.nrows() != ambient {
        return Err(Error::input("basis does not live in the ambient space"));
    }
    null_space_basis(&basis.transpose(), tol)
}

/// Orthonormal basis of the column span of `m`.
pub fn range_basis(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let kernel_of_t = null_space_basis(&m.transpose(), tol)?;
    orthogonal_complement(&kernel_of_t, m.nrows(), tol)
}

/// Orthogonal projector `B Bᵀ` for a matrix with orthonormal columns.
pub fn projector(basis: &Matrix, ambient: usize) -> Matrix {
    if basis.ncols() == 0 {
        return Matrix::zeros(ambient, ambient);
    }
    basis * basis.transpose()
}

/// Frobenius distance between the projectors onto two subspaces.
pub fn span_distance(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows().max(b.nrows());
    (projector(a, n) - projector(b, n)).norm()
}

pub fn same_span(a: &Matrix, b: &Matrix) -> bool {
    span_distance(a, b) <= SPAN_EQ_TOL
}

/// Whether `span(a) ⊆ span(b)`, tested by the residual of projecting `a`
/// onto `span(b)`.
pub fn span_contained(a: &Matrix, b: &Matrix) -> bool {
    if a.ncols() == 0 {
        return true;
    }
    let pb = projector(b, a.nrows());
    (a - &pb * a).norm() <= SPAN_EQ_TOL
}

/// Minimum-norm least-squares solution of `m x = rhs` using the numerical
/// pseudo-inverse.
pub fn pinv_solve(m: &Matrix, rhs: &Vector, tol: &Tolerances) -> Result<Vector> {
    check_finite(m, "matrix")?;
    if rhs.len() != m.nrows() {
        return Err(Error::input("right-hand side length does not match row count"));
    }
    if m.ncols() == 0 {
        return Ok(Vector::zeros(0));
    }
    if m.nrows() == 0 {
        return Ok(Vector::zeros(m.ncols()));
    }
    let svd = m.clone().svd(true, true);
    let cut = threshold(svd.singular_values.as_slice(), tol);
    svd.solve(rhs, cut.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::internal(format!("pseudo-inverse solve failed: {e}")))
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn norm_1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}
