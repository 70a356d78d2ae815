//! Small dense linear-algebra helpers shared by the certificate and the
//! linearization oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number above which an elimination block is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Largest entry of `|M - M^T|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Orthonormal basis (as columns) of the orthogonal complement of `n`.
///
/// Built from the Householder reflector that maps `n / |n|` onto `e_1`:
/// its remaining columns span the complement exactly.
pub fn complement_basis(n: &DVector<f64>) -> DMatrix<f64> {
    let dim = n.len();
    let unit = n / n.norm();
    let mut u = unit.clone();
    // reflect onto -sign(u0) e1 to avoid cancellation
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let norm = u.norm();
    let reflector = if norm == 0.0 {
        DMatrix::identity(dim, dim)
    } else {
        let u = u / norm;
        DMatrix::identity(dim, dim) - (&u * u.transpose()) * 2.0
    };
    reflector.columns(1, dim - 1).into_owned()
}

/// Condition number of a symmetric matrix via its eigenvalues.
pub fn sym_condition(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Extract the submatrix with the given row and column index sets.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Schur complement `M_kk - M_ke M_ee^{-1} M_ek` of a symmetric matrix,
/// eliminating the index set `elim` and keeping `keep`.
pub fn schur_complement(m: &DMatrix<f64>, keep: &[usize], elim: &[usize]) -> Result<DMatrix<f64>> {
    let m_kk = select(m, keep, keep);
    if elim.is_empty() {
        return Ok(m_kk);
    }
    let m_ke = select(m, keep, elim);
    let m_ee = select(m, elim, elim);
    let condition = sym_condition(&m_ee);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let lu = m_ee.lu();
    let solved = lu
        .solve(&m_ke.transpose())
        .ok_or(Error::IllConditioned { condition })?;
    Ok(symmetrize(&(m_kk - m_ke * solved)))
}
