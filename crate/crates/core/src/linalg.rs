//! Dense helpers shared by the numerical modules.

use crate::error::{Error, Result};
use crate::{Matrix, Vector};
use nalgebra::{Cholesky, Dyn, SymmetricEigen};

pub(crate) const EIG_MAX_SWEEPS_PER_DIM: usize = 1000;

/// Symmetric eigendecomposition with eigenvalues sorted non-increasing.
/// Ties keep the solver's index order (stable sort).
pub(crate) fn sorted_eigen(m: &Matrix) -> Result<(Vector, Matrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vector::zeros(0), Matrix::zeros(0, 0)));
    }
    let max_iter = EIG_MAX_SWEEPS_PER_DIM * n;
    let eig =
        SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(Error::Numerical {
            what: "symmetric eigendecomposition".into(),
            iterations: max_iter,
        })?;
    let mut p = eig.eigenvectors;
    let mut d = p.transpose() * m * &p;
    jacobi_polish(&mut d, &mut p);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[(j, j)]
            .partial_cmp(&d[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Vector::from_iterator(n, order.iter().map(|&i| d[(i, i)]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &p.column(src));
    }
    Ok((values, vectors))
}

/// Cyclic Jacobi sweeps on the nearly diagonal `d = PᵀMP`, accumulating the
/// rotations into `p`. The QR-based decomposition can leave eigenvector
/// errors of order `√ε` in small components; a couple of sweeps remove them.
fn jacobi_polish(d: &mut Matrix, p: &mut Matrix) {
    let n = d.nrows();
    for _sweep in 0..8 {
        let diag_scale = d.norm().max(f64::MIN_POSITIVE);
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += d[(i, j)] * d[(i, j)];
            }
        }
        if off.sqrt() <= 1e-17 * diag_scale {
            return;
        }
        for q in 1..n {
            for r in 0..q {
                let apq = d[(r, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (d[(q, q)] - d[(r, r)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (dkr, dkq) = (d[(k, r)], d[(k, q)]);
                    d[(k, r)] = c * dkr - s * dkq;
                    d[(k, q)] = s * dkr + c * dkq;
                }
                for k in 0..n {
                    let (drk, dqk) = (d[(r, k)], d[(q, k)]);
                    d[(r, k)] = c * drk - s * dqk;
                    d[(q, k)] = s * drk + c * dqk;
                }
                d[(r, q)] = 0.0;
                d[(q, r)] = 0.0;
                for k in 0..n {
                    let (pkr, pkq) = (p[(k, r)], p[(k, q)]);
                    p[(k, r)] = c * pkr - s * pkq;
                    p[(k, q)] = s * pkr + c * pkq;
                }
            }
        }
    }
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub(crate) fn lambda_max(m: &Matrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let (vals, _) = sorted_eigen(&symmetrize(m))?;
    Ok(vals[0])
}

pub(crate) fn lambda_min(m: &Matrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let (vals, _) = sorted_eigen(&symmetrize(m))?;
    Ok(vals[vals.len() - 1])
}

/// Spectral norm of a general matrix.
pub(crate) fn op_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub(crate) fn cholesky(m: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m))
}

/// Full SVD of `m` padded with zero rows to a square matrix, so that the
/// returned right factor spans the whole domain.
/// Returns singular values (descending) and the matching right singular vectors as columns.
pub(crate) fn right_singular(m: &Matrix) -> (Vector, Matrix) {
    let (r, c) = m.shape();
    if c == 0 {
        return (Vector::zeros(0), Matrix::zeros(0, 0));
    }
    let rows = r.max(c);
    let mut padded = Matrix::zeros(rows, c);
    padded.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = padded.svd(false, true);
    let v = svd.v_t.expect("requested").transpose();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = Vector::from_iterator(c, order.iter().map(|&i| svd.singular_values[i]));
    let mut vecs = Matrix::zeros(c, c);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &v.column(src));
    }
    (vals, vecs)
}

/// Orthonormal basis of the kernel of `m`: right singular vectors whose
/// singular value is at most `tol`.
pub(crate) fn null_space(m: &Matrix, tol: f64) -> Matrix {
    let c = m.ncols();
    if c == 0 {
        return Matrix::zeros(0, 0);
    }
    let (vals, vecs) = right_singular(m);
    let keep: Vec<usize> = (0..c).filter(|&i| vals[i] <= tol).collect();
    select_columns(&vecs, &keep)
}

pub(crate) fn select_columns(m: &Matrix, cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Horizontal concatenation of blocks with equal row counts.
pub(crate) fn hcat(rows: usize, blocks: &[&Matrix]) -> Matrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Block-diagonal assembly.
pub(crate) fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((at, at), (k, k)).copy_from(*b);
        at += k;
    }
    out
}

pub(crate) fn stack(parts: &[&Vector]) -> Vector {
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(n);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

/// `‖v‖²_M = ⟨v, M v⟩`.
pub(crate) fn quad(m: &Matrix, v: &Vector) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.dot(&(m * v))
}
