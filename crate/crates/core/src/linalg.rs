//! Float-mode linear algebra on top of nalgebra: spectra, null spaces,
//! incremental orthonormal spans, Hermitian matrix functions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{c64, C64};

/// Default absolute tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn to_na(m: &Matrix<C64>) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub fn from_na(m: &DMatrix<C64>) -> Matrix<C64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// All eigenvalues (with multiplicity) of a square complex matrix.
pub fn eigenvalues(m: &Matrix<C64>) -> Result<Vec<C64>> {
    assert!(m.is_square());
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(to_na(m), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("complex Schur form was not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

pub fn spectral_radius(m: &Matrix<C64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &Matrix<C64>) -> (Vec<f64>, Matrix<C64>) {
    let n = m.rows();
    let herm = Matrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let eig = nalgebra::linalg::SymmetricEigen::new(to_na(&herm));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix; `tol` bounds the allowed
/// absolute deviation from Hermiticity.
pub fn min_eig_hermitian(m: &Matrix<C64>, tol: f64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "min_eig_hermitian",
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let (values, _) = hermitian_eigen(m);
    values
        .first()
        .copied()
        .ok_or_else(|| Error::Input("empty matrix".into()))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &Matrix<C64>, f: impl Fn(f64) -> f64) -> Matrix<C64> {
    let (values, vecs) = hermitian_eigen(m);
    let n = m.rows();
    Matrix::from_fn(n, n, |r, c| {
        let mut acc = c64(0.0, 0.0);
        for (k, &lam) in values.iter().enumerate() {
            acc += vecs[(r, k)] * vecs[(c, k)].conj() * f(lam);
        }
        acc
    })
}

pub fn inverse(m: &Matrix<C64>) -> Result<Matrix<C64>> {
    to_na(m)
        .try_inverse()
        .map(|inv| from_na(&inv))
        .ok_or_else(|| Error::Numeric("matrix is singular".into()))
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix<C64>) -> Vec<f64> {
    let svd = nalgebra::linalg::SVD::new(to_na(m), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis of the numerical kernel: right singular vectors whose
/// singular value is at most `rel_tol * sigma_max`.
pub fn null_space(m: &Matrix<C64>, rel_tol: f64) -> Vec<Vec<C64>> {
    let n = m.cols();
    // Pad to at least square so the SVD exposes every right singular vector.
    let rows = m.rows().max(n);
    let padded = DMatrix::from_fn(rows, n, |r, c| if r < m.rows() { m[(r, c)] } else { c64(0.0, 0.0) });
    let svd = nalgebra::linalg::SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let thresh = rel_tol * smax.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= thresh || smax == 0.0 {
            out.push((0..n).map(|c| v_t[(k, c)].conj()).collect());
        }
    }
    out
}

/// Right singular vector of the smallest singular value, with that value.
pub fn smallest_singular_vector(m: &Matrix<C64>) -> (Vec<C64>, f64) {
    let n = m.cols();
    let rows = m.rows().max(n);
    let padded = DMatrix::from_fn(rows, n, |r, c| if r < m.rows() { m[(r, c)] } else { c64(0.0, 0.0) });
    let svd = nalgebra::linalg::SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (k, s) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty matrix");
    ((0..n).map(|c| v_t[(k, c)].conj()).collect(), s)
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &Matrix<C64>) -> Matrix<C64> {
    let svd = nalgebra::linalg::SVD::new(to_na(m), true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    from_na(&(u * v_t))
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Incrementally grown orthonormal basis (Gram-Schmidt with one
/// re-orthogonalisation pass).
#[derive(Debug, Clone)]
pub struct Span {
    dim: usize,
    rel_tol: f64,
    basis: Vec<Vec<C64>>,
}

impl Span {
    pub fn new(dim: usize, rel_tol: f64) -> Self {
        Span {
            dim,
            rel_tol,
            basis: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.dim
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// Residual of `v` after projecting out the current span.
    pub fn residual(&self, v: &[C64]) -> Vec<C64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for b in &self.basis {
                let p = dot(b, &r);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= p * bi;
                }
            }
        }
        r
    }

    /// Adds `v` if it is independent of the span; returns whether it was added.
    pub fn try_add(&mut self, v: &[C64]) -> bool {
        assert_eq!(v.len(), self.dim);
        if self.is_full() {
            return false;
        }
        let scale = norm(v);
        if scale == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = norm(&r);
        if rn <= self.rel_tol * scale {
            return false;
        }
        self.basis.push(r.into_iter().map(|x| x / rn).collect());
        true
    }

    pub fn contains(&self, v: &[C64]) -> bool {
        let scale = norm(v);
        scale == 0.0 || norm(&self.residual(v)) <= self.rel_tol * scale
    }

    /// Unitary whose leading columns are the span basis, completed with
    /// standard basis vectors.
    pub fn completed_unitary(&self) -> Matrix<C64> {
        let mut full = self.clone();
        for k in 0..self.dim {
            if full.is_full() {
                break;
            }
            let mut e = vec![c64(0.0, 0.0); self.dim];
            e[k] = c64(1.0, 0.0);
            full.try_add(&e);
        }
        Matrix::from_fn(self.dim, self.dim, |r, c| full.basis[c][r])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eig_diag() {
        let m = Matrix::diagonal(&[c64(1.0, 0.0), c64(-1.0, 0.0)]);
        assert!((min_eig_hermitian(&m, HERMITIAN_TOL).unwrap() + 1.0).abs() < 1e-14);
        let id = Matrix::<C64>::identity(4);
        assert!((min_eig_hermitian(&id, HERMITIAN_TOL).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn min_eig_rejects_non_hermitian() {
        let m = Matrix::from_rows(vec![vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![c64(0.0, 0.0), c64(0.0, 0.0)]]);
        assert!(matches!(min_eig_hermitian(&m, HERMITIAN_TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = Matrix::from_rows(vec![vec![c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((v[0] + v[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn span_completion_is_unitary() {
        let mut s = Span::new(3, 1e-12);
        assert!(s.try_add(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]));
        assert!(!s.try_add(&[c64(2.0, 0.0), c64(2.0, 0.0), c64(0.0, 0.0)]));
        let u = s.completed_unitary();
        let p = u.adjoint().matmul(&u);
        assert!(p.max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }
}
