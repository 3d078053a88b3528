//! Small dense linear-algebra helpers over complex vectors and matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner(u: &DVector<C64>, v: &DVector<C64>) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let dim = m.nrows();
    if dim == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // symmetrize so rounding in the caller cannot leak an anti-Hermitian part
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(−i·H·dt)` for Hermitian `H`, assembled from its eigenbasis so the
/// result is unitary to rounding.
pub fn unitary_propagator(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(h);
    let phases = DVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
    );
    let mut scaled = vectors.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    scaled * vectors.adjoint()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Vectors whose
/// residual norm falls below `drop_tol` are discarded.
pub fn orthonormalize(vectors: &[DVector<C64>], drop_tol: f64) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let p = inner(q, &w);
                w -= q * p;
            }
        }
        let n = norm_sqr(&w).sqrt();
        if n > drop_tol {
            basis.push(w / C64::new(n, 0.0));
        }
    }
    basis
}

/// Largest element magnitude of `m`.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
