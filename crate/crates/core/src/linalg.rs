//! Small dense linear-algebra helpers over complex matrices.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest elementwise modulus of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    assert!(m.is_square());
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part `(m + m†)/2`; removes round-off asymmetry before an
/// eigendecomposition.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Deflation threshold for the symmetric QR iteration. nalgebra's default
/// (machine epsilon) can stop with off-diagonal residue around 1e-4 on
/// sparse block-diagonal Hamiltonians.
const EIGEN_EPS: f64 = 1e-30;
const EIGEN_MAX_ITER: usize = 100_000;

fn symmetric_eigen(m: &CMatrix) -> nalgebra::SymmetricEigen<C64, nalgebra::Dyn> {
    let h = hermitian_part(m);
    h.clone().try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER).unwrap_or_else(|| {
        log::warn!("tight eigen-decomposition did not converge; using default tolerance");
        h.symmetric_eigen()
    })
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = symmetric_eigen(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = symmetric_eigen(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `exp(-i t H)` for Hermitian `H` via its spectral decomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * t);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    &scaled * vectors.adjoint()
}

/// Operator norm of a Hermitian matrix: the largest absolute eigenvalue.
pub fn hermitian_operator_norm(m: &CMatrix) -> f64 {
    eigvalsh(m).into_iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `U M U†`.
pub fn conjugate(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

/// Deviation of `U U†` from the identity, elementwise max.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal_is_phase_diagonal() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE * 0.3, ONE * -1.2, ZERO]));
        let u = expm_hermitian(&h, 0.7);
        for (k, w) in [0.3, -1.2, 0.0].iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -w * 0.7)).norm() < 1e-14);
        }
        assert!(unitarity_deviation(&u) < 1e-14);
    }

    #[test]
    fn expm_of_pauli_x_is_rotation() {
        let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let t = 0.4;
        let u = expm_hermitian(&h, t);
        assert!((u[(0, 0)] - ONE * t.cos()).norm() < 1e-14);
        assert!((u[(1, 0)] + I * t.sin()).norm() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                ONE * 2.0,
                C64::new(0.5, 0.5),
                ZERO,
                C64::new(0.5, -0.5),
                ONE * -1.0,
                I,
                ZERO,
                -I,
                ONE * 0.25,
            ],
        );
        let (values, vectors) = eigh(&h);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(3, values.iter().map(|&v| ONE * v)));
        assert!(max_abs_diff(&(&vectors * d * vectors.adjoint()), &h) < 1e-12);
    }
}
