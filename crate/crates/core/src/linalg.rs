//! Small dense linear-algebra helpers shared across modules.
//!
//! Everything is built on `nalgebra` dynamic matrices with `Complex64`
//! scalars. Operators act on spaces of dimension at most a few thousand,
//! so dense routines are always adequate here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entrywise absolute value.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖M M† − I‖_max`; zero for a unitary matrix.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C_ONE } else { C_ZERO };
            worst = worst.max((prod[(i, j)] - expect).norm());
        }
    }
    worst
}

/// `‖M − M†‖_max`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Hilbert–Schmidt inner product `⟨A|B⟩ = Tr(A B†)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = C_ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y.conj();
    }
    acc
}

/// Frobenius (Schatten-2) norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending
/// with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues of a real symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Singular values, sorted descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Trace norm `Tr|A| = Σ σ_i(A)`.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Random complex matrix with independent standard-normal real and
/// imaginary parts.
pub fn random_complex<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng))
    })
}

/// Random Hermitian matrix `(A + A†)/2`.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let a = random_complex(n, rng);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Box–Muller standard normal; keeps the RNG stream identical across
/// platforms (no rejection loops).
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gram–Schmidt orthonormalization of the columns (columns assumed
/// linearly independent).
pub fn orthonormalize_columns(m: &CMatrix) -> CMatrix {
    let (rows, cols) = m.shape();
    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut v: CVector = m.column(j).into();
        for k in 0..j {
            let prev: CVector = out.column(k).into();
            let coeff = prev.dotc(&v);
            v -= prev * coeff;
        }
        let norm = v.norm();
        assert!(norm > 1e-12, "orthonormalize: dependent columns");
        out.set_column(j, &(v / Complex64::new(norm, 0.0)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitarity_of_orthonormalized_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_complex(6, &mut rng);
        let q = orthonormalize_columns(&m);
        assert!(unitarity_residual(&q) < 1e-10);
    }

    #[test]
    fn hermitian_eigen_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(5, &mut rng);
        let (vals, vecs) = hermitian_eigen(&h);
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            5,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let rebuilt = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(&rebuilt - &h)) < 1e-9);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn trace_norm_of_projector_difference() {
        // |0⟩⟨0| - |1⟩⟨1| has singular values {1, 1}.
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C_ONE;
        m[(1, 1)] = -C_ONE;
        assert!((trace_norm(&m) - 2.0).abs() < 1e-12);
    }
}
