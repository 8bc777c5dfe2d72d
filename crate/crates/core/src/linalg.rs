//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|U†U − 1|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
/// Columns of the returned matrix are the eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `V f(Λ) V†` for a Hermitian matrix and a scalar function of its eigenvalues.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (col, &v) in values.iter().enumerate() {
        let fv = f(v);
        for r in 0..n {
            scaled[(r, col)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// Unitary propagator `exp(−i H t / ħ)` for Hermitian `H` (meV) and `t` (ps).
pub fn propagator(h: &CMatrix, t: f64, hbar: f64) -> CMatrix {
    hermitian_function(h, |e| (-I * (e * t / hbar)).exp())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.5, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.3, 0.0)],
        );
        let (vals, vecs) = eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn propagator_is_unitary() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.2), c(0.3, -0.2), c(-0.4, 0.0)]);
        let u = propagator(&h, 3.7, 0.658);
        assert!(unitarity_error(&u) < 1e-12);
        assert!(unitarity_error(&propagator(&h, 0.0, 0.658)) < 1e-15);
    }
}
