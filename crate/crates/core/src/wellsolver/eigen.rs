//! Lowest eigenpairs of large Hermitian operators.
//!
//! The iterative path is Chebyshev-filtered subspace iteration: a block of
//! trial vectors is passed through a Chebyshev polynomial of the operator
//! that damps the unwanted upper spectrum, then orthonormalized and rotated
//! by a Rayleigh–Ritz step. The damping interval is updated from the current
//! Ritz values, so warm starts from nearby k-points converge in a few sweeps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::HermitianOperator;
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix};

/// Operators up to this dimension (a 16 × 16 grid) use the dense solver.
pub const DENSE_LIMIT: usize = 16 * 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: EigenMethod,
    /// Residual tolerance relative to the operator norm bound.
    pub tol: f64,
    pub max_iterations: usize,
    /// Degree of the Chebyshev filter applied per sweep.
    pub filter_degree: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: EigenMethod::Auto, tol: 1e-10, max_iterations: 500, filter_degree: 24, seed: 0x5eed_cafe }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// Largest residual norm `‖Hx − λx‖` (meV).
    pub max_residual: f64,
}

pub fn lowest_eigenpairs<H: HermitianOperator>(op: &H, n: usize, opts: &SolverOptions) -> Result<EigenPairs> {
    lowest_eigenpairs_from(op, n, opts, &[])
}

/// Like [`lowest_eigenpairs`] but seeds the iterative solver with `guess`.
pub fn lowest_eigenpairs_from<H: HermitianOperator>(
    op: &H,
    n: usize,
    opts: &SolverOptions,
    guess: &[Vec<Complex64>],
) -> Result<EigenPairs> {
    let dim = op.dim();
    if n == 0 || n > dim {
        return Err(Error::Domain(format!("cannot extract {n} eigenpairs from dimension {dim}")));
    }
    let dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => false,
        EigenMethod::Auto => dim <= DENSE_LIMIT,
    };
    if dense {
        dense_lowest(op, n)
    } else {
        filtered_subspace(op, n, opts, guess)
    }
}

fn dense_lowest<H: HermitianOperator>(op: &H, n: usize) -> Result<EigenPairs> {
    let (values, vecs) = eigh(&op.to_dense());
    let vectors: Vec<Vec<Complex64>> = (0..n).map(|c| vecs.column(c).iter().copied().collect()).collect();
    let max_residual = max_residual(op, &values[..n], &vectors);
    Ok(EigenPairs { values: values[..n].to_vec(), vectors, max_residual })
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

/// Orthogonalizes `v` against `basis` (two classical Gram–Schmidt passes) and
/// normalizes it. Returns `None` when `v` lies in the span of `basis`.
fn orthonormalize(basis: &[Vec<Complex64>], mut v: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let start = norm(&v);
    if start == 0.0 || !start.is_finite() {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<Complex64> = basis.iter().map(|q| dot(q, &v)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, &mut v);
        }
    }
    let nv = norm(&v);
    if nv < 1e-10 * start {
        return None;
    }
    let inv = 1.0 / nv;
    v.iter_mut().for_each(|z| *z *= inv);
    Some(v)
}

/// Orthonormal basis for the span of `block`, topped up with random
/// directions when vectors are lost to linear dependence.
fn orthonormal_block(block: Vec<Vec<Complex64>>, dim: usize, want: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(want);
    for v in block {
        if let Some(q) = orthonormalize(&out, v) {
            out.push(q);
        }
    }
    let mut tries = 0;
    while out.len() < want && tries < 4 * want {
        if let Some(q) = orthonormalize(&out, random_vector(rng, dim)) {
            out.push(q);
        }
        tries += 1;
    }
    out
}

fn max_residual<H: HermitianOperator>(op: &H, values: &[f64], vectors: &[Vec<Complex64>]) -> f64 {
    let mut hx = vec![Complex64::new(0.0, 0.0); op.dim()];
    values
        .iter()
        .zip(vectors)
        .map(|(&l, x)| {
            op.apply(x, &mut hx);
            axpy(Complex64::new(-l, 0.0), x, &mut hx);
            norm(&hx)
        })
        .fold(0.0, f64::max)
}

/// Applies the scaled Chebyshev filter of `degree` that damps `[cut, upper]`
/// and normalizes growth at `lowest`.
fn chebyshev_filter<H: HermitianOperator>(op: &H, x: &[Complex64], degree: usize, cut: f64, upper: f64, lowest: f64) -> Vec<Complex64> {
    let dim = x.len();
    let e = 0.5 * (upper - cut);
    let c = 0.5 * (upper + cut);
    let mut sigma = e / (lowest - c);
    let tau = 2.0 / sigma;
    let mut hx = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev = x.to_vec();
    op.apply(&prev, &mut hx);
    let mut cur: Vec<Complex64> = hx.iter().zip(&prev).map(|(h, v)| (h - v * c) * (sigma / e)).collect();
    for _ in 1..degree {
        let next_sigma = 1.0 / (tau - sigma);
        op.apply(&cur, &mut hx);
        let a = 2.0 * next_sigma / e;
        let b = sigma * next_sigma;
        let next: Vec<Complex64> =
            hx.iter().zip(&cur).zip(&prev).map(|((h, v), p)| (h - v * c) * a - p * b).collect();
        prev = std::mem::replace(&mut cur, next);
        sigma = next_sigma;
    }
    cur
}

/// Rayleigh–Ritz on an orthonormal block: returns ascending Ritz values and
/// the rotated block.
fn rayleigh_ritz<H: HermitianOperator>(op: &H, q: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let m = q.len();
    let dim = op.dim();
    let hq: Vec<Vec<Complex64>> = q
        .iter()
        .map(|v| {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            op.apply(v, &mut out);
            out
        })
        .collect();
    let t = CMatrix::from_fn(m, m, |i, j| dot(&q[i], &hq[j]));
    let (theta, y) = eigh(&t);
    let rotated = (0..m)
        .map(|c| {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for (i, qi) in q.iter().enumerate() {
                axpy(y[(i, c)], qi, &mut v);
            }
            let inv = 1.0 / norm(&v);
            v.iter_mut().for_each(|z| *z *= inv);
            v
        })
        .collect();
    (theta, rotated)
}

fn filtered_subspace<H: HermitianOperator>(
    op: &H,
    n: usize,
    opts: &SolverOptions,
    guess: &[Vec<Complex64>],
) -> Result<EigenPairs> {
    let dim = op.dim();
    let block = (n + (n / 2).max(4)).min(dim);
    let upper = op.norm_bound();
    let tol = opts.tol * upper;
    let degree = opts.filter_degree.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let start: Vec<Vec<Complex64>> = guess.iter().take(block).filter(|v| v.len() == dim).cloned().collect();
    let q = orthonormal_block(start, dim, block, &mut rng);
    let (mut theta, mut x) = rayleigh_ritz(op, &q);

    let mut last_residual = f64::INFINITY;
    for iteration in 0..opts.max_iterations {
        if x.len() < n {
            return Err(Error::Solver { iterations: iteration, residual: f64::INFINITY });
        }
        last_residual = max_residual(op, &theta[..n], &x[..n]);
        if last_residual <= tol {
            let vectors: Vec<Vec<Complex64>> = x.into_iter().take(n).collect();
            return Ok(EigenPairs { values: theta[..n].to_vec(), vectors, max_residual: last_residual });
        }
        let cut = theta[theta.len() - 1];
        let lowest = theta[0];
        let filtered = if cut < upper && lowest < cut {
            x.iter().map(|v| chebyshev_filter(op, v, degree, cut, upper, lowest)).collect()
        } else {
            x.clone()
        };
        let q = orthonormal_block(filtered, dim, block, &mut rng);
        (theta, x) = rayleigh_ritz(op, &q);
    }
    Err(Error::Solver { iterations: opts.max_iterations, residual: last_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D periodic chain with a random diagonal: dense reference is cheap.
    struct Chain {
        diag: Vec<f64>,
        hop: f64,
    }

    impl HermitianOperator for Chain {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            let n = x.len();
            for i in 0..n {
                y[i] = x[i] * self.diag[i] - (x[(i + 1) % n] + x[(i + n - 1) % n]) * self.hop;
            }
        }
        fn norm_bound(&self) -> f64 {
            2.0 * self.hop + self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        }
    }

    fn chain(n: usize) -> Chain {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        Chain { diag: (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(), hop: 1.0 }
    }

    #[test]
    fn iterative_matches_dense() {
        let op = chain(400);
        let dense = lowest_eigenpairs(&op, 8, &SolverOptions { method: EigenMethod::Dense, ..Default::default() }).unwrap();
        let it = lowest_eigenpairs(&op, 8, &SolverOptions { method: EigenMethod::Iterative, ..Default::default() }).unwrap();
        for (a, b) in dense.values.iter().zip(&it.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(it.max_residual <= 1e-10 * op.norm_bound());
    }

    #[test]
    fn degenerate_spectrum() {
        // Free periodic chain: every level above the bottom is doubly degenerate.
        let op = Chain { diag: vec![0.0; 300], hop: 1.0 };
        let it = lowest_eigenpairs(&op, 5, &SolverOptions { method: EigenMethod::Iterative, ..Default::default() }).unwrap();
        let exact = |m: f64| -2.0 * (2.0 * std::f64::consts::PI * m / 300.0).cos();
        let expect = [exact(0.0), exact(1.0), exact(1.0), exact(2.0), exact(2.0)];
        for (a, b) in expect.iter().zip(&it.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_counts() {
        let op = chain(10);
        assert!(lowest_eigenpairs(&op, 0, &SolverOptions::default()).is_err());
        assert!(lowest_eigenpairs(&op, 11, &SolverOptions::default()).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let op = chain(2000);
        let opts = SolverOptions { method: EigenMethod::Iterative, max_iterations: 1, filter_degree: 4, ..Default::default() };
        match lowest_eigenpairs(&op, 4, &opts) {
            Err(Error::Solver { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
