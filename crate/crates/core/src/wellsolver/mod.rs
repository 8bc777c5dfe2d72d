//! Continuum quantum-well model `H = −ħ²∇²/2M + V(r)` on a periodic grid
//! with Bloch boundary conditions.

mod classify;
mod eigen;
mod fit;
mod operator;
mod potential;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use classify::{classify_state, resolve_angular_momentum, symmetry_projections, Classification};
pub use eigen::{lowest_eigenpairs, lowest_eigenpairs_from, EigenMethod, EigenPairs, SolverOptions, DENSE_LIMIT};
pub use fit::{fit_hopping_decay, HoppingFit};
pub use operator::{BlochOperator, HermitianOperator};
pub use potential::{build_moire_potential, MoirePotential, MIN_GRID};

use crate::bands::{BandStructure, KPath};
use crate::error::{domain, Result};
use crate::symmetry::Irrep;

/// Eigenstate of the discretized well Hamiltonian at one Bloch vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellState {
    /// meV
    pub energy: f64,
    /// Unit-norm grid amplitudes, indexed like the potential grid.
    pub amplitudes: Array2<Complex64>,
    /// Bloch vector (nm⁻¹).
    pub k: [f64; 2],
    pub irrep: Option<Irrep>,
    pub lz: Option<i32>,
}

fn check_count(pot: &MoirePotential, n: usize) -> Result<()> {
    let limit = pot.nx * pot.ny / 4;
    if n == 0 || n > limit {
        return Err(domain(format!("requested {n} states; allowed range is 1..={limit} for a {}×{} grid", pot.nx, pot.ny)));
    }
    Ok(())
}

fn to_states(pot: &MoirePotential, k: [f64; 2], pairs: EigenPairs) -> Vec<WellState> {
    pairs
        .values
        .into_iter()
        .zip(pairs.vectors)
        .map(|(energy, v)| WellState {
            energy,
            amplitudes: Array2::from_shape_vec((pot.nx, pot.ny), v).expect("grid-sized eigenvector"),
            k,
            irrep: None,
            lz: None,
        })
        .collect()
}

/// Lowest `n_states` eigenstates at Bloch vector `k`, energies ascending.
pub fn solve_bloch_eigenstates(
    pot: &MoirePotential,
    k: [f64; 2],
    n_states: usize,
    opts: &SolverOptions,
) -> Result<Vec<WellState>> {
    check_count(pot, n_states)?;
    let op = BlochOperator::new(pot, k);
    let pairs = lowest_eigenpairs(&op, n_states, opts)?;
    Ok(to_states(pot, k, pairs))
}

/// Multiplies a periodic Γ-point state by the Bloch phase of the nearest
/// cell image, giving a starting guess for the solve at `k`.
fn twisted_guess(pot: &MoirePotential, k: [f64; 2], v: &[Complex64]) -> Vec<Complex64> {
    let px = Complex64::from_polar(1.0, k[0] * pot.lx);
    let py = Complex64::from_polar(1.0, k[1] * pot.ly);
    let one = Complex64::new(1.0, 0.0);
    let mut out = v.to_vec();
    for i in 0..pot.nx {
        let fx = if 2 * i >= pot.nx { px } else { one };
        for j in 0..pot.ny {
            let fy = if 2 * j >= pot.ny { py } else { one };
            out[i * pot.ny + j] *= fx * fy;
        }
    }
    out
}

/// Bands along `kpath`. The Γ solution seeds the iterative solves at the
/// other k-points, which run as an order-preserving parallel map.
pub fn compute_band_structure(
    pot: &MoirePotential,
    kpath: &KPath,
    n_bands: usize,
    opts: &SolverOptions,
) -> Result<BandStructure> {
    check_count(pot, n_bands)?;
    let points = kpath.points();
    let extra = (n_bands / 2).max(4);
    let seed_count = (n_bands + extra).min(pot.nx * pot.ny / 4);
    let gamma = lowest_eigenpairs(&BlochOperator::new(pot, [0.0, 0.0]), seed_count, opts)?;

    let solve = |k: [f64; 2]| -> Result<Vec<f64>> {
        if k == [0.0, 0.0] {
            return Ok(gamma.values[..n_bands].to_vec());
        }
        let op = BlochOperator::new(pot, k);
        let guess: Vec<Vec<Complex64>> = gamma.vectors.iter().map(|v| twisted_guess(pot, k, v)).collect();
        Ok(lowest_eigenpairs_from(&op, n_bands, opts, &guess)?.values)
    };

    #[cfg(feature = "parallel")]
    let spectra: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        points.par_iter().map(|p| solve(p.k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let spectra: Vec<Result<Vec<f64>>> = points.iter().map(|p| solve(p.k)).collect();

    let spectra = spectra.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BandStructure::from_spectra(points, spectra))
}

/// Band structure on the standard high-symmetry path of the cell.
pub fn default_kpath(pot: &MoirePotential, samples_per_segment: usize) -> KPath {
    use crate::geometry::LatticeKind;
    match pot.kind {
        LatticeKind::Square => KPath::square(pot.lx, samples_per_segment),
        LatticeKind::Triangular => KPath::rectangular_labels(pot.lx, pot.ly, &["G", "X", "S", "Y", "G"], samples_per_segment)
            .expect("fixed labels are valid"),
    }
}
