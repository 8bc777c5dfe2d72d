use num_complex::Complex64;

use super::potential::MoirePotential;
use crate::linalg::CMatrix;
use crate::units::PhysConstants;

/// Hermitian operator acting on grid vectors.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// Upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;

    fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        m
    }
}

/// Five-point finite-difference discretization of `−(ħ²/2M)∇² + V` with
/// Bloch phases `e^{ik·L}` on the links that wrap around the cell.
#[derive(Debug, Clone)]
pub struct BlochOperator {
    nx: usize,
    ny: usize,
    cx: f64,
    cy: f64,
    diag: Vec<f64>,
    phase_x: Complex64,
    phase_y: Complex64,
    vmax: f64,
}

impl BlochOperator {
    pub fn new(pot: &MoirePotential, k: [f64; 2]) -> Self {
        let c_kin = PhysConstants::CODATA.c_kin / pot.m_eff;
        let (hx, hy) = (pot.hx(), pot.hy());
        let cx = c_kin / (hx * hx);
        let cy = c_kin / (hy * hy);
        let diag: Vec<f64> = pot.grid.iter().map(|&v| v + 2.0 * cx + 2.0 * cy).collect();
        let vmax = pot.grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            nx: pot.nx,
            ny: pot.ny,
            cx,
            cy,
            diag,
            phase_x: Complex64::from_polar(1.0, k[0] * pot.lx),
            phase_y: Complex64::from_polar(1.0, k[1] * pot.ly),
            vmax,
        }
    }
}

impl HermitianOperator for BlochOperator {
    fn dim(&self) -> usize {
        self.nx * self.ny
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        let (px, py) = (self.phase_x, self.phase_y);
        let (pxc, pyc) = (px.conj(), py.conj());
        for i in 0..nx {
            let row = i * ny;
            let (up, up_phase) = if i + 1 == nx { (0, px) } else { ((i + 1) * ny, Complex64::new(1.0, 0.0)) };
            let (dn, dn_phase) = if i == 0 { ((nx - 1) * ny, pxc) } else { ((i - 1) * ny, Complex64::new(1.0, 0.0)) };
            for j in 0..ny {
                let p = row + j;
                let xs = x[up + j] * up_phase + x[dn + j] * dn_phase;
                let right = if j + 1 == ny { x[row] * py } else { x[p + 1] };
                let left = if j == 0 { x[row + ny - 1] * pyc } else { x[p - 1] };
                y[p] = x[p] * self.diag[p] - xs * self.cx - (right + left) * self.cy;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        4.0 * (self.cx + self.cy) + self.vmax
    }
}
