//! One- and two-qubit Hamiltonians, unitary and Lindblad evolution, gate
//! fidelity and concurrence.
//!
//! Single-qubit basis order is `{|↑⟩, |↓⟩}`; two-qubit states are ordered
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`. Hamiltonians are in meV, times in ps, rates in
//! ps⁻¹. Drive and detuning are angular frequencies (rad/ps) and enter the
//! Hamiltonian as `ħΩ` and `ħΔ`.
//!
//! In the pair coupling the constants `C0` and `C0p` carry the dipole
//! magnitude, so the `d` factors are dimensionless orientation/phase
//! factors with `|d| ≤ 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{c, hermitian_function, hermiticity_error, kron, propagator, trace, unitarity_error, CMatrix};
use crate::units::PhysConstants;

/// Charge–dipole constant, meV·nm².
pub const DEFAULT_C0: f64 = 1440.0;
/// Dipole–dipole constant, meV·nm³.
pub const DEFAULT_C0P: f64 = 1000.0;

const HBAR: f64 = PhysConstants::CODATA.hbar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Rabi frequency, rad/ps.
    pub omega: f64,
    /// Detuning, rad/ps.
    pub delta: f64,
    /// Landé factor.
    pub g: f64,
    /// Magnetic field, T.
    pub b: f64,
}

impl QubitParams {
    pub fn new(omega: f64, delta: f64, g: f64, b: f64) -> Result<Self> {
        if ![omega, delta, g, b].iter().all(|x| x.is_finite()) {
            return Err(domain("qubit parameters must be finite"));
        }
        if b < 0.0 {
            return Err(domain(format!("magnetic field must be non-negative, got {b}")));
        }
        Ok(Self { omega, delta, g, b })
    }

    pub fn driven(omega: f64, delta: f64) -> Self {
        Self { omega, delta, g: 2.0, b: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    /// Inter-qubit distance, nm.
    pub r: f64,
    pub c0: f64,
    pub c0p: f64,
    pub d_i: Complex64,
    pub d_j: Complex64,
}

impl PairParams {
    /// Default coupling constants with unit, real orientation factors.
    pub fn at_distance(r: f64) -> Self {
        Self { r, c0: DEFAULT_C0, c0p: DEFAULT_C0P, d_i: c(1.0, 0.0), d_j: c(1.0, 0.0) }
    }

    /// Flip-flop amplitude `J = (C0p/R³)·Re(d_i*·d_j)` (meV).
    pub fn flip_flop(&self) -> f64 {
        (self.d_i.conj() * self.d_j).re * self.c0p / self.r.powi(3)
    }

    /// Charge–dipole scale `C0/R²` (meV).
    pub fn charge_dipole(&self) -> f64 {
        self.c0 / (self.r * self.r)
    }
}

/// Density matrix of one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    pub n_qubits: usize,
    pub rho: CMatrix,
}

impl QuantumRegister {
    pub fn from_rho(rho: CMatrix) -> Result<Self> {
        let n_qubits = match rho.nrows() {
            2 => 1,
            4 => 2,
            other => return Err(domain(format!("register dimension must be 2 or 4, got {other}"))),
        };
        if rho.ncols() != rho.nrows() {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), got: rho.ncols() });
        }
        Ok(Self { n_qubits, rho })
    }

    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(state);
        let v = &v / Complex64::new(v.norm(), 0.0);
        Self::from_rho(&v * v.adjoint())
    }

    /// Computational basis state `index` (0 = all up).
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut v = vec![c(0.0, 0.0); dim];
        v[index] = c(1.0, 0.0);
        Self::pure(&v)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.rho).re
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.rho * &self.rho)).re
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::eigh(&self.rho).0[0]
    }

    /// Trace, hermiticity and positivity within the register tolerances.
    pub fn is_valid(&self) -> bool {
        (self.trace() - 1.0).abs() < 1e-9 && hermiticity_error(&self.rho) < 1e-12 && self.min_eigenvalue() >= -1e-9
    }
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `τ⁺ = |↑⟩⟨↓|`.
pub fn raising() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
}

/// `τ⁻ = |↓⟩⟨↑|`.
pub fn lowering() -> CMatrix {
    raising().adjoint()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Zeeman splitting `|Δ_B|/h = gμ_B B/h` in GHz. The lower level is |↓⟩.
pub fn zeeman_splitting(g: f64, b: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(domain(format!("magnetic field must be non-negative, got {b}")));
    }
    Ok((g * b).abs() * PhysConstants::CODATA.mu_b_over_h_ghz())
}

/// Zeeman energy `gμ_B B` in meV.
pub fn zeeman_energy(g: f64, b: f64) -> f64 {
    g * PhysConstants::CODATA.mu_b * b
}

/// `H = (ħΩ/2)σx + (ħΔ/2)σz` in meV.
pub fn single_qubit_hamiltonian(p: &QubitParams) -> CMatrix {
    sigma_x() * c(0.5 * HBAR * p.omega, 0.0) + sigma_z() * c(0.5 * HBAR * p.delta, 0.0)
}

/// Two-qubit Hamiltonian: local drive terms, the dipole–dipole flip-flop
/// `J(τ⁺⊗τ⁻ + τ⁻⊗τ⁺)` and the charge–dipole single-excitation terms
/// `(C0/R²)(d_i τ⁺⊗I − I⊗d_j τ⁺) + h.c.`.
pub fn two_qubit_hamiltonian(p1: &QubitParams, p2: &QubitParams, pair: &PairParams) -> Result<CMatrix> {
    if !(pair.r > 0.0) {
        return Err(domain(format!("inter-qubit distance must be positive, got {}", pair.r)));
    }
    let id = identity(2);
    let (up, dn) = (raising(), lowering());
    let local = kron(&single_qubit_hamiltonian(p1), &id) + kron(&id, &single_qubit_hamiltonian(p2));
    let hop = kron(&up, &dn) * c(pair.flip_flop(), 0.0);
    let g = pair.charge_dipole();
    let cd = (kron(&up, &id) * pair.d_i - kron(&id, &up) * pair.d_j) * c(g, 0.0);
    Ok(local + &hop + hop.adjoint() + &cd + cd.adjoint())
}

/// Two-qubit Hamiltonian with only the flip-flop term.
pub fn flip_flop_hamiltonian(pair: &PairParams) -> CMatrix {
    let hop = kron(&raising(), &lowering()) * c(pair.flip_flop(), 0.0);
    &hop + hop.adjoint()
}

fn check_dims(h: &CMatrix, reg: &QuantumRegister) -> Result<()> {
    if h.nrows() != reg.dim() || h.ncols() != reg.dim() {
        return Err(Error::DimensionMismatch { expected: reg.dim(), got: h.nrows() });
    }
    Ok(())
}

/// `ρ → UρU†` with `U = exp(−iHt/ħ)`.
pub fn evolve_unitary(h: &CMatrix, t: f64, reg: &QuantumRegister) -> Result<QuantumRegister> {
    check_dims(h, reg)?;
    let u = propagator(h, t, HBAR);
    Ok(QuantumRegister { n_qubits: reg.n_qubits, rho: &u * &reg.rho * u.adjoint() })
}

/// Collapse operator `L` with rate `γ` (ps⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOperator {
    pub op: CMatrix,
    pub rate: f64,
}

impl CollapseOperator {
    pub fn new(op: CMatrix, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(domain(format!("collapse rate must be non-negative, got {rate}")));
        }
        Ok(Self { op, rate })
    }

    /// Energy relaxation |↑⟩ → |↓⟩.
    pub fn decay(rate: f64) -> Result<Self> {
        Self::new(lowering(), rate)
    }

    /// Pure dephasing with `L = σz`: coherences decay as `e^{−2γt}`.
    pub fn dephasing(rate: f64) -> Result<Self> {
        Self::new(sigma_z(), rate)
    }
}

/// `dρ/dt = −(i/ħ)[H, ρ] + Σ γ (LρL† − ½{L†L, ρ})`.
pub fn lindblad_rhs(h: &CMatrix, collapse: &[(CMatrix, CMatrix, f64)], rho: &CMatrix) -> CMatrix {
    let comm = h * rho - rho * h;
    let mut out = comm * c(0.0, -1.0 / HBAR);
    for (l, ldl, rate) in collapse {
        let jump = l * rho * l.adjoint();
        let anti = ldl * rho + rho * ldl;
        out += (jump - anti * c(0.5, 0.0)) * c(*rate, 0.0);
    }
    out
}

/// Trace tolerance beyond which a Lindblad step is rejected.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-5;

/// Fixed-step RK4 integration of the Lindblad equation over `[0, t]`.
/// The step is shortened so an integer number of steps spans `t` exactly.
pub fn evolve_lindblad(
    h: &CMatrix,
    collapse: &[CollapseOperator],
    t: f64,
    reg: &QuantumRegister,
    dt: f64,
) -> Result<QuantumRegister> {
    let mut out = reg.clone();
    lindblad_series(h, collapse, t, reg, dt, |_, r| out = r.clone())?;
    Ok(out)
}

/// Like [`evolve_lindblad`], calling `observe(t, ρ(t))` at every step
/// including `t = 0`.
pub fn lindblad_series(
    h: &CMatrix,
    collapse: &[CollapseOperator],
    t: f64,
    reg: &QuantumRegister,
    dt: f64,
    mut observe: impl FnMut(f64, &QuantumRegister),
) -> Result<()> {
    check_dims(h, reg)?;
    if !(dt > 0.0) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("duration must be non-negative, got {t}")));
    }
    for op in collapse {
        if op.rate < 0.0 {
            return Err(domain(format!("collapse rate must be non-negative, got {}", op.rate)));
        }
        if op.op.nrows() != reg.dim() {
            return Err(Error::DimensionMismatch { expected: reg.dim(), got: op.op.nrows() });
        }
    }
    let prepared: Vec<(CMatrix, CMatrix, f64)> =
        collapse.iter().map(|l| (l.op.clone(), l.op.adjoint() * &l.op, l.rate)).collect();
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    let step = if steps > 0 { t / steps as f64 } else { 0.0 };
    let mut rho = reg.rho.clone();
    let mut state = QuantumRegister { n_qubits: reg.n_qubits, rho: rho.clone() };
    observe(0.0, &state);
    for n in 0..steps {
        let k1 = lindblad_rhs(h, &prepared, &rho);
        let k2 = lindblad_rhs(h, &prepared, &(&rho + &k1 * c(0.5 * step, 0.0)));
        let k3 = lindblad_rhs(h, &prepared, &(&rho + &k2 * c(0.5 * step, 0.0)));
        let k4 = lindblad_rhs(h, &prepared, &(&rho + &k3 * c(step, 0.0)));
        rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(step / 6.0, 0.0);
        let time = (n + 1) as f64 * step;
        let drift = (trace(&rho).re - 1.0).abs();
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift { drift, time });
        }
        state.rho.copy_from(&rho);
        observe(time, &state);
    }
    Ok(())
}

/// `|Tr(U†V)|²/d²`, insensitive to global phase.
pub fn gate_fidelity(u: &CMatrix, target: &CMatrix) -> Result<f64> {
    if u.shape() != target.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: target.nrows(), got: u.nrows() });
    }
    for m in [u, target] {
        let err = unitarity_error(m);
        if err > 1e-9 {
            return Err(Error::NonUnitary(err));
        }
    }
    let d = u.nrows() as f64;
    Ok(trace(&(u.adjoint() * target)).norm_sqr() / (d * d))
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(reg: &QuantumRegister) -> Result<f64> {
    if reg.n_qubits != 2 {
        return Err(domain(format!("concurrence needs two qubits, register has {}", reg.n_qubits)));
    }
    let yy = kron(&sigma_y(), &sigma_y());
    let flipped = &yy * reg.rho.map(|z| z.conj()) * &yy;
    let sqrt_rho = hermitian_function(&reg.rho, |l| c(l.max(0.0).sqrt(), 0.0));
    let m = &sqrt_rho * flipped * &sqrt_rho;
    let (mu, _) = crate::linalg::eigh(&m);
    let mut l: Vec<f64> = mu.iter().map(|x| x.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}
