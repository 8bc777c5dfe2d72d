//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Each exported function takes plain numbers and returns a JSON string; the
//! `*_json` twins do the work and are callable from native code and tests.

use std::f64::consts::PI;

use moire_core::geometry::{LatticeSpec, MoireGeometry};
use moire_core::protocol::{simulate_readout, ReadoutParams};
use moire_core::qubit::{lindblad_series, single_qubit_hamiltonian, CollapseOperator, QuantumRegister, QubitParams};
use moire_core::wellsolver::{build_moire_potential, compute_band_structure, default_kpath, SolverOptions};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Monolayer lattice constant, nm.
pub const LATTICE_A: f64 = 0.417;
/// Well depth (meV), radius (nm) and effective mass (mₑ) of each dot.
pub const WELL: (f64, f64, f64) = (201.0, 1.0, 2.5);

const MAX_SAMPLES: usize = 400;
const MAX_TRIALS: usize = 200_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Continuum bands of the square superlattice along Γ–X–M–Γ.
pub fn bands_json(angle_deg: f64, nx: usize, n_bands: usize) -> Result<String, String> {
    if !(32..=64).contains(&nx) {
        return Err(format!("grid size must lie in 32..=64, got {nx}"));
    }
    if !(1..=12).contains(&n_bands) {
        return Err(format!("band count must lie in 1..=12, got {n_bands}"));
    }
    let geom = MoireGeometry::new(LatticeSpec::square(LATTICE_A).map_err(err)?, angle_deg).map_err(err)?;
    let (v0, r0, m) = WELL;
    let pot = build_moire_potential(&geom, v0, r0, m, nx, nx).map_err(err)?;
    let path = default_kpath(&pot, 4);
    let mut bs = compute_band_structure(&pot, &path, n_bands, &SolverOptions::default()).map_err(err)?;
    let barrier = bs.extract_barrier(1.0).ok();
    let labels: Vec<&str> = bs.kpoints.iter().map(|p| p.label.as_deref().unwrap_or("")).collect();
    Ok(json!({
        "period_nm": geom.period,
        "labels": labels,
        "energies_meV": bs.energies,
        "bandwidths_meV": bs.bandwidths,
        "barrier_meV": barrier,
        "flat_bands": bs.flat_band_count(1.0),
    })
    .to_string())
}

/// Spin-up population decay under a resonant or detuned drive (rates in
/// ps⁻¹, time in ps). Returns at most 400 evenly spaced samples.
pub fn rabi_json(omega: f64, delta: f64, decay: f64, dephasing: f64, duration: f64) -> Result<String, String> {
    if !(duration > 0.0 && duration <= 1e4) {
        return Err(format!("duration must lie in (0, 10000] ps, got {duration}"));
    }
    let p = QubitParams::driven(omega, delta);
    let mut ops = Vec::new();
    if decay > 0.0 {
        ops.push(CollapseOperator::decay(decay).map_err(err)?);
    }
    if dephasing > 0.0 {
        ops.push(CollapseOperator::dephasing(dephasing).map_err(err)?);
    }
    let rabi = omega.hypot(delta);
    // Resolve the fastest timescale with ~50 steps per period.
    let fastest = rabi.max(decay).max(dephasing).max(1e-6);
    let steps = ((duration * fastest / (2.0 * PI) * 50.0).ceil() as usize).clamp(MAX_SAMPLES, 200_000);
    let dt = duration / steps as f64;
    let stride = steps.div_ceil(MAX_SAMPLES).max(1);
    let (mut t, mut down, mut purity) = (Vec::new(), Vec::new(), Vec::new());
    let mut n = 0usize;
    let init = QuantumRegister::basis(1, 0).map_err(err)?;
    lindblad_series(&single_qubit_hamiltonian(&p), &ops, duration, &init, dt, |time, r| {
        if n % stride == 0 || n == steps {
            t.push(time);
            down.push(r.population(1));
            purity.push(r.purity());
        }
        n += 1;
    })
    .map_err(err)?;
    Ok(json!({
        "t_ps": t,
        "p_down": down,
        "purity": purity,
        "pi_time_ps": (rabi > 0.0).then(|| PI / rabi),
    })
    .to_string())
}

/// Photon-count histograms and assignment fidelity of single-shot readout
/// with an immediately ionizing `|↑⟩` branch (window in µs).
pub fn readout_json(collection: f64, window_us: f64, trials: usize, seed: u64) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}, got {trials}"));
    }
    let r = simulate_readout(&ReadoutParams {
        ionize_rate: f64::INFINITY,
        cycle_rate: 1e8,
        collection,
        window: window_us * 1e-6,
        trials,
        seed,
    })
    .map_err(err)?;
    Ok(json!({
        "fidelity": r.fidelity,
        "threshold": r.threshold,
        "histogram_up": r.histogram_up,
        "histogram_down": r.histogram_down,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn band_structure(angle_deg: f64, nx: usize, n_bands: usize) -> Result<String, JsError> {
    bands_json(angle_deg, nx, n_bands).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rabi_trace(omega: f64, delta: f64, decay: f64, dephasing: f64, duration: f64) -> Result<String, JsError> {
    rabi_json(omega, delta, decay, dephasing, duration).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn readout_histogram(collection: f64, window_us: f64, trials: usize, seed: u64) -> Result<String, JsError> {
    readout_json(collection, window_us, trials, seed).map_err(|e| JsError::new(&e))
}
