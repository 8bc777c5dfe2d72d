//! Optical spin initialization, pumping and spin-to-charge readout.
//!
//! The level scheme has a ground orbital and an excited orbital, each split
//! into `|↑⟩`/`|↓⟩` by the Zeeman term, plus a dark (neutral) state reached
//! by optical ionization of the excited `|↑⟩` level. The `β` line couples
//! `g↑ ↔ e↑` and the `α` line couples `g↓ ↔ e↓`. Rates are in s⁻¹ and times
//! in s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::symmetry::Irrep;
use crate::units::PhysConstants;

/// Default spin-flip to spin-conserving branching ratio.
pub const DEFAULT_LEAK: f64 = 1e-3;
/// Default gate lever arm, meV/V.
pub const DEFAULT_ETA: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// Zeeman sign: `|↑⟩` is the upper level.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbital {
    pub label: String,
    pub irrep: Irrep,
    pub g: f64,
    /// meV
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    pub irrep: Irrep,
    pub spin: Spin,
    pub g: f64,
    pub energy: f64,
}

/// Indices into population vectors.
pub const G_UP: usize = 0;
pub const G_DOWN: usize = 1;
pub const E_UP: usize = 2;
pub const E_DOWN: usize = 3;
pub const DARK: usize = 4;
pub const N_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub ground: Orbital,
    pub excited: Orbital,
    /// Spin-conserving radiative decay rate of the excited orbital, s⁻¹.
    pub decay_rate: f64,
    /// Ionization rate out of `e↑` into the dark state, s⁻¹.
    pub ionization_rate: f64,
}

impl LevelScheme {
    /// A₂ ground state with `g = 2` and an E excited state.
    pub fn standard(g_excited: f64, gap: f64, decay_rate: f64) -> Self {
        Self {
            ground: Orbital { label: "g".into(), irrep: Irrep::A2, g: 2.0, energy: 0.0 },
            excited: Orbital { label: "e".into(), irrep: Irrep::E, g: g_excited, energy: gap },
            decay_rate,
            ionization_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("decay_rate", self.decay_rate), ("ionization_rate", self.ionization_rate)] {
            if !(r >= 0.0) || r.is_infinite() {
                return Err(domain(format!("{name} must be finite and non-negative, got {r}")));
            }
        }
        if !(self.excited.energy > self.ground.energy) {
            return Err(domain("excited orbital must lie above the ground orbital"));
        }
        Ok(())
    }

    /// The four bright levels in index order, with Zeeman-shifted energies.
    pub fn levels(&self, b: f64) -> Vec<Level> {
        let mu_b = PhysConstants::CODATA.mu_b;
        let mut out = Vec::with_capacity(4);
        for orb in [&self.ground, &self.excited] {
            for spin in [Spin::Up, Spin::Down] {
                out.push(Level {
                    label: format!("{}{}", orb.label, if spin == Spin::Up { "↑" } else { "↓" }),
                    irrep: orb.irrep,
                    spin,
                    g: orb.g,
                    energy: orb.energy + 0.5 * spin.sign() * orb.g * mu_b * b,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFrequencies {
    #[serde(rename = "alpha_GHz")]
    pub alpha_ghz: f64,
    #[serde(rename = "beta_GHz")]
    pub beta_ghz: f64,
    /// `ν_α − ν_β = (g_g − g_e)μ_B B/h`.
    #[serde(rename = "separation_GHz")]
    pub separation_ghz: f64,
}

pub fn level_frequencies(scheme: &LevelScheme, b: f64) -> Result<LineFrequencies> {
    if !(b >= 0.0) {
        return Err(domain(format!("magnetic field must be non-negative, got {b}")));
    }
    let lv = scheme.levels(b);
    let to_ghz = 1e-9 / PhysConstants::CODATA.h;
    let alpha = (lv[E_DOWN].energy - lv[G_DOWN].energy) * to_ghz;
    let beta = (lv[E_UP].energy - lv[G_UP].energy) * to_ghz;
    let separation = (scheme.ground.g - scheme.excited.g) * PhysConstants::CODATA.mu_b * b * to_ghz;
    Ok(LineFrequencies { alpha_ghz: alpha, beta_ghz: beta, separation_ghz: separation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Line {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub line: Line,
    /// Optical pumping rate on the driven line, s⁻¹.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpResult {
    pub times: Vec<f64>,
    /// Populations in index order `g↑, g↓, e↑, e↓, dark`.
    pub populations: Vec<[f64; N_LEVELS]>,
    /// Final `P(↓) = p(g↓) + p(e↓)`.
    pub spin_polarization: f64,
    /// Final probability of remaining in the bright charge state.
    pub charge_survival: f64,
}

/// Rate matrix `A` with `dp/dt = A p`; columns sum to zero.
pub fn rate_matrix(scheme: &LevelScheme, drive: &Drive, leak: f64) -> [[f64; N_LEVELS]; N_LEVELS] {
    let mut a = [[0.0; N_LEVELS]; N_LEVELS];
    let mut link = |from: usize, to: usize, rate: f64| {
        a[to][from] += rate;
        a[from][from] -= rate;
    };
    let (lo, hi) = match drive.line {
        Line::Beta => (G_UP, E_UP),
        Line::Alpha => (G_DOWN, E_DOWN),
    };
    link(lo, hi, drive.rate);
    link(hi, lo, drive.rate);
    let gamma = scheme.decay_rate;
    link(E_UP, G_UP, gamma);
    link(E_DOWN, G_DOWN, gamma);
    link(E_UP, G_DOWN, leak * gamma);
    link(E_DOWN, G_UP, leak * gamma);
    link(E_UP, DARK, scheme.ionization_rate);
    a
}

fn apply(a: &[[f64; N_LEVELS]; N_LEVELS], p: &[f64; N_LEVELS]) -> [f64; N_LEVELS] {
    let mut out = [0.0; N_LEVELS];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(p).map(|(x, y)| x * y).sum();
    }
    out
}

fn rk4_step(a: &[[f64; N_LEVELS]; N_LEVELS], p: &mut [f64; N_LEVELS], h: f64) {
    let shift = |p: &[f64; N_LEVELS], k: &[f64; N_LEVELS], s: f64| {
        let mut o = *p;
        o.iter_mut().zip(k).for_each(|(x, y)| *x += s * y);
        o
    };
    let k1 = apply(a, p);
    let k2 = apply(a, &shift(p, &k1, 0.5 * h));
    let k3 = apply(a, &shift(p, &k2, 0.5 * h));
    let k4 = apply(a, &shift(p, &k3, h));
    for i in 0..N_LEVELS {
        p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Unpolarized ground state.
pub const UNPOLARIZED: [f64; N_LEVELS] = [0.5, 0.5, 0.0, 0.0, 0.0];

/// Rate-equation pumping from an unpolarized ground state.
pub fn simulate_pumping(scheme: &LevelScheme, drive: &Drive, leak: f64, duration: f64) -> Result<PumpResult> {
    simulate_pumping_from(scheme, drive, leak, duration, UNPOLARIZED, 200)
}

/// RK4 integration with a fixed step no larger than half the inverse of the
/// fastest rate, recording `samples + 1` evenly spaced snapshots.
pub fn simulate_pumping_from(
    scheme: &LevelScheme,
    drive: &Drive,
    leak: f64,
    duration: f64,
    initial: [f64; N_LEVELS],
    samples: usize,
) -> Result<PumpResult> {
    scheme.validate()?;
    if !(drive.rate >= 0.0) || drive.rate.is_infinite() {
        return Err(domain(format!("drive rate must be finite and non-negative, got {}", drive.rate)));
    }
    if !(leak >= 0.0) || leak.is_infinite() {
        return Err(domain(format!("leak ratio must be finite and non-negative, got {leak}")));
    }
    if !(duration >= 0.0) || duration.is_infinite() {
        return Err(domain(format!("duration must be finite and non-negative, got {duration}")));
    }
    if initial.iter().any(|&p| !(p >= 0.0)) || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(domain("initial populations must be non-negative and sum to one"));
    }
    let samples = samples.max(1);
    let a = rate_matrix(scheme, drive, leak);
    let fastest = (0..N_LEVELS).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let max_step = if fastest > 0.0 { 0.5 / fastest } else { f64::INFINITY };

    let mut p = initial;
    let mut times = vec![0.0];
    let mut populations = vec![p];
    let mut t = 0.0;
    for s in 1..=samples {
        let target = duration * s as f64 / samples as f64;
        while t < target {
            let h = (target - t).min(max_step);
            rk4_step(&a, &mut p, h);
            t = if target - t <= max_step { target } else { t + h };
        }
        times.push(target);
        populations.push(p);
    }
    Ok(PumpResult {
        times,
        spin_polarization: p[G_DOWN] + p[E_DOWN],
        charge_survival: 1.0 - p[DARK],
        populations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    /// Ionization rate of the `|↑⟩` branch, s⁻¹; may be infinite.
    pub ionize_rate: f64,
    /// Photon emission rate of a bright cycling spin, s⁻¹.
    pub cycle_rate: f64,
    pub collection: f64,
    /// Counting window, s.
    pub window: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutResult {
    pub fidelity: f64,
    /// Counts at or above the threshold are assigned `|↓⟩`.
    pub threshold: usize,
    /// Photon-count histograms indexed by count.
    pub histogram_up: Vec<u64>,
    pub histogram_down: Vec<u64>,
}

/// Photon counts of one trial for `(|↑⟩, |↓⟩)` from a shared photon stream.
fn readout_trial(p: &ReadoutParams, trial: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(trial);
    let t_ion = if p.ionize_rate.is_infinite() {
        0.0
    } else if p.ionize_rate > 0.0 {
        rng.sample::<f64, _>(Exp1) / p.ionize_rate
    } else {
        f64::INFINITY
    };
    let rate = p.cycle_rate * p.collection;
    if rate <= 0.0 {
        return (0, 0);
    }
    let up_end = p.window.min(t_ion);
    let (mut up, mut down) = (0, 0);
    let mut t = rng.sample::<f64, _>(Exp1) / rate;
    while t < p.window {
        down += 1;
        if t < up_end {
            up += 1;
        }
        t += rng.sample::<f64, _>(Exp1) / rate;
    }
    (up, down)
}

fn histogram(counts: impl Iterator<Item = usize>, len: usize) -> Vec<u64> {
    let mut h = vec![0u64; len];
    counts.for_each(|c| h[c] += 1);
    h
}

/// Monte-Carlo single-shot readout. Each trial draws its own counter-based
/// stream from the master seed and both spin hypotheses share its photon
/// arrivals; the threshold maximizing the assignment fidelity is reported
/// (smallest on ties).
pub fn simulate_readout(p: &ReadoutParams) -> Result<ReadoutResult> {
    for (name, r) in [("ionize_rate", p.ionize_rate), ("cycle_rate", p.cycle_rate)] {
        if !(r >= 0.0) {
            return Err(domain(format!("{name} must be non-negative, got {r}")));
        }
    }
    if p.cycle_rate.is_infinite() {
        return Err(domain("cycle_rate must be finite"));
    }
    if !(0.0..=1.0).contains(&p.collection) {
        return Err(domain(format!("collection efficiency must lie in [0, 1], got {}", p.collection)));
    }
    if !(p.window >= 0.0) || p.window.is_infinite() {
        return Err(domain(format!("window must be finite and non-negative, got {}", p.window)));
    }
    if p.trials == 0 {
        return Err(domain("at least one trial is required"));
    }

    #[cfg(feature = "parallel")]
    let counts: Vec<(usize, usize)> = {
        use rayon::prelude::*;
        (0..p.trials as u64).into_par_iter().map(|i| readout_trial(p, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let counts: Vec<(usize, usize)> = (0..p.trials as u64).map(|i| readout_trial(p, i)).collect();

    let len = counts.iter().map(|c| c.0.max(c.1)).max().unwrap_or(0) + 1;
    let up = histogram(counts.iter().map(|c| c.0), len);
    let down = histogram(counts.iter().map(|c| c.1), len);

    let n = p.trials as f64;
    let mut best = (0.5, 0);
    // P(assign ↓ | ↓) and P(assign ↑ | ↑) for threshold `k`, built by cumulative sums.
    let (mut up_below, mut down_below) = (0u64, 0u64);
    for k in 1..=len {
        up_below += up[k - 1];
        down_below += down[k - 1];
        let f = 0.5 * (up_below as f64 / n + (p.trials as u64 - down_below) as f64 / n);
        if f > best.0 {
            best = (f, k);
        }
    }
    Ok(ReadoutResult { fidelity: best.0, threshold: best.1, histogram_up: up, histogram_down: down })
}

/// Linear gate shift `ΔE = η·V_g` in meV.
pub fn gate_shift(vg: f64, eta: f64) -> f64 {
    eta * vg
}

/// Initialization condition `ε↑ > E_F > ε↓`.
pub fn check_initialization(eps_up: f64, eps_down: f64, ef: f64) -> bool {
    eps_up > ef && ef > eps_down
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub spin_polarization: f64,
    pub charge_survival: f64,
    pub readout_fidelity: f64,
    pub readout_threshold: usize,
    pub photon_histogram: PhotonHistogram,
    #[serde(rename = "transition_frequencies_GHz")]
    pub transition_frequencies_ghz: LineFrequencies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonHistogram {
    pub up: Vec<u64>,
    pub down: Vec<u64>,
}
