//! Radiative lifetimes, blackbody-stimulated rates, linewidths and thermal
//! escape from a dot.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::units::{si, PhysConstants};

/// Spontaneous-emission coefficient `A = ω³d²/(3πε₀ħc³)` in s⁻¹ for a
/// transition energy in meV and a dipole moment in e·nm.
pub fn einstein_a(energy_mev: f64, dipole_enm: f64) -> Result<f64> {
    if !(energy_mev > 0.0 && energy_mev.is_finite()) {
        return Err(domain(format!("transition energy must be positive, got {energy_mev} meV")));
    }
    if !(dipole_enm >= 0.0 && dipole_enm.is_finite()) {
        return Err(domain(format!("dipole must be non-negative, got {dipole_enm} e·nm")));
    }
    let omega = energy_mev * si::MEV / si::HBAR;
    let d = dipole_enm * si::E_CHARGE * 1e-9;
    Ok(omega.powi(3) * d * d / (3.0 * std::f64::consts::PI * si::EPS0 * si::HBAR * si::C.powi(3)))
}

/// Dipole-coupled channel from a state to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiativeChannel {
    pub from: String,
    pub to: String,
    /// `E_from − E_to` in meV; positive for decay channels.
    pub energy_mev: f64,
    /// e·nm
    pub dipole_enm: f64,
    pub allowed: bool,
    /// Einstein coefficient (s⁻¹); zero for forbidden channels.
    pub einstein_a: f64,
}

impl RadiativeChannel {
    pub fn new(from: impl Into<String>, to: impl Into<String>, energy_mev: f64, dipole_enm: f64, allowed: bool) -> Result<Self> {
        let a = if allowed { einstein_a(energy_mev.abs(), dipole_enm)? } else { 0.0 };
        Ok(Self { from: from.into(), to: to.into(), energy_mev, dipole_enm, allowed, einstein_a: a })
    }

    pub fn is_downward(&self) -> bool {
        self.energy_mev > 0.0
    }
}

/// Mean photon occupation `1/(e^{ħω/kT} − 1)`.
pub fn bose_factor(energy_mev: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = energy_mev / (PhysConstants::CODATA.kb * temperature);
    1.0 / x.exp_m1()
}

/// Blackbody-stimulated rate `Σ A/(e^{ħω/kT} − 1)` over every channel, s⁻¹.
pub fn bbr_rate(channels: &[RadiativeChannel], temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(domain(format!("temperature must be non-negative, got {temperature}")));
    }
    Ok(channels.iter().map(|c| c.einstein_a * bose_factor(c.energy_mev.abs(), temperature)).sum())
}

/// Spontaneous decay rate: sum of A over channels to lower states, s⁻¹.
pub fn spontaneous_rate(channels: &[RadiativeChannel]) -> f64 {
    channels.iter().filter(|c| c.is_downward()).map(|c| c.einstein_a).sum()
}

/// Combines independent lifetimes (s); `f64::INFINITY` marks an absent channel.
pub fn effective_lifetime(tau0: f64, tau_bbr: f64, tau_ep: f64) -> Result<f64> {
    let mut rate = 0.0;
    for (name, tau) in [("tau0", tau0), ("tauBBR", tau_bbr), ("tauEP", tau_ep)] {
        if !(tau > 0.0) {
            return Err(domain(format!("{name} must be positive, got {tau}")));
        }
        rate += 1.0 / tau;
    }
    Ok(1.0 / rate)
}

/// Lifetime-limited FWHM linewidth `1/(2πτ)` in Hz.
pub fn linewidth(tau_eff: f64) -> Result<f64> {
    if !(tau_eff > 0.0) {
        return Err(domain(format!("lifetime must be positive, got {tau_eff}")));
    }
    Ok(1.0 / (2.0 * std::f64::consts::PI * tau_eff))
}

/// Thermal escape factor `exp(−Δb/kT)`.
pub fn tunneling_probability(barrier_mev: f64, temperature: f64) -> Result<f64> {
    if !(barrier_mev >= 0.0) {
        return Err(domain(format!("barrier must be non-negative, got {barrier_mev}")));
    }
    if !(temperature > 0.0) {
        return Err(domain(format!("temperature must be positive, got {temperature}")));
    }
    Ok((-barrier_mev / (PhysConstants::CODATA.kb * temperature)).exp())
}

fn rate_to_lifetime(rate: f64) -> f64 {
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeBudget {
    pub tau0: f64,
    pub tau_bbr: f64,
    pub tau_ep: f64,
    pub tau_eff: f64,
    pub temperature: f64,
}

impl LifetimeBudget {
    /// Budget of a state from its dipole-coupled channels; `tau_ep` is the
    /// phonon-limited lifetime (s), infinite when phonons are ignored.
    pub fn compute(channels: &[RadiativeChannel], temperature: f64, tau_ep: f64) -> Result<Self> {
        let tau0 = rate_to_lifetime(spontaneous_rate(channels));
        let tau_bbr = rate_to_lifetime(bbr_rate(channels, temperature)?);
        let tau_eff = effective_lifetime(tau0, tau_bbr, tau_ep)?;
        Ok(Self { tau0, tau_bbr, tau_ep, tau_eff, temperature })
    }

    pub fn report(&self) -> Result<LifetimeReport> {
        let finite = |x: f64| x.is_finite().then_some(x);
        let lw = if self.tau_eff.is_finite() { linewidth(self.tau_eff)? } else { 0.0 };
        Ok(LifetimeReport {
            temperature_k: self.temperature,
            tau0_s: finite(self.tau0),
            tau_bbr_s: finite(self.tau_bbr),
            tau_ep_s: finite(self.tau_ep),
            tau_eff_s: finite(self.tau_eff),
            linewidth_hz: lw,
        })
    }
}

/// JSON shape of a lifetime report; infinite lifetimes serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport {
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    pub tau0_s: Option<f64>,
    #[serde(rename = "tauBBR_s")]
    pub tau_bbr_s: Option<f64>,
    #[serde(rename = "tauEP_s")]
    pub tau_ep_s: Option<f64>,
    #[serde(rename = "tauEff_s")]
    pub tau_eff_s: Option<f64>,
    #[serde(rename = "linewidth_Hz")]
    pub linewidth_hz: f64,
}
