use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Least-squares fit of `ln W = b − χR`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingFit {
    /// Decay constant χ (nm⁻¹).
    pub chi: f64,
    /// Intercept `b = ln F`, with F treated as R-independent.
    pub log_prefactor: f64,
    pub r_squared: f64,
}

impl HoppingFit {
    pub fn predict(&self, r: f64) -> f64 {
        (self.log_prefactor - self.chi * r).exp()
    }
}

/// Fits bandwidth samples `(R nm, W meV)` to an exponential decay.
pub fn fit_hopping_decay(samples: &[(f64, f64)]) -> Result<HoppingFit> {
    if samples.len() < 2 {
        return Err(domain(format!("need at least two samples, got {}", samples.len())));
    }
    if let Some((r, w)) = samples.iter().find(|(_, w)| !(*w > 0.0)) {
        return Err(domain(format!("bandwidth must be positive, got {w} at R = {r}")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("all samples share the same R"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(HoppingFit { chi: -slope, log_prefactor: intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let s: Vec<(f64, f64)> = [5.0f64, 10.0, 15.0, 20.0].iter().map(|&r| (r, 5.0 * (-0.8 * r).exp())).collect();
        let f = fit_hopping_decay(&s).unwrap();
        assert!((f.chi - 0.8).abs() < 1e-10);
        assert!((f.log_prefactor - 5f64.ln()).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.predict(12.0) - 5.0 * (-9.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn two_points_interpolate() {
        let f = fit_hopping_decay(&[(4.0, 0.6), (7.0, 1e-4)]).unwrap();
        assert_eq!(f.r_squared, 1.0);
        assert!((f.predict(4.0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_widths() {
        assert!(fit_hopping_decay(&[(4.0, 0.6), (5.0, 0.0), (6.0, 0.1)]).is_err());
        assert!(fit_hopping_decay(&[(4.0, 0.6)]).is_err());
        assert!(fit_hopping_decay(&[(4.0, 0.6), (4.0, 0.3)]).is_err());
    }
}
