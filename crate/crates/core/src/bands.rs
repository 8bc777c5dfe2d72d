//! Band structures along labeled k-paths, shared by the continuum and
//! lattice models.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;

/// Default dispersed-band criterion (meV).
pub const DEFAULT_FLAT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub label: Option<String>,
    /// Cartesian wave vector, nm⁻¹.
    pub k: [f64; 2],
}

/// Piecewise-linear path through labeled vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPath {
    pub vertices: Vec<(String, [f64; 2])>,
    pub samples_per_segment: usize,
}

impl KPath {
    pub fn new(vertices: Vec<(String, [f64; 2])>, samples_per_segment: usize) -> Self {
        Self { vertices, samples_per_segment: samples_per_segment.max(1) }
    }

    /// Γ–X–M–Γ of a square cell with side `period`.
    pub fn square(period: f64, samples_per_segment: usize) -> Self {
        Self::rectangular_labels(period, period, &["G", "X", "M", "G"], samples_per_segment)
            .expect("fixed labels are valid")
    }

    /// Γ–M–K–Γ of a triangular lattice with spacing `period` and primitive
    /// vectors `(R, 0)`, `(R/2, √3R/2)`.
    pub fn triangular(period: f64, samples_per_segment: usize) -> Self {
        let pi = std::f64::consts::PI;
        let m = [0.0, 2.0 * pi / (3f64.sqrt() * period)];
        let k = [4.0 * pi / (3.0 * period), 0.0];
        Self::new(
            vec![("G".into(), [0.0, 0.0]), ("M".into(), m), ("K".into(), k), ("G".into(), [0.0, 0.0])],
            samples_per_segment,
        )
    }

    /// Path through high-symmetry points of a rectangular cell `lx × ly`.
    /// Known labels: `G` (Γ), `X`, `Y`, `M` (= `S`, the corner).
    pub fn rectangular_labels(lx: f64, ly: f64, labels: &[&str], samples_per_segment: usize) -> Result<Self> {
        let (bx, by) = (std::f64::consts::PI / lx, std::f64::consts::PI / ly);
        let vertices = labels
            .iter()
            .map(|&l| {
                let k = match l {
                    "G" | "Γ" => [0.0, 0.0],
                    "X" => [bx, 0.0],
                    "Y" => [0.0, by],
                    "M" | "S" => [bx, by],
                    other => return Err(Error::Domain(format!("unknown k-point label '{other}'"))),
                };
                Ok((l.to_string(), k))
            })
            .collect::<Result<Vec<_>>>()?;
        if vertices.len() < 2 {
            return Err(Error::Domain("a k-path needs at least two vertices".into()));
        }
        Ok(Self::new(vertices, samples_per_segment))
    }

    /// Sampled points; segment ends are not duplicated.
    pub fn points(&self) -> Vec<KPoint> {
        let mut out = Vec::new();
        if self.vertices.len() == 1 {
            let (l, k) = &self.vertices[0];
            return vec![KPoint { label: Some(l.clone()), k: *k }];
        }
        for (s, pair) in self.vertices.windows(2).enumerate() {
            let ((la, ka), (_, kb)) = (&pair[0], &pair[1]);
            let n = self.samples_per_segment;
            for step in 0..n {
                let f = step as f64 / n as f64;
                let label = (step == 0).then(|| la.clone());
                out.push(KPoint { label, k: [ka[0] + f * (kb[0] - ka[0]), ka[1] + f * (kb[1] - ka[1])] });
            }
            if s == self.vertices.len() - 2 {
                let (lb, kb) = &pair[1];
                out.push(KPoint { label: Some(lb.clone()), k: *kb });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub kpoints: Vec<KPoint>,
    /// `energies[band][k]` in meV.
    pub energies: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
    pub barrier: Option<f64>,
}

impl BandStructure {
    /// Builds from per-k ascending spectra (`spectra[k][band]`).
    pub fn from_spectra(kpoints: Vec<KPoint>, spectra: Vec<Vec<f64>>) -> Self {
        let n_bands = spectra.iter().map(Vec::len).min().unwrap_or(0);
        let energies: Vec<Vec<f64>> = (0..n_bands).map(|b| spectra.iter().map(|s| s[b]).collect()).collect();
        let bandwidths = energies.iter().map(|e| width(e)).collect();
        Self { kpoints, energies, bandwidths, barrier: None }
    }

    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }

    pub fn band_width(&self, band: usize) -> Result<f64> {
        self.bandwidths
            .get(band)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: band, len: self.bandwidths.len() })
    }

    /// Energy gap between the lowest flat band and the bottom of the lowest
    /// dispersed band above it. Stores the result in `self.barrier`.
    pub fn extract_barrier(&mut self, flat_threshold: f64) -> Result<f64> {
        let flat = self
            .bandwidths
            .iter()
            .position(|&w| w < flat_threshold)
            .ok_or_else(|| Error::NotApplicable(format!("no band narrower than {flat_threshold} meV")))?;
        let dispersed = (flat + 1..self.n_bands())
            .find(|&b| self.bandwidths[b] >= flat_threshold)
            .ok_or_else(|| Error::NotApplicable(format!("no dispersed band (width ≥ {flat_threshold} meV) above the flat band")))?;
        let flat_level = mean(&self.energies[flat]);
        let bottom = self.energies[dispersed].iter().copied().fold(f64::INFINITY, f64::min);
        let barrier = bottom - flat_level;
        self.barrier = Some(barrier);
        Ok(barrier)
    }

    /// Number of flat bands (width < threshold) lying below the first dispersed band.
    pub fn flat_band_count(&self, flat_threshold: f64) -> usize {
        self.bandwidths.iter().take_while(|&&w| w < flat_threshold).count()
    }

    /// CSV: `k_index,k_label,k_x,k_y,band_0,...`, energies with nine significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "k_index,k_label,k_x,k_y")?;
        for b in 0..self.n_bands() {
            write!(out, ",band_{b}")?;
        }
        writeln!(out)?;
        for (i, kp) in self.kpoints.iter().enumerate() {
            write!(out, "{i},{},{},{}", kp.label.as_deref().unwrap_or(""), sig9(kp.k[0]), sig9(kp.k[1]))?;
            for band in &self.energies {
                write!(out, ",{}", sig9(band[i]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn width(e: &[f64]) -> f64 {
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min).max(0.0)
}

fn mean(e: &[f64]) -> f64 {
    e.iter().sum::<f64>() / e.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_sampling() {
        let p = KPath::square(10.0, 4).points();
        assert_eq!(p.len(), 13);
        assert_eq!(p[0].label.as_deref(), Some("G"));
        assert_eq!(p[4].label.as_deref(), Some("X"));
        assert_eq!(p[12].label.as_deref(), Some("G"));
        assert_relative_eq!(p[8].k[0], std::f64::consts::PI / 10.0);
        assert!(KPath::rectangular_labels(1.0, 1.0, &["G", "Q"], 2).is_err());
    }

    #[test]
    fn constant_band_has_zero_width() {
        let bs = BandStructure::from_spectra(KPath::square(1.0, 2).points(), vec![vec![3.0]; 7]);
        assert_eq!(bs.band_width(0).unwrap(), 0.0);
        assert!(matches!(bs.band_width(1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn cosine_band_width_is_eight_t() {
        let (r, t, eps) = (5.0, 1.7, -3.0);
        let pts = KPath::square(r, 16).points();
        let spectra = pts
            .iter()
            .map(|p| vec![eps - 2.0 * t * ((p.k[0] * r).cos() + (p.k[1] * r).cos())])
            .collect();
        let bs = BandStructure::from_spectra(pts, spectra);
        assert_relative_eq!(bs.band_width(0).unwrap(), 8.0 * t, max_relative = 1e-12);
    }

    #[test]
    fn barrier_from_synthetic_bands() {
        let pts = KPath::square(1.0, 1).points();
        let n = pts.len();
        let flat = vec![-100.0; n];
        let mut disp: Vec<f64> = (0..n).map(|i| 177.0 + 10.0 * i as f64).collect();
        disp.reverse();
        let spectra = (0..n).map(|i| vec![flat[i], disp[i]]).collect();
        let mut bs = BandStructure::from_spectra(pts, spectra);
        assert_relative_eq!(bs.extract_barrier(DEFAULT_FLAT_THRESHOLD).unwrap(), 277.0);
        assert_eq!(bs.barrier, Some(277.0));
        assert_eq!(bs.flat_band_count(1.0), 1);
        assert!(matches!(bs.extract_barrier(1e6), Err(Error::NotApplicable(_))));
        assert!(bs.extract_barrier(0.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let pts = KPath::square(1.0, 1).points();
        let bs = BandStructure::from_spectra(pts, vec![vec![1.0, 2.0]; 4]);
        let mut buf = Vec::new();
        bs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k_index,k_label,k_x,k_y,band_0,band_1"));
        assert_eq!(lines.next(), Some("0,G,0,0,1.00000000,2.00000000"));
        assert_eq!(text.lines().count(), 5);
    }
}
