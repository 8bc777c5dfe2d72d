use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{LatticeKind, MoireGeometry};

/// Smallest grid dimension accepted by the solver.
pub const MIN_GRID: usize = 32;

/// Moiré confinement potential sampled on one computational cell.
///
/// Square lattices use an `R × R` cell holding one dot at the origin;
/// triangular lattices use the rectangular `R × √3R` cell holding two dots.
/// Grid point `(i, j)` sits at `(i·lx/nx, j·ly/ny)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoirePotential {
    /// Potential in meV, indexed `[i, j]` along x and y.
    pub grid: Array2<f64>,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Dot-to-dot distance (nm).
    pub period: f64,
    pub v0: f64,
    pub r0: f64,
    /// Effective mass in units of the electron mass.
    pub m_eff: f64,
    pub sites: Vec<[f64; 2]>,
    pub kind: LatticeKind,
}

impl MoirePotential {
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    /// Evaluates the Gaussian-well sum at an arbitrary point, folded into the cell.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        gaussian_sum(x.rem_euclid(self.lx), y.rem_euclid(self.ly), self.lx, self.ly, &self.sites, self.v0, self.r0)
    }

    pub fn min(&self) -> f64 {
        self.grid.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid index of a site center, if it falls on a grid point.
    pub fn site_index(&self, site: usize) -> Option<(usize, usize)> {
        let s = self.sites.get(site)?;
        let fi = s[0] / self.hx();
        let fj = s[1] / self.hy();
        let (i, j) = (fi.round(), fj.round());
        ((fi - i).abs() < 1e-9 && (fj - j).abs() < 1e-9).then_some((i as usize % self.nx, j as usize % self.ny))
    }
}

fn gaussian_sum(x: f64, y: f64, lx: f64, ly: f64, sites: &[[f64; 2]], v0: f64, r0: f64) -> f64 {
    let inv = 1.0 / (2.0 * r0 * r0);
    let mut acc = 0.0;
    for s in sites {
        for m in -1..=1 {
            for n in -1..=1 {
                let dx = x - s[0] - m as f64 * lx;
                let dy = y - s[1] - n as f64 * ly;
                acc += (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }
    -v0 * acc
}

/// Sum of Gaussian wells `−V0·exp(−|r−s|²/2r0²)` over the dots of the cell
/// and their eight periodic images.
pub fn build_moire_potential(
    geom: &MoireGeometry,
    v0: f64,
    r0: f64,
    m_eff: f64,
    nx: usize,
    ny: usize,
) -> Result<MoirePotential> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(domain(format!("well depth must be non-negative, got {v0}")));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(domain(format!("well radius must be positive, got {r0}")));
    }
    if !(m_eff > 0.0 && m_eff.is_finite()) {
        return Err(domain(format!("effective mass must be positive, got {m_eff}")));
    }
    if nx < MIN_GRID || ny < MIN_GRID {
        return Err(domain(format!("grid {nx}×{ny} is below the {MIN_GRID}×{MIN_GRID} minimum")));
    }
    let period = geom.period;
    if r0 >= period / 4.0 {
        return Err(Error::OverlappingWells { r0, period });
    }
    let (lx, ly, sites) = match geom.lattice.kind {
        LatticeKind::Square => (period, period, vec![[0.0, 0.0]]),
        LatticeKind::Triangular => {
            let ly = 3f64.sqrt() * period;
            (period, ly, vec![[0.0, 0.0], [0.5 * period, 0.5 * ly]])
        }
    };
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let grid = Array2::from_shape_fn((nx, ny), |(i, j)| {
        gaussian_sum(i as f64 * hx, j as f64 * hy, lx, ly, &sites, v0, r0)
    });
    Ok(MoirePotential { grid, nx, ny, lx, ly, period, v0, r0, m_eff, sites, kind: geom.lattice.kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LatticeSpec, PointGroup};

    fn pbs(period: f64) -> MoireGeometry {
        MoireGeometry { theta: 2.66, period, sites: vec![[0.0, 0.0]], lattice: LatticeSpec::square(0.417).unwrap() }
    }

    #[test]
    fn empty_potential() {
        let p = build_moire_potential(&pbs(12.703), 0.0, 1.0, 2.5, 32, 32).unwrap();
        assert!(p.grid.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deep_well_extremes() {
        let p = build_moire_potential(&pbs(12.703), 201.0, 1.0, 2.5, 64, 64).unwrap();
        assert!(((p.grid[[0, 0]] + 201.0) / 201.0).abs() < 1e-5);
        assert!(((p.min() + 201.0) / 201.0).abs() < 1e-5);
        assert!(p.min() >= -201.0 * (1.0 + 1e-6));
        assert!(p.grid[[32, 32]] >= -1e-4, "{}", p.grid[[32, 32]]);
        assert_eq!(p.site_index(0), Some((0, 0)));
    }

    #[test]
    fn periodic_shift() {
        let p = build_moire_potential(&pbs(12.703), 201.0, 1.0, 2.5, 40, 40).unwrap();
        for i in 0..p.nx {
            for j in 0..p.ny {
                let [x, y] = p.position(i, j);
                let v = p.value_at(x, y);
                assert!((p.value_at(x + p.lx, y) - v).abs() <= 1e-12 * v.abs().max(1.0));
                assert!((p.value_at(x, y + p.ly) - v).abs() <= 1e-12 * v.abs().max(1.0));
                assert!((v - p.grid[[i, j]]).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn preconditions() {
        let g = pbs(12.703);
        assert!(matches!(build_moire_potential(&g, 201.0, 3.2, 2.5, 32, 32), Err(Error::OverlappingWells { .. })));
        assert!(build_moire_potential(&g, 201.0, 1.0, 2.5, 16, 32).is_err());
        assert!(build_moire_potential(&g, -1.0, 1.0, 2.5, 32, 32).is_err());
        assert!(build_moire_potential(&g, 201.0, 0.0, 2.5, 32, 32).is_err());
    }

    #[test]
    fn triangular_cell_has_two_dots() {
        let g = MoireGeometry {
            theta: 2.0,
            period: 11.459,
            sites: vec![[0.0, 0.0]],
            lattice: LatticeSpec::triangular(0.4, PointGroup::D6).unwrap(),
        };
        let p = build_moire_potential(&g, 150.0, 1.0, 1.0, 32, 56).unwrap();
        assert_eq!(p.sites.len(), 2);
        let [sx, sy] = p.sites[1];
        assert!((p.value_at(sx, sy) + 150.0).abs() < 1e-3);
    }

    proptest::proptest! {
        // Image tails deepen the minimum by at most 17·V0·exp(−R²/8r0²): every
        // point lies within R/2 of at most one of the 18 wells summed.
        #[test]
        fn minimum_bounded_by_tails(period in 4.1f64..20.0, v0 in 1.0f64..300.0, r0 in 0.3f64..1.0, tri in proptest::bool::ANY) {
            let r0 = r0.min(period / 4.1);
            let lattice = if tri { LatticeSpec::triangular(0.4, PointGroup::D3) } else { LatticeSpec::square(0.4) }.unwrap();
            let g = MoireGeometry { theta: 2.0, period, sites: vec![[0.0, 0.0]], lattice };
            let ny = if tri { 56 } else { 32 };
            let p = build_moire_potential(&g, v0, r0, 1.0, 32, ny).unwrap();
            let tail = 17.0 * (-period * period / (8.0 * r0 * r0)).exp();
            proptest::prop_assert!(p.min() >= -v0 * (1.0 + tail) - 1e-12);
            proptest::prop_assert!(p.grid.iter().all(|&v| v <= 0.0));
            proptest::prop_assert!((p.value_at(0.0, 0.0) + v0).abs() <= v0 * tail + 1e-12);
        }
    }
}
