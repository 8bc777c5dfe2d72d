//! Moiré superlattice geometry from twist angle and monolayer lattice constant.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest twist angle (degrees) for which the small-angle moiré picture is used.
pub const MAX_TWIST_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointGroup {
    D4,
    D3,
    D6,
}

/// Monolayer lattice: constant `a` (nm), Bravais kind and site point group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub a: f64,
    pub kind: LatticeKind,
    pub point_group: PointGroup,
}

impl LatticeSpec {
    pub fn new(a: f64, kind: LatticeKind, point_group: PointGroup) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(format!("lattice constant must be positive, got {a}")));
        }
        let consistent = match kind {
            LatticeKind::Square => point_group == PointGroup::D4,
            LatticeKind::Triangular => matches!(point_group, PointGroup::D3 | PointGroup::D6),
        };
        if !consistent {
            return Err(domain(format!("{kind:?} lattice cannot carry {point_group:?} symmetry")));
        }
        Ok(Self { a, kind, point_group })
    }

    /// Square lattice with D₄ sites (the PbS case).
    pub fn square(a: f64) -> Result<Self> {
        Self::new(a, LatticeKind::Square, PointGroup::D4)
    }

    pub fn triangular(a: f64, point_group: PointGroup) -> Result<Self> {
        Self::new(a, LatticeKind::Triangular, point_group)
    }
}

/// Superlattice built from a twisted bilayer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoireGeometry {
    /// Twist angle in degrees.
    pub theta: f64,
    /// Inter-site (dot-to-dot) distance in nm.
    pub period: f64,
    /// Dot positions of one superlattice cell (nm).
    pub sites: Vec<[f64; 2]>,
    pub lattice: LatticeSpec,
}

impl MoireGeometry {
    pub fn new(lattice: LatticeSpec, theta: f64) -> Result<Self> {
        let period = moire_period(lattice.a, theta, lattice.kind)?;
        Ok(Self { theta, period, sites: vec![[0.0, 0.0]], lattice })
    }

    /// Primitive vectors of the dot lattice.
    pub fn primitive_vectors(&self) -> [[f64; 2]; 2] {
        primitive_vectors(self.period, self.lattice.kind)
    }
}

fn period_factor(kind: LatticeKind) -> f64 {
    match kind {
        LatticeKind::Square => std::f64::consts::SQRT_2,
        LatticeKind::Triangular => 2.0,
    }
}

fn primitive_vectors(period: f64, kind: LatticeKind) -> [[f64; 2]; 2] {
    match kind {
        LatticeKind::Square => [[period, 0.0], [0.0, period]],
        LatticeKind::Triangular => [[period, 0.0], [0.5 * period, 0.5 * 3f64.sqrt() * period]],
    }
}

/// Inter-site distance of the moiré dots.
///
/// Square layers give `a / (√2 sin(θ/2))`; triangular layers the usual
/// `a / (2 sin(θ/2))`. `theta` is in degrees.
pub fn moire_period(a: f64, theta: f64, kind: LatticeKind) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("lattice constant must be positive, got {a}")));
    }
    if !(theta > 0.0 && theta <= MAX_TWIST_DEG) {
        return Err(domain(format!("twist angle must lie in (0, {MAX_TWIST_DEG}] degrees, got {theta}")));
    }
    let half = 0.5 * theta.to_radians();
    Ok(a / (period_factor(kind) * half.sin()))
}

/// Twist angle (degrees) producing a given inter-site distance.
pub fn twist_for_period(a: f64, period: f64, kind: LatticeKind) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("lattice constant must be positive, got {a}")));
    }
    if !(period > a) {
        return Err(domain(format!("moiré period {period} nm must exceed the lattice constant {a} nm")));
    }
    let s = a / (period_factor(kind) * period);
    Ok((2.0 * s.asin()).to_degrees())
}

/// `n × n` block of dot positions `i·a₁ + j·a₂`, `0 ≤ i, j < n`.
pub fn superlattice_sites(geom: &MoireGeometry, n: usize) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(domain("site block size must be at least 1"));
    }
    let [a1, a2] = geom.primitive_vectors();
    let mut sites = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (fi, fj) = (i as f64, j as f64);
            sites.push([fi * a1[0] + fj * a2[0], fi * a1[1] + fj * a2[1]]);
        }
    }
    Ok(sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    #[test]
    fn pbs_period_matches_reported_distance() {
        let r = moire_period(0.417, 2.66, LatticeKind::Square).unwrap();
        assert!((r - 12.70).abs() < 0.005, "{r}");
        assert!((r - 12.75).abs() / 12.75 < 0.01);
    }

    #[test]
    fn formula_values() {
        assert_relative_eq!(
            moire_period(0.417, 4.58, LatticeKind::Square).unwrap(),
            7.379_447_378_8,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            moire_period(0.4, 2.0, LatticeKind::Triangular).unwrap(),
            11.459_737_699_7,
            max_relative = 1e-9
        );
    }

    #[test]
    fn domain_errors() {
        assert!(moire_period(0.0, 2.0, LatticeKind::Square).is_err());
        assert!(moire_period(0.4, 0.0, LatticeKind::Square).is_err());
        assert!(moire_period(0.4, 10.5, LatticeKind::Square).is_err());
        assert!(moire_period(0.4, 10.0, LatticeKind::Square).is_ok());
        assert!(twist_for_period(0.417, 0.417, LatticeKind::Square).is_err());
        assert!(LatticeSpec::new(0.4, LatticeKind::Square, PointGroup::D6).is_err());
        assert!(LatticeSpec::new(0.4, LatticeKind::Triangular, PointGroup::D4).is_err());
    }

    #[test]
    fn inverse_examples() {
        let t = twist_for_period(0.417, 12.703, LatticeKind::Square).unwrap();
        assert!((t - 2.66).abs() < 1e-3, "{t}");
        let t = twist_for_period(0.417, 7.378, LatticeKind::Square).unwrap();
        assert!((t - 4.58).abs() < 2e-3, "{t}");
        let mut last = f64::INFINITY;
        for r in [10.0, 100.0, 1e3, 1e5] {
            let t = twist_for_period(0.417, r, LatticeKind::Square).unwrap();
            assert!(t < last);
            last = t;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn round_trip() {
        for kind in [LatticeKind::Square, LatticeKind::Triangular] {
            for theta in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let r = moire_period(0.417, theta, kind).unwrap();
                let back = twist_for_period(0.417, r, kind).unwrap();
                assert_relative_eq!(back, theta, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn small_angle_asymptote() {
        for theta in [0.1, 0.25, 0.5] {
            let r = moire_period(0.417, theta, LatticeKind::Square).unwrap();
            let approx = 0.417 / (std::f64::consts::SQRT_2 * 0.5 * f64::to_radians(theta));
            assert!(((r - approx) / r).abs() < 1e-3);
        }
    }

    #[test]
    fn sites() {
        let g = MoireGeometry {
            theta: 2.66,
            period: 12.7,
            sites: vec![[0.0, 0.0]],
            lattice: LatticeSpec::square(0.417).unwrap(),
        };
        assert_eq!(superlattice_sites(&g, 1).unwrap(), vec![[0.0, 0.0]]);
        let s = superlattice_sites(&g, 2).unwrap();
        assert_eq!(s.len(), 4);
        for (i, a) in s.iter().enumerate() {
            let nn = s
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| dist(*a, *b))
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(nn, 12.7, max_relative = 1e-9);
        }
        assert!(superlattice_sites(&g, 0).is_err());

        let tri = MoireGeometry {
            theta: 2.0,
            period: 11.459,
            sites: vec![[0.0, 0.0]],
            lattice: LatticeSpec::triangular(0.4, PointGroup::D6).unwrap(),
        };
        let s = superlattice_sites(&tri, 2).unwrap();
        assert_eq!(s.len(), 4);
        let (a1, a2) = (s[2], s[1]);
        let cos = (a1[0] * a2[0] + a1[1] * a2[1]) / (11.459 * 11.459);
        assert_relative_eq!(cos, 0.5, max_relative = 1e-12);
        assert_relative_eq!(dist(s[1], s[2]), 11.459, max_relative = 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn period_decreases_with_angle(t1 in 0.01f64..10.0, t2 in 0.01f64..10.0) {
            proptest::prop_assume!((t1 - t2).abs() > 1e-6);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let r_lo = moire_period(0.417, lo, LatticeKind::Square).unwrap();
            let r_hi = moire_period(0.417, hi, LatticeKind::Square).unwrap();
            proptest::prop_assert!(r_lo > r_hi);
        }
    }
}
