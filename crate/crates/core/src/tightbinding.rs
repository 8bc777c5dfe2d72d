//! Lattice model on the moiré superlattice: on-site energies, hopping to
//! the first two neighbor shells and a Hartree plus same-orbital exchange
//! mean field.
//!
//! Orbitals are spin-orbitals. The Bloch Hamiltonian is
//! `H(k) = diag(ε̃) − Σ_shell Σ_δ T_shell e^{ik·δ}`, so a single orbital on
//! the square lattice gives `−2t(cos k_xR + cos k_yR)`.

use crate::bands::{BandStructure, KPath};
use crate::error::{domain, Error, Result};
use crate::geometry::{LatticeKind, LatticeSpec};
use crate::linalg::{c, eigh, hermiticity_error, CMatrix};

pub const DEFAULT_MAX_ITER: usize = 500;
/// k-grid side used to compute mean-field occupations.
pub const DEFAULT_OCC_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TBModel {
    pub lattice: LatticeSpec,
    /// Superlattice period, nm.
    pub period: f64,
    /// On-site energies per spin-orbital, meV.
    pub eps: Vec<f64>,
    /// Hopping matrices for the first and (optionally) second neighbor
    /// shell, meV. Each must be hermitian so that bonds `δ` and `−δ` are
    /// conjugate.
    pub hopping: Vec<CMatrix>,
    /// Density-density interaction per shell `[on-site, first, second]`, meV.
    pub coulomb: [f64; 3],
    /// Same-orbital exchange per shell, meV.
    pub exchange: [f64; 3],
    /// Mean-field densities per spin-orbital; `None` means non-interacting.
    pub occupations: Option<Vec<f64>>,
}

impl TBModel {
    pub fn new(lattice: LatticeSpec, period: f64, eps: Vec<f64>, hopping: Vec<CMatrix>) -> Result<Self> {
        let m = Self { lattice, period, eps, hopping, coulomb: [0.0; 3], exchange: [0.0; 3], occupations: None };
        m.validate()?;
        Ok(m)
    }

    /// One orbital with nearest-neighbor hopping `t`.
    pub fn single_orbital(lattice: LatticeSpec, period: f64, eps: f64, t: f64) -> Result<Self> {
        Self::new(lattice, period, vec![eps], vec![CMatrix::from_element(1, 1, c(t, 0.0))])
    }

    pub fn with_interactions(mut self, coulomb: [f64; 3], exchange: [f64; 3]) -> Result<Self> {
        self.coulomb = coulomb;
        self.exchange = exchange;
        self.validate()?;
        Ok(self)
    }

    pub fn orbitals(&self) -> usize {
        self.eps.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(domain(format!("period must be positive, got {}", self.period)));
        }
        if self.eps.is_empty() {
            return Err(domain("at least one orbital is required"));
        }
        if self.hopping.len() > 2 {
            return Err(domain(format!("at most two neighbor shells are supported, got {}", self.hopping.len())));
        }
        let n = self.orbitals();
        for t in &self.hopping {
            if t.nrows() != n || t.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.nrows() });
            }
            if hermiticity_error(t) > 1e-12 {
                return Err(domain("hopping matrix must be hermitian"));
            }
        }
        if let Some(occ) = &self.occupations {
            if occ.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: occ.len() });
            }
            if occ.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(domain("occupations must lie in [0, 1]"));
            }
        }
        if self.coulomb.iter().chain(&self.exchange).any(|x| !x.is_finite()) {
            return Err(domain("interaction constants must be finite"));
        }
        Ok(())
    }

    /// Bond vectors of neighbor shell `shell` (0 = nearest).
    pub fn neighbor_vectors(&self, shell: usize) -> Vec<[f64; 2]> {
        neighbor_vectors(self.lattice.kind, self.period, shell)
    }

    /// Coordination number of each shell, on-site first.
    pub fn coordination(&self) -> [f64; 3] {
        [1.0, self.neighbor_vectors(0).len() as f64, self.neighbor_vectors(1).len() as f64]
    }

    /// `ε̃_α = ε_α + Σ_s z_s J_s Σ_β n_β − Σ_s z_s J′_s n_α`.
    pub fn effective_onsite(&self) -> Vec<f64> {
        self.onsite_for(self.occupations.as_deref())
    }

    fn onsite_for(&self, occ: Option<&[f64]>) -> Vec<f64> {
        let Some(occ) = occ else { return self.eps.clone() };
        let z = self.coordination();
        let hartree: f64 = z.iter().zip(&self.coulomb).map(|(z, j)| z * j).sum::<f64>() * occ.iter().sum::<f64>();
        let fock: f64 = z.iter().zip(&self.exchange).map(|(z, j)| z * j).sum();
        self.eps.iter().zip(occ).map(|(e, n)| e + hartree - fock * n).collect()
    }

    /// Reciprocal primitive vectors of the superlattice.
    pub fn reciprocal_vectors(&self) -> [[f64; 2]; 2] {
        let two_pi = 2.0 * std::f64::consts::PI;
        let r = self.period;
        match self.lattice.kind {
            LatticeKind::Square => [[two_pi / r, 0.0], [0.0, two_pi / r]],
            LatticeKind::Triangular => {
                let s3 = 3f64.sqrt();
                [[two_pi / r, -two_pi / (s3 * r)], [0.0, 2.0 * two_pi / (s3 * r)]]
            }
        }
    }
}

/// Bond vectors of the first (`shell = 0`) or second neighbor shell.
pub fn neighbor_vectors(kind: LatticeKind, r: f64, shell: usize) -> Vec<[f64; 2]> {
    let ring = |n: usize, radius: f64, offset: f64| {
        (0..n)
            .map(|i| {
                let phi = offset + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [radius * phi.cos(), radius * phi.sin()]
            })
            .collect()
    };
    match (kind, shell) {
        (LatticeKind::Square, 0) => vec![[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]],
        (LatticeKind::Square, 1) => vec![[r, r], [-r, r], [-r, -r], [r, -r]],
        (LatticeKind::Triangular, 0) => ring(6, r, 0.0),
        (LatticeKind::Triangular, 1) => ring(6, 3f64.sqrt() * r, std::f64::consts::FRAC_PI_6),
        _ => Vec::new(),
    }
}

pub fn build_bloch_hamiltonian(model: &TBModel, k: [f64; 2]) -> CMatrix {
    bloch_with_onsite(model, &model.effective_onsite(), k)
}

fn bloch_with_onsite(model: &TBModel, onsite: &[f64], k: [f64; 2]) -> CMatrix {
    let n = model.orbitals();
    let mut h = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, onsite.iter().map(|&e| c(e, 0.0))));
    for (shell, t) in model.hopping.iter().enumerate() {
        let phase: num_complex::Complex64 = model
            .neighbor_vectors(shell)
            .iter()
            .map(|d| num_complex::Complex64::from_polar(1.0, k[0] * d[0] + k[1] * d[1]))
            .sum();
        h -= t * phase;
    }
    h
}

/// Eigenvalues of `H(k)` along `path`, ascending at each k.
pub fn tb_band_structure(model: &TBModel, path: &KPath) -> Result<BandStructure> {
    model.validate()?;
    let kpoints = path.points();
    let solve = |k: [f64; 2]| eigh(&build_bloch_hamiltonian(model, k)).0;
    #[cfg(feature = "parallel")]
    let spectra: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        kpoints.par_iter().map(|p| solve(p.k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let spectra: Vec<Vec<f64>> = kpoints.iter().map(|p| solve(p.k)).collect();
    Ok(BandStructure::from_spectra(kpoints, spectra))
}

/// Zero-temperature densities per spin-orbital for `filling` electrons per
/// site on an `nk × nk` grid; levels degenerate with the Fermi level share
/// the remaining charge equally.
pub fn occupations(model: &TBModel, onsite: &[f64], filling: f64, nk: usize) -> Vec<f64> {
    let n = model.orbitals();
    let [b1, b2] = model.reciprocal_vectors();
    let mut states: Vec<(f64, Vec<f64>)> = Vec::with_capacity(nk * nk * n);
    for i in 0..nk {
        for j in 0..nk {
            let (fi, fj) = (i as f64 / nk as f64, j as f64 / nk as f64);
            let k = [fi * b1[0] + fj * b2[0], fi * b1[1] + fj * b2[1]];
            let (vals, vecs) = eigh(&bloch_with_onsite(model, onsite, k));
            for (b, e) in vals.into_iter().enumerate() {
                states.push((e, vecs.column(b).iter().map(|z| z.norm_sqr()).collect()));
            }
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cells = (nk * nk) as f64;
    let mut remaining = filling * cells;
    let mut occ = vec![0.0; n];
    let mut start = 0;
    while start < states.len() && remaining > 1e-12 {
        let mut end = start + 1;
        while end < states.len() && (states[end].0 - states[start].0).abs() <= 1e-9 {
            end += 1;
        }
        let w = (remaining / (end - start) as f64).min(1.0);
        for (_, weights) in &states[start..end] {
            occ.iter_mut().zip(weights).for_each(|(o, p)| *o += w * p);
        }
        remaining -= w * (end - start) as f64;
        start = end;
    }
    occ.iter_mut().for_each(|o| *o = (*o / cells).clamp(0.0, 1.0));
    occ
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfOptions {
    pub mix: f64,
    /// Convergence threshold on the largest on-site change, meV.
    pub tol: f64,
    pub max_iter: usize,
    pub nk: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self { mix: 0.5, tol: 1e-8, max_iter: DEFAULT_MAX_ITER, nk: DEFAULT_OCC_GRID }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfResult {
    pub model: TBModel,
    pub iterations: usize,
    /// Largest on-site change per iteration, meV.
    pub history: Vec<f64>,
}

/// Linear-mixing fixed point of the mean-field occupations.
pub fn hartree_self_consistency(model: &TBModel, filling: f64, opts: &ScfOptions) -> Result<ScfResult> {
    model.validate()?;
    let n = model.orbitals() as f64;
    if !(0.0..=n).contains(&filling) {
        return Err(domain(format!("filling must lie in [0, {n}], got {filling}")));
    }
    if !(opts.mix > 0.0 && opts.mix <= 1.0) {
        return Err(domain(format!("mixing must lie in (0, 1], got {}", opts.mix)));
    }
    if !(opts.tol > 0.0) || opts.nk == 0 {
        return Err(domain("tolerance must be positive and the k-grid non-empty"));
    }
    let mut occ = model.occupations.clone().unwrap_or_else(|| vec![filling / n; model.orbitals()]);
    let mut onsite = model.onsite_for(Some(&occ));
    let mut history = Vec::new();
    for iter in 1..=opts.max_iter {
        let fresh = occupations(model, &onsite, filling, opts.nk);
        occ.iter_mut().zip(&fresh).for_each(|(o, f)| *o = (1.0 - opts.mix) * *o + opts.mix * f);
        let next = model.onsite_for(Some(&occ));
        let change = next.iter().zip(&onsite).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push(change);
        onsite = next;
        if change < opts.tol {
            let mut out = model.clone();
            out.occupations = Some(occ);
            return Ok(ScfResult { model: out, iterations: iter, history });
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, last: *history.last().unwrap_or(&f64::NAN), history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointGroup;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const R: f64 = 12.703;

    fn square(t: f64) -> TBModel {
        TBModel::single_orbital(LatticeSpec::square(0.417).unwrap(), R, 0.0, t).unwrap()
    }

    fn two_orbital(eps: [f64; 2], t: f64, t2: f64) -> TBModel {
        let hop = CMatrix::from_row_slice(2, 2, &[c(t, 0.0), c(0.3 * t, 0.2 * t), c(0.3 * t, -0.2 * t), c(0.5 * t, 0.0)]);
        let nnn = CMatrix::from_row_slice(2, 2, &[c(t2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(t2, 0.0)]);
        TBModel::new(LatticeSpec::square(0.417).unwrap(), R, eps.to_vec(), vec![hop, nnn]).unwrap()
    }

    fn triangular(t: f64) -> TBModel {
        TBModel::single_orbital(LatticeSpec::triangular(0.4, PointGroup::D3).unwrap(), R, 0.0, t).unwrap()
    }

    #[test]
    fn flat_without_hopping() {
        let m = TBModel::single_orbital(LatticeSpec::square(0.417).unwrap(), R, 5.0, 0.0).unwrap();
        for k in [[0.0, 0.0], [0.1, 0.2], [0.3, -0.7]] {
            assert_eq!(build_bloch_hamiltonian(&m, k)[(0, 0)], c(5.0, 0.0));
        }
    }

    #[test]
    fn square_band_extremes() {
        let m = square(32.5);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(build_bloch_hamiltonian(&m, [0.0, 0.0])[(0, 0)].re, -130.0, max_relative = 1e-12);
        assert_relative_eq!(build_bloch_hamiltonian(&m, [pi / R, pi / R])[(0, 0)].re, 130.0, max_relative = 1e-12);
        // Oracle: −2t(cos kxR + cos kyR).
        let k = [0.11, -0.07];
        let expect = -2.0 * 32.5 * ((k[0] * R).cos() + (k[1] * R).cos());
        assert!((build_bloch_hamiltonian(&m, k)[(0, 0)].re - expect).abs() < 1e-12);
        let bs = tb_band_structure(&m, &KPath::square(R, 16)).unwrap();
        assert!((bs.bandwidths[0] - 260.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_band() {
        // Oracle: −2t Σ cos(k·a_i) over three bond directions; width 9t.
        let m = triangular(10.0);
        let k = [0.05, 0.13];
        let a = [[R, 0.0], [R / 2.0, R * 3f64.sqrt() / 2.0], [-R / 2.0, R * 3f64.sqrt() / 2.0]];
        let expect: f64 = -2.0 * 10.0 * a.iter().map(|v| (k[0] * v[0] + k[1] * v[1]).cos()).sum::<f64>();
        assert!((build_bloch_hamiltonian(&m, k)[(0, 0)].re - expect).abs() < 1e-12);
        let bs = tb_band_structure(&m, &KPath::triangular(R, 30)).unwrap();
        assert!((bs.bandwidths[0] - 90.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_scales_linearly() {
        let path = KPath::square(R, 12);
        let base = tb_band_structure(&two_orbital([0.0, 0.0], 10.0, 2.0), &path).unwrap();
        let scaled = tb_band_structure(&two_orbital([0.0, 0.0], 25.0, 5.0), &path).unwrap();
        for (a, b) in base.bandwidths.iter().zip(&scaled.bandwidths) {
            assert_relative_eq!(2.5 * a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn decoupled_orbitals_are_rigid_copies() {
        let diag = CMatrix::from_row_slice(2, 2, &[c(20.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(20.0, 0.0)]);
        let m = TBModel::new(LatticeSpec::square(0.417).unwrap(), R, vec![0.0, 500.0], vec![diag]).unwrap();
        let bs = tb_band_structure(&m, &KPath::square(R, 10)).unwrap();
        for (a, b) in bs.energies[0].iter().zip(&bs.energies[1]) {
            assert!((b - a - 500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_models() {
        let lat = LatticeSpec::square(0.417).unwrap();
        let skew = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(TBModel::new(lat.clone(), R, vec![0.0, 0.0], vec![skew]).is_err());
        assert!(TBModel::new(lat.clone(), R, vec![0.0], vec![CMatrix::zeros(2, 2)]).is_err());
        assert!(TBModel::new(lat.clone(), 0.0, vec![0.0], vec![]).is_err());
        let mut m = square(1.0);
        m.occupations = Some(vec![1.5]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn hermitian_and_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = two_orbital([1.0, -3.0], 12.0, 1.5).with_interactions([2.0, 1.0, 0.5], [0.7, 0.2, 0.0]).unwrap();
        m.occupations = Some(vec![0.3, 0.6]);
        let [b1, b2] = m.reciprocal_vectors();
        let mut tri = triangular(5.0);
        tri.hopping.push(CMatrix::from_element(1, 1, c(1.0, 0.0)));
        let [t1, t2] = tri.reciprocal_vectors();
        for _ in 0..100 {
            let k = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let h = build_bloch_hamiltonian(&m, k);
            assert!(hermiticity_error(&h) < 1e-12);
            let g = [k[0] + 2.0 * b1[0] - b2[0], k[1] + 2.0 * b1[1] - b2[1]];
            assert!((&h - build_bloch_hamiltonian(&m, g)).norm() < 1e-9);
            let g = [k[0] + t1[0] + t2[0], k[1] + t1[1] + t2[1]];
            assert!((build_bloch_hamiltonian(&tri, k) - build_bloch_hamiltonian(&tri, g)).norm() < 1e-9);
        }
    }

    #[test]
    fn occupations_fill_lowest_states() {
        let m = two_orbital([0.0, 1000.0], 5.0, 0.0);
        let occ = occupations(&m, &m.eps, 1.0, 8);
        assert!((occ[0] - 1.0).abs() < 1e-3 && occ[1] < 1e-3);
        assert!((occ[0] + occ[1] - 1.0).abs() < 1e-9);
        let occ = occupations(&m, &m.eps, 0.5, 8);
        assert!((occ.iter().sum::<f64>() - 0.5).abs() < 1e-9);
        // Flat degenerate levels share the charge.
        let flat = TBModel::new(LatticeSpec::square(0.417).unwrap(), R, vec![0.0, 0.0], vec![]).unwrap();
        let occ = occupations(&flat, &flat.eps, 0.6, 4);
        assert!((occ[0] - 0.3).abs() < 1e-12 && (occ[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn non_interacting_converges_immediately() {
        let m = two_orbital([0.0, 4.0], 10.0, 1.0);
        let r = hartree_self_consistency(&m, 1.0, &ScfOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.history, vec![0.0]);
        for k in [[0.0, 0.0], [0.2, 0.1]] {
            assert_eq!(build_bloch_hamiltonian(&r.model, k), build_bloch_hamiltonian(&m, k));
        }
    }

    #[test]
    fn uniform_shift_matches_closed_form() {
        // J₀ to the four nearest neighbors, uniform occupation n on two
        // spin-orbitals: shift = z·J₀·n·2.
        let mut m = TBModel::new(LatticeSpec::square(0.417).unwrap(), R, vec![1.0, 1.0], vec![])
            .unwrap()
            .with_interactions([0.0, 3.0, 0.0], [0.0; 3])
            .unwrap();
        m.occupations = Some(vec![0.25, 0.25]);
        let onsite = m.effective_onsite();
        assert_relative_eq!(onsite[0] - 1.0, 4.0 * 3.0 * 0.25 * 2.0, max_relative = 1e-12);
        let r = hartree_self_consistency(&m, 0.5, &ScfOptions::default()).unwrap();
        let occ = r.model.occupations.clone().unwrap();
        assert!((occ[0] - 0.25).abs() < 1e-9);
        assert_relative_eq!(r.model.effective_onsite()[1] - 1.0, 6.0, max_relative = 1e-9);
    }

    #[test]
    fn flat_bands_stay_flat_after_scf() {
        let m = TBModel::new(LatticeSpec::square(0.417).unwrap(), R, vec![0.0, 2.0, 5.0], vec![CMatrix::zeros(3, 3)])
            .unwrap()
            .with_interactions([4.0, 1.0, 0.3], [1.5, 0.2, 0.1])
            .unwrap();
        let path = KPath::square(R, 10);
        for model in [m.clone(), hartree_self_consistency(&m, 1.3, &ScfOptions::default()).unwrap().model] {
            let bs = tb_band_structure(&model, &path).unwrap();
            assert!(bs.bandwidths.iter().all(|&w| w == 0.0));
            for p in path.points() {
                let h = build_bloch_hamiltonian(&model, p.k);
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            assert_eq!(h[(i, j)], c(0.0, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scf_reports_non_convergence() {
        let m = two_orbital([0.0, 0.5], 5.0, 0.0).with_interactions([10.0, 2.0, 0.0], [8.0, 0.0, 0.0]).unwrap();
        let opts = ScfOptions { max_iter: 2, tol: 1e-14, mix: 0.01, ..Default::default() };
        match hartree_self_consistency(&m, 1.0, &opts) {
            Err(Error::Convergence { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
        assert!(hartree_self_consistency(&m, 3.0, &ScfOptions::default()).is_err());
        assert!(hartree_self_consistency(&m, 1.0, &ScfOptions { mix: 0.0, ..Default::default() }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn square_bandwidth_is_eight_t(t in -100.0f64..100.0) {
            let bs = tb_band_structure(&square(t), &KPath::square(R, 8)).unwrap();
            prop_assert!((bs.bandwidths[0] - 8.0 * t.abs()).abs() < 1e-9);
        }
    }
}
