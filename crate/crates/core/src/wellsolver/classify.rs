use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::WellState;
use crate::error::{Error, Result};
use crate::geometry::PointGroup;
use crate::linalg::{eigh, CMatrix};
use crate::symmetry::{CharacterTable, Irrep};

/// Smallest projection weight accepted as a definite irrep assignment.
pub const CLASSIFY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub irrep: Option<Irrep>,
    pub lz: Option<i32>,
    /// Projection weight of the state onto each irrep; sums to one.
    pub weights: Vec<(Irrep, f64)>,
}

/// The eight D₄ operations as grid index maps about a center, grouped in
/// the class order of the D₄ character table. Each map sends a relative
/// offset `(a, b)` to the offset whose amplitude lands there.
const D4_OPS: [(usize, fn(i64, i64) -> (i64, i64)); 8] = [
    (0, |a, b| (a, b)),
    (1, |a, b| (b, -a)),
    (1, |a, b| (-b, a)),
    (2, |a, b| (-a, -b)),
    (3, |a, b| (a, -b)),
    (3, |a, b| (-a, b)),
    (4, |a, b| (b, a)),
    (4, |a, b| (-b, -a)),
];

fn apply_op(psi: &ndarray::Array2<Complex64>, center: (usize, usize), op: fn(i64, i64) -> (i64, i64)) -> Vec<Complex64> {
    let (nx, ny) = psi.dim();
    let n = nx as i64;
    let (ci, cj) = (center.0 as i64, center.1 as i64);
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx as i64 {
        for j in 0..ny as i64 {
            let (a, b) = op(i - ci, j - cj);
            let si = (ci + a).rem_euclid(n) as usize;
            let sj = (cj + b).rem_euclid(n) as usize;
            out.push(psi[[si, sj]]);
        }
    }
    out
}

fn overlap(a: &ndarray::Array2<Complex64>, b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

fn check_square(state: &WellState) -> Result<()> {
    let (nx, ny) = state.amplitudes.dim();
    if nx != ny {
        return Err(Error::NotApplicable(format!("symmetry operations need a square grid, got {nx}×{ny}")));
    }
    Ok(())
}

/// `⟨ψ|O_g ψ⟩` for the eight D₄ operations, in table order.
pub fn symmetry_projections(state: &WellState, center: (usize, usize)) -> Result<Vec<(usize, Complex64)>> {
    check_square(state)?;
    Ok(D4_OPS
        .iter()
        .map(|&(class, op)| (class, overlap(&state.amplitudes, &apply_op(&state.amplitudes, center, op))))
        .collect())
}

fn lz_from_rotation(lambda: Complex64) -> Option<i32> {
    if lambda.norm() <= CLASSIFY_THRESHOLD {
        return None;
    }
    let q = (-lambda.arg() / std::f64::consts::FRAC_PI_2).round() as i32;
    Some(if q == -2 { 2 } else { q })
}

/// Assigns a D₄ irrep by character projection and, for C₄ eigenstates, the
/// angular-momentum tag `lz` from the rotation eigenvalue `e^{−i lz π/2}`.
pub fn classify_state(state: &WellState, group: PointGroup, center: (usize, usize)) -> Result<Classification> {
    if group != PointGroup::D4 {
        return Err(Error::NotApplicable(format!("grid classification is implemented for D4, not {group:?}")));
    }
    let table = CharacterTable::d4();
    let proj = symmetry_projections(state, center)?;
    let order = table.order() as f64;
    let weights: Vec<(Irrep, f64)> = table
        .irreps
        .iter()
        .map(|(irrep, chi)| {
            let dim = chi[0];
            let s: f64 = proj.iter().map(|(class, o)| chi[*class] * o.re).sum();
            (*irrep, dim / order * s)
        })
        .collect();
    let best = weights.iter().copied().fold((Irrep::A1, f64::NEG_INFINITY), |acc, w| if w.1 > acc.1 { w } else { acc });
    let irrep = (best.1 > CLASSIFY_THRESHOLD).then_some(best.0);
    let lz = lz_from_rotation(proj[1].1);
    Ok(Classification { irrep, lz, weights })
}

/// Rotates each degenerate multiplet (energies within `tol` meV) into C₄
/// eigenstates and fills in `irrep`/`lz` for every state. For an E doublet
/// this yields the `ψx ± iψy` combinations with `lz = ±1`.
pub fn resolve_angular_momentum(states: &mut [WellState], center: (usize, usize), tol: f64) -> Result<()> {
    let c4 = D4_OPS[1].1;
    let mut start = 0;
    while start < states.len() {
        let mut end = start + 1;
        while end < states.len() && (states[end].energy - states[start].energy).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            check_square(&states[start])?;
            let group = &states[start..end];
            let rotated: Vec<Vec<Complex64>> = group.iter().map(|s| apply_op(&s.amplitudes, center, c4)).collect();
            let m = CMatrix::from_fn(group.len(), group.len(), |a, b| overlap(&group[a].amplitudes, &rotated[b]));
            let s = (&m - m.adjoint()) * Complex64::new(0.0, -0.5);
            let (_, vecs) = eigh(&s);
            let mixed: Vec<_> = (0..group.len())
                .map(|c| {
                    let mut amp = group[0].amplitudes.mapv(|_| Complex64::new(0.0, 0.0));
                    for (r, st) in group.iter().enumerate() {
                        amp.scaled_add(vecs[(r, c)], &st.amplitudes);
                    }
                    amp
                })
                .collect();
            for (st, amp) in states[start..end].iter_mut().zip(mixed) {
                st.amplitudes = amp;
            }
        }
        start = end;
    }
    for st in states.iter_mut() {
        let c = classify_state(st, PointGroup::D4, center)?;
        st.irrep = c.irrep;
        st.lz = c.lz;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn state_from(n: usize, f: impl Fn(f64, f64) -> Complex64) -> WellState {
        // Grid centered on (0, 0) with wrap-around, spacing 0.25.
        let h = 0.25;
        let coord = |i: usize| {
            let a = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            a * h
        };
        let mut amp = Array2::from_shape_fn((n, n), |(i, j)| f(coord(i), coord(j)));
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amp.mapv_inplace(|z| z / norm);
        WellState { energy: 0.0, amplitudes: amp, k: [0.0, 0.0], irrep: None, lz: None }
    }

    fn gauss(x: f64, y: f64) -> f64 {
        (-(x * x + y * y) / 2.0).exp()
    }

    #[test]
    fn nodeless_state_is_a1() {
        let s = state_from(32, |x, y| Complex64::new(gauss(x, y), 0.0));
        let c = classify_state(&s, PointGroup::D4, (0, 0)).unwrap();
        assert_eq!(c.irrep, Some(Irrep::A1));
        assert_eq!(c.lz, Some(0));
        let total: f64 = c.weights.iter().map(|w| w.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_orbitals_carry_angular_momentum() {
        let plus = state_from(32, |x, y| Complex64::new(x, y) * gauss(x, y));
        let c = classify_state(&plus, PointGroup::D4, (0, 0)).unwrap();
        assert_eq!((c.irrep, c.lz), (Some(Irrep::E), Some(1)));
        let minus = state_from(32, |x, y| Complex64::new(x, -y) * gauss(x, y));
        let c = classify_state(&minus, PointGroup::D4, (0, 0)).unwrap();
        assert_eq!((c.irrep, c.lz), (Some(Irrep::E), Some(-1)));
        let px = state_from(32, |x, y| Complex64::new(x * gauss(x, y), 0.0));
        let c = classify_state(&px, PointGroup::D4, (0, 0)).unwrap();
        assert_eq!((c.irrep, c.lz), (Some(Irrep::E), None));
    }

    #[test]
    fn d_orbitals() {
        let b1 = state_from(32, |x, y| Complex64::new((x * x - y * y) * gauss(x, y), 0.0));
        assert_eq!(classify_state(&b1, PointGroup::D4, (0, 0)).unwrap().irrep, Some(Irrep::B1));
        let b2 = state_from(32, |x, y| Complex64::new(x * y * gauss(x, y), 0.0));
        assert_eq!(classify_state(&b2, PointGroup::D4, (0, 0)).unwrap().irrep, Some(Irrep::B2));
        // x y (x² − y²): invariant under C₄, odd under the mirrors.
        let a2 = state_from(32, |x, y| Complex64::new(x * y * (x * x - y * y) * gauss(x, y), 0.0));
        assert_eq!(classify_state(&a2, PointGroup::D4, (0, 0)).unwrap().irrep, Some(Irrep::A2));
    }

    #[test]
    fn mixed_state_is_unclassified() {
        let s = state_from(32, |x, y| Complex64::new((1.0 + x) * gauss(x, y), 0.0));
        let c = classify_state(&s, PointGroup::D4, (0, 0)).unwrap();
        assert_eq!(c.irrep, None);
        assert!(classify_state(&s, PointGroup::D6, (0, 0)).is_err());
    }

    #[test]
    fn resolves_real_doublet() {
        let px = state_from(32, |x, y| Complex64::new(x * gauss(x, y), 0.0));
        let py = state_from(32, |x, y| Complex64::new(y * gauss(x, y), 0.0));
        let mut states = vec![px, py];
        resolve_angular_momentum(&mut states, (0, 0), 1e-9).unwrap();
        let mut lz: Vec<_> = states.iter().map(|s| s.lz.unwrap()).collect();
        lz.sort();
        assert_eq!(lz, vec![-1, 1]);
        assert!(states.iter().all(|s| s.irrep == Some(Irrep::E)));
    }
}
