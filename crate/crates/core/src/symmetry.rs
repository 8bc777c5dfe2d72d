//! Point-group character tables and electric-dipole selection rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Irrep {
    A1,
    A2,
    B1,
    B2,
    E,
    E1,
    E2,
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Irrep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "A1" => Irrep::A1,
            "A2" => Irrep::A2,
            "B1" => Irrep::B1,
            "B2" => Irrep::B2,
            "E" => Irrep::E,
            "E1" => Irrep::E1,
            "E2" => Irrep::E2,
            other => return Err(Error::UnknownIrrep(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Out-of-plane dipole.
    Z,
    /// In-plane dipole pair (x, y).
    Xy,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::Z, Polarization::Xy];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTable {
    pub group: PointGroup,
    /// Class label and number of elements.
    pub classes: Vec<(&'static str, usize)>,
    pub irreps: Vec<(Irrep, Vec<f64>)>,
    /// Irrep spanned by the z and (x, y) components of the dipole operator.
    pub dipole_z: Irrep,
    pub dipole_xy: Irrep,
}

impl CharacterTable {
    pub fn d4() -> Self {
        Self {
            group: PointGroup::D4,
            classes: vec![("E", 1), ("2C4", 2), ("C2", 1), ("2C2'", 2), ("2C2''", 2)],
            irreps: vec![
                (Irrep::A1, vec![1.0, 1.0, 1.0, 1.0, 1.0]),
                (Irrep::A2, vec![1.0, 1.0, 1.0, -1.0, -1.0]),
                (Irrep::B1, vec![1.0, -1.0, 1.0, 1.0, -1.0]),
                (Irrep::B2, vec![1.0, -1.0, 1.0, -1.0, 1.0]),
                (Irrep::E, vec![2.0, 0.0, -2.0, 0.0, 0.0]),
            ],
            dipole_z: Irrep::A2,
            dipole_xy: Irrep::E,
        }
    }

    pub fn d3() -> Self {
        Self {
            group: PointGroup::D3,
            classes: vec![("E", 1), ("2C3", 2), ("3C2'", 3)],
            irreps: vec![
                (Irrep::A1, vec![1.0, 1.0, 1.0]),
                (Irrep::A2, vec![1.0, 1.0, -1.0]),
                (Irrep::E, vec![2.0, -1.0, 0.0]),
            ],
            dipole_z: Irrep::A2,
            dipole_xy: Irrep::E,
        }
    }

    pub fn d6() -> Self {
        Self {
            group: PointGroup::D6,
            classes: vec![("E", 1), ("2C6", 2), ("2C3", 2), ("C2", 1), ("3C2'", 3), ("3C2''", 3)],
            irreps: vec![
                (Irrep::A1, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
                (Irrep::A2, vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0]),
                (Irrep::B1, vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]),
                (Irrep::B2, vec![1.0, -1.0, 1.0, -1.0, -1.0, 1.0]),
                (Irrep::E1, vec![2.0, 1.0, -1.0, -2.0, 0.0, 0.0]),
                (Irrep::E2, vec![2.0, -1.0, -1.0, 2.0, 0.0, 0.0]),
            ],
            dipole_z: Irrep::A2,
            dipole_xy: Irrep::E1,
        }
    }

    pub fn for_group(group: PointGroup) -> Self {
        match group {
            PointGroup::D4 => Self::d4(),
            PointGroup::D3 => Self::d3(),
            PointGroup::D6 => Self::d6(),
        }
    }

    pub fn order(&self) -> usize {
        self.classes.iter().map(|c| c.1).sum()
    }

    pub fn characters(&self, irrep: Irrep) -> Result<&[f64]> {
        self.irreps
            .iter()
            .find(|(i, _)| *i == irrep)
            .map(|(_, c)| c.as_slice())
            .ok_or_else(|| Error::UnknownIrrep(format!("{irrep} is not an irrep of {:?}", self.group)))
    }

    pub fn dimension(&self, irrep: Irrep) -> Result<usize> {
        Ok(self.characters(irrep)?[0].round() as usize)
    }

    pub fn dipole_irrep(&self, pol: Polarization) -> Irrep {
        match pol {
            Polarization::Z => self.dipole_z,
            Polarization::Xy => self.dipole_xy,
        }
    }

    /// Multiplicity of each irrep in a reducible representation given by its
    /// class characters.
    pub fn reduce(&self, chars: &[f64]) -> Vec<(Irrep, usize)> {
        let order = self.order() as f64;
        self.irreps
            .iter()
            .filter_map(|(irrep, chi)| {
                let s: f64 = self.classes.iter().zip(chi).zip(chars).map(|(((_, size), a), b)| *size as f64 * a * b).sum();
                let n = (s / order).round() as usize;
                (n > 0).then_some((*irrep, n))
            })
            .collect()
    }

    /// Decomposes `a ⊗ b` into irreps with multiplicities.
    pub fn decompose_product(&self, a: Irrep, b: Irrep) -> Result<Vec<(Irrep, usize)>> {
        let (ca, cb) = (self.characters(a)?, self.characters(b)?);
        let prod: Vec<f64> = ca.iter().zip(cb).map(|(x, y)| x * y).collect();
        Ok(self.reduce(&prod))
    }

    /// A transition is allowed when `Γ_i ⊗ Γ_dipole ⊗ Γ_f` contains A1.
    pub fn dipole_allowed(&self, initial: Irrep, final_: Irrep, pol: Polarization) -> Result<bool> {
        let (ci, cf) = (self.characters(initial)?, self.characters(final_)?);
        let cd = self.characters(self.dipole_irrep(pol))?;
        let prod: Vec<f64> = ci.iter().zip(cd).zip(cf).map(|((a, b), c)| a * b * c).collect();
        Ok(self.reduce(&prod).iter().any(|(i, _)| *i == Irrep::A1))
    }

    /// Dipole-allowed upward transitions (`E_f > E_i`) among `states`, one
    /// entry per allowed polarization.
    pub fn transition_table(&self, states: &[LabeledState]) -> Result<Vec<Transition>> {
        let mut out = Vec::new();
        for si in states {
            for sf in states {
                if sf.energy <= si.energy {
                    continue;
                }
                for pol in Polarization::ALL {
                    if self.dipole_allowed(si.irrep, sf.irrep, pol)? {
                        out.push(Transition {
                            from: si.label.clone(),
                            to: sf.label.clone(),
                            energy_mev: sf.energy - si.energy,
                            polarization: pol,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledState {
    pub label: String,
    pub irrep: Irrep,
    /// meV
    pub energy: f64,
}

impl LabeledState {
    pub fn new(label: impl Into<String>, irrep: Irrep, energy: f64) -> Self {
        Self { label: label.into(), irrep, energy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub to: String,
    #[serde(rename = "energy_meV")]
    pub energy_mev: f64,
    pub polarization: Polarization,
}

#[cfg(test)]
mod tests {
    use super::*;

    const D4: [Irrep; 5] = [Irrep::A1, Irrep::A2, Irrep::B1, Irrep::B2, Irrep::E];

    #[test]
    fn row_orthogonality() {
        for table in [CharacterTable::d4(), CharacterTable::d3(), CharacterTable::d6()] {
            let g = table.order() as f64;
            for (a, ca) in &table.irreps {
                for (b, cb) in &table.irreps {
                    let s: f64 = table.classes.iter().zip(ca).zip(cb).map(|(((_, n), x), y)| *n as f64 * x * y).sum();
                    let expect = if a == b { g } else { 0.0 };
                    assert_eq!(s, expect, "{:?}: {a} vs {b}", table.group);
                }
            }
        }
        assert_eq!(CharacterTable::d4().order(), 8);
        assert_eq!(CharacterTable::d6().order(), 12);
    }

    #[test]
    fn products() {
        let t = CharacterTable::d4();
        for x in D4 {
            assert_eq!(t.decompose_product(Irrep::A1, x).unwrap(), vec![(x, 1)]);
        }
        assert_eq!(
            t.decompose_product(Irrep::E, Irrep::E).unwrap(),
            vec![(Irrep::A1, 1), (Irrep::A2, 1), (Irrep::B1, 1), (Irrep::B2, 1)]
        );
        assert_eq!(t.decompose_product(Irrep::A2, Irrep::A2).unwrap(), vec![(Irrep::A1, 1)]);
        assert!(matches!(t.decompose_product(Irrep::E1, Irrep::A1), Err(Error::UnknownIrrep(_))));
        assert!("F".parse::<Irrep>().is_err());
    }

    #[test]
    fn product_is_commutative_and_dimension_preserving() {
        let t = CharacterTable::d4();
        for a in D4 {
            for b in D4 {
                let ab = t.decompose_product(a, b).unwrap();
                assert_eq!(ab, t.decompose_product(b, a).unwrap());
                let dim: usize = ab.iter().map(|(c, n)| n * t.dimension(*c).unwrap()).sum();
                assert_eq!(dim, t.dimension(a).unwrap() * t.dimension(b).unwrap());
            }
        }
    }

    #[test]
    fn selection_rules() {
        let t = CharacterTable::d4();
        assert!(t.dipole_allowed(Irrep::A2, Irrep::E, Polarization::Xy).unwrap());
        assert!(!t.dipole_allowed(Irrep::A2, Irrep::A2, Polarization::Z).unwrap());
        assert!(t.dipole_allowed(Irrep::A1, Irrep::A2, Polarization::Z).unwrap());
        for i in D4 {
            for f in D4 {
                for p in Polarization::ALL {
                    assert_eq!(t.dipole_allowed(i, f, p).unwrap(), t.dipole_allowed(f, i, p).unwrap());
                }
            }
        }
    }

    #[test]
    fn transitions() {
        let t = CharacterTable::d4();
        let table = t
            .transition_table(&[LabeledState::new("g", Irrep::A2, 0.0), LabeledState::new("e", Irrep::E, 78.0)])
            .unwrap();
        assert_eq!(
            table,
            vec![Transition { from: "g".into(), to: "e".into(), energy_mev: 78.0, polarization: Polarization::Xy }]
        );
        assert!(t.transition_table(&[LabeledState::new("g", Irrep::A2, 0.0)]).unwrap().is_empty());
        assert!(t
            .transition_table(&[LabeledState::new("g", Irrep::A2, 0.0), LabeledState::new("e", Irrep::A2, 50.0)])
            .unwrap()
            .is_empty());
        let json = serde_json::to_string(&table[0]).unwrap();
        assert!(json.contains("\"energy_meV\":78.0"));
        assert!(json.contains("\"polarization\":\"xy\""));
    }
}
