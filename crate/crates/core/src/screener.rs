//! Filtering and ranking of layered-material candidates from a CSV table.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fmt::sig9;
use crate::geometry::{LatticeKind, PointGroup};

/// Exact input header.
pub const COLUMNS: [&str; 6] = ["name", "a_nm", "layer_symmetry", "band_gap_eV", "binding_energy_meV_A2", "source"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    /// Lattice constant, nm.
    pub a_nm: f64,
    pub layer_symmetry: String,
    #[serde(rename = "band_gap_eV")]
    pub band_gap_ev: f64,
    /// Interlayer binding energy, meV/Å².
    #[serde(rename = "binding_energy_meV_A2")]
    pub binding_energy: f64,
    pub source: String,
    /// Line number in the source file (header is line 1).
    pub row: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingClass {
    #[serde(rename = "vdW")]
    Vdw,
    #[serde(rename = "non-vdW")]
    NonVdw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoireLattice {
    pub kind: LatticeKind,
    pub point_group: PointGroup,
}

/// Layer symmetry label to dot lattice. Matching is case-insensitive on
/// whole words of the label.
pub const SYMMETRY_TABLE: [(&str, LatticeKind, PointGroup); 5] = [
    ("square", LatticeKind::Square, PointGroup::D4),
    ("tetragonal", LatticeKind::Square, PointGroup::D4),
    ("trigonal", LatticeKind::Triangular, PointGroup::D3),
    ("rhombohedral", LatticeKind::Triangular, PointGroup::D3),
    ("hexagonal", LatticeKind::Triangular, PointGroup::D6),
];

pub fn predict_lattice(layer_symmetry: &str) -> Option<MoireLattice> {
    let label = layer_symmetry.to_lowercase();
    let words: Vec<&str> = label.split(|ch: char| !ch.is_alphanumeric()).collect();
    SYMMETRY_TABLE
        .iter()
        .find(|(key, _, _)| words.contains(key))
        .map(|&(_, kind, point_group)| MoireLattice { kind, point_group })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptRecord {
    #[serde(flatten)]
    pub record: MaterialRecord,
    pub class: BindingClass,
    pub moire_lattice: Option<MoireLattice>,
    /// Well-depth proxy: the binding energy itself.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    #[serde(flatten)]
    pub record: MaterialRecord,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub kept: Vec<KeptRecord>,
    pub rejected: Vec<RejectedRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenCriteria {
    /// Exclusive lower gap bound, eV.
    pub gap_min: f64,
    /// Inclusive upper gap bound, eV.
    pub gap_max: f64,
    /// Binding energies below this are van der Waals, meV/Å².
    pub vdw_threshold: f64,
}

impl Default for ScreenCriteria {
    fn default() -> Self {
        Self { gap_min: 0.0, gap_max: 5.0, vdw_threshold: 25.0 }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<MaterialRecord>> {
    read_dataset(std::fs::File::open(path)?)
}

/// Parses the CSV table; `#` lines are comments. Columns are located by
/// header name. Reported rows are physical line numbers of the input.
pub fn read_dataset<R: Read>(mut input: R) -> Result<Vec<MaterialRecord>> {
    let mut raw = String::new();
    input.read_to_string(&mut raw)?;
    let mut lines = Vec::new();
    let mut text = String::with_capacity(raw.len());
    for (i, line) in raw.lines().enumerate() {
        if !line.trim_start().starts_with('#') {
            lines.push(i as u64 + 1);
            text.push_str(line);
            text.push('\n');
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 6];
    for (slot, col) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers.iter().position(|h| h == col).ok_or_else(|| Error::Schema(col.to_string()))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| lines.get(p.line() as usize - 1).copied().unwrap_or(p.line()));
        let text = |i: usize| rec.get(idx[i]).unwrap_or("").to_string();
        let number = |i: usize| -> Result<f64> {
            let raw = rec.get(idx[i]).unwrap_or("");
            let field = COLUMNS[i].to_string();
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Parse { row, field: field.clone(), message: format!("'{raw}' is not a number") })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parse { row, field, message: format!("{v} must be finite and non-negative") });
            }
            Ok(v)
        };
        let a_nm = number(1)?;
        if a_nm == 0.0 {
            return Err(Error::Parse { row, field: COLUMNS[1].into(), message: "lattice constant must be positive".into() });
        }
        out.push(MaterialRecord {
            name: text(0),
            a_nm,
            layer_symmetry: text(2),
            band_gap_ev: number(3)?,
            binding_energy: number(4)?,
            source: text(5),
            row,
        });
    }
    Ok(out)
}

pub fn screen(records: &[MaterialRecord], criteria: &ScreenCriteria) -> Result<ScreenReport> {
    let ScreenCriteria { gap_min, gap_max, vdw_threshold } = *criteria;
    if !(gap_min >= 0.0 && gap_max > gap_min && vdw_threshold > 0.0) {
        return Err(domain(format!(
            "screening thresholds must satisfy 0 ≤ gap_min < gap_max and vdw_threshold > 0, got {criteria:?}"
        )));
    }
    let mut report = ScreenReport::default();
    for r in records {
        if !(r.band_gap_ev > gap_min && r.band_gap_ev <= gap_max) {
            report.rejected.push(RejectedRecord { record: r.clone(), reason: "gap out of range".into() });
            continue;
        }
        let class = if r.binding_energy < vdw_threshold { BindingClass::Vdw } else { BindingClass::NonVdw };
        report.kept.push(KeptRecord {
            record: r.clone(),
            class,
            moire_lattice: predict_lattice(&r.layer_symmetry),
            score: r.binding_energy,
        });
    }
    Ok(report)
}

/// Kept records by score descending, ties by name ascending.
pub fn rank(report: &ScreenReport) -> Vec<KeptRecord> {
    let mut out = report.kept.clone();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.record.name.cmp(&b.record.name)));
    out
}

pub fn write_ranked_csv<W: Write>(ranked: &[KeptRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "name", "band_gap_eV", "binding_energy_meV_A2", "class", "moire_lattice", "point_group", "score"])?;
    for (i, k) in ranked.iter().enumerate() {
        let class = match k.class {
            BindingClass::Vdw => "vdW",
            BindingClass::NonVdw => "non-vdW",
        };
        let (kind, group) = match k.moire_lattice {
            Some(m) => (format!("{:?}", m.kind).to_lowercase(), format!("{:?}", m.point_group)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            (i + 1).to_string(),
            k.record.name.clone(),
            sig9(k.record.band_gap_ev),
            sig9(k.record.binding_energy),
            class.to_string(),
            kind,
            group,
            sig9(k.score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "name,a_nm,layer_symmetry,band_gap_eV,binding_energy_meV_A2,source\n";

    fn rec(name: &str, gap: f64, binding: f64, sym: &str) -> MaterialRecord {
        MaterialRecord {
            name: name.into(),
            a_nm: 0.4,
            layer_symmetry: sym.into(),
            band_gap_ev: gap,
            binding_energy: binding,
            source: "test".into(),
            row: 0,
        }
    }

    #[test]
    fn loads_rows_in_order() {
        assert!(read_dataset(HEADER.as_bytes()).unwrap().is_empty());
        let text = format!("{HEADER}A,0.4,square,1.0,10,x\nB,0.5,hexagonal,2.0,30,y\n# note\nC,0.3,trigonal,0.5,5,z\n");
        let rows = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(rows.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), ["A", "B", "C"]);
        assert_eq!(rows.iter().map(|r| r.row).collect::<Vec<_>>(), [2, 3, 5]);
        assert_eq!(rows[1].binding_energy, 30.0);
    }

    #[test]
    fn reports_bad_input() {
        let text = format!("{HEADER}A,0.4,square,n/a,10,x\n");
        match read_dataset(text.as_bytes()) {
            Err(Error::Parse { row, field, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(field, "band_gap_eV");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "name,a_nm,layer_symmetry,band_gap_eV,source\nA,0.4,square,1.0,x\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Schema(c)) if c == "binding_energy_meV_A2"));
        let text = format!("{HEADER}A,0.4,square,-1,10,x\n");
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, format!("{HEADER}A,0.4,square,1.0,10,x\n")).unwrap();
        assert_eq!(load_dataset(&path).unwrap().len(), 1);
        assert!(matches!(load_dataset(dir.path().join("missing.csv")), Err(Error::Io(_))));
    }

    #[test]
    fn screening_rules() {
        let records = vec![
            rec("metal", 0.0, 10.0, "square"),
            rec("soft", 1.5, 20.0, "hexagonal"),
            rec("hard", 1.5, 52.0, "square"),
            rec("edge", 5.0, 25.0, "trigonal"),
            rec("wide", 5.1, 25.0, "trigonal"),
        ];
        let r = screen(&records, &ScreenCriteria::default()).unwrap();
        let kept: Vec<_> = r.kept.iter().map(|k| (k.record.name.as_str(), k.class)).collect();
        assert_eq!(kept, [("soft", BindingClass::Vdw), ("hard", BindingClass::NonVdw), ("edge", BindingClass::NonVdw)]);
        assert_eq!(r.rejected.len(), 2);
        assert!(r.rejected.iter().all(|x| x.reason == "gap out of range"));
        assert_eq!(r.kept[1].moire_lattice, Some(MoireLattice { kind: LatticeKind::Square, point_group: PointGroup::D4 }));
        assert_eq!(r.kept[0].moire_lattice.unwrap().point_group, PointGroup::D6);
        assert!(screen(&records, &ScreenCriteria { vdw_threshold: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn symmetry_table() {
        assert_eq!(predict_lattice("Tetragonal P4/nmm").unwrap().kind, LatticeKind::Square);
        assert_eq!(predict_lattice("rhombohedral").unwrap().point_group, PointGroup::D3);
        assert_eq!(predict_lattice("monoclinic"), None);
    }

    #[test]
    fn ranking() {
        assert!(rank(&ScreenReport::default()).is_empty());
        let records = vec![rec("a", 1.0, 10.0, ""), rec("b", 1.0, 52.0, ""), rec("c", 1.0, 25.0, "")];
        let ranked = rank(&screen(&records, &ScreenCriteria::default()).unwrap());
        assert_eq!(ranked.iter().map(|k| k.score).collect::<Vec<_>>(), [52.0, 25.0, 10.0]);
        let ties = vec![rec("zeta", 1.0, 30.0, ""), rec("alpha", 1.0, 30.0, "")];
        let ranked = rank(&screen(&ties, &ScreenCriteria::default()).unwrap());
        assert_eq!(ranked[0].record.name, "alpha");
        let mut buf = Vec::new();
        write_ranked_csv(&ranked, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rank,name,"));
        assert_eq!(text.lines().count(), 3);
    }

    fn arb_record() -> impl Strategy<Value = MaterialRecord> {
        ("[a-z]{1,6}", 0.0f64..8.0, 0.0f64..80.0, prop::sample::select(vec!["square", "hexagonal", "trigonal", "other"]))
            .prop_map(|(n, g, b, s)| rec(&n, g, b, s))
    }

    proptest! {
        #[test]
        fn screen_partitions_and_is_idempotent(records in prop::collection::vec(arb_record(), 0..30)) {
            let c = ScreenCriteria::default();
            let r = screen(&records, &c).unwrap();
            prop_assert_eq!(r.kept.len() + r.rejected.len(), records.len());
            prop_assert!(r.rejected.iter().all(|x| !x.reason.is_empty()));
            let kept: Vec<_> = r.kept.iter().map(|k| k.record.clone()).collect();
            let again = screen(&kept, &c).unwrap();
            prop_assert!(again.rejected.is_empty());
            prop_assert_eq!(&again.kept, &r.kept);
            let mut ranked: Vec<_> = rank(&r).into_iter().map(|k| k.record.name).collect();
            let mut names: Vec<_> = r.kept.iter().map(|k| k.record.name.clone()).collect();
            ranked.sort();
            names.sort();
            prop_assert_eq!(ranked, names);
        }
    }
}
